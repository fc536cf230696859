#pragma once

// Claim verification: log-likelihood ratio under one of three imposter
// scenarios, compared against a per-claimant threshold.

#include <cmath>
#include <concepts>
#include <cstddef>
#include <deque>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stylever/corpus.hpp"
#include "stylever/sphmm.hpp"

namespace stylever {

// (speaker, sentence, style); sad never owns a model.
using ClaimIdentity = GroupKey;

void validate_claim(const ClaimIdentity& claim);
// "speaker:sentence:style"
ClaimIdentity parse_claim(std::string_view text);

enum class Engine { kHmm, kSphmm };
std::string_view engine_name(Engine e);
std::optional<Engine> parse_engine(std::string_view s);

enum class ScenarioKind { kPooled, kMaxImposter, kScoreOnly };
std::string_view scenario_name(ScenarioKind k);
std::optional<ScenarioKind> parse_scenario(std::string_view s);

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::kScoreOnly;
  std::vector<ClaimIdentity> imposter_keys;

  void validate() const;
};

// ScoreOnly: claimant. MaxImposter: claimant - max imposter.
// Pooled: claimant - log(mean(exp(imposter))).
double combine_llr(double claimant, std::span<const double> imposters, ScenarioKind kind);

// Anything that scores features against a claimed model.
template <typename T>
concept ClaimScorer = requires(const T& s, const ClaimIdentity& c, const UtteranceFeatures& f) {
  { s.score(c, f) } -> std::convertible_to<double>;
};

template <ClaimScorer Scorer>
double log_likelihood_ratio(const UtteranceFeatures& feats, const ClaimIdentity& claim,
                            const ScenarioConfig& scenario, const Scorer& scorer) {
  scenario.validate();
  const double claimant = scorer.score(claim, feats);
  std::vector<double> imposters;
  if (scenario.kind != ScenarioKind::kScoreOnly) {
    imposters.reserve(scenario.imposter_keys.size());
    for (const auto& key : scenario.imposter_keys) imposters.push_back(scorer.score(key, feats));
  }
  return combine_llr(claimant, imposters, scenario.kind);
}

struct ModelEntry {
  SphmmModel model;
  double theta = 0.0;  // initial (loose) threshold
};

class ModelRegistry {
 public:
  explicit ModelRegistry(Engine engine = Engine::kSphmm) : engine_(engine) {}

  Engine engine() const { return engine_; }
  void insert(const ClaimIdentity& claim, ModelEntry entry);
  bool contains(const ClaimIdentity& claim) const { return models_.contains(claim); }
  // Throws Error for an unknown claim.
  const ModelEntry& at(const ClaimIdentity& claim) const;
  const std::map<ClaimIdentity, ModelEntry>& models() const { return models_; }

  // log P(O|λ) for the HMM engine, the combined SPHMM score otherwise.
  double score(const ClaimIdentity& claim, const UtteranceFeatures& feats) const;

 private:
  Engine engine_;
  std::map<ClaimIdentity, ModelEntry> models_;
};

enum class Decision { kAccept, kReject };
std::string_view decision_name(Decision d);

// Accept iff lambda >= theta; -inf always rejects.
Decision decide(double lambda, double theta);

// mean - k * sample std of claimant scores on its own training utterances.
double initial_threshold(std::span<const double> training_scores, double k = 2.0);

class ThresholdState {
 public:
  ThresholdState(double initial_theta = 0.0, std::size_t window = 16, double margin = 0.0);

  double theta() const { return theta_; }
  double initial_theta() const { return initial_theta_; }
  const std::deque<double>& recent_scores() const { return recent_; }
  std::size_t window() const { return window_; }

  // Pushes a score (evicting the oldest beyond the window) and sets theta to
  // the window mean minus the margin.
  void push(double score);

 private:
  double initial_theta_;
  double theta_;
  std::size_t window_;
  double margin_;
  std::deque<double> recent_;
};

ThresholdState adapt_threshold(ThresholdState state, double new_score);

enum class Hypothesis { kH0, kH1 };
std::string_view hypothesis_name(Hypothesis h);

struct VerificationTrial {
  ClaimIdentity claim;
  UtteranceMeta true_meta;
  double lambda = 0.0;
  double theta = 0.0;
  Decision decision = Decision::kReject;
  Hypothesis hypothesis = Hypothesis::kH1;
};

Hypothesis hypothesis_for(const ClaimIdentity& claim, const UtteranceMeta& truth);

struct VerifyOptions {
  bool adapt_threshold = false;
  bool adapt_on_accept_only = true;
};

// Scores the claimed model once (plus the scenario's imposters), decides
// against the current threshold, then adapts it when enabled. When the true
// identity is unknown the claim itself is recorded as the truth.
template <ClaimScorer Scorer>
VerificationTrial verify(const UtteranceFeatures& feats, const ClaimIdentity& claim,
                         const Scorer& scorer, const ScenarioConfig& scenario,
                         ThresholdState& threshold, const VerifyOptions& opts = {},
                         const std::optional<UtteranceMeta>& truth = std::nullopt) {
  validate_claim(claim);
  VerificationTrial trial;
  trial.claim = claim;
  if (truth) {
    trial.true_meta = *truth;
  } else {
    trial.true_meta.speaker_id = claim.speaker_id;
    trial.true_meta.sentence_id = claim.sentence_id;
    trial.true_meta.style = claim.style;
  }
  trial.lambda = log_likelihood_ratio(feats, claim, scenario, scorer);
  trial.theta = threshold.theta();
  trial.decision = decide(trial.lambda, trial.theta);
  trial.hypothesis = hypothesis_for(claim, trial.true_meta);
  if (opts.adapt_threshold && std::isfinite(trial.lambda) &&
      (!opts.adapt_on_accept_only || trial.decision == Decision::kAccept))
    threshold.push(trial.lambda);
  return trial;
}

VerificationTrial verify(const AudioClip& clip, const ClaimIdentity& claim,
                         const ModelRegistry& registry, const ScenarioConfig& scenario,
                         ThresholdState& threshold, const VerifyOptions& opts = {},
                         const FrameConfig& frames = {}, const ProsodyConfig& prosody = {});

// claim_speaker,claim_sentence,claim_style,true_speaker,true_style,lambda,theta,decision,hypothesis
void write_trial_log(std::ostream& out, std::span<const VerificationTrial> trials);
// Genders are not part of the log; they come from the manifest.
std::vector<VerificationTrial> read_trial_log(std::istream& in, const CorpusManifest& manifest);

}  // namespace stylever
