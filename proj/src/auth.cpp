#include "stylever/auth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "stylever/error.hpp"

namespace stylever {

void validate_claim(const ClaimIdentity& claim) {
  if (claim.style == Style::kSad) throw Error("no model exists for the sad style");
  if (claim.sentence_id < 1 || claim.sentence_id > kSentences)
    throw Error("claim sentence out of range");
  if (claim.speaker_id.empty()) throw Error("claim has no speaker");
}

ClaimIdentity parse_claim(std::string_view text) {
  const auto a = text.find(':');
  const auto b = text.rfind(':');
  if (a == std::string_view::npos || a == b)
    throw Error("claim must look like speaker:sentence:style");
  ClaimIdentity c;
  c.speaker_id = std::string(text.substr(0, a));
  const std::string sent(text.substr(a + 1, b - a - 1));
  try {
    c.sentence_id = std::stoi(sent);
  } catch (const std::exception&) {
    throw Error("bad claim sentence '" + sent + "'");
  }
  auto style = parse_style(text.substr(b + 1));
  if (!style) throw Error("unknown claim style '" + std::string(text.substr(b + 1)) + "'");
  c.style = *style;
  validate_claim(c);
  return c;
}

std::string_view engine_name(Engine e) { return e == Engine::kHmm ? "hmm" : "sphmm"; }

std::optional<Engine> parse_engine(std::string_view s) {
  if (s == "hmm") return Engine::kHmm;
  if (s == "sphmm") return Engine::kSphmm;
  return std::nullopt;
}

std::string_view scenario_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::kPooled: return "pooled";
    case ScenarioKind::kMaxImposter: return "max-imposter";
    case ScenarioKind::kScoreOnly: return "score-only";
  }
  return "score-only";
}

std::optional<ScenarioKind> parse_scenario(std::string_view s) {
  if (s == "pooled") return ScenarioKind::kPooled;
  if (s == "max-imposter") return ScenarioKind::kMaxImposter;
  if (s == "score-only") return ScenarioKind::kScoreOnly;
  return std::nullopt;
}

void ScenarioConfig::validate() const {
  if (kind != ScenarioKind::kScoreOnly && imposter_keys.empty())
    throw Error(std::string(scenario_name(kind)) + " scenario needs at least one imposter model");
}

double combine_llr(double claimant, std::span<const double> imposters, ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kScoreOnly:
      return claimant;
    case ScenarioKind::kMaxImposter: {
      if (imposters.empty()) throw Error("max-imposter scenario without imposters");
      return claimant - *std::max_element(imposters.begin(), imposters.end());
    }
    case ScenarioKind::kPooled: {
      if (imposters.empty()) throw Error("pooled scenario without imposters");
      const Eigen::Map<const Eigen::VectorXd> v(imposters.data(),
                                                static_cast<Eigen::Index>(imposters.size()));
      return claimant - (log_sum_exp(v) - std::log(static_cast<double>(imposters.size())));
    }
  }
  return claimant;
}

void ModelRegistry::insert(const ClaimIdentity& claim, ModelEntry entry) {
  validate_claim(claim);
  models_.insert_or_assign(claim, std::move(entry));
}

const ModelEntry& ModelRegistry::at(const ClaimIdentity& claim) const {
  auto it = models_.find(claim);
  if (it == models_.end()) throw Error("no model for claim " + to_string(claim));
  return it->second;
}

double ModelRegistry::score(const ClaimIdentity& claim, const UtteranceFeatures& feats) const {
  const auto& model = at(claim).model;
  if (engine_ == Engine::kHmm) return log_forward(model.acoustic, feats.obs);
  return sphmm_score(model, feats).combined;
}

std::string_view decision_name(Decision d) {
  return d == Decision::kAccept ? "accept" : "reject";
}

Decision decide(double lambda, double theta) {
  return lambda >= theta ? Decision::kAccept : Decision::kReject;
}

double initial_threshold(std::span<const double> scores, double k) {
  if (scores.empty()) throw Error("no training scores for threshold");
  const double n = static_cast<double>(scores.size());
  const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / n;
  if (scores.size() < 2) return mean;
  double ss = 0.0;
  for (double s : scores) ss += (s - mean) * (s - mean);
  return mean - k * std::sqrt(ss / (n - 1.0));
}

ThresholdState::ThresholdState(double initial_theta, std::size_t window, double margin)
    : initial_theta_(initial_theta), theta_(initial_theta), window_(window), margin_(margin) {
  if (window_ == 0) throw Error("threshold window must be positive");
}

void ThresholdState::push(double score) {
  recent_.push_back(score);
  while (recent_.size() > window_) recent_.pop_front();
  theta_ = std::accumulate(recent_.begin(), recent_.end(), 0.0) /
               static_cast<double>(recent_.size()) -
           margin_;
}

ThresholdState adapt_threshold(ThresholdState state, double new_score) {
  state.push(new_score);
  return state;
}

std::string_view hypothesis_name(Hypothesis h) { return h == Hypothesis::kH0 ? "H0" : "H1"; }

Hypothesis hypothesis_for(const ClaimIdentity& claim, const UtteranceMeta& truth) {
  return claim.speaker_id == truth.speaker_id && claim.sentence_id == truth.sentence_id &&
                 claim.style == truth.style
             ? Hypothesis::kH0
             : Hypothesis::kH1;
}

VerificationTrial verify(const AudioClip& clip, const ClaimIdentity& claim,
                         const ModelRegistry& registry, const ScenarioConfig& scenario,
                         ThresholdState& threshold, const VerifyOptions& opts,
                         const FrameConfig& frames, const ProsodyConfig& prosody) {
  registry.at(claim);
  return verify(analyze_utterance(clip, frames, prosody), claim, registry, scenario, threshold,
                opts);
}

void write_trial_log(std::ostream& out, std::span<const VerificationTrial> trials) {
  out << "claim_speaker,claim_sentence,claim_style,true_speaker,true_style,lambda,theta,"
         "decision,hypothesis\n";
  char num[64];
  for (const auto& t : trials) {
    out << t.claim.speaker_id << ',' << t.claim.sentence_id << ',' << style_name(t.claim.style)
        << ',' << t.true_meta.speaker_id << ',' << style_name(t.true_meta.style) << ',';
    std::snprintf(num, sizeof num, "%.6f", t.lambda);
    out << num << ',';
    std::snprintf(num, sizeof num, "%.6f", t.theta);
    out << num << ',' << decision_name(t.decision) << ',' << hypothesis_name(t.hypothesis)
        << '\n';
  }
}

std::vector<VerificationTrial> read_trial_log(std::istream& in, const CorpusManifest& manifest) {
  std::vector<VerificationTrial> trials;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 9) throw Error("trial log line " + std::to_string(line_no) + ": bad field count");
    VerificationTrial t;
    t.claim.speaker_id = f[0];
    t.claim.sentence_id = std::stoi(f[1]);
    auto cs = parse_style(f[2]);
    auto ts = parse_style(f[4]);
    if (!cs || !ts) throw Error("trial log line " + std::to_string(line_no) + ": bad style");
    t.claim.style = *cs;
    t.true_meta.speaker_id = f[3];
    t.true_meta.gender = manifest.gender_of(f[3]);
    t.true_meta.sentence_id = t.claim.sentence_id;
    t.true_meta.style = *ts;
    t.lambda = std::stod(f[5]);
    t.theta = std::stod(f[6]);
    t.decision = f[7] == "accept" ? Decision::kAccept : Decision::kReject;
    t.hypothesis = f[8] == "H0" ? Hypothesis::kH0 : Hypothesis::kH1;
    trials.push_back(std::move(t));
  }
  return trials;
}

}  // namespace stylever
