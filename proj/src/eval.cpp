#include "stylever/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "stylever/error.hpp"

namespace stylever {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int model_style_slot(Style s) {
  for (int i = 0; i < kNumModelStyles; ++i)
    if (kModelStyles[static_cast<std::size_t>(i)] == s) return i;
  return -1;
}

}  // namespace

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------
// Table arithmetic.

int round_percent(double pct) { return static_cast<int>(std::lround(pct)); }

int average_cell(int male, int female) { return round_percent((male + female) / 2.0); }

std::optional<int> average_cell(std::optional<int> male, std::optional<int> female) {
  if (male && female) return average_cell(*male, *female);
  return male ? male : female;
}

double round_to(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(value * scale) / scale;
}

double aggregate_average(std::span<const int> avg_h0) {
  if (avg_h0.size() != kModelStyles.size())
    throw Error("aggregate needs all nine style rows, got " + std::to_string(avg_h0.size()));
  const double sum = std::accumulate(avg_h0.begin(), avg_h0.end(), 0.0);
  return round_to(sum / static_cast<double>(avg_h0.size()), 1);
}

double aggregate_average(const PerformanceTable& table) {
  std::vector<int> cells;
  for (const auto& row : table.rounded()) {
    if (!row.avg_h0) throw Error("missing H0 cell for " + std::string(style_name(row.style)));
    cells.push_back(*row.avg_h0);
  }
  return aggregate_average(cells);
}

double improvement_rate(double new_value, double old_value) {
  if (!(old_value > 0.0)) throw Error("improvement rate needs a positive baseline");
  return round_to(100.0 * (new_value - old_value) / old_value, 1);
}

std::vector<RoundedRow> PerformanceTable::rounded() const {
  auto cell = [](double v) -> std::optional<int> {
    if (std::isnan(v)) return std::nullopt;
    return round_percent(v);
  };
  std::vector<RoundedRow> out;
  for (const auto& r : rows) {
    RoundedRow rr;
    rr.style = r.style;
    rr.male_h0 = cell(r.male_h0);
    rr.male_h1 = cell(r.male_h1);
    rr.female_h0 = cell(r.female_h0);
    rr.female_h1 = cell(r.female_h1);
    rr.avg_h0 = average_cell(rr.male_h0, rr.female_h0);
    rr.avg_h1 = average_cell(rr.male_h1, rr.female_h1);
    out.push_back(rr);
  }
  return out;
}

PerformanceTable performance_from_trials(std::span<const VerificationTrial> trials) {
  // [style][gender][hypothesis] -> (accepted, total)
  std::array<std::array<std::array<std::pair<int, int>, 2>, 2>, kNumModelStyles> tally{};
  for (const auto& t : trials) {
    const int s = model_style_slot(t.claim.style);
    if (s < 0) continue;
    auto& cell = tally[static_cast<std::size_t>(s)][t.true_meta.gender == Gender::kFemale]
                      [t.hypothesis == Hypothesis::kH1];
    ++cell.second;
    if (t.decision == Decision::kAccept) ++cell.first;
  }
  auto pct = [](const std::pair<int, int>& c) {
    return c.second == 0 ? kNaN : 100.0 * c.first / c.second;
  };
  PerformanceTable table;
  for (int s = 0; s < kNumModelStyles; ++s) {
    const auto& t = tally[static_cast<std::size_t>(s)];
    table.rows.push_back({kModelStyles[static_cast<std::size_t>(s)], pct(t[0][0]), pct(t[0][1]),
                          pct(t[1][0]), pct(t[1][1])});
  }
  return table;
}

std::vector<int> largest_remainder(std::span<const double> percents) {
  std::vector<int> out(percents.size(), 0);
  const double total = std::accumulate(percents.begin(), percents.end(), 0.0);
  if (!(total > 0.0)) return out;
  std::vector<std::pair<double, std::size_t>> remainders;
  int assigned = 0;
  for (std::size_t i = 0; i < percents.size(); ++i) {
    const double scaled = percents[i] * 100.0 / total;
    out[i] = static_cast<int>(std::floor(scaled + 1e-9));
    assigned += out[i];
    remainders.emplace_back(scaled - out[i], i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < 100 && k < remainders.size(); ++k, ++assigned)
    ++out[remainders[k].second];
  return out;
}

double ConfusionMatrix::percent(int model, int test) const {
  const int total = column_total(test);
  return total == 0 ? kNaN : 100.0 * counts(model, test) / total;
}

Eigen::MatrixXi ConfusionMatrix::rounded() const {
  Eigen::MatrixXi out = Eigen::MatrixXi::Zero(counts.rows(), counts.cols());
  for (Eigen::Index t = 0; t < counts.cols(); ++t) {
    std::vector<double> col(static_cast<std::size_t>(counts.rows()));
    for (Eigen::Index m = 0; m < counts.rows(); ++m) col[static_cast<std::size_t>(m)] = counts(m, t);
    const auto cells = largest_remainder(col);
    for (Eigen::Index m = 0; m < counts.rows(); ++m) out(m, t) = cells[static_cast<std::size_t>(m)];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Protocol.

ClipSource disk_source(std::filesystem::path root) {
  return [root = std::move(root)](const ManifestEntry& e) { return read_wav(root / e.locator); };
}

ClipSource synthetic_source(std::uint64_t corpus_seed) {
  return [corpus_seed](const ManifestEntry& e) { return synth_corpus_clip(e.meta, corpus_seed); };
}

double engine_score(const SphmmScore& s, Engine engine, double alpha) {
  if (engine == Engine::kHmm) return s.acoustic;
  return combine_scores(s.acoustic, s.prosodic, alpha);
}

ExperimentRun prepare_experiment(const ExperimentConfig& cfg, const CorpusManifest& manifest,
                                 const ClipSource& source) {
  cfg.validate();
  ExperimentRun run;
  run.split = split_train_test(manifest);
  if (cfg.multi_speaker) run.split = build_multispeaker_train_set(run.split, manifest);

  // Features for every utterance that is trained on or scored.
  std::set<UtteranceKey> needed = run.split.test;
  for (const auto& [group, list] : run.split.model_train) needed.insert(list.begin(), list.end());
  const std::vector<UtteranceKey> keys(needed.begin(), needed.end());
  std::map<UtteranceKey, std::size_t> slot;
  for (std::size_t i = 0; i < keys.size(); ++i) slot.emplace(keys[i], i);
  std::vector<UtteranceFeatures> feats(keys.size());
  parallel_for(keys.size(), cfg.jobs, [&](std::size_t i) {
    try {
      feats[i] = analyze_utterance(source(manifest.at(keys[i])), cfg.frames, cfg.prosody);
    } catch (const Error& e) {
      throw Error(to_string(keys[i]) + ": " + e.what());
    }
  });
  for (const auto& f : feats) run.skipped_frames += f.obs.skipped_frames;

  // One model per (speaker, sentence, style).
  std::vector<GroupKey> groups;
  for (const auto& [group, list] : run.split.model_train) groups.push_back(group);
  std::vector<SphmmModel> trained(groups.size());
  TrainOptions opts;
  opts.max_iter = cfg.max_iter;
  opts.tol = cfg.tol;
  opts.var_floor_rel = cfg.var_floor_rel;
  SphmmConfig supra;
  supra.grouping = cfg.grouping.empty() ? SupraGrouping::for_states(cfg.n_states)
                                        : SupraGrouping{cfg.grouping};
  supra.supra_components = cfg.supra_components;
  supra.alpha = cfg.alpha;
  parallel_for(groups.size(), cfg.jobs, [&](std::size_t i) {
    const auto& list = run.split.model_train.at(groups[i]);
    std::vector<Eigen::MatrixXd> obs;
    std::vector<UtteranceFeatures> utts;
    for (const auto& k : list) {
      obs.push_back(feats[slot.at(k)].obs.features);
      utts.push_back(feats[slot.at(k)]);
    }
    const std::uint64_t seed =
        utterance_seed(cfg.seed, {groups[i].speaker_id, groups[i].sentence_id, groups[i].style, 0});
    try {
      HmmModel hmm = init_hmm(obs, cfg.n_states, cfg.n_mix, seed, opts);
      hmm = baum_welch_train(obs, std::move(hmm), opts);
      SphmmConfig sc = supra;
      sc.seed = seed;
      trained[i] = train_sphmm(std::move(hmm), utts, sc);
    } catch (const Error& e) {
      throw Error("training " + to_string(groups[i]) + ": " + e.what());
    }
  });
  for (std::size_t i = 0; i < groups.size(); ++i) run.models.emplace(groups[i], std::move(trained[i]));

  // Score every own-training and test utterance against the nine style
  // models of its speaker and sentence.
  std::vector<std::pair<UtteranceKey, bool>> to_score;  // (key, is_test)
  for (const auto& [group, list] : run.split.model_train)
    for (int t = 1; t <= kTrainTokens; ++t) {
      UtteranceKey k{group.speaker_id, group.sentence_id, group.style, t};
      if (slot.contains(k)) to_score.emplace_back(k, false);
    }
  for (const auto& k : run.split.test) to_score.emplace_back(k, true);
  std::sort(to_score.begin(), to_score.end());

  std::vector<ScoredUtterance> scored(to_score.size());
  parallel_for(to_score.size(), cfg.jobs, [&](std::size_t i) {
    const auto& key = to_score[i].first;
    auto& out = scored[i];
    out.meta = manifest.at(key).meta;
    const auto& f = feats[slot.at(key)];
    for (int s = 0; s < kNumModelStyles; ++s) {
      auto it = run.models.find({key.speaker_id, key.sentence_id,
                                 kModelStyles[static_cast<std::size_t>(s)]});
      if (it == run.models.end()) continue;  // scores stay -inf
      // α is fixed away from 0 and 1 here so both sub-scores are computed;
      // the engine recombines them at evaluation time.
      out.scores[static_cast<std::size_t>(s)] = sphmm_score(it->second, f, 0.5);
    }
  });
  for (std::size_t i = 0; i < to_score.size(); ++i)
    (to_score[i].second ? run.test : run.own_train).push_back(std::move(scored[i]));
  return run;
}

namespace {

double lambda_for(const StyleScores& scores, int claim_slot, const ExperimentConfig& cfg,
                  const std::array<bool, kNumModelStyles>& present) {
  const double claimant = engine_score(scores[static_cast<std::size_t>(claim_slot)], cfg.engine,
                                       cfg.alpha);
  if (cfg.scenario == ScenarioKind::kScoreOnly) return claimant;
  std::vector<double> imposters;
  for (int s = 0; s < kNumModelStyles; ++s)
    if (s != claim_slot && present[static_cast<std::size_t>(s)])
      imposters.push_back(engine_score(scores[static_cast<std::size_t>(s)], cfg.engine, cfg.alpha));
  if (imposters.empty()) return claimant;
  return combine_llr(claimant, imposters, cfg.scenario);
}

}  // namespace

EvaluationResult evaluate_run(const ExperimentRun& run, const ExperimentConfig& cfg) {
  cfg.validate();
  EvaluationResult result;

  auto presence = [&](const UtteranceMeta& m) {
    std::array<bool, kNumModelStyles> p{};
    for (int s = 0; s < kNumModelStyles; ++s)
      p[static_cast<std::size_t>(s)] =
          run.models.contains({m.speaker_id, m.sentence_id, kModelStyles[static_cast<std::size_t>(s)]});
    return p;
  };

  std::map<GroupKey, std::vector<double>> train_lambdas;
  for (const auto& u : run.own_train) {
    const int slot = model_style_slot(u.meta.style);
    train_lambdas[key_of(u.meta).group()].push_back(
        lambda_for(u.scores, slot, cfg, presence(u.meta)));
  }
  std::map<GroupKey, ThresholdState> thresholds;
  for (const auto& [group, lambdas] : train_lambdas) {
    const double theta = initial_threshold(lambdas, cfg.threshold_k);
    result.initial_thresholds.emplace(group, theta);
    thresholds.emplace(group, ThresholdState(theta, static_cast<std::size_t>(cfg.window), cfg.margin));
  }

  for (const auto& u : run.test) {
    const auto present = presence(u.meta);
    for (int s = 0; s < kNumModelStyles; ++s) {
      if (!present[static_cast<std::size_t>(s)]) continue;
      ClaimIdentity claim{u.meta.speaker_id, u.meta.sentence_id,
                          kModelStyles[static_cast<std::size_t>(s)]};
      auto& state = thresholds.at(claim);
      VerificationTrial t;
      t.claim = claim;
      t.true_meta = u.meta;
      t.lambda = lambda_for(u.scores, s, cfg, present);
      t.theta = state.theta();
      t.decision = decide(t.lambda, t.theta);
      t.hypothesis = hypothesis_for(claim, u.meta);
      if (cfg.adapt_threshold && std::isfinite(t.lambda) &&
          (!cfg.adapt_on_accept_only || t.decision == Decision::kAccept))
        state.push(t.lambda);
      result.trials.push_back(std::move(t));
    }

    const int truth = model_style_slot(u.meta.style);
    if (truth < 0) continue;  // open-set style has no column
    int best = -1;
    double best_score = kLogZero;
    for (int s = 0; s < kNumModelStyles; ++s) {
      if (!present[static_cast<std::size_t>(s)]) continue;
      const double v = engine_score(u.scores[static_cast<std::size_t>(s)], cfg.engine, cfg.alpha);
      if (best < 0 || v > best_score) {
        best = s;
        best_score = v;
      }
    }
    if (best >= 0) ++result.confusion.counts(best, truth);
  }

  result.table = performance_from_trials(result.trials);
  return result;
}

PerformanceTable run_verification_suite(const ExperimentConfig& cfg,
                                        const CorpusManifest& manifest,
                                        const ClipSource& source,
                                        std::vector<VerificationTrial>* trials) {
  auto result = evaluate_run(prepare_experiment(cfg, manifest, source), cfg);
  if (trials) *trials = std::move(result.trials);
  return result.table;
}

ConfusionMatrix build_confusion_matrix(const ExperimentConfig& cfg,
                                       const CorpusManifest& manifest,
                                       const ClipSource& source) {
  return evaluate_run(prepare_experiment(cfg, manifest, source), cfg).confusion;
}

PerformanceTable run_multispeaker_experiment(const ExperimentConfig& cfg,
                                             const CorpusManifest& manifest,
                                             const ClipSource& source,
                                             std::vector<VerificationTrial>* trials) {
  if (manifest.speakers().size() < 2)
    throw Error("multi-speaker training needs at least two speakers");
  ExperimentConfig multi = cfg;
  multi.multi_speaker = true;
  return run_verification_suite(multi, manifest, source, trials);
}

}  // namespace stylever
