// Runs every acceptance criterion and prints one PASS/FAIL line for each.
// Exit status is non-zero when any criterion fails, unless it is listed
// with --known-fail (the line still says FAIL).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <cstdarg>
#include <functional>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "stylever/config.hpp"
#include "stylever/corpus.hpp"
#include "stylever/eval.hpp"
#include "stylever/hmm.hpp"
#include "stylever/lpc.hpp"
#include "stylever/prosody.hpp"
#include "stylever/sphmm.hpp"
#include "support.hpp"

using namespace stylever;
namespace st = stylever::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

[[gnu::format(printf, 1, 2)]] std::string strf(const char* fmt, ...) {
  va_list args;
  va_start(args, fmt);
  char buf[512];
  std::vsnprintf(buf, sizeof buf, fmt, args);
  va_end(args);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome inference_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1001);
  int models = 0, bad = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 240; ++trial) {
    const int n = 1 + trial % 3, m = 1 + (trial / 3) % 2, d = 1 + (trial / 6) % 2;
    const int t = 1 + (trial / 12) % 5;
    const HmmModel h = st::random_hmm(rng, n, m, d, trial % 4 == 0);
    const Eigen::MatrixXd obs = st::random_obs(rng, d, t);
    const auto oracle = st::enumerate_paths(h, obs);
    ++models;
    const double lf = log_forward(h, obs);
    if (oracle.total == 0.0) {
      bad += lf != kLogZero;
      continue;
    }
    const StatePath path = viterbi_decode(h, obs);
    const double err = std::max(std::abs(lf - std::log(oracle.total)),
                                std::abs(path.log_prob - std::log(oracle.best)));
    worst = std::max(worst, err);
    bad += err > 1e-10 || path.states != oracle.best_path;
  }
  const double secs = seconds_since(t0);
  return {bad == 0 && secs < 10.0,
          strf("%d models, %d mismatches, max err %.1e, %.2f s", models, bad, worst, secs)};
}

Outcome em_monotonicity() {
  std::mt19937_64 rng(31337);
  int drops = 0, invalid = 0, iterations = 0;
  for (int run = 0; run < 50; ++run) {
    const HmmModel source = st::random_hmm(rng, 3, 2, 2, true);
    std::vector<Eigen::MatrixXd> set;
    for (int i = 0; i < 5; ++i) set.push_back(st::sample_hmm(rng, source, 40));
    TrainReport report;
    baum_welch_train(set, init_hmm(set, 3, 2, static_cast<std::uint64_t>(run)), {}, &report,
                     [&](const HmmModel& h) {
                       try {
                         h.validate(1e-9);
                       } catch (const Error&) {
                         ++invalid;
                       }
                     });
    iterations += report.iterations;
    for (std::size_t i = 1; i < report.log_likelihood.size(); ++i)
      drops += report.log_likelihood[i] < report.log_likelihood[i - 1] - 1e-6;
  }
  return {drops == 0 && invalid == 0,
          strf("50 runs, %d iterations, %d decreases, %d invalid models", iterations, drops,
                      invalid)};
}

Outcome dsp_oracles() {
  std::mt19937_64 rng(4242);
  double lev = 0.0, cep = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXd r = st::random_autocorrelation(rng, 16);
    lev = std::max(lev, (levinson_durbin(r, 16).a - st::toeplitz_solve(r, 16)).cwiseAbs().maxCoeff());
    const Eigen::VectorXd a = st::random_stable_lpc(rng, 16);
    cep = std::max(cep, (lpc_to_lpcc(a, 16) - st::log_series_cepstrum(a, 16)).cwiseAbs().maxCoeff());
  }

  const double a1 = 1.3, a2 = -0.6;
  std::normal_distribution<double> g(0.0, 0.05);
  AudioClip ar;
  ar.samples.assign(4 * 16000, 0.0);
  for (std::size_t n = 2; n < ar.samples.size(); ++n)
    ar.samples[n] = a1 * ar.samples[n - 1] + a2 * ar.samples[n - 2] + g(rng);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(16);
  int frames = 0;
  for (const auto& f : frame_signal(ar, FrameConfig{})) {
    sum += levinson_durbin(autocorrelate(apply_hamming(f).samples, 16), 16).a;
    ++frames;
  }
  const Eigen::VectorXd mean = sum / frames;
  const double ar_err = std::max(std::abs(mean(0) - a1) / std::abs(a1), std::abs(mean(1) - a2) / std::abs(a2));

  double f0_err = 0.0;
  std::uniform_real_distribution<double> phase(0.0, 6.28);
  for (double f = 60.0; f <= 400.0; f += 1.0) {
    const auto s = st::sine(f, 0.5, 512, 16000, phase(rng));
    f0_err = std::max(f0_err, std::abs(estimate_f0(Eigen::Map<const Eigen::VectorXd>(s.data(), 512), 16000) - f));
  }
  return {lev <= 1e-8 && cep <= 1e-8 && ar_err < 0.05 && f0_err <= 1.0,
          strf("levinson %.1e, lpcc %.1e, AR(2) %.2f%%, F0 %.3f Hz", lev, cep,
                      100.0 * ar_err, f0_err)};
}

Outcome metric_replication() {
  const std::array<int, 9> t1{99, 37, 85, 60, 61, 59, 41, 61, 57};
  const std::array<int, 9> t2{99, 32, 80, 55, 57, 53, 37, 55, 51};
  // male/female/average H0 then H1, speaking-style order.
  const int table1[9][6] = {{99, 99, 99, 1, 1, 1},    {36, 38, 37, 22, 20, 21},
                            {84, 86, 85, 12, 12, 12}, {60, 60, 60, 17, 15, 16},
                            {60, 62, 61, 18, 18, 18}, {60, 58, 59, 18, 18, 18},
                            {40, 42, 41, 21, 23, 22}, {60, 62, 61, 18, 18, 18},
                            {56, 58, 57, 19, 19, 19}};
  const int table7[9][6] = {{99, 99, 99, 1, 1, 1},    {38, 40, 39, 17, 17, 17},
                            {85, 85, 85, 10, 10, 10}, {63, 61, 62, 15, 15, 15},
                            {59, 61, 60, 14, 14, 14}, {59, 61, 60, 15, 15, 15},
                            {44, 40, 42, 18, 18, 18}, {61, 63, 62, 13, 15, 14},
                            {57, 57, 57, 15, 15, 15}};
  int cell_misses = 0;
  for (const auto* t : {table1, table7}) {
    PerformanceTable table;
    for (int i = 0; i < 9; ++i)
      table.rows.push_back({kModelStyles[i], double(t[i][0]), double(t[i][3]), double(t[i][1]),
                            double(t[i][4])});
    const auto rounded = table.rounded();
    for (int i = 0; i < 9; ++i)
      cell_misses += rounded[i].avg_h0 != t[i][2] || rounded[i].avg_h1 != t[i][5];
  }
  const double avg1 = aggregate_average(t1), avg2 = aggregate_average(t2);
  const double imp = improvement_rate(avg1, avg2), shouted = improvement_rate(37, 32);
  return {avg1 == 62.2 && avg2 == 57.7 && imp == 7.8 && shouted == 15.6 && cell_misses == 0,
          strf("averages %.1f / %.1f, improvements %.1f / %.1f, %d average-cell misses",
                      avg1, avg2, imp, shouted, cell_misses)};
}

Outcome protocol_counts() {
  const auto split = split_train_test(make_synthetic_manifest(20));
  return {split.train.size() == 7200 && split.test.size() == 6400,
          strf("train %zu, test %zu", split.train.size(), split.test.size())};
}

double avg_h0(const PerformanceTable& t, Style s) {
  for (const auto& row : t.rows)
    if (row.style == s) return (row.male_h0 + row.female_h0) / 2.0;
  return 0.0;
}

Outcome end_to_end() {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg;
  cfg.n_states = 3;
  cfg.n_mix = 2;
  cfg.seed = 7;
  cfg.supra_components = 1;
  cfg.scenario = ScenarioKind::kScoreOnly;
  cfg.adapt_threshold = false;
  const auto run = prepare_experiment(cfg, make_synthetic_manifest(4), synthetic_source(7));

  auto hmm_cfg = cfg;
  hmm_cfg.engine = Engine::kHmm;
  auto sp_cfg = cfg;
  sp_cfg.engine = Engine::kSphmm;
  sp_cfg.alpha = 0.5;
  const auto hmm = evaluate_run(run, hmm_cfg);
  const auto sp = evaluate_run(run, sp_cfg);

  const double neutral = avg_h0(sp.table, Style::kNeutral);
  int worst_col = 100;
  for (const auto* res : {&hmm, &sp}) {
    const auto r = res->confusion.rounded();
    for (int c = 0; c < kNumModelStyles; ++c) {
      const int sum = r.col(c).sum();
      if (std::abs(sum - 100) > std::abs(worst_col - 100)) worst_col = sum;
    }
  }
  auto prosodic = [](const PerformanceTable& t) {
    return (avg_h0(t, Style::kSlow) + avg_h0(t, Style::kFast) + avg_h0(t, Style::kShouted)) / 3.0;
  };
  const double gain = prosodic(sp.table) - prosodic(hmm.table);
  const double secs = seconds_since(t0);

  const bool a = neutral >= 90.0, b = std::abs(worst_col - 100) <= 1, c = gain >= 3.0;
  return {a && b && c && secs < 300.0,
          strf("(a) neutral H0 %.1f%% %s; (b) column sums within %d of 100 %s; "
                      "(c) slow/fast/shouted H0 HMM %.1f%% SPHMM %.1f%% gain %+.1f pts %s; %.0f s",
                      neutral, a ? "ok" : "MISS", std::abs(worst_col - 100), b ? "ok" : "MISS",
                      prosodic(hmm.table), prosodic(sp.table), gain, c ? "ok" : "MISS", secs)};
}

Outcome decision_exactness() {
  const double theta = -1234.5;
  const bool boundary = decide(theta, theta) == Decision::kAccept &&
                        decide(std::nextafter(theta, -std::numeric_limits<double>::infinity()), theta) ==
                            Decision::kReject;

  const auto traits = synthetic_speaker(0);
  std::vector<UtteranceFeatures> train;
  for (int tok = 1; tok <= 5; ++tok)
    train.push_back(analyze_utterance(synth_style_clip(Style::kAngry, 1, 900 + tok, traits)));
  std::vector<Eigen::MatrixXd> obs;
  for (const auto& f : train) obs.push_back(f.obs.features);
  const SphmmModel model =
      train_sphmm(baum_welch_train(obs, init_hmm(obs, 3, 2, 7)), train,
                  SphmmConfig{.grouping = SupraGrouping::for_states(3)});
  int differ = 0;
  for (int i = 0; i < 20; ++i) {
    const Style s = kModelStyles[i % kNumModelStyles];
    const auto f = analyze_utterance(synth_style_clip(s, 1 + i % 4, 5000 + i, traits));
    const double a = sphmm_score(model, f, 0.0).combined;
    const double b = log_forward(model.acoustic, f.obs);
    differ += std::memcmp(&a, &b, sizeof a) != 0;
  }
  return {boundary && differ == 0,
          strf("boundary %s, %d of 20 clips differ at alpha 0", boundary ? "exact" : "WRONG", differ)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome reproducibility(const std::string& cli, const fs::path& work) {
  fs::remove_all(work);
  fs::create_directories(work);
  {
    std::ofstream cfg(work / "run.cfg");
    cfg << "N = 3\nM = 2\nseed = 7\njobs = 1\n";
  }
  auto sh = [&](const std::string& args) {
    const std::string cmd = strf("\"%s\" %s > \"%s\" 2>&1", cli.c_str(), args.c_str(), (work / "log.txt").string().c_str());
    return std::system(cmd.c_str());
  };
  const std::string corpus = (work / "corpus").string();
  if (sh(strf("synth --speakers 2 --seed 7 --out \"%s\"", corpus.c_str())) != 0)
    return {false, "synth failed: " + slurp(work / "log.txt")};
  for (const char* name : {"run1", "run2"})
    if (sh(strf("evaluate --corpus \"%s\" --config \"%s\" --out \"%s\"", corpus.c_str(),
                     (work / "run.cfg").string().c_str(), (work / name).string().c_str())) != 0)
      return {false, std::string("evaluate failed: ") + slurp(work / "log.txt")};
  const std::string a = slurp(work / "run1" / "trials.csv");
  const std::string b = slurp(work / "run2" / "trials.csv");
  const bool same = !a.empty() && a == b;
  return {same, strf("trials.csv %zu bytes, %s", a.size(), same ? "identical" : "DIFFERENT")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("acceptance criteria");
  std::string cli;
  std::string work = (fs::temp_directory_path() / "stylever_acceptance").string();
  std::vector<int> known_fail;
  app.add_option("--cli", cli, "Path to the stylever executable")->required();
  app.add_option("--work", work, "Scratch directory");
  app.add_option("--known-fail", known_fail, "Criteria whose failure does not fail the run");
  CLI11_PARSE(app, argc, argv);

  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "HMM inference oracle", inference_oracle},
      {2, "EM monotonicity", em_monotonicity},
      {3, "DSP oracles", dsp_oracles},
      {4, "metric replication", metric_replication},
      {5, "protocol counts", protocol_counts},
      {6, "end-to-end directional", end_to_end},
      {7, "decision rule and alpha 0", decision_exactness},
      {8, "reproducibility", [&] { return reproducibility(cli, work); }},
  };

  const std::set<int> tolerated(known_fail.begin(), known_fail.end());
  int blocking = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %d %-28s %s  %s\n", c.id, c.name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass && !tolerated.contains(c.id)) ++blocking;
  }
  return blocking == 0 ? 0 : 1;
}
