#pragma once

// Experimental protocol: per-group model training, H0/H1 verification trials,
// confusion matrices and the summary statistics reported over them.

#include <array>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stylever/auth.hpp"
#include "stylever/config.hpp"
#include "stylever/corpus.hpp"
#include "stylever/sphmm.hpp"

namespace stylever {

inline constexpr int kNumModelStyles = static_cast<int>(kModelStyles.size());

// Acceptance percentages per claimed style; NaN where no trials exist.
struct PerformanceRow {
  Style style = Style::kNeutral;
  double male_h0 = 0, male_h1 = 0, female_h0 = 0, female_h1 = 0;
};

struct RoundedRow {
  Style style = Style::kNeutral;
  std::optional<int> male_h0, male_h1, female_h0, female_h1, avg_h0, avg_h1;
};

struct PerformanceTable {
  std::vector<PerformanceRow> rows;  // kModelStyles order

  std::vector<RoundedRow> rounded() const;
};

// Nearest integer, halves away from zero.
int round_percent(double pct);
// Table average of two integer cells: round((male + female) / 2).
int average_cell(int male, int female);
std::optional<int> average_cell(std::optional<int> male, std::optional<int> female);
double round_to(double value, int decimals);

// Unweighted mean of the nine average-H0 cells, one decimal.
double aggregate_average(std::span<const int> avg_h0);
double aggregate_average(const PerformanceTable& table);

// 100 (new - old) / old, one decimal. Throws Error when old <= 0.
double improvement_rate(double new_value, double old_value);

PerformanceTable performance_from_trials(std::span<const VerificationTrial> trials);

// counts(model_style, test_style) over the nine model styles.
struct ConfusionMatrix {
  Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(kNumModelStyles, kNumModelStyles);

  double percent(int model, int test) const;
  // Integer percentages per column by largest remainder, so every populated
  // column sums to exactly 100. Empty columns are all zero.
  Eigen::MatrixXi rounded() const;
  int column_total(int test) const { return counts.col(test).sum(); }
};

// Integer apportionment of percentages summing to 100.
std::vector<int> largest_remainder(std::span<const double> percents);

using ClipSource = std::function<AudioClip(const ManifestEntry&)>;
ClipSource disk_source(std::filesystem::path root);
ClipSource synthetic_source(std::uint64_t corpus_seed);

// Sub-scores of one utterance against the nine style models of its
// speaker and sentence.
using StyleScores = std::array<SphmmScore, kNumModelStyles>;

struct ScoredUtterance {
  UtteranceMeta meta;
  StyleScores scores;
};

// Everything the protocol needs once models are trained and every relevant
// (utterance, model) pair is scored.
struct ExperimentRun {
  DataSplit split;
  std::map<GroupKey, SphmmModel> models;
  std::vector<ScoredUtterance> own_train;  // tokens 1..5 of each non-sad group
  std::vector<ScoredUtterance> test;       // tokens 6..9 of every group
  std::size_t skipped_frames = 0;
};

ExperimentRun prepare_experiment(const ExperimentConfig& cfg, const CorpusManifest& manifest,
                                 const ClipSource& source);

struct EvaluationResult {
  PerformanceTable table;
  ConfusionMatrix confusion;
  std::vector<VerificationTrial> trials;
  std::map<GroupKey, double> initial_thresholds;
};

// Scores under cfg.engine / cfg.scenario / cfg.alpha.
double engine_score(const SphmmScore& s, Engine engine, double alpha);

EvaluationResult evaluate_run(const ExperimentRun& run, const ExperimentConfig& cfg);

PerformanceTable run_verification_suite(const ExperimentConfig& cfg,
                                        const CorpusManifest& manifest,
                                        const ClipSource& source,
                                        std::vector<VerificationTrial>* trials = nullptr);

ConfusionMatrix build_confusion_matrix(const ExperimentConfig& cfg,
                                       const CorpusManifest& manifest,
                                       const ClipSource& source);

// run_verification_suite with multi-speaker training lists.
PerformanceTable run_multispeaker_experiment(const ExperimentConfig& cfg,
                                             const CorpusManifest& manifest,
                                             const ClipSource& source,
                                             std::vector<VerificationTrial>* trials = nullptr);

// Aligned text in the layout of a published table, and CSV.
void write_performance_text(std::ostream& out, const PerformanceTable& table,
                            const std::string& title);
void write_performance_csv(std::ostream& out, const PerformanceTable& table);
void write_confusion_text(std::ostream& out, const ConfusionMatrix& cm, const std::string& title);
void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm);

// Runs fn(i) for i in [0, n) on up to `jobs` threads; fn writes only to slot i.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace stylever
