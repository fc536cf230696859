#pragma once

// Suprasegmental HMM: contiguous groups of acoustic states form
// suprasegmental states that observe one prosodic vector per visit.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "stylever/hmm.hpp"
#include "stylever/prosody.hpp"

namespace stylever {

struct SupraGrouping {
  std::vector<int> sizes{3, 2};

  int num_groups() const { return static_cast<int>(sizes.size()); }
  int num_states() const;
  int group_of(int state) const;
  // Throws Error unless every size is positive and they sum to n_states.
  void validate(int n_states) const;

  // [3,2] for five states; otherwise the first group takes round(0.6 N)
  // states clamped to [1, N-1], and N = 1 has a single group.
  static SupraGrouping for_states(int n_states);
};

// One frame range per suprasegmental state; a range may be empty.
struct SegmentAlignment {
  std::vector<FrameRange> segments;

  int empty_count() const;
};

// Groups the frames of a left-to-right path by suprasegmental state.
SegmentAlignment align_segments(const StatePath& path, const SupraGrouping& grouping);

struct SphmmConfig {
  SupraGrouping grouping;
  int supra_components = 1;
  double alpha = 0.5;
  // voicing, F0 (Hz^2), energy (dB^2), log duration
  Eigen::Vector4d var_floor{0.0025, 25.0, 1.0, 0.0025};
  std::uint64_t seed = 0;
};

struct SphmmModel {
  HmmModel acoustic;
  SupraGrouping grouping;
  Eigen::MatrixXd supra_trans;  // b_ij, left-to-right
  std::vector<DiagGmm> supra_states;
  double alpha = 0.5;

  int num_supra_states() const { return grouping.num_groups(); }
  void validate(double tol = 1e-9) const;
};

// Acoustic observations plus per-observation prosody.
struct UtteranceFeatures {
  ObservationSequence obs;
  std::vector<FrameProsody> prosody;  // one entry per obs column
};

UtteranceFeatures analyze_utterance(const AudioClip& clip, const FrameConfig& frames = {},
                                    const ProsodyConfig& prosody = {});

// Viterbi-aligns every training utterance with `acoustic`, collects one
// prosodic vector per non-empty segment and fits the suprasegmental
// densities; b_ij comes from segment adjacency counts. Throws Error naming a
// suprasegmental state that collected no vectors.
SphmmModel train_sphmm(HmmModel acoustic, std::span<const UtteranceFeatures> train,
                       const SphmmConfig& cfg);

struct SphmmScore {
  double acoustic = kLogZero;   // log P(O | λ)
  double prosodic = kLogZero;   // suprasegmental term
  double combined = kLogZero;   // (1-α) acoustic + α prosodic
  int empty_segments = 0;
};

// Combination rule; α = 0 and α = 1 return the respective term exactly.
double combine_scores(double acoustic, double prosodic, double alpha);

// Acoustic and prosodic sub-scores at the model's α.
SphmmScore sphmm_score(const SphmmModel& model, const UtteranceFeatures& feats);
SphmmScore sphmm_score(const SphmmModel& model, const UtteranceFeatures& feats,
                       double alpha);

inline double sphmm_log_likelihood(const SphmmModel& model, const UtteranceFeatures& feats) {
  return sphmm_score(model, feats).combined;
}

// Prosodic term for a given alignment.
double prosodic_log_likelihood(const SphmmModel& model,
                               const std::vector<FrameProsody>& prosody,
                               const SegmentAlignment& alignment);

}  // namespace stylever
