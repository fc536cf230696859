#pragma once

// Continuous-density HMM with diagonal Gaussian-mixture states. All
// probability arithmetic is in the log domain.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "stylever/gmm.hpp"
#include "stylever/lpc.hpp"

namespace stylever {

using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using BoolVector = Eigen::Array<bool, Eigen::Dynamic, 1>;

struct HmmModel {
  Eigen::VectorXd pi;      // initial distribution
  Eigen::MatrixXd trans;   // a_ij, rows sum to 1
  BoolMatrix mask;         // admissible transitions
  BoolVector final_states; // states a sequence may end in
  std::vector<DiagGmm> states;
  Eigen::VectorXd var_floor;  // per-dimension variance floor used in training

  int n_states() const { return static_cast<int>(states.size()); }
  Eigen::Index dim() const { return states.empty() ? 0 : states.front().dim(); }
  int n_mix() const {
    return states.empty() ? 0 : static_cast<int>(states.front().num_components());
  }
  bool left_to_right() const;

  // Throws Error when a stochasticity or mask invariant fails by more than tol.
  void validate(double tol = 1e-9) const;
};

// pi = e_1, a_ii = a_i,i+1 = 1/2, last state absorbing and the only final
// state. `states` is left empty.
HmmModel left_to_right_topology(int n_states);

// log b_j(o_t) for every state and frame (N x T).
Eigen::MatrixXd emission_log_likelihoods(const HmmModel& model,
                                         const Eigen::Ref<const Eigen::MatrixXd>& obs);

// Recursions over a precomputed emission matrix (N x T).
double log_forward_emissions(const HmmModel& model, const Eigen::MatrixXd& log_b);
struct StatePath;
StatePath viterbi_emissions(const HmmModel& model, const Eigen::MatrixXd& log_b);

// log P(O | model); -inf when no admissible path exists.
double log_forward(const HmmModel& model, const Eigen::Ref<const Eigen::MatrixXd>& obs);
inline double log_forward(const HmmModel& model, const ObservationSequence& obs) {
  return log_forward(model, obs.features);
}

struct StatePath {
  std::vector<int> states;
  double log_prob = kLogZero;
};

// Most probable state path; ties go to the lower state index. Throws
// Error("no admissible path") when every path has zero probability.
StatePath viterbi_decode(const HmmModel& model,
                         const Eigen::Ref<const Eigen::MatrixXd>& obs);
inline StatePath viterbi_decode(const HmmModel& model, const ObservationSequence& obs) {
  return viterbi_decode(model, obs.features);
}

struct TrainOptions {
  int max_iter = 30;
  double tol = 1e-4;            // absolute corpus log-likelihood gain
  double var_floor_rel = 1e-4;  // relative to pooled per-dimension variance
};

struct TrainReport {
  // Corpus log-likelihood of the initial model and of every re-estimate.
  std::vector<double> log_likelihood;
  int iterations = 0;
  bool converged = false;
};

using SequenceSet = std::span<const Eigen::MatrixXd>;

// Per-dimension variance floor: rel x pooled variance.
Eigen::VectorXd variance_floor(SequenceSet obs_set, double rel);

// Uniform time slicing of every sequence over the states, seeded k-means
// within each state, uniform admissible transitions.
HmmModel init_hmm(SequenceSet obs_set, int n_states, int n_mix, std::uint64_t seed,
                  const TrainOptions& opts = {});

// Baum-Welch re-estimation of pi, masked transitions and mixture parameters
// over all sequences. Optional `on_iteration` sees every re-estimated model.
HmmModel baum_welch_train(SequenceSet obs_set, HmmModel model,
                          const TrainOptions& opts = {}, TrainReport* report = nullptr,
                          const std::function<void(const HmmModel&)>& on_iteration = {});

double corpus_log_likelihood(const HmmModel& model, SequenceSet obs_set);

}  // namespace stylever
