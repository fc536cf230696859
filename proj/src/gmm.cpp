#include "stylever/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "stylever/error.hpp"

namespace stylever {

DiagGmm::DiagGmm(Eigen::VectorXd weights, Eigen::MatrixXd means,
                 Eigen::MatrixXd vars)
    : weights_(std::move(weights)), means_(std::move(means)), vars_(std::move(vars)) {
  if (weights_.size() == 0) throw Error("mixture needs at least one component");
  if (means_.cols() != weights_.size() || vars_.cols() != weights_.size() ||
      vars_.rows() != means_.rows())
    throw Error("mixture parameter shapes disagree");
  if ((weights_.array() <= 0.0).any()) throw Error("mixture weight not positive");
  if (std::abs(weights_.sum() - 1.0) > 1e-9) throw Error("mixture weights do not sum to 1");
  if (!(vars_.array() > 0.0).all() || !vars_.allFinite() || !means_.allFinite())
    throw Error("mixture variances must be positive and finite");
  inv_vars_ = vars_.cwiseInverse();
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  log_consts_.resize(weights_.size());
  for (Eigen::Index m = 0; m < weights_.size(); ++m)
    log_consts_(m) = std::log(weights_(m)) -
                     0.5 * (static_cast<double>(dim()) * log_2pi +
                            vars_.col(m).array().log().sum());
}

void DiagGmm::component_log_likelihoods(const Eigen::Ref<const Eigen::VectorXd>& x,
                                        Eigen::Ref<Eigen::VectorXd> out) const {
  for (Eigen::Index m = 0; m < weights_.size(); ++m)
    out(m) = log_consts_(m) -
             0.5 * ((x - means_.col(m)).array().square() * inv_vars_.col(m).array()).sum();
}

double DiagGmm::log_pdf(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd terms(weights_.size());
  component_log_likelihoods(x, terms);
  return log_sum_exp(terms);
}

double gmm_log_pdf(const DiagGmm& gmm, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != gmm.dim())
    throw Error("dimension mismatch: observation " + std::to_string(x.size()) +
                ", model " + std::to_string(gmm.dim()));
  return gmm.log_pdf(x);
}

std::vector<int> kmeans_assign(const Eigen::Ref<const Eigen::MatrixXd>& samples,
                               int k, std::uint64_t seed, int iterations) {
  const Eigen::Index n = samples.cols();
  if (k < 1 || n < k) throw Error("k-means needs at least k samples");
  std::mt19937_64 rng(seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  Eigen::MatrixXd centers(samples.rows(), k);
  for (int c = 0; c < k; ++c) centers.col(c) = samples.col(order[static_cast<std::size_t>(c)]);

  std::vector<int> assign(static_cast<std::size_t>(n), 0);
  for (int it = 0; it < iterations; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      (centers.colwise() - samples.col(i)).colwise().squaredNorm().minCoeff(&best);
      if (assign[static_cast<std::size_t>(i)] != best) changed = true;
      assign[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(samples.rows(), k);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.col(assign[static_cast<std::size_t>(i)]) += samples.col(i);
      counts(assign[static_cast<std::size_t>(i)]) += 1.0;
    }
    for (int c = 0; c < k; ++c)
      if (counts(c) > 0) centers.col(c) = sums.col(c) / counts(c);
    if (!changed && it > 0) break;
  }
  return assign;
}

DiagGmm fit_diag_gmm(const Eigen::Ref<const Eigen::MatrixXd>& samples,
                     int n_components, const Eigen::VectorXd& var_floor,
                     std::uint64_t seed, int em_iterations) {
  const Eigen::Index n = samples.cols();
  const Eigen::Index d = samples.rows();
  if (n < 1) throw Error("cannot fit a mixture to zero samples");
  if (var_floor.size() != d) throw Error("variance floor dimension mismatch");
  const int k = static_cast<int>(std::min<Eigen::Index>(n_components, n));

  auto floored = [&](Eigen::VectorXd v) { return v.cwiseMax(var_floor).eval(); };

  if (k == 1) {
    const Eigen::VectorXd mean = samples.rowwise().mean();
    Eigen::VectorXd var =
        (samples.colwise() - mean).array().square().rowwise().mean().matrix();
    return DiagGmm(Eigen::VectorXd::Ones(1), mean, floored(var));
  }

  const auto assign = kmeans_assign(samples, k, seed);
  Eigen::VectorXd weights = Eigen::VectorXd::Zero(k);
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(d, k);
  Eigen::MatrixXd vars(d, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    weights(assign[static_cast<std::size_t>(i)]) += 1.0;
    means.col(assign[static_cast<std::size_t>(i)]) += samples.col(i);
  }
  const Eigen::VectorXd global_mean = samples.rowwise().mean();
  const Eigen::VectorXd global_var =
      (samples.colwise() - global_mean).array().square().rowwise().mean().matrix();
  for (int c = 0; c < k; ++c) {
    if (weights(c) > 0) {
      means.col(c) /= weights(c);
    } else {
      means.col(c) = global_mean;
    }
  }
  vars.setZero();
  for (Eigen::Index i = 0; i < n; ++i) {
    const int c = assign[static_cast<std::size_t>(i)];
    vars.col(c) += (samples.col(i) - means.col(c)).cwiseAbs2();
  }
  for (int c = 0; c < k; ++c) {
    vars.col(c) = weights(c) > 1 ? floored(vars.col(c) / weights(c)) : floored(global_var);
    weights(c) = std::max(weights(c), 0.5);
  }
  weights /= weights.sum();
  DiagGmm gmm(weights, means, vars);

  Eigen::MatrixXd post(k, n);
  Eigen::VectorXd terms(k);
  for (int it = 0; it < em_iterations; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) {
      gmm.component_log_likelihoods(samples.col(i), terms);
      post.col(i) = (terms.array() - log_sum_exp(terms)).exp();
    }
    Eigen::VectorXd occ = post.rowwise().sum();
    for (int c = 0; c < k; ++c) {
      if (occ(c) < 1e-8) continue;
      means.col(c) = samples * post.row(c).transpose() / occ(c);
      Eigen::VectorXd v =
          (samples.colwise() - means.col(c)).array().square().matrix() *
          post.row(c).transpose() / occ(c);
      vars.col(c) = floored(v);
    }
    weights = (occ.array().max(1e-8)).matrix();
    weights /= weights.sum();
    gmm = DiagGmm(weights, means, vars);
  }
  return gmm;
}

}  // namespace stylever
