#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace stylever {

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b)) without overflow; -inf absorbs.
inline double log_add(double a, double b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

template <typename Derived>
double log_sum_exp(const Eigen::DenseBase<Derived>& v) {
  const double m = v.maxCoeff();
  if (m == kLogZero) return kLogZero;
  return m + std::log((v.derived().array() - m).exp().sum());
}

struct GaussianComponent {
  double weight = 1.0;
  Eigen::VectorXd mean;
  Eigen::VectorXd var;  // diagonal covariance
};

// Diagonal-covariance Gaussian mixture. Means and variances are stored one
// component per column (dim x M).
class DiagGmm {
 public:
  DiagGmm() = default;
  // Throws Error when shapes disagree, weights are not positive and
  // normalized to 1e-9, or a variance is not positive.
  DiagGmm(Eigen::VectorXd weights, Eigen::MatrixXd means, Eigen::MatrixXd vars);

  Eigen::Index num_components() const { return weights_.size(); }
  Eigen::Index dim() const { return means_.rows(); }
  const Eigen::VectorXd& weights() const { return weights_; }
  const Eigen::MatrixXd& means() const { return means_; }
  const Eigen::MatrixXd& vars() const { return vars_; }
  GaussianComponent component(Eigen::Index m) const {
    return {weights_(m), means_.col(m), vars_.col(m)};
  }

  // log w_m + log N(x; mu_m, var_m) for every component.
  void component_log_likelihoods(const Eigen::Ref<const Eigen::VectorXd>& x,
                                 Eigen::Ref<Eigen::VectorXd> out) const;
  double log_pdf(const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  Eigen::VectorXd weights_;
  Eigen::MatrixXd means_;
  Eigen::MatrixXd vars_;
  Eigen::MatrixXd inv_vars_;
  Eigen::VectorXd log_consts_;  // log w_m - 0.5 Σ log(2π var)
};

// Throws Error on dimension mismatch.
double gmm_log_pdf(const DiagGmm& gmm, const Eigen::Ref<const Eigen::VectorXd>& x);

// Maximum-likelihood fit on columns of `samples` (dim x n). A single
// component is fit in closed form; more components run seeded k-means
// followed by EM. Variances are floored per dimension.
DiagGmm fit_diag_gmm(const Eigen::Ref<const Eigen::MatrixXd>& samples,
                     int n_components, const Eigen::VectorXd& var_floor,
                     std::uint64_t seed = 0, int em_iterations = 20);

// Seeded Lloyd iterations; returns the cluster index of every column.
std::vector<int> kmeans_assign(const Eigen::Ref<const Eigen::MatrixXd>& samples,
                               int k, std::uint64_t seed, int iterations = 10);

}  // namespace stylever
