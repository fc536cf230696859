#pragma once

// Generators and independent oracles shared by the unit and acceptance tests.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "stylever/gmm.hpp"
#include "stylever/hmm.hpp"

namespace stylever::testing {

inline Eigen::VectorXd random_simplex(std::mt19937_64& rng, Eigen::Index n) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = u(rng);
  return v / v.sum();
}

inline DiagGmm random_gmm(std::mt19937_64& rng, int m, int d) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> v(0.3, 2.0);
  Eigen::MatrixXd means(d, m), vars(d, m);
  for (int c = 0; c < m; ++c)
    for (int k = 0; k < d; ++k) {
      means(k, c) = g(rng);
      vars(k, c) = v(rng);
    }
  return DiagGmm(random_simplex(rng, m), means, vars);
}

// Either a fully connected model with some final states, or a left-to-right
// one; transitions and pi random within the mask.
inline HmmModel random_hmm(std::mt19937_64& rng, int n, int m, int d, bool ltr) {
  HmmModel h;
  if (ltr) {
    h = left_to_right_topology(n);
    for (int i = 0; i + 1 < n; ++i) {
      const double stay = std::uniform_real_distribution<double>(0.1, 0.9)(rng);
      h.trans(i, i) = stay;
      h.trans(i, i + 1) = 1.0 - stay;
    }
  } else {
    h.pi = random_simplex(rng, n);
    h.trans.resize(n, n);
    for (int i = 0; i < n; ++i) h.trans.row(i) = random_simplex(rng, n).transpose();
    h.mask = BoolMatrix::Constant(n, n, true);
    h.final_states = BoolVector::Constant(n, true);
    if (n > 1 && std::bernoulli_distribution(0.5)(rng)) h.final_states(0) = false;
  }
  h.var_floor = Eigen::VectorXd::Constant(d, 1e-6);
  for (int j = 0; j < n; ++j) h.states.push_back(random_gmm(rng, m, d));
  return h;
}

inline Eigen::MatrixXd random_obs(std::mt19937_64& rng, int d, int t) {
  std::normal_distribution<double> g(0.0, 1.2);
  Eigen::MatrixXd o(d, t);
  for (int c = 0; c < t; ++c)
    for (int k = 0; k < d; ++k) o(k, c) = g(rng);
  return o;
}

// Draws a state path by the transition matrix and an observation from the
// visited state's mixture at every step.
inline Eigen::MatrixXd sample_hmm(std::mt19937_64& rng, const HmmModel& h, int t_len) {
  std::normal_distribution<double> g(0.0, 1.0);
  auto draw = [&](const Eigen::VectorXd& p) {
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      u -= p(i);
      if (u <= 0.0) return static_cast<int>(i);
    }
    return static_cast<int>(p.size() - 1);
  };
  Eigen::MatrixXd obs(h.dim(), t_len);
  int state = draw(h.pi);
  for (int t = 0; t < t_len; ++t) {
    if (t > 0) state = draw(h.trans.row(state).transpose());
    const DiagGmm& gmm = h.states[state];
    const int c = draw(gmm.weights());
    for (Eigen::Index k = 0; k < h.dim(); ++k)
      obs(k, t) = gmm.means()(k, c) + std::sqrt(gmm.vars()(k, c)) * g(rng);
  }
  return obs;
}

// Mixture density in the linear domain, straight from the definition.
inline double linear_gmm_pdf(const DiagGmm& gmm, const Eigen::VectorXd& x) {
  double p = 0.0;
  for (Eigen::Index c = 0; c < gmm.num_components(); ++c) {
    double comp = gmm.weights()(c);
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      const double var = gmm.vars()(k, c);
      const double z = x(k) - gmm.means()(k, c);
      comp *= std::exp(-0.5 * z * z / var) / std::sqrt(2.0 * std::numbers::pi * var);
    }
    p += comp;
  }
  return p;
}

struct Enumerated {
  double total = 0.0;  // linear-domain sum over admissible paths
  double best = 0.0;
  std::vector<int> best_path;
};

// Visits all N^T state sequences in lexicographic order, so the first
// strict maximum is also the tie-break toward lower state indices.
inline Enumerated enumerate_paths(const HmmModel& h, const Eigen::MatrixXd& obs) {
  const int n = h.n_states();
  const auto t_len = static_cast<int>(obs.cols());
  Eigen::MatrixXd b(n, t_len);
  for (int j = 0; j < n; ++j)
    for (int t = 0; t < t_len; ++t)
      b(j, t) = linear_gmm_pdf(h.states[j], obs.col(t));

  Enumerated out;
  std::vector<int> path(t_len, 0);
  while (true) {
    double p = h.pi(path[0]) * b(path[0], 0);
    for (int t = 1; t < t_len; ++t) {
      const bool allowed = h.mask(path[t - 1], path[t]);
      p *= allowed ? h.trans(path[t - 1], path[t]) * b(path[t], t) : 0.0;
    }
    if (!h.final_states(path[t_len - 1])) p = 0.0;
    out.total += p;
    if (p > out.best) {
      out.best = p;
      out.best_path = path;
    }
    int pos = t_len - 1;
    while (pos >= 0 && ++path[pos] == n) path[pos--] = 0;
    if (pos < 0) break;
  }
  return out;
}

// Normal equations R a = r[1..p] solved densely.
inline Eigen::VectorXd toeplitz_solve(const Eigen::VectorXd& r, int p) {
  Eigen::MatrixXd big_r(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) big_r(i, j) = r(std::abs(i - j));
  return big_r.colPivHouseholderQr().solve(r.segment(1, p));
}

// Coefficients c_1..c_n of -log A(z) = Σ_m P(z)^m / m with P(z) = Σ a_k z^k,
// by truncated polynomial powers.
inline Eigen::VectorXd log_series_cepstrum(const Eigen::VectorXd& a, int n) {
  using Poly = std::vector<long double>;
  Poly poly(n + 1, 0.0L);
  for (Eigen::Index k = 0; k < a.size() && k < n; ++k) poly[k + 1] = a(k);
  Poly power = poly;
  Poly sum(n + 1, 0.0L);
  for (int m = 1; m <= n; ++m) {
    for (int i = 0; i <= n; ++i) sum[i] += power[i] / m;
    Poly next(n + 1, 0.0L);
    for (int i = 0; i <= n; ++i)
      for (int j = 0; i + j <= n; ++j) next[i + j] += power[i] * poly[j];
    power = next;
  }
  Eigen::VectorXd c(n);
  for (int i = 1; i <= n; ++i) c(i - 1) = static_cast<double>(sum[i]);
  return c;
}

// Random positive-definite autocorrelation: the sequence of a random signal.
inline Eigen::VectorXd random_autocorrelation(std::mt19937_64& rng, int order, int len = 64) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd x(len);
  for (int i = 0; i < len; ++i) x(i) = g(rng);
  Eigen::VectorXd r(order + 1);
  for (int k = 0; k <= order; ++k) r(k) = x.head(len - k).dot(x.segment(k, len - k));
  return r;
}

// Random stable predictor from random reflection coefficients (step-up).
inline Eigen::VectorXd random_stable_lpc(std::mt19937_64& rng, int p) {
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(p);
  for (int i = 1; i <= p; ++i) {
    const double k = u(rng);
    Eigen::VectorXd prev = a;
    for (int j = 1; j < i; ++j) a(j - 1) = prev(j - 1) - k * prev(i - j - 1);
    a(i - 1) = k;
  }
  return a;
}

inline std::vector<double> sine(double freq, double amp, int n, int rate = 16000,
                                double phase = 0.0) {
  std::vector<double> s(n);
  for (int i = 0; i < n; ++i)
    s[i] = amp * std::sin(2.0 * std::numbers::pi * freq * i / rate + phase);
  return s;
}

}  // namespace stylever::testing
