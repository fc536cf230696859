#include <algorithm>
#include <cmath>
#include <string>

#include "stylever/error.hpp"
#include "stylever/hmm.hpp"

namespace stylever {
namespace {

constexpr double kMinWeight = 1e-8;

Eigen::MatrixXd log_of(const Eigen::MatrixXd& p) {
  return p.unaryExpr([](double v) { return v > 0.0 ? std::log(v) : kLogZero; });
}

// Sufficient statistics of one Baum-Welch pass. First and second moments are
// accumulated around the current means.
struct Accumulators {
  Eigen::VectorXd pi;
  Eigen::MatrixXd trans;
  Eigen::MatrixXd occ;                   // N x M
  std::vector<Eigen::MatrixXd> first;    // per state, d x M
  std::vector<Eigen::MatrixXd> second;   // per state, d x M
  double log_likelihood = 0.0;

  Accumulators(int n, int m, Eigen::Index d)
      : pi(Eigen::VectorXd::Zero(n)),
        trans(Eigen::MatrixXd::Zero(n, n)),
        occ(Eigen::MatrixXd::Zero(n, m)),
        first(static_cast<std::size_t>(n), Eigen::MatrixXd::Zero(d, m)),
        second(static_cast<std::size_t>(n), Eigen::MatrixXd::Zero(d, m)) {}
};

void accumulate(const HmmModel& model, const Eigen::MatrixXd& obs, Accumulators& acc) {
  const int n = model.n_states();
  const int mix = model.n_mix();
  const Eigen::Index len = obs.cols();
  const Eigen::MatrixXd log_a = log_of(model.trans);
  const Eigen::VectorXd log_pi = log_of(model.pi);

  // Component log terms per state and frame, and their state totals.
  std::vector<Eigen::MatrixXd> comp(static_cast<std::size_t>(n), Eigen::MatrixXd(mix, len));
  Eigen::MatrixXd b(n, len);
  for (int j = 0; j < n; ++j) {
    auto& cj = comp[static_cast<std::size_t>(j)];
    for (Eigen::Index t = 0; t < len; ++t) {
      model.states[static_cast<std::size_t>(j)].component_log_likelihoods(obs.col(t),
                                                                          cj.col(t));
      b(j, t) = log_sum_exp(cj.col(t));
    }
  }

  Eigen::MatrixXd alpha(n, len), beta(n, len);
  alpha.col(0) = log_pi + b.col(0);
  for (Eigen::Index t = 1; t < len; ++t)
    for (int j = 0; j < n; ++j) {
      double s = kLogZero;
      for (int i = 0; i < n; ++i)
        if (model.mask(i, j)) s = log_add(s, alpha(i, t - 1) + log_a(i, j));
      alpha(j, t) = s + b(j, t);
    }
  for (int j = 0; j < n; ++j) beta(j, len - 1) = model.final_states(j) ? 0.0 : kLogZero;
  for (Eigen::Index t = len - 2; t >= 0; --t)
    for (int i = 0; i < n; ++i) {
      double s = kLogZero;
      for (int j = 0; j < n; ++j)
        if (model.mask(i, j)) s = log_add(s, log_a(i, j) + b(j, t + 1) + beta(j, t + 1));
      beta(i, t) = s;
    }

  double ll = kLogZero;
  for (int j = 0; j < n; ++j)
    if (model.final_states(j)) ll = log_add(ll, alpha(j, len - 1));
  if (!std::isfinite(ll)) throw Error("sequence has zero likelihood");
  acc.log_likelihood += ll;

  for (int j = 0; j < n; ++j) acc.pi(j) += std::exp(alpha(j, 0) + beta(j, 0) - ll);
  for (Eigen::Index t = 0; t + 1 < len; ++t)
    for (int i = 0; i < n; ++i) {
      if (alpha(i, t) == kLogZero) continue;
      for (int j = 0; j < n; ++j)
        if (model.mask(i, j))
          acc.trans(i, j) += std::exp(alpha(i, t) + log_a(i, j) + b(j, t + 1) +
                                      beta(j, t + 1) - ll);
    }

  for (int j = 0; j < n; ++j) {
    const auto& state = model.states[static_cast<std::size_t>(j)];
    const auto& cj = comp[static_cast<std::size_t>(j)];
    auto& f = acc.first[static_cast<std::size_t>(j)];
    auto& s = acc.second[static_cast<std::size_t>(j)];
    for (Eigen::Index t = 0; t < len; ++t) {
      const double log_gamma = alpha(j, t) + beta(j, t) - ll;
      if (log_gamma == kLogZero) continue;
      for (int m = 0; m < mix; ++m) {
        const double g = std::exp(log_gamma + cj(m, t) - b(j, t));
        if (g == 0.0) continue;
        acc.occ(j, m) += g;
        const Eigen::VectorXd diff = obs.col(t) - state.means().col(m);
        f.col(m) += g * diff;
        s.col(m) += g * diff.cwiseAbs2();
      }
    }
  }
}

HmmModel reestimate(const HmmModel& model, const Accumulators& acc,
                    std::size_t n_sequences) {
  HmmModel out = model;
  const int n = model.n_states();
  out.pi = acc.pi / static_cast<double>(n_sequences);
  out.pi /= out.pi.sum();

  for (int i = 0; i < n; ++i) {
    const double row = acc.trans.row(i).sum();
    if (row > 0.0) out.trans.row(i) = acc.trans.row(i) / row;
  }

  for (int j = 0; j < n; ++j) {
    const auto& old = model.states[static_cast<std::size_t>(j)];
    const double total = acc.occ.row(j).sum();
    if (!(total > 0.0)) continue;
    Eigen::VectorXd weights = old.weights();
    Eigen::MatrixXd means = old.means();
    Eigen::MatrixXd vars = old.vars();
    for (Eigen::Index m = 0; m < old.num_components(); ++m) {
      const double g = acc.occ(j, m);
      weights(m) = std::max(g / total, kMinWeight);
      if (g < 1e-10) continue;
      const Eigen::VectorXd shift = acc.first[static_cast<std::size_t>(j)].col(m) / g;
      means.col(m) = old.means().col(m) + shift;
      vars.col(m) = (acc.second[static_cast<std::size_t>(j)].col(m) / g - shift.cwiseAbs2())
                        .cwiseMax(model.var_floor);
    }
    weights /= weights.sum();
    out.states[static_cast<std::size_t>(j)] = DiagGmm(weights, means, vars);
  }
  return out;
}

void check_sequences(const HmmModel& model, SequenceSet obs_set) {
  if (obs_set.empty()) throw Error("no training sequences");
  for (std::size_t k = 0; k < obs_set.size(); ++k) {
    if (obs_set[k].rows() != model.dim())
      throw Error("training sequence " + std::to_string(k) + " has wrong dimension");
    if (obs_set[k].cols() < model.n_states())
      throw Error("training sequence " + std::to_string(k) + " has " +
                  std::to_string(obs_set[k].cols()) + " frames, fewer than " +
                  std::to_string(model.n_states()) + " states");
  }
}

}  // namespace

Eigen::VectorXd variance_floor(SequenceSet obs_set, double rel) {
  if (obs_set.empty()) throw Error("no training sequences");
  const Eigen::Index d = obs_set.front().rows();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
  double count = 0.0;
  for (const auto& o : obs_set) {
    sum += o.rowwise().sum();
    count += static_cast<double>(o.cols());
  }
  const Eigen::VectorXd mean = sum / count;
  Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
  for (const auto& o : obs_set) var += (o.colwise() - mean).array().square().rowwise().sum().matrix();
  var /= count;
  return (rel * var).cwiseMax(1e-12);
}

double corpus_log_likelihood(const HmmModel& model, SequenceSet obs_set) {
  double total = 0.0;
  for (const auto& o : obs_set) total += log_forward(model, o);
  return total;
}

HmmModel init_hmm(SequenceSet obs_set, int n_states, int n_mix, std::uint64_t seed,
                  const TrainOptions& opts) {
  if (obs_set.empty()) throw Error("no training sequences");
  if (n_states < 1 || n_mix < 1) throw Error("state and mixture counts must be positive");
  const Eigen::Index d = obs_set.front().rows();
  Eigen::Index pooled = 0;
  for (const auto& o : obs_set) pooled += o.cols();
  if (pooled < static_cast<Eigen::Index>(n_states) * n_mix)
    throw Error("insufficient data: " + std::to_string(pooled) + " frames for " +
                std::to_string(n_states) + " states x " + std::to_string(n_mix) +
                " components");

  HmmModel model = left_to_right_topology(n_states);
  model.var_floor = variance_floor(obs_set, opts.var_floor_rel);

  std::vector<std::vector<Eigen::Index>> owners(static_cast<std::size_t>(n_states));
  std::vector<Eigen::MatrixXd> slices(static_cast<std::size_t>(n_states));
  {
    std::vector<std::vector<const double*>> cols(static_cast<std::size_t>(n_states));
    for (const auto& o : obs_set) {
      const Eigen::Index len = o.cols();
      for (Eigen::Index t = 0; t < len; ++t) {
        const auto j = static_cast<std::size_t>(t * n_states / len);
        cols[j].push_back(o.col(t).data());
      }
    }
    for (int j = 0; j < n_states; ++j) {
      auto& c = cols[static_cast<std::size_t>(j)];
      if (static_cast<int>(c.size()) < n_mix)
        throw Error("insufficient data: state " + std::to_string(j) + " gets " +
                    std::to_string(c.size()) + " frames for " + std::to_string(n_mix) +
                    " components");
      Eigen::MatrixXd& s = slices[static_cast<std::size_t>(j)];
      s.resize(d, static_cast<Eigen::Index>(c.size()));
      for (std::size_t k = 0; k < c.size(); ++k)
        s.col(static_cast<Eigen::Index>(k)) = Eigen::Map<const Eigen::VectorXd>(c[k], d);
    }
  }

  for (int j = 0; j < n_states; ++j) {
    const Eigen::MatrixXd& s = slices[static_cast<std::size_t>(j)];
    const auto assign = kmeans_assign(s, n_mix, seed * 1000003ull + static_cast<unsigned>(j));
    const Eigen::VectorXd state_mean = s.rowwise().mean();
    const Eigen::VectorXd state_var =
        (s.colwise() - state_mean).array().square().rowwise().mean().matrix();
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(n_mix);
    Eigen::MatrixXd means = Eigen::MatrixXd::Zero(d, n_mix);
    for (Eigen::Index i = 0; i < s.cols(); ++i) {
      counts(assign[static_cast<std::size_t>(i)]) += 1.0;
      means.col(assign[static_cast<std::size_t>(i)]) += s.col(i);
    }
    Eigen::MatrixXd vars = Eigen::MatrixXd::Zero(d, n_mix);
    for (int m = 0; m < n_mix; ++m)
      means.col(m) = counts(m) > 0 ? Eigen::VectorXd(means.col(m) / counts(m)) : state_mean;
    for (Eigen::Index i = 0; i < s.cols(); ++i) {
      const int m = assign[static_cast<std::size_t>(i)];
      vars.col(m) += (s.col(i) - means.col(m)).cwiseAbs2();
    }
    for (int m = 0; m < n_mix; ++m) {
      vars.col(m) = counts(m) > 1 ? Eigen::VectorXd(vars.col(m) / counts(m)) : state_var;
      vars.col(m) = vars.col(m).cwiseMax(model.var_floor);
    }
    Eigen::VectorXd weights = counts.cwiseMax(0.5);
    weights /= weights.sum();
    model.states.emplace_back(weights, means, vars);
  }
  model.validate();
  return model;
}

HmmModel baum_welch_train(SequenceSet obs_set, HmmModel model, const TrainOptions& opts,
                          TrainReport* report,
                          const std::function<void(const HmmModel&)>& on_iteration) {
  check_sequences(model, obs_set);
  if (model.var_floor.size() != model.dim())
    model.var_floor = variance_floor(obs_set, opts.var_floor_rel);

  TrainReport local;
  TrainReport& rep = report ? *report : local;
  rep = {};
  double prev = kLogZero;
  for (int iter = 0;; ++iter) {
    Accumulators acc(model.n_states(), model.n_mix(), model.dim());
    try {
      for (const auto& o : obs_set) accumulate(model, o, acc);
    } catch (const Error& e) {
      throw Error("Baum-Welch iteration " + std::to_string(iter) + ": " + e.what());
    }
    rep.log_likelihood.push_back(acc.log_likelihood);
    if (iter > 0 && acc.log_likelihood - prev < opts.tol) {
      rep.converged = true;
      break;
    }
    if (iter >= opts.max_iter) break;
    prev = acc.log_likelihood;
    try {
      model = reestimate(model, acc, obs_set.size());
    } catch (const Error& e) {
      throw Error("Baum-Welch iteration " + std::to_string(iter) + ": " + e.what());
    }
    rep.iterations = iter + 1;
    if (on_iteration) on_iteration(model);
  }
  return model;
}

}  // namespace stylever
