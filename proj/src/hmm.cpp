#include "stylever/hmm.hpp"

#include <cmath>
#include <string>

#include "stylever/error.hpp"

namespace stylever {
namespace {

Eigen::MatrixXd log_of(const Eigen::MatrixXd& p) {
  return p.unaryExpr([](double v) { return v > 0.0 ? std::log(v) : kLogZero; });
}

void check_obs(const HmmModel& model, const Eigen::Ref<const Eigen::MatrixXd>& obs) {
  if (obs.cols() == 0) throw Error("empty observation sequence");
  if (obs.rows() != model.dim())
    throw Error("dimension mismatch: observation " + std::to_string(obs.rows()) +
                ", model " + std::to_string(model.dim()));
}

}  // namespace

bool HmmModel::left_to_right() const {
  for (Eigen::Index i = 0; i < mask.rows(); ++i)
    for (Eigen::Index j = 0; j < mask.cols(); ++j)
      if (mask(i, j) && j != i && j != i + 1) return false;
  return true;
}

void HmmModel::validate(double tol) const {
  const auto n = static_cast<Eigen::Index>(states.size());
  if (n == 0) throw Error("model has no states");
  if (pi.size() != n || trans.rows() != n || trans.cols() != n || mask.rows() != n ||
      mask.cols() != n || final_states.size() != n)
    throw Error("model shapes disagree with state count");
  if ((pi.array() < 0.0).any() || std::abs(pi.sum() - 1.0) > tol)
    throw Error("initial distribution is not stochastic");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(trans.row(i).sum() - 1.0) > tol)
      throw Error("transition row " + std::to_string(i) + " does not sum to 1");
    for (Eigen::Index j = 0; j < n; ++j) {
      if (trans(i, j) < 0.0) throw Error("negative transition probability");
      if (!mask(i, j) && trans(i, j) != 0.0)
        throw Error("transition outside the topology mask");
    }
  }
  if (!final_states.any()) throw Error("model has no final state");
  for (const auto& s : states) {
    if (s.dim() != dim()) throw Error("state dimensions disagree");
    if (std::abs(s.weights().sum() - 1.0) > tol)
      throw Error("mixture weights do not sum to 1");
    if (var_floor.size() == dim())
      for (Eigen::Index m = 0; m < s.num_components(); ++m)
        if ((s.vars().col(m).array() < var_floor.array() * (1.0 - 1e-12)).any())
          throw Error("variance below floor");
  }
}

HmmModel left_to_right_topology(int n_states) {
  if (n_states < 1) throw Error("need at least one state");
  HmmModel m;
  m.pi = Eigen::VectorXd::Zero(n_states);
  m.pi(0) = 1.0;
  m.trans = Eigen::MatrixXd::Zero(n_states, n_states);
  m.mask = BoolMatrix::Constant(n_states, n_states, false);
  for (int i = 0; i < n_states; ++i) {
    m.mask(i, i) = true;
    if (i + 1 < n_states) {
      m.mask(i, i + 1) = true;
      m.trans(i, i) = 0.5;
      m.trans(i, i + 1) = 0.5;
    } else {
      m.trans(i, i) = 1.0;
    }
  }
  m.final_states = BoolVector::Constant(n_states, false);
  m.final_states(n_states - 1) = true;
  return m;
}

Eigen::MatrixXd emission_log_likelihoods(const HmmModel& model,
                                         const Eigen::Ref<const Eigen::MatrixXd>& obs) {
  check_obs(model, obs);
  Eigen::MatrixXd b(model.n_states(), obs.cols());
  for (Eigen::Index t = 0; t < obs.cols(); ++t)
    for (int j = 0; j < model.n_states(); ++j)
      b(j, t) = model.states[static_cast<std::size_t>(j)].log_pdf(obs.col(t));
  return b;
}

double log_forward(const HmmModel& model, const Eigen::Ref<const Eigen::MatrixXd>& obs) {
  return log_forward_emissions(model, emission_log_likelihoods(model, obs));
}

double log_forward_emissions(const HmmModel& model, const Eigen::MatrixXd& b) {
  const Eigen::MatrixXd log_a = log_of(model.trans);
  const Eigen::VectorXd log_pi = log_of(model.pi);
  const int n = model.n_states();

  Eigen::VectorXd alpha = log_pi + b.col(0);
  Eigen::VectorXd next(n);
  for (Eigen::Index t = 1; t < b.cols(); ++t) {
    for (int j = 0; j < n; ++j) {
      double acc = kLogZero;
      for (int i = 0; i < n; ++i) {
        if (!model.mask(i, j)) continue;
        acc = log_add(acc, alpha(i) + log_a(i, j));
      }
      next(j) = acc + b(j, t);
    }
    alpha.swap(next);
  }
  double total = kLogZero;
  for (int j = 0; j < n; ++j)
    if (model.final_states(j)) total = log_add(total, alpha(j));
  return total;
}

StatePath viterbi_decode(const HmmModel& model,
                         const Eigen::Ref<const Eigen::MatrixXd>& obs) {
  return viterbi_emissions(model, emission_log_likelihoods(model, obs));
}

StatePath viterbi_emissions(const HmmModel& model, const Eigen::MatrixXd& b) {
  const Eigen::MatrixXd log_a = log_of(model.trans);
  const Eigen::VectorXd log_pi = log_of(model.pi);
  const int n = model.n_states();
  const Eigen::Index len = b.cols();
  if (len == 0) throw Error("empty observation sequence");

  Eigen::MatrixXd delta(n, len);
  Eigen::MatrixXi back(n, len);
  delta.col(0) = log_pi + b.col(0);
  back.col(0).setConstant(-1);
  for (Eigen::Index t = 1; t < len; ++t) {
    for (int j = 0; j < n; ++j) {
      double best = kLogZero;
      int arg = -1;
      for (int i = 0; i < n; ++i) {
        if (!model.mask(i, j)) continue;
        const double v = delta(i, t - 1) + log_a(i, j);
        if (v > best) {
          best = v;
          arg = i;
        }
      }
      delta(j, t) = best + b(j, t);
      back(j, t) = arg;
    }
  }

  double best = kLogZero;
  int last = -1;
  for (int j = 0; j < n; ++j)
    if (model.final_states(j) && delta(j, len - 1) > best) {
      best = delta(j, len - 1);
      last = j;
    }
  if (last < 0) throw Error("no admissible path");

  StatePath path;
  path.log_prob = best;
  path.states.resize(static_cast<std::size_t>(len));
  int s = last;
  for (Eigen::Index t = len - 1; t >= 0; --t) {
    path.states[static_cast<std::size_t>(t)] = s;
    if (t > 0) s = back(s, t);
  }
  return path;
}

}  // namespace stylever
