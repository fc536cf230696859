#include "stylever/sphmm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "stylever/error.hpp"

namespace stylever {

int SupraGrouping::num_states() const {
  return std::accumulate(sizes.begin(), sizes.end(), 0);
}

int SupraGrouping::group_of(int state) const {
  int upper = 0;
  for (int g = 0; g < num_groups(); ++g) {
    upper += sizes[static_cast<std::size_t>(g)];
    if (state < upper) return g;
  }
  throw Error("state " + std::to_string(state) + " outside the suprasegmental grouping");
}

void SupraGrouping::validate(int n_states) const {
  if (sizes.empty()) throw Error("empty suprasegmental grouping");
  for (int s : sizes)
    if (s < 1) throw Error("suprasegmental group sizes must be positive");
  if (num_states() != n_states)
    throw Error("suprasegmental grouping covers " + std::to_string(num_states()) +
                " states, model has " + std::to_string(n_states));
}

SupraGrouping SupraGrouping::for_states(int n_states) {
  if (n_states <= 1) return {{1}};
  const int first = std::clamp(static_cast<int>(std::lround(0.6 * n_states)), 1, n_states - 1);
  return {{first, n_states - first}};
}

int SegmentAlignment::empty_count() const {
  return static_cast<int>(
      std::count_if(segments.begin(), segments.end(), [](const FrameRange& r) { return r.empty(); }));
}

SegmentAlignment align_segments(const StatePath& path, const SupraGrouping& grouping) {
  SegmentAlignment out;
  out.segments.assign(static_cast<std::size_t>(grouping.num_groups()), FrameRange{});
  std::vector<bool> seen(out.segments.size(), false);
  int current = -1;
  for (std::size_t t = 0; t < path.states.size(); ++t) {
    const int g = grouping.group_of(path.states[t]);
    auto& seg = out.segments[static_cast<std::size_t>(g)];
    if (!seen[static_cast<std::size_t>(g)]) {
      if (g < current) throw Error("state path is not left-to-right");
      seen[static_cast<std::size_t>(g)] = true;
      seg = {t, t + 1};
    } else {
      if (g != current) throw Error("state path revisits a suprasegmental state");
      seg.end = t + 1;
    }
    current = g;
  }
  // Empty segments sit at the boundary where their neighbours meet.
  std::size_t cursor = 0;
  for (std::size_t g = 0; g < out.segments.size(); ++g) {
    if (seen[g]) {
      cursor = out.segments[g].end;
    } else {
      out.segments[g] = {cursor, cursor};
    }
  }
  return out;
}

void SphmmModel::validate(double tol) const {
  acoustic.validate(tol);
  grouping.validate(acoustic.n_states());
  const int s = num_supra_states();
  if (supra_trans.rows() != s || supra_trans.cols() != s ||
      static_cast<int>(supra_states.size()) != s)
    throw Error("suprasegmental shapes disagree with grouping");
  for (int i = 0; i < s; ++i) {
    if (std::abs(supra_trans.row(i).sum() - 1.0) > tol)
      throw Error("suprasegmental transition row does not sum to 1");
    for (int j = 0; j < s; ++j)
      if (supra_trans(i, j) != 0.0 && j != i && j != i + 1)
        throw Error("suprasegmental transition outside left-to-right mask");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("alpha outside [0,1]");
}

UtteranceFeatures analyze_utterance(const AudioClip& clip, const FrameConfig& frames,
                                    const ProsodyConfig& prosody) {
  UtteranceFeatures f;
  f.obs = extract_observations(clip, frames);
  f.prosody = prosody_track(clip, f.obs.frame_starts, frames, prosody);
  return f;
}

SphmmModel train_sphmm(HmmModel acoustic, std::span<const UtteranceFeatures> train,
                       const SphmmConfig& cfg) {
  cfg.grouping.validate(acoustic.n_states());
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) throw Error("alpha outside [0,1]");
  if (cfg.supra_components < 1) throw Error("suprasegmental component count must be positive");
  const int s = cfg.grouping.num_groups();
  std::vector<std::vector<Eigen::Vector4d>> collected(static_cast<std::size_t>(s));
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(s, s);

  for (const auto& utt : train) {
    const auto path = viterbi_decode(acoustic, utt.obs);
    const auto align = align_segments(path, cfg.grouping);
    int prev = -1;
    for (int g = 0; g < s; ++g) {
      const auto& seg = align.segments[static_cast<std::size_t>(g)];
      if (seg.empty()) continue;
      collected[static_cast<std::size_t>(g)].push_back(
          summarize_segment(utt.prosody, seg).as_vector());
      if (prev >= 0) counts(prev, g) += 1.0;
      prev = g;
    }
  }

  SphmmModel model;
  model.grouping = cfg.grouping;
  model.alpha = cfg.alpha;
  model.supra_trans = Eigen::MatrixXd::Zero(s, s);
  for (int i = 0; i < s; ++i) {
    const double row = counts.row(i).sum();
    if (row > 0.0) {
      model.supra_trans.row(i) = counts.row(i) / row;
    } else if (i + 1 < s) {
      model.supra_trans(i, i) = 0.5;
      model.supra_trans(i, i + 1) = 0.5;
    } else {
      model.supra_trans(i, i) = 1.0;
    }
  }
  for (int g = 0; g < s; ++g) {
    const auto& vecs = collected[static_cast<std::size_t>(g)];
    if (vecs.empty())
      throw Error("suprasegmental state p" + std::to_string(g + 1) +
                  " collected no prosodic vectors");
    Eigen::MatrixXd samples(kProsodyDim, static_cast<Eigen::Index>(vecs.size()));
    for (std::size_t k = 0; k < vecs.size(); ++k) samples.col(static_cast<Eigen::Index>(k)) = vecs[k];
    model.supra_states.push_back(fit_diag_gmm(samples, cfg.supra_components,
                                              Eigen::VectorXd(cfg.var_floor),
                                              cfg.seed + static_cast<unsigned>(g)));
  }
  model.acoustic = std::move(acoustic);
  return model;
}

double combine_scores(double acoustic, double prosodic, double alpha) {
  if (alpha == 0.0) return acoustic;
  if (alpha == 1.0) return prosodic;
  return (1.0 - alpha) * acoustic + alpha * prosodic;
}

double prosodic_log_likelihood(const SphmmModel& model,
                               const std::vector<FrameProsody>& prosody,
                               const SegmentAlignment& alignment) {
  double total = 0.0;
  int prev = -1;
  for (int g = 0; g < model.num_supra_states(); ++g) {
    const auto& seg = alignment.segments[static_cast<std::size_t>(g)];
    if (seg.empty()) continue;
    total += model.supra_states[static_cast<std::size_t>(g)].log_pdf(
        summarize_segment(prosody, seg).as_vector());
    if (prev >= 0) {
      const double b = model.supra_trans(prev, g);
      total += b > 0.0 ? std::log(b) : kLogZero;
    }
    prev = g;
  }
  return total;
}

SphmmScore sphmm_score(const SphmmModel& model, const UtteranceFeatures& feats) {
  return sphmm_score(model, feats, model.alpha);
}

SphmmScore sphmm_score(const SphmmModel& model, const UtteranceFeatures& feats,
                       double alpha) {
  if (feats.prosody.size() != static_cast<std::size_t>(feats.obs.length()))
    throw Error("prosody track does not match the observation sequence");
  const Eigen::MatrixXd b = emission_log_likelihoods(model.acoustic, feats.obs.features);
  SphmmScore score;
  score.acoustic = log_forward_emissions(model.acoustic, b);
  if (alpha == 0.0) {
    score.combined = score.acoustic;
    return score;
  }
  if (score.acoustic == kLogZero) {
    score.combined = kLogZero;
    return score;
  }
  const auto align = align_segments(viterbi_emissions(model.acoustic, b), model.grouping);
  score.empty_segments = align.empty_count();
  score.prosodic = prosodic_log_likelihood(model, feats.prosody, align);
  score.combined = combine_scores(score.acoustic, score.prosodic, alpha);
  return score;
}

}  // namespace stylever
