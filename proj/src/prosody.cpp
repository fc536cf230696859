#include "stylever/prosody.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace stylever {

double estimate_f0(const Eigen::Ref<const Eigen::VectorXd>& x, int rate_hz,
                   const ProsodyConfig& cfg) {
  const Eigen::Index len = x.size();
  const auto min_lag = static_cast<Eigen::Index>(std::floor(rate_hz / cfg.f0_max_hz));
  const auto max_lag = std::min<Eigen::Index>(
      static_cast<Eigen::Index>(std::ceil(rate_hz / cfg.f0_min_hz)), len * 2 / 3);
  if (min_lag < 2 || max_lag <= min_lag) return 0.0;

  // Prefix energies: head(k) = Σ_{n<len-k} x², tail(k) = Σ_{n>=k} x².
  Eigen::VectorXd prefix(len + 1);
  prefix(0) = 0.0;
  for (Eigen::Index n = 0; n < len; ++n) prefix(n + 1) = prefix(n) + x(n) * x(n);
  if (!(prefix(len) > 0.0)) return 0.0;

  const Eigen::Index span = max_lag - min_lag + 3;
  Eigen::VectorXd nac = Eigen::VectorXd::Zero(span);  // lags min_lag-1 .. max_lag+1
  for (Eigen::Index i = 0; i < span; ++i) {
    const Eigen::Index k = min_lag - 1 + i;
    const double head = prefix(len - k);
    const double tail = prefix(len) - prefix(k);
    const double denom = std::sqrt(head * tail);
    if (denom > 0.0)
      nac(i) = x.head(len - k).dot(x.segment(k, len - k)) / denom;
  }

  double peak = -1.0;
  for (Eigen::Index i = 1; i + 1 < span; ++i) peak = std::max(peak, nac(i));
  if (peak < cfg.voicing_threshold) return 0.0;

  // First local maximum close to the global one; avoids picking multiples of
  // the period.
  Eigen::Index best = -1;
  for (Eigen::Index i = 1; i + 1 < span; ++i) {
    if (nac(i) >= 0.9 * peak && nac(i) >= nac(i - 1) && nac(i) >= nac(i + 1)) {
      best = i;
      break;
    }
  }
  if (best < 0) return 0.0;

  double offset = 0.0;
  const double left = nac(best - 1), mid = nac(best), right = nac(best + 1);
  const double curvature = left - 2.0 * mid + right;
  if (curvature < 0.0) offset = 0.5 * (left - right) / curvature;
  const double lag = static_cast<double>(min_lag - 1 + best) + offset;
  const double f0 = rate_hz / lag;
  if (f0 < cfg.f0_min_hz || f0 > cfg.f0_max_hz) return 0.0;
  return f0;
}

double frame_energy_db(const Eigen::Ref<const Eigen::VectorXd>& frame,
                       double floor_db) {
  if (frame.size() == 0) return floor_db;
  const double rms = std::sqrt(frame.squaredNorm() / static_cast<double>(frame.size()));
  if (!(rms > 0.0)) return floor_db;
  return std::max(20.0 * std::log10(rms), floor_db);
}

std::vector<FrameProsody> prosody_track(const AudioClip& clip,
                                        const std::vector<std::size_t>& frame_starts,
                                        const FrameConfig& frames,
                                        const ProsodyConfig& cfg) {
  const auto n = static_cast<std::ptrdiff_t>(clip.size());
  const std::ptrdiff_t frame_len = frames.frame_length();
  const std::ptrdiff_t window =
      std::min<std::ptrdiff_t>(clip.sample_rate_hz * cfg.window_ms / 1000, n);
  const Eigen::Map<const Eigen::VectorXd> signal(clip.samples.data(), n);

  std::vector<FrameProsody> track;
  track.reserve(frame_starts.size());
  for (std::size_t start : frame_starts) {
    const auto s = static_cast<std::ptrdiff_t>(start);
    FrameProsody fp;
    const std::ptrdiff_t flen = std::min(frame_len, n - s);
    fp.energy_db = frame_energy_db(signal.segment(s, std::max<std::ptrdiff_t>(flen, 0)),
                                   cfg.energy_floor_db);
    const std::ptrdiff_t center = s + frame_len / 2;
    const std::ptrdiff_t w0 = std::clamp<std::ptrdiff_t>(center - window / 2, 0, n - window);
    fp.f0_hz = estimate_f0(signal.segment(w0, window), clip.sample_rate_hz, cfg);
    fp.voiced = fp.f0_hz > 0.0;
    track.push_back(fp);
  }
  return track;
}

ProsodicVector summarize_segment(const std::vector<FrameProsody>& track,
                                 FrameRange range) {
  if (range.empty()) throw Error("empty prosodic segment");
  if (range.end > track.size()) throw Error("prosodic segment exceeds frame grid");
  ProsodicVector v;
  std::size_t voiced = 0;
  double f0_sum = 0.0, energy_sum = 0.0;
  for (std::size_t i = range.begin; i < range.end; ++i) {
    energy_sum += track[i].energy_db;
    if (track[i].voiced) {
      ++voiced;
      f0_sum += track[i].f0_hz;
    }
  }
  const auto count = static_cast<double>(range.size());
  v.voicing_fraction = static_cast<double>(voiced) / count;
  v.mean_f0_hz = voiced > 0 ? f0_sum / static_cast<double>(voiced) : 0.0;
  v.mean_energy_db = energy_sum / count;
  v.log_duration = std::log(count);
  return v;
}

ProsodicSequence build_prosodic_sequence(const std::vector<FrameProsody>& track,
                                         const std::vector<FrameRange>& segments) {
  ProsodicSequence seq;
  seq.reserve(segments.size());
  std::size_t last_end = 0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& r = segments[i];
    if (i > 0 && r.begin < last_end)
      throw Error("prosodic segments overlap or are out of order");
    seq.push_back(summarize_segment(track, r));
    last_end = r.end;
  }
  return seq;
}

ProsodicSequence build_prosodic_sequence(const AudioClip& clip,
                                         const std::vector<std::size_t>& frame_starts,
                                         const std::vector<FrameRange>& segments,
                                         const FrameConfig& frames,
                                         const ProsodyConfig& cfg) {
  return build_prosodic_sequence(prosody_track(clip, frame_starts, frames, cfg),
                                 segments);
}

void write_prosody_dump(std::ostream& out, const ProsodicSequence& seq) {
  char buf[160];
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const auto& v = seq[i];
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f,%.6f\n", i,
                  v.voicing_fraction, v.mean_f0_hz, v.mean_energy_db,
                  v.log_duration);
    out << buf;
  }
}

}  // namespace stylever
