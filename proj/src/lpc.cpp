#include "stylever/lpc.hpp"

#include <cstdio>
#include <ostream>
#include <string>

namespace stylever {

void FrameConfig::validate() const {
  if (frame_ms <= overlap_ms || overlap_ms < 0)
    throw ConfigError("frame length must exceed overlap");
  if (sample_rate_hz <= 0) throw ConfigError("sample rate must be positive");
  if (lpc_order < 1 || n_ceps < 1) throw ConfigError("LPC order must be positive");
  if (lpc_order >= frame_length())
    throw ConfigError("LPC order must be below the frame length");
}

std::size_t frame_count(std::size_t n_samples, const FrameConfig& cfg) {
  const auto len = static_cast<std::size_t>(cfg.frame_length());
  const auto hop = static_cast<std::size_t>(cfg.hop());
  if (n_samples < len) return 0;
  return (n_samples - len) / hop + 1;
}

std::vector<Frame> frame_signal(const AudioClip& clip, const FrameConfig& cfg) {
  cfg.validate();
  if (clip.sample_rate_hz != cfg.sample_rate_hz)
    throw Error("sample rate " + std::to_string(clip.sample_rate_hz) +
                " Hz does not match configured " +
                std::to_string(cfg.sample_rate_hz) + " Hz");
  const std::size_t count = frame_count(clip.size(), cfg);
  if (count == 0) throw Error("utterance too short");
  const int len = cfg.frame_length();
  const std::size_t hop = static_cast<std::size_t>(cfg.hop());
  std::vector<Frame> frames(count);
  for (std::size_t i = 0; i < count; ++i) {
    frames[i].start_index = i * hop;
    frames[i].samples =
        Eigen::Map<const Eigen::VectorXd>(clip.samples.data() + i * hop, len);
  }
  return frames;
}

Frame apply_hamming(Frame frame) {
  frame.samples.array() *=
      hamming_window<double>(frame.samples.size()).array();
  return frame;
}

ObservationSequence extract_observations(const AudioClip& clip,
                                         const FrameConfig& cfg) {
  auto frames = frame_signal(clip, cfg);
  const Eigen::VectorXd window = hamming_window<double>(cfg.frame_length());
  ObservationSequence obs;
  obs.features.resize(cfg.n_ceps, static_cast<Eigen::Index>(frames.size()));
  Eigen::Index kept = 0;
  for (const auto& frame : frames) {
    const Eigen::VectorXd x = frame.samples.cwiseProduct(window);
    try {
      const auto lpc = levinson_durbin(autocorrelate(x, cfg.lpc_order),
                                       cfg.lpc_order);
      obs.features.col(kept++) = lpc_to_lpcc(lpc.a, cfg.n_ceps);
      obs.frame_starts.push_back(frame.start_index);
    } catch (const DegenerateFrame&) {
      ++obs.skipped_frames;
    }
  }
  if (kept == 0) throw Error("no usable frames");
  obs.features.conservativeResize(Eigen::NoChange, kept);
  return obs;
}

void write_feature_dump(std::ostream& out, const ObservationSequence& obs) {
  char buf[32];
  for (Eigen::Index t = 0; t < obs.length(); ++t) {
    out << obs.frame_starts[static_cast<std::size_t>(t)];
    for (Eigen::Index k = 0; k < obs.dim(); ++k) {
      std::snprintf(buf, sizeof buf, " %.9g", obs.features(k, t));
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace stylever
