#pragma once

// Suprasegmental observations: fundamental frequency, intensity and duration
// summarized over frame ranges.

#include <cstddef>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "stylever/audio.hpp"
#include "stylever/lpc.hpp"

namespace stylever {

struct ProsodyConfig {
  double f0_min_hz = 50.0;
  double f0_max_hz = 500.0;
  double voicing_threshold = 0.3;  // on the normalized autocorrelation peak
  int window_ms = 32;
  double energy_floor_db = -120.0;
};

struct FrameProsody {
  double f0_hz = 0.0;  // 0 when unvoiced
  double energy_db = 0.0;
  bool voiced = false;
};

// Normalized-autocorrelation pitch estimate over lags for [f0_min, f0_max].
// Returns 0 for an unvoiced window.
double estimate_f0(const Eigen::Ref<const Eigen::VectorXd>& window,
                   int rate_hz, const ProsodyConfig& cfg = {});

// 20 log10(RMS), floored.
double frame_energy_db(const Eigen::Ref<const Eigen::VectorXd>& frame,
                       double floor_db = -120.0);

// Per-frame prosody at the given acoustic frame starts. The pitch window is
// centered on each acoustic frame and clamped inside the clip.
std::vector<FrameProsody> prosody_track(const AudioClip& clip,
                                        const std::vector<std::size_t>& frame_starts,
                                        const FrameConfig& frames = {},
                                        const ProsodyConfig& cfg = {});

inline constexpr int kProsodyDim = 4;

struct ProsodicVector {
  double voicing_fraction = 0.0;
  double mean_f0_hz = 0.0;
  double mean_energy_db = 0.0;
  double log_duration = 0.0;  // ln(#frames)

  Eigen::Vector4d as_vector() const {
    return {voicing_fraction, mean_f0_hz, mean_energy_db, log_duration};
  }
};

// Half-open range [begin, end) of observation indices.
struct FrameRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool empty() const { return end <= begin; }
  bool operator==(const FrameRange&) const = default;
};

using ProsodicSequence = std::vector<ProsodicVector>;

ProsodicVector summarize_segment(const std::vector<FrameProsody>& track,
                                 FrameRange range);

// Throws Error on an empty, overlapping, unordered or out-of-range segment.
ProsodicSequence build_prosodic_sequence(const std::vector<FrameProsody>& track,
                                         const std::vector<FrameRange>& segments);

ProsodicSequence build_prosodic_sequence(const AudioClip& clip,
                                         const std::vector<std::size_t>& frame_starts,
                                         const std::vector<FrameRange>& segments,
                                         const FrameConfig& frames = {},
                                         const ProsodyConfig& cfg = {});

// `seg_index,voicing,f0,energy_db,log_dur` per segment.
void write_prosody_dump(std::ostream& out, const ProsodicSequence& seq);

}  // namespace stylever
