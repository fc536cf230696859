#pragma once

#include <filesystem>
#include <vector>

namespace stylever {

inline constexpr int kCanonicalRate = 16000;

// Mono PCM, samples scaled to [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate_hz = kCanonicalRate;

  std::size_t size() const { return samples.size(); }
};

// Reads a RIFF/WAVE file holding 16-bit signed mono PCM. Samples are scaled
// by 1/32768. Throws WavFormatError naming the violated constraint.
AudioClip read_wav(const std::filesystem::path& path);
AudioClip parse_wav(const std::vector<unsigned char>& bytes);

// Writes 16-bit mono PCM; samples are clipped to the representable range.
void write_wav(const std::filesystem::path& path, const AudioClip& clip);
std::vector<unsigned char> encode_wav(const AudioClip& clip);

// Round-trips samples through 16-bit quantization, matching write+read.
AudioClip quantize_pcm16(const AudioClip& clip);

}  // namespace stylever
