// Synthetic styled speech: a jittered glottal pulse train through a
// three-formant cascade, following a per-sentence vowel sequence. Style
// changes F0, level, tempo, voice quality and contour.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "stylever/corpus.hpp"

namespace stylever {
namespace {

struct Vowel {
  double f1, f2, f3;
};

// Adult male formant targets (Hz).
constexpr std::array<Vowel, 7> kVowels = {{
    {730, 1090, 2440},  // a
    {270, 2290, 3010},  // i
    {300, 870, 2240},   // u
    {530, 1840, 2480},  // e
    {570, 840, 2410},   // o
    {660, 1720, 2410},  // ae
    {490, 1350, 1690},  // er
}};

const std::vector<int>& sentence_vowels(int sentence_id) {
  static const std::array<std::vector<int>, kSentences> table = {{
      {0, 1, 2, 3},
      {4, 5, 1, 6, 0},
      {2, 3, 0, 5, 4, 1},
      {6, 0, 4, 1},
      {1, 2, 5, 3, 6},
      {3, 4, 6, 2, 0, 5},
      {5, 1, 0, 4},
      {0, 6, 3, 1, 2},
  }};
  return table[std::clamp(sentence_id, 1, kSentences) - 1];
}

constexpr std::array<StyleParams, kNumStyles> kStyleTable = {{
    // f0    gain  dur   jitter tremor depth rise  tilt
    {1.00, 1.00, 1.00, 0.005, 0.0, 0.00, 0.00, 0.90},  // neutral
    {1.80, 2.50, 1.00, 0.020, 0.0, 0.00, 0.00, 0.75},  // shouted
    {1.00, 1.00, 1.60, 0.005, 0.0, 0.00, 0.00, 0.90},  // slow
    {1.30, 2.00, 1.00, 0.010, 0.0, 0.00, 0.00, 0.80},  // loud
    {0.90, 0.40, 1.00, 0.005, 0.0, 0.00, 0.00, 0.95},  // soft
    {1.00, 1.00, 0.60, 0.005, 0.0, 0.00, 0.00, 0.90},  // fast
    {1.50, 2.20, 1.00, 0.035, 0.0, 0.00, 0.00, 0.78},  // angry
    {1.40, 1.00, 1.00, 0.005, 0.0, 0.00, 0.35, 0.90},  // happy
    {1.30, 1.00, 1.00, 0.010, 6.0, 0.06, 0.00, 0.90},  // fearful
    {0.85, 0.70, 1.30, 0.005, 0.0, 0.00, 0.00, 0.93},  // sad
}};

constexpr double kVowelSeconds = 0.14;
constexpr double kTargetRms = 0.05;

struct Resonator {
  double b1 = 0, b2 = 0, g = 1, y1 = 0, y2 = 0;

  void tune(double freq, double bw, double rate) {
    const double r = std::exp(-std::numbers::pi * bw / rate);
    const double theta = 2.0 * std::numbers::pi * freq / rate;
    b1 = 2.0 * r * std::cos(theta);
    b2 = -r * r;
    g = 1.0 - b1 - b2;  // unit DC gain
  }
  double step(double x) {
    const double y = g * x + b1 * y1 + b2 * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// A token realizes its style with some strength: every deviation from the
// neutral parameters is scaled by `strength`.
StyleParams realize(const StyleParams& p, double strength) {
  const StyleParams base;
  auto lerp = [&](double b, double v) { return b + (v - b) * strength; };
  StyleParams q = p;
  q.f0_mult = lerp(base.f0_mult, p.f0_mult);
  q.gain = lerp(base.gain, p.gain);
  q.duration_mult = lerp(base.duration_mult, p.duration_mult);
  q.jitter = lerp(base.jitter, p.jitter);
  q.tremor_depth = lerp(base.tremor_depth, p.tremor_depth);
  q.rise = lerp(base.rise, p.rise);
  q.tilt = lerp(base.tilt, p.tilt);
  return q;
}

}  // namespace

const StyleParams& style_params(Style s) { return kStyleTable[style_index(s)]; }

SpeakerTraits synthetic_speaker(int speaker_index) {
  SpeakerTraits t;
  t.gender = (speaker_index % 2 == 0) ? Gender::kMale : Gender::kFemale;
  std::mt19937_64 rng(splitmix(0x5eedull + static_cast<unsigned>(speaker_index)));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  t.f0_scale = 1.0 + 0.08 * u(rng);
  t.formant_scale = 1.0 + 0.05 * u(rng);
  return t;
}

AudioClip synth_style_clip(Style style, int sentence_id, std::uint64_t seed,
                           const SpeakerTraits& speaker) {
  const StyleParams& p = style_params(style);
  const double rate = kCanonicalRate;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const double f0_tok = 1.0 + 0.015 * u(rng);
  const double dur_tok = 1.0 + 0.18 * u(rng);
  const double gain_tok = 1.0 + 0.05 * u(rng);
  const double formant_tok = 1.0 + 0.01 * u(rng);
  const StyleParams q = realize(p, 1.0 + 0.25 * u(rng));

  const bool female = speaker.gender == Gender::kFemale;
  const double base_f0 =
      (female ? 210.0 : 120.0) * speaker.f0_scale * q.f0_mult * f0_tok;
  const double formant_scale =
      (female ? 1.15 : 1.0) * speaker.formant_scale * formant_tok;

  const auto& vowels = sentence_vowels(sentence_id);
  const auto vowel_len = static_cast<std::size_t>(
      std::round(kVowelSeconds * q.duration_mult * dur_tok * rate));
  const std::size_t n = vowel_len * vowels.size();
  const std::size_t ramp = static_cast<std::size_t>(0.015 * rate);

  std::array<Resonator, 3> formants;
  constexpr std::array<double, 3> bandwidths = {80.0, 100.0, 130.0};
  std::vector<double> out(n);
  double phase = 1.0;  // fire a pulse on the first sample
  double period_mult = 1.0;
  double source = 0.0;

  for (std::size_t t = 0; t < n; ++t) {
    const double x = static_cast<double>(t) / static_cast<double>(n);
    const double time = static_cast<double>(t) / rate;

    // Formant targets: hold for 75% of each vowel, then glide to the next.
    if (t % 16 == 0) {
      const std::size_t seg = t / vowel_len;
      const double local =
          static_cast<double>(t - seg * vowel_len) / static_cast<double>(vowel_len);
      const Vowel& a = kVowels[vowels[seg]];
      const Vowel& b = kVowels[vowels[std::min(seg + 1, vowels.size() - 1)]];
      const double mix = local < 0.75 ? 0.0 : (local - 0.75) / 0.25;
      const std::array<double, 3> target = {a.f1 + mix * (b.f1 - a.f1),
                                            a.f2 + mix * (b.f2 - a.f2),
                                            a.f3 + mix * (b.f3 - a.f3)};
      for (int k = 0; k < 3; ++k)
        formants[k].tune(target[k] * formant_scale, bandwidths[k], rate);
    }

    double f0 = base_f0 * (1.1 - 0.2 * x + q.rise * x);
    if (q.tremor_hz > 0)
      f0 *= 1.0 + q.tremor_depth *
                      std::sin(2.0 * std::numbers::pi * q.tremor_hz * time);

    double pulse = 0.0;
    phase += f0 * period_mult / rate;
    if (phase >= 1.0) {
      phase -= std::floor(phase);
      pulse = 1.0;
      period_mult = std::clamp(1.0 + q.jitter * gauss(rng), 0.8, 1.2);
    }
    source = pulse + q.tilt * source;
    double y = source;
    for (auto& f : formants) y = f.step(y);
    double env = 1.0;
    if (t < ramp) env = 0.5 - 0.5 * std::cos(std::numbers::pi * t / ramp);
    if (n - 1 - t < ramp)
      env = 0.5 - 0.5 * std::cos(std::numbers::pi * (n - 1 - t) / ramp);
    if (q.tremor_hz > 0)
      env *= 1.0 + 1.5 * q.tremor_depth *
                       std::sin(2.0 * std::numbers::pi * q.tremor_hz * time);
    out[t] = y * env;
  }

  // Remove DC left by the resonator cascade, then set the level.
  double mean = 0.0;
  for (double v : out) mean += v;
  mean /= static_cast<double>(n);
  double energy = 0.0;
  for (double& v : out) {
    v -= mean;
    energy += v * v;
  }
  const double rms = std::sqrt(energy / static_cast<double>(n));
  const double scale = kTargetRms * q.gain * gain_tok / rms;
  AudioClip clip;
  clip.samples.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double aspiration = 0.002 * q.gain * gauss(rng);
    clip.samples[t] = std::clamp(out[t] * scale + aspiration, -1.0, 1.0);
  }
  return clip;
}

std::uint64_t utterance_seed(std::uint64_t corpus_seed,
                             const UtteranceKey& key) {
  std::uint64_t h = splitmix(corpus_seed);
  for (char c : key.speaker_id) h = splitmix(h ^ static_cast<unsigned char>(c));
  h = splitmix(h ^ static_cast<std::uint64_t>(key.sentence_id));
  h = splitmix(h ^ static_cast<std::uint64_t>(style_index(key.style)) << 8);
  h = splitmix(h ^ static_cast<std::uint64_t>(key.token_index) << 16);
  return h;
}

AudioClip synth_corpus_clip(const UtteranceMeta& meta,
                            std::uint64_t corpus_seed) {
  int index = 0;
  if (meta.speaker_id.rfind("spk", 0) == 0) {
    try {
      index = std::stoi(meta.speaker_id.substr(3)) - 1;
    } catch (const std::exception&) {
      index = 0;
    }
  } else {
    index = static_cast<int>(
        utterance_seed(0, {meta.speaker_id, 1, Style::kNeutral, 1}) % 1000);
  }
  SpeakerTraits traits = synthetic_speaker(std::max(index, 0));
  traits.gender = meta.gender;
  return quantize_pcm16(synth_style_clip(
      meta.style, meta.sentence_id, utterance_seed(corpus_seed, key_of(meta)),
      traits));
}

}  // namespace stylever
