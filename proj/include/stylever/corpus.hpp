#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "stylever/audio.hpp"

namespace stylever {

enum class Style {
  kNeutral,
  kShouted,
  kSlow,
  kLoud,
  kSoft,
  kFast,
  kAngry,
  kHappy,
  kFearful,
  kSad,
};

inline constexpr int kNumStyles = 10;
// Styles that own trained models, in table order. Sad is the open-set style.
inline constexpr std::array<Style, 9> kModelStyles = {
    Style::kNeutral, Style::kShouted, Style::kSlow,  Style::kLoud,
    Style::kSoft,    Style::kFast,    Style::kAngry, Style::kHappy,
    Style::kFearful};
inline constexpr std::array<Style, 10> kAllStyles = {
    Style::kNeutral, Style::kShouted, Style::kSlow,  Style::kLoud,
    Style::kSoft,    Style::kFast,    Style::kAngry, Style::kHappy,
    Style::kFearful, Style::kSad};

std::string_view style_name(Style s);
std::optional<Style> parse_style(std::string_view name);
inline int style_index(Style s) { return static_cast<int>(s); }

enum class Gender { kMale, kFemale };
std::string_view gender_name(Gender g);
std::optional<Gender> parse_gender(std::string_view name);

inline constexpr int kSentences = 8;
inline constexpr int kTokens = 9;
inline constexpr int kTrainTokens = 5;

struct UtteranceMeta {
  std::string speaker_id;
  Gender gender = Gender::kMale;
  int sentence_id = 1;
  Style style = Style::kNeutral;
  int token_index = 1;
};

// (speaker, sentence, style): one trained model per group.
struct GroupKey {
  std::string speaker_id;
  int sentence_id = 1;
  Style style = Style::kNeutral;

  auto operator<=>(const GroupKey&) const = default;
  bool operator==(const GroupKey&) const = default;
};

struct UtteranceKey {
  std::string speaker_id;
  int sentence_id = 1;
  Style style = Style::kNeutral;
  int token_index = 1;

  GroupKey group() const { return {speaker_id, sentence_id, style}; }
  auto operator<=>(const UtteranceKey&) const = default;
  bool operator==(const UtteranceKey&) const = default;
};

UtteranceKey key_of(const UtteranceMeta& m);
std::string to_string(const GroupKey& k);
std::string to_string(const UtteranceKey& k);

struct ManifestEntry {
  UtteranceMeta meta;
  std::string locator;  // path relative to the manifest directory
};

class CorpusManifest {
 public:
  CorpusManifest() = default;

  // Throws Error on a duplicate (speaker, sentence, style, token) key or an
  // out-of-range sentence/token.
  void add(ManifestEntry entry);

  const std::vector<ManifestEntry>& entries() const { return entries_; }
  const ManifestEntry& at(const UtteranceKey& key) const;
  bool contains(const UtteranceKey& key) const { return index_.contains(key); }
  std::size_t size() const { return entries_.size(); }

  std::vector<std::string> speakers() const;  // sorted, unique
  Gender gender_of(const std::string& speaker) const;

 private:
  std::vector<ManifestEntry> entries_;
  std::map<UtteranceKey, std::size_t> index_;
};

// CSV with header `speaker,gender,sentence,style,token,path`.
CorpusManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path,
                    const CorpusManifest& manifest);

struct DataSplit {
  std::set<UtteranceKey> train;
  std::set<UtteranceKey> test;
  // Training list of every non-sad model, starting with its own tokens 1..5.
  std::map<GroupKey, std::vector<UtteranceKey>> model_train;
};

// Tokens 1..5 of every non-sad group train, tokens 6..9 of every group test;
// sad tokens 1..5 are unused. Throws Error naming a group with fewer than 9
// tokens.
DataSplit split_train_test(const CorpusManifest& manifest);

// Appends token 1 of every other speaker (same sentence and style) to each
// model's training list.
DataSplit build_multispeaker_train_set(const DataSplit& split,
                                       const CorpusManifest& manifest);

// Full manifest over the given speakers without audio locators filled in
// beyond the canonical naming scheme. Speakers alternate male/female.
CorpusManifest make_synthetic_manifest(int n_speakers);

// ---------------------------------------------------------------------------
// Synthetic styled speech.

struct SpeakerTraits {
  Gender gender = Gender::kMale;
  double f0_scale = 1.0;       // multiplies the gender base F0
  double formant_scale = 1.0;  // vocal tract length proxy
};

// Traits for the n-th synthetic speaker (0-based); odd indices are female.
SpeakerTraits synthetic_speaker(int speaker_index);

struct StyleParams {
  double f0_mult = 1.0;
  double gain = 1.0;
  double duration_mult = 1.0;
  double jitter = 0.005;     // relative std of each glottal period
  double tremor_hz = 0.0;
  double tremor_depth = 0.0;
  double rise = 0.0;         // end/start F0 ratio minus the default declination
  double tilt = 0.90;        // glottal one-pole lowpass coefficient
};

const StyleParams& style_params(Style s);

// Deterministic harmonic vowel-sequence utterance at 16 kHz.
AudioClip synth_style_clip(Style style, int sentence_id, std::uint64_t seed,
                           const SpeakerTraits& speaker = {});

// Seed for one manifest utterance under a corpus-level seed.
std::uint64_t utterance_seed(std::uint64_t corpus_seed,
                             const UtteranceKey& key);

// Synthesizes the utterance the synthetic manifest names, 16-bit quantized so
// it matches what read_wav returns for the file `synth` writes.
AudioClip synth_corpus_clip(const UtteranceMeta& meta,
                            std::uint64_t corpus_seed);

}  // namespace stylever
