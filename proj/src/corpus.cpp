#include "stylever/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "stylever/error.hpp"

namespace stylever {
namespace {

constexpr std::array<std::string_view, kNumStyles> kStyleNames = {
    "neutral", "shouted", "slow",  "loud",    "soft",
    "fast",    "angry",   "happy", "fearful", "sad"};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

int parse_int(const std::string& s, const std::string& what, int line_no) {
  try {
    std::size_t used = 0;
    int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error("manifest line " + std::to_string(line_no) + ": bad " + what +
                " '" + s + "'");
  }
}

}  // namespace

std::string_view style_name(Style s) { return kStyleNames[style_index(s)]; }

std::optional<Style> parse_style(std::string_view name) {
  for (int i = 0; i < kNumStyles; ++i)
    if (kStyleNames[i] == name) return static_cast<Style>(i);
  return std::nullopt;
}

std::string_view gender_name(Gender g) {
  return g == Gender::kMale ? "male" : "female";
}

std::optional<Gender> parse_gender(std::string_view name) {
  if (name == "male" || name == "m") return Gender::kMale;
  if (name == "female" || name == "f") return Gender::kFemale;
  return std::nullopt;
}

UtteranceKey key_of(const UtteranceMeta& m) {
  return {m.speaker_id, m.sentence_id, m.style, m.token_index};
}

std::string to_string(const GroupKey& k) {
  return k.speaker_id + ":" + std::to_string(k.sentence_id) + ":" +
         std::string(style_name(k.style));
}

std::string to_string(const UtteranceKey& k) {
  return to_string(k.group()) + ":" + std::to_string(k.token_index);
}

void CorpusManifest::add(ManifestEntry entry) {
  const auto& m = entry.meta;
  if (m.sentence_id < 1 || m.sentence_id > kSentences)
    throw Error("sentence id out of range [1,8]: " +
                std::to_string(m.sentence_id));
  if (m.token_index < 1 || m.token_index > kTokens)
    throw Error("token index out of range [1,9]: " +
                std::to_string(m.token_index));
  if (m.speaker_id.empty()) throw Error("empty speaker id");
  auto key = key_of(m);
  if (index_.contains(key))
    throw Error("duplicate manifest entry " + to_string(key));
  index_.emplace(std::move(key), entries_.size());
  entries_.push_back(std::move(entry));
}

const ManifestEntry& CorpusManifest::at(const UtteranceKey& key) const {
  auto it = index_.find(key);
  if (it == index_.end()) throw Error("no manifest entry " + to_string(key));
  return entries_[it->second];
}

std::vector<std::string> CorpusManifest::speakers() const {
  std::set<std::string> s;
  for (const auto& e : entries_) s.insert(e.meta.speaker_id);
  return {s.begin(), s.end()};
}

Gender CorpusManifest::gender_of(const std::string& speaker) const {
  for (const auto& e : entries_)
    if (e.meta.speaker_id == speaker) return e.meta.gender;
  throw Error("unknown speaker " + speaker);
}

CorpusManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open manifest " + path.string());
  CorpusManifest manifest;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "speaker,gender,sentence,style,token,path")
        throw Error("manifest header mismatch in " + path.string());
      continue;
    }
    auto f = split_csv(line);
    if (f.size() != 6)
      throw Error("manifest line " + std::to_string(line_no) +
                  ": expected 6 fields");
    ManifestEntry e;
    e.meta.speaker_id = f[0];
    auto g = parse_gender(f[1]);
    if (!g)
      throw Error("manifest line " + std::to_string(line_no) +
                  ": bad gender '" + f[1] + "'");
    e.meta.gender = *g;
    e.meta.sentence_id = parse_int(f[2], "sentence", line_no);
    auto s = parse_style(f[3]);
    if (!s)
      throw Error("manifest line " + std::to_string(line_no) +
                  ": unknown style '" + f[3] + "'");
    e.meta.style = *s;
    e.meta.token_index = parse_int(f[4], "token", line_no);
    e.locator = f[5];
    manifest.add(std::move(e));
  }
  return manifest;
}

void write_manifest(const std::filesystem::path& path,
                    const CorpusManifest& manifest) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write manifest " + path.string());
  out << "speaker,gender,sentence,style,token,path\n";
  for (const auto& e : manifest.entries()) {
    const auto& m = e.meta;
    out << m.speaker_id << ',' << gender_name(m.gender) << ',' << m.sentence_id
        << ',' << style_name(m.style) << ',' << m.token_index << ','
        << e.locator << '\n';
  }
}

DataSplit split_train_test(const CorpusManifest& manifest) {
  std::map<GroupKey, int> token_counts;
  for (const auto& e : manifest.entries())
    ++token_counts[key_of(e.meta).group()];

  DataSplit split;
  for (const auto& [group, count] : token_counts) {
    if (count < kTokens)
      throw Error("group " + to_string(group) + " has " +
                  std::to_string(count) + " of 9 tokens");
    const bool sad = group.style == Style::kSad;
    std::vector<UtteranceKey> own;
    for (int t = 1; t <= kTokens; ++t) {
      UtteranceKey key{group.speaker_id, group.sentence_id, group.style, t};
      if (t <= kTrainTokens) {
        if (sad) continue;
        split.train.insert(key);
        own.push_back(key);
      } else {
        split.test.insert(key);
      }
    }
    if (!sad) split.model_train.emplace(group, std::move(own));
  }
  return split;
}

DataSplit build_multispeaker_train_set(const DataSplit& split,
                                       const CorpusManifest& manifest) {
  DataSplit out = split;
  const auto speakers = manifest.speakers();
  for (auto& [group, list] : out.model_train) {
    for (const auto& other : speakers) {
      if (other == group.speaker_id) continue;
      UtteranceKey key{other, group.sentence_id, group.style, 1};
      if (!manifest.contains(key) || split.test.contains(key)) continue;
      list.push_back(key);
      out.train.insert(key);
    }
  }
  return out;
}

CorpusManifest make_synthetic_manifest(int n_speakers) {
  if (n_speakers < 1) throw Error("need at least one speaker");
  CorpusManifest manifest;
  for (int s = 0; s < n_speakers; ++s) {
    char id[16];
    std::snprintf(id, sizeof id, "spk%02d", s + 1);
    const Gender gender = synthetic_speaker(s).gender;
    for (int sent = 1; sent <= kSentences; ++sent)
      for (Style style : kAllStyles)
        for (int t = 1; t <= kTokens; ++t) {
          ManifestEntry e;
          e.meta = {id, gender, sent, style, t};
          char loc[96];
          std::snprintf(loc, sizeof loc, "wav/%s_s%d_%s_t%d.wav", id, sent,
                        std::string(style_name(style)).c_str(), t);
          e.locator = loc;
          manifest.add(std::move(e));
        }
  }
  return manifest;
}

}  // namespace stylever
