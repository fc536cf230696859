#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stylever/auth.hpp"
#include "stylever/lpc.hpp"
#include "stylever/prosody.hpp"

namespace stylever {

struct ExperimentConfig {
  Engine engine = Engine::kSphmm;
  ScenarioKind scenario = ScenarioKind::kScoreOnly;
  double alpha = 0.5;
  int n_states = 5;
  int n_mix = 5;
  int supra_components = 1;
  std::vector<int> grouping;  // empty: SupraGrouping::for_states(n_states)
  std::uint64_t seed = 1;
  bool multi_speaker = false;
  bool adapt_threshold = false;
  bool adapt_on_accept_only = true;
  int window = 16;
  double margin = 0.0;
  double threshold_k = 2.0;  // initial theta = mean - k std
  int max_iter = 30;
  double tol = 1e-4;
  double var_floor_rel = 1e-4;
  int jobs = 1;
  FrameConfig frames;
  ProsodyConfig prosody;

  // Throws ConfigError on an out-of-range value.
  void validate() const;
};

// `key = value` lines; `#` starts a comment; strings may be quoted. Unknown
// keys and malformed lines raise ConfigError with the line number.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace stylever
