#include "stylever/config.hpp"

#include <fstream>
#include <sstream>

#include "stylever/error.hpp"

namespace stylever {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front())
    return s.substr(1, s.size() - 2);
  return s;
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

double to_double(const std::string& v, int line) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) fail(line, "expected a number, got '" + v + "'");
    return d;
  } catch (const std::logic_error&) {
    fail(line, "expected a number, got '" + v + "'");
  }
}

long long to_int(const std::string& v, int line) {
  try {
    std::size_t used = 0;
    long long d = std::stoll(v, &used);
    if (used != v.size()) fail(line, "expected an integer, got '" + v + "'");
    return d;
  } catch (const std::logic_error&) {
    fail(line, "expected an integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& v, int line) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(line, "expected true/false, got '" + v + "'");
}

}  // namespace

void ExperimentConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0,1]");
  if (n_states < 1) throw ConfigError("N must be positive");
  if (n_mix < 1) throw ConfigError("M must be positive");
  if (supra_components < 1) throw ConfigError("supra_components must be positive");
  if (window < 1) throw ConfigError("window must be positive");
  if (max_iter < 0) throw ConfigError("max_iter must be non-negative");
  if (!(tol >= 0.0)) throw ConfigError("tol must be non-negative");
  if (!(var_floor_rel > 0.0)) throw ConfigError("var_floor must be positive");
  if (jobs < 1) throw ConfigError("jobs must be positive");
  if (!grouping.empty()) {
    int sum = 0;
    for (int g : grouping) {
      if (g < 1) throw ConfigError("grouping sizes must be positive");
      sum += g;
    }
    if (sum != n_states) throw ConfigError("grouping must sum to N");
  }
  frames.validate();
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string s = trim(raw);
    if (s.empty() || s.front() == '[') continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) fail(line, "expected key = value");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = unquote(trim(s.substr(eq + 1)));
    if (key.empty() || value.empty()) fail(line, "expected key = value");

    if (key == "engine") {
      auto e = parse_engine(value);
      if (!e) fail(line, "engine must be hmm or sphmm");
      cfg.engine = *e;
    } else if (key == "scenario") {
      auto k = parse_scenario(value);
      if (!k) fail(line, "scenario must be score-only, max-imposter or pooled");
      cfg.scenario = *k;
    } else if (key == "alpha") {
      cfg.alpha = to_double(value, line);
      if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) fail(line, "alpha must lie in [0,1]");
    } else if (key == "N") {
      cfg.n_states = static_cast<int>(to_int(value, line));
    } else if (key == "M") {
      cfg.n_mix = static_cast<int>(to_int(value, line));
    } else if (key == "supra_components") {
      cfg.supra_components = static_cast<int>(to_int(value, line));
    } else if (key == "grouping") {
      cfg.grouping.clear();
      std::stringstream ss(value);
      std::string part;
      while (std::getline(ss, part, ',')) cfg.grouping.push_back(static_cast<int>(to_int(trim(part), line)));
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(to_int(value, line));
    } else if (key == "multi_speaker") {
      cfg.multi_speaker = to_bool(value, line);
    } else if (key == "adapt_threshold") {
      cfg.adapt_threshold = to_bool(value, line);
    } else if (key == "adapt_on_accept_only") {
      cfg.adapt_on_accept_only = to_bool(value, line);
    } else if (key == "window" || key == "W") {
      cfg.window = static_cast<int>(to_int(value, line));
    } else if (key == "margin") {
      cfg.margin = to_double(value, line);
    } else if (key == "threshold_k") {
      cfg.threshold_k = to_double(value, line);
    } else if (key == "max_iter") {
      cfg.max_iter = static_cast<int>(to_int(value, line));
    } else if (key == "tol") {
      cfg.tol = to_double(value, line);
    } else if (key == "var_floor") {
      cfg.var_floor_rel = to_double(value, line);
    } else if (key == "jobs") {
      cfg.jobs = static_cast<int>(to_int(value, line));
    } else if (key == "voicing_threshold") {
      cfg.prosody.voicing_threshold = to_double(value, line);
    } else {
      fail(line, "unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace stylever
