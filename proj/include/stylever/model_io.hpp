#pragma once

// Versioned text record for trained models. Reals are written with 17
// significant digits, so a write/read round trip is exact.

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "stylever/auth.hpp"
#include "stylever/hmm.hpp"
#include "stylever/sphmm.hpp"

namespace stylever {

void write_hmm(std::ostream& out, const HmmModel& model);
HmmModel read_hmm(std::istream& in);

void write_sphmm(std::ostream& out, const SphmmModel& model);
SphmmModel read_sphmm(std::istream& in);

struct StoredModel {
  std::optional<ClaimIdentity> claim;
  double theta = 0.0;
  SphmmModel model;
};

void save_model(const std::filesystem::path& path, const StoredModel& stored);
StoredModel load_model(const std::filesystem::path& path);

}  // namespace stylever
