// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#include "irsce/harness/manifest.hpp"

#include <fmt/format.h>

#include <fstream>
#include <nlohmann/json.hpp>

#include "irsce/core/error.hpp"
#include "irsce/harness/csv.hpp"

namespace irsce::harness {

Manifest Manifest::load(const std::filesystem::path& dir) {
  const auto path = dir / kManifestName;
  std::ifstream is(path);
  if (!is) throw ValidationError(fmt::format("dataset not found: {} is missing; run generate first", path.string()));
  try {
    const auto j = nlohmann::json::parse(is);
    Manifest m(j.at("scenario").get<std::string>(), j.at("spec_sha256").get<std::string>(),
               j.at("seed").get<std::uint64_t>());
    for (const auto& [file, info] : j.at("files").items()) {
      const auto& sha = info.at("spec_sha256").get_ref<const std::string&>();
      if (sha != m.spec_sha256_) {
        throw FormatError(fmt::format("{}: {} records spec hash {} but the manifest holds {}", path.string(), file,
                                      sha, m.spec_sha256_));
      }
      m.files_[file] = info.at("command").get<std::string>();
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void Manifest::require_match(const std::string& spec_sha256, std::uint64_t seed) const {
  if (spec_sha256 != spec_sha256_) {
    throw ValidationError(fmt::format("spec hash mismatch: outputs were produced from spec {} but this spec is {}",
                                      spec_sha256_, spec_sha256));
  }
  if (seed != seed_) {
    throw ValidationError(fmt::format("seed mismatch: outputs were produced with seed {} but this run uses {}", seed_,
                                      seed));
  }
}

void Manifest::record(const std::string& file, const std::string& command) { files_[file] = command; }

void Manifest::save(const std::filesystem::path& dir) const {
  nlohmann::json files = nlohmann::json::object();
  for (const auto& [file, command] : files_) {
    files[file] = {{"command", command}, {"spec_sha256", spec_sha256_}, {"seed", seed_}};
  }
  const nlohmann::json j = {
      {"format", 1}, {"scenario", scenario_}, {"spec_sha256", spec_sha256_}, {"seed", seed_}, {"files", files}};
  write_text_file(dir / kManifestName, j.dump(2) + "\n");
}

}  // namespace irsce::harness
