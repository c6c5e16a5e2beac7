// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace irsce::harness {

inline constexpr char kManifestName[] = "manifest.json";

/// manifest.json in an output directory: the spec hash and seed every file
/// there was produced from, and the command that wrote each file.
class Manifest {
 public:
  Manifest(std::string scenario, std::string spec_sha256, std::uint64_t seed)
      : scenario_(std::move(scenario)), spec_sha256_(std::move(spec_sha256)), seed_(seed) {}

  /// Throws ValidationError("dataset not found ...") without a manifest.
  static Manifest load(const std::filesystem::path& dir);

  /// Throws ValidationError when the manifest was produced from another spec
  /// file or seed.
  void require_match(const std::string& spec_sha256, std::uint64_t seed) const;

  void record(const std::string& file, const std::string& command);
  void save(const std::filesystem::path& dir) const;

  const std::string& spec_sha256() const noexcept { return spec_sha256_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::map<std::string, std::string>& files() const noexcept { return files_; }

 private:
  std::string scenario_;
  std::string spec_sha256_;
  std::uint64_t seed_;
  std::map<std::string, std::string> files_;  // file name -> command
};

}  // namespace irsce::harness
