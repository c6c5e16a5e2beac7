// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#include "irsce/harness/spec.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <algorithm>
#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "irsce/core/error.hpp"

namespace irsce::harness {
namespace {

namespace pt = boost::property_tree;

std::string trim(std::string_view s) { return boost::algorithm::trim_copy(std::string(s)); }

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  const std::string text(s);
  boost::algorithm::split(parts, text, [sep](char c) { return c == sep; });
  for (auto& p : parts) p = trim(p);
  if (parts.size() == 1 && parts.front().empty()) parts.clear();
  return parts;
}

class FieldReader {
 public:
  FieldReader(std::string origin, std::string key, std::string value)
      : origin_(std::move(origin)), key_(std::move(key)), value_(trim(value)) {}

  [[noreturn]] void fail(std::string_view what) const {
    throw ValidationError(fmt::format("{}: {} = '{}': {}", origin_, key_, value_, what));
  }

  double real(std::string_view text) const {
    const std::string t = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) fail("expected a number");
    if (!std::isfinite(v)) fail("expected a finite number");
    return v;
  }
  double real() const { return real(value_); }

  long long integer(std::string_view text) const {
    const std::string t = trim(text);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) fail("expected an integer");
    return v;
  }
  int integer32() const {
    const long long v = integer(value_);
    if (v < -(1LL << 31) || v >= (1LL << 31)) fail("integer out of range");
    return static_cast<int>(v);
  }
  std::uint64_t unsigned64() const {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(value_.data(), value_.data() + value_.size(), v);
    if (ec != std::errc() || ptr != value_.data() + value_.size() || value_.empty()) fail("expected an unsigned integer");
    return v;
  }
  bool boolean() const {
    const std::string v = boost::algorithm::to_lower_copy(value_);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail("expected true or false");
  }
  channel::Vec3 vec3(std::string_view text) const {
    const auto parts = split(text, ',');
    if (parts.size() != 3) fail("expected x,y,z");
    return {real(parts[0]), real(parts[1]), real(parts[2])};
  }
  channel::Vec3 vec3() const { return vec3(value_); }
  std::vector<channel::Vec3> vec3_list() const {
    std::vector<channel::Vec3> out;
    for (const auto& p : split(value_, ';')) out.push_back(vec3(p));
    return out;
  }
  std::vector<double> real_list() const {
    std::vector<double> out;
    for (const auto& p : split(value_, ',')) out.push_back(real(p));
    return out;
  }
  std::vector<std::string> word_list() const { return split(value_, ','); }
  std::vector<std::pair<int, int>> size_list() const {
    std::vector<std::pair<int, int>> out;
    for (const auto& p : split(value_, ',')) {
      const auto mn = split(p, 'x');
      if (mn.size() != 2) fail("expected MxN pairs such as 16x32");
      out.emplace_back(static_cast<int>(integer(mn[0])), static_cast<int>(integer(mn[1])));
    }
    return out;
  }
  const std::string& text() const { return value_; }

 private:
  std::string origin_;
  std::string key_;
  std::string value_;
};

using Setter = void (*)(ExperimentSpec&, const FieldReader&);

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"scenario.name", [](ExperimentSpec& s, const FieldReader& f) { s.scenario = f.text(); }},

      {"system.num_users", [](ExperimentSpec& s, const FieldReader& f) { s.num_users = f.integer32(); }},
      {"system.num_bs_antennas", [](ExperimentSpec& s, const FieldReader& f) { s.num_bs_antennas = f.integer32(); }},
      {"system.num_irs_elements", [](ExperimentSpec& s, const FieldReader& f) { s.num_irs_elements = f.integer32(); }},
      {"system.pilot_length", [](ExperimentSpec& s, const FieldReader& f) { s.pilot_length = f.integer32(); }},
      {"system.symbol_power", [](ExperimentSpec& s, const FieldReader& f) { s.symbol_power = f.real(); }},
      {"system.coherence_correlation",
       [](ExperimentSpec& s, const FieldReader& f) { s.coherence_correlation = f.real(); }},
      {"system.seed", [](ExperimentSpec& s, const FieldReader& f) { s.seed = f.unsigned64(); }},

      {"geometry.bs_position", [](ExperimentSpec& s, const FieldReader& f) { s.geometry.bs_position = f.vec3(); }},
      {"geometry.irs_position", [](ExperimentSpec& s, const FieldReader& f) { s.geometry.irs_position = f.vec3(); }},
      {"geometry.user_positions",
       [](ExperimentSpec& s, const FieldReader& f) { s.geometry.user_positions = f.vec3_list(); }},
      {"geometry.carrier_freq_hz", [](ExperimentSpec& s, const FieldReader& f) { s.geometry.carrier_freq_hz = f.real(); }},
      {"geometry.rician_k_direct", [](ExperimentSpec& s, const FieldReader& f) { s.geometry.rician_k_direct = f.real(); }},
      {"geometry.rician_k_irs", [](ExperimentSpec& s, const FieldReader& f) { s.geometry.rician_k_irs = f.real(); }},
      {"geometry.pathloss_exponent_direct",
       [](ExperimentSpec& s, const FieldReader& f) { s.geometry.pathloss_exponent_direct = f.real(); }},
      {"geometry.pathloss_exponent_irs",
       [](ExperimentSpec& s, const FieldReader& f) { s.geometry.pathloss_exponent_irs = f.real(); }},
      {"geometry.shadowing_std_db", [](ExperimentSpec& s, const FieldReader& f) { s.geometry.shadowing_std_db = f.real(); }},
      {"geometry.normalize_gain", [](ExperimentSpec& s, const FieldReader& f) { s.geometry.normalize_gain = f.boolean(); }},
      {"geometry.mean_channel_gain_db",
       [](ExperimentSpec& s, const FieldReader& f) { s.geometry.mean_channel_gain_db = f.real(); }},

      {"training.learning_rate", [](ExperimentSpec& s, const FieldReader& f) { s.training.learning_rate = f.real(); }},
      {"training.batch_size", [](ExperimentSpec& s, const FieldReader& f) { s.training.batch_size = f.integer32(); }},
      {"training.max_epochs", [](ExperimentSpec& s, const FieldReader& f) { s.training.max_epochs = f.integer32(); }},
      {"training.eta_threshold", [](ExperimentSpec& s, const FieldReader& f) { s.training.eta_threshold = f.real(); }},
      {"training.patience", [](ExperimentSpec& s, const FieldReader& f) { s.training.patience = f.integer32(); }},
      {"training.drn_middle_repeats",
       [](ExperimentSpec& s, const FieldReader& f) { s.drn_middle_repeats = f.integer32(); }},

      {"experiment.snr_sweep_db", [](ExperimentSpec& s, const FieldReader& f) { s.snr_sweep_db = f.real_list(); }},
      {"experiment.n_train", [](ExperimentSpec& s, const FieldReader& f) { s.n_train = f.integer32(); }},
      {"experiment.n_test", [](ExperimentSpec& s, const FieldReader& f) { s.n_test = f.integer32(); }},
      {"experiment.estimators",
       [](ExperimentSpec& s, const FieldReader& f) {
         s.estimators.clear();
         for (const auto& w : f.word_list()) {
           try {
             s.estimators.push_back(parse_method(w));
           } catch (const ValidationError& e) {
             f.fail(e.what());
           }
         }
       }},
      {"experiment.reference_provenance",
       [](ExperimentSpec& s, const FieldReader& f) {
         try {
           s.reference_provenance = est::parse_provenance(f.text());
         } catch (const ValidationError& e) {
           f.fail(e.what());
         }
       }},
      {"experiment.ablation_snr_db", [](ExperimentSpec& s, const FieldReader& f) { s.ablation_snr_db = f.real(); }},
      {"experiment.ablation_provenances",
       [](ExperimentSpec& s, const FieldReader& f) {
         s.ablation_provenances.clear();
         for (const auto& w : f.word_list()) {
           try {
             s.ablation_provenances.push_back(est::parse_provenance(w));
           } catch (const ValidationError& e) {
             f.fail(e.what());
           }
         }
       }},
      {"experiment.size_ablation", [](ExperimentSpec& s, const FieldReader& f) { s.size_ablation = f.size_list(); }},
      {"experiment.beamforming_power", [](ExperimentSpec& s, const FieldReader& f) { s.beamforming_power = f.real(); }},
      {"experiment.shared_r", [](ExperimentSpec& s, const FieldReader& f) { s.shared_r = f.boolean(); }},
      {"experiment.beamformer_rounds", [](ExperimentSpec& s, const FieldReader& f) { s.beamformer_rounds = f.integer32(); }},
      {"experiment.phase_grid", [](ExperimentSpec& s, const FieldReader& f) { s.phase_grid = f.integer32(); }},
      {"experiment.timing_trials", [](ExperimentSpec& s, const FieldReader& f) { s.timing_trials = f.integer32(); }},
      {"experiment.timing_runs", [](ExperimentSpec& s, const FieldReader& f) { s.timing_runs = f.integer32(); }},
      {"experiment.workers", [](ExperimentSpec& s, const FieldReader& f) { s.workers = f.integer32(); }},
  };
  return table;
}

void require(bool ok, std::string_view field, const std::string& what) {
  if (!ok) throw ValidationError(fmt::format("{}: {}", field, what));
}

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::ls:
      return "ls";
    case Method::drn_style:
      return "drn_style";
    case Method::mismatch:
      return "mismatch";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  for (const Method m : {Method::ls, Method::drn_style, Method::mismatch}) {
    if (name == method_name(m)) return m;
  }
  throw ValidationError(fmt::format("unknown estimator '{}' (expected ls, drn_style or mismatch)", name));
}

bool ExperimentSpec::uses(Method m) const { return std::ranges::find(estimators, m) != estimators.end(); }

std::vector<double> ExperimentSpec::observation_snrs() const {
  std::vector<double> out = snr_sweep_db;
  if (std::ranges::find(out, ablation_snr_db) == out.end()) out.push_back(ablation_snr_db);
  return out;
}

SystemConfig ExperimentSpec::system_at(double snr_db) const {
  SystemConfig cfg = config_from_snr(num_users, num_bs_antennas, num_irs_elements, pilot_length, snr_db,
                                     coherence_correlation, seed);
  cfg.symbol_power = symbol_power;
  cfg.noise_variance = symbol_power * db_to_linear(-snr_db);
  cfg.validate();
  return cfg;
}

void ExperimentSpec::validate() const {
  require(!scenario.empty(), "scenario.name", "must not be empty");
  require(num_users >= 1, "system.num_users", fmt::format("must be >= 1, got {}", num_users));
  require(num_bs_antennas >= 1, "system.num_bs_antennas", fmt::format("must be >= 1, got {}", num_bs_antennas));
  require(num_irs_elements >= 1, "system.num_irs_elements", fmt::format("must be >= 1, got {}", num_irs_elements));
  require(pilot_length >= num_users, "system.pilot_length",
          fmt::format("pilot rank: L = {} < K = {}", pilot_length, num_users));
  require(symbol_power > 0.0, "system.symbol_power", "must be > 0");
  require(coherence_correlation >= 0.0 && coherence_correlation <= 1.0, "system.coherence_correlation",
          "must lie in [0, 1]");
  require(static_cast<int>(geometry.user_positions.size()) == num_users, "geometry.user_positions",
          fmt::format("{} positions for {} users", geometry.user_positions.size(), num_users));
  try {
    geometry.validate(num_users);
    training.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(fmt::format("{}", e.what()));
  }
  require(drn_middle_repeats >= 1, "training.drn_middle_repeats", "must be >= 1");
  require(!snr_sweep_db.empty(), "experiment.snr_sweep_db", "must not be empty");
  std::set<double> unique(snr_sweep_db.begin(), snr_sweep_db.end());
  require(unique.size() == snr_sweep_db.size(), "experiment.snr_sweep_db", "contains duplicates");
  require(n_train >= 1, "experiment.n_train", fmt::format("must be >= 1, got {}", n_train));
  require(n_test >= 1, "experiment.n_test", fmt::format("must be >= 1, got {}", n_test));
  require(!estimators.empty(), "experiment.estimators", "must not be empty");
  require(!ablation_provenances.empty(), "experiment.ablation_provenances", "must not be empty");
  for (const auto& [m, n] : size_ablation) {
    require(m >= 1 && n >= 1, "experiment.size_ablation", fmt::format("invalid size {}x{}", m, n));
  }
  require(beamforming_power > 0.0, "experiment.beamforming_power", "must be > 0");
  require(beamformer_rounds >= 1, "experiment.beamformer_rounds", "must be >= 1");
  require(phase_grid >= 1, "experiment.phase_grid", "must be >= 1");
  require(timing_trials >= 100, "experiment.timing_trials", fmt::format("must be >= 100, got {}", timing_trials));
  require(timing_runs >= 1, "experiment.timing_runs", "must be >= 1");
  require(workers >= 0, "experiment.workers", "must be >= 0");
}

ExperimentSpec parse_spec(std::string_view text, const std::string& origin) {
  pt::ptree tree;
  std::istringstream is{std::string(text)};
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError(fmt::format("{}: line {}: {}", origin, e.line(), e.message()));
  }
  ExperimentSpec spec;
  bool users_given = false;
  for (const auto& [section, body] : tree) {
    static const std::set<std::string> kSections{"scenario", "system", "geometry", "training", "experiment"};
    if (body.empty() && !body.data().empty()) {
      throw ValidationError(fmt::format("{}: key '{}' must sit inside a section", origin, section));
    }
    if (!kSections.contains(section)) throw ValidationError(fmt::format("{}: unknown section [{}]", origin, section));
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      const auto it = setters().find(full);
      if (it == setters().end()) throw ValidationError(fmt::format("{}: unknown key '{}'", origin, full));
      it->second(spec, FieldReader(origin, full, value.data()));
      users_given = users_given || full == "geometry.user_positions";
    }
  }
  if (!users_given) spec.geometry.user_positions = channel::GeometrySpec::default_placement(spec.num_users).user_positions;
  try {
    spec.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(fmt::format("{}: {}", origin, e.what()));
  }
  return spec;
}

LoadedSpec load_spec(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError(fmt::format("spec file not found: {}", path.string()));
  std::ostringstream buf;
  buf << is.rdbuf();
  const std::string bytes = buf.str();
  return LoadedSpec{parse_spec(bytes, path.string()), sha256_hex(bytes)};
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string snr_label(double snr_db) { return fmt::format("{:g}", snr_db); }

}  // namespace irsce::harness
