// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#include "irsce/harness/csv.hpp"

#include <fmt/format.h>

#include <boost/algorithm/string.hpp>
#include <fstream>
#include <sstream>

#include "irsce/core/error.hpp"

namespace irsce::harness {

std::string format_cell(const CsvCell& cell) {
  if (const auto* s = std::get_if<std::string>(&cell)) {
    if (s->find_first_of(",\"\n") == std::string::npos) return *s;
    return "\"" + boost::algorithm::replace_all_copy(*s, "\"", "\"\"") + "\"";
  }
  if (const auto* i = std::get_if<long long>(&cell)) return fmt::format("{}", *i);
  const double v = std::get<double>(cell);
  return v == 0.0 ? "0" : fmt::format("{:.6g}", v);
}

void CsvTable::add_row(std::vector<CsvCell> row) {
  if (row.size() != header_.size()) {
    throw ValidationError(fmt::format("csv row has {} cells, header has {}", row.size(), header_.size()));
  }
  rows_.push_back(std::move(row));
}

std::string CsvTable::str() const {
  std::string out = boost::algorithm::join(header_, ",") + "\n";
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_cell(row[i]);
    }
    out += '\n';
  }
  return out;
}

void CsvTable::write(const std::filesystem::path& path) const { write_text_file(path, str()); }

int CsvData::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  throw FormatError(fmt::format("csv has no column '{}'", name));
}

CsvData read_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError(fmt::format("cannot open {}", path.string()));
  CsvData data;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    boost::algorithm::split(cells, line, [](char c) { return c == ','; });
    if (first) {
      data.header = std::move(cells);
      first = false;
    } else {
      data.rows.push_back(std::move(cells));
    }
  }
  return data;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
    os << text;
    if (!os.flush()) throw std::runtime_error(fmt::format("write to {} failed", path.string()));
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace irsce::harness
