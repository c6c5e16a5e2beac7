// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace irsce::harness {

/// Cell of a CSV row: text, integer, or a real printed with 6 significant
/// digits.
using CsvCell = std::variant<std::string, long long, double>;

std::string format_cell(const CsvCell& cell);

/// UTF-8, comma-delimited, header row first, '\n' line endings. Text cells
/// containing a comma, quote or newline are quoted.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  /// Throws ValidationError when the cell count differs from the header.
  void add_row(std::vector<CsvCell> row);

  const std::vector<std::string>& header() const noexcept { return header_; }
  std::size_t num_rows() const noexcept { return rows_.size(); }

  std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<CsvCell>> rows_;
};

/// Minimal reader for the files this tool writes: no quoted fields.
struct CsvData {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;
};

CsvData read_csv(const std::filesystem::path& path);

/// Writes `text` to a temporary sibling and renames it over `path`.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace irsce::harness
