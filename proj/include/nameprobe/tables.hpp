#pragma once

// Aligned plain-text tables for reports.

#include <optional>
#include <string>
#include <vector>

namespace nameprobe {

class TextTable {
 public:
  explicit TextTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(std::vector<std::string> cells) { rows_.push_back(std::move(cells)); }
  /// Horizontal rule before the next row.
  void add_separator() { separators_.push_back(rows_.size()); }

  /// First column left-aligned, the rest right-aligned.
  std::string render() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::size_t> separators_;
};

/// Fixed-point with `digits` decimals, or "-" when absent.
std::string format_fixed(const std::optional<double>& value, int digits);

}  // namespace nameprobe
