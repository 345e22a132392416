#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace alpinn::harness {

/// Shortest round-trip text for finite values; empty for NaN.
std::string csv_number(double v);

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  CsvWriter& row(const std::vector<std::string>& fields);
  const std::string& text() const { return text_; }
  void save(const std::filesystem::path& path) const;

 private:
  std::size_t width_;
  std::string text_;
};

/// Numeric table read back from a CSV file; empty fields become NaN and
/// non-numeric fields are kept only as text.
class CsvTable {
 public:
  static CsvTable load(const std::filesystem::path& path);
  static CsvTable parse(std::string_view text, const std::string& origin = "csv");

  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return cells_.size(); }
  bool has(std::string_view column) const;
  /// Throws std::runtime_error naming the column when it is absent.
  std::vector<double> numbers(std::string_view column) const;
  std::vector<std::string> strings(std::string_view column) const;

 private:
  std::size_t index(std::string_view column) const;

  std::string origin_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> cells_;
};

void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace alpinn::harness
