#include "alpinn/harness/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace alpinn::harness {

std::string csv_number(double v) {
  if (std::isnan(v)) return {};
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

CsvWriter::CsvWriter(std::vector<std::string> header) : width_(header.size()) { row(header); }

CsvWriter& CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != width_) throw std::logic_error("CsvWriter: row width differs from header");
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (fields[i].find_first_of(",\n\"") != std::string::npos) {
      std::string quoted = "\"";
      for (char c : fields[i]) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
      text_ += quoted + "\"";
    } else {
      text_ += fields[i];
    }
    text_ += i + 1 < fields.size() ? "," : "\n";
  }
  return *this;
}

void CsvWriter::save(const std::filesystem::path& path) const { write_text(path, text_); }

void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

namespace {

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

}  // namespace

CsvTable CsvTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

CsvTable CsvTable::parse(std::string_view text, const std::string& origin) {
  CsvTable t;
  t.origin_ = origin;
  bool first = true;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (line.empty() || line == "\r") continue;
    auto fields = split_line(line);
    if (first) {
      t.header_ = std::move(fields);
      first = false;
      continue;
    }
    if (fields.size() != t.header_.size()) {
      throw std::runtime_error(origin + ": row " + std::to_string(t.cells_.size() + 1) + " has " +
                               std::to_string(fields.size()) + " fields, header has " +
                               std::to_string(t.header_.size()));
    }
    t.cells_.push_back(std::move(fields));
  }
  if (first) throw std::runtime_error(origin + ": empty file");
  return t;
}

bool CsvTable::has(std::string_view column) const {
  for (const auto& h : header_) {
    if (h == column) return true;
  }
  return false;
}

std::size_t CsvTable::index(std::string_view column) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == column) return i;
  }
  throw std::runtime_error(origin_ + ": missing column '" + std::string(column) + "'");
}

std::vector<double> CsvTable::numbers(std::string_view column) const {
  const std::size_t k = index(column);
  std::vector<double> out;
  out.reserve(cells_.size());
  for (const auto& row : cells_) {
    const std::string& s = row[k];
    if (s.empty()) {
      out.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    if (s == "inf" || s == "-inf") {
      out.push_back(s == "inf" ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity());
      continue;
    }
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw std::runtime_error(origin_ + ": column '" + std::string(column) + "' has non-numeric value '" + s + "'");
    }
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> CsvTable::strings(std::string_view column) const {
  const std::size_t k = index(column);
  std::vector<std::string> out;
  out.reserve(cells_.size());
  for (const auto& row : cells_) out.push_back(row[k]);
  return out;
}

}  // namespace alpinn::harness
