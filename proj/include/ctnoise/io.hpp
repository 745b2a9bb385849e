#pragma once

// CSV tables (RFC 4180, '.' decimal point, 17 significant digits) and
// all-or-nothing file output.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <utility>
#include <variant>
#include <vector>

#include "ctnoise/errors.hpp"

namespace ctnoise {

/// Round-trippable decimal text for a double. NaN renders as an empty field.
[[nodiscard]] inline std::string format_number(double x) {
  if (std::isnan(x)) return {};
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

[[nodiscard]] inline std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

/// One table cell; monostate is an absent value.
using Cell = std::variant<std::monostate, std::int64_t, double, std::string>;

[[nodiscard]] inline std::string format_cell(const Cell& cell) {
  struct Visitor {
    std::string operator()(std::monostate) const { return {}; }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(double v) const { return format_number(v); }
    std::string operator()(const std::string& v) const { return csv_escape(v); }
  };
  return std::visit(Visitor{}, cell);
}

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  /// Column index by name; throws std::out_of_range if absent.
  [[nodiscard]] std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == name) return i;
    }
    throw std::out_of_range("no column named " + name);
  }

  /// Numeric value at (row, column name). Absent cells read as NaN.
  [[nodiscard]] double number(std::size_t row, const std::string& name) const {
    const auto& cell = rows.at(row).at(column(name));
    if (const auto* d = std::get_if<double>(&cell)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&cell)) return static_cast<double>(*i);
    return std::nan("");
  }

  [[nodiscard]] std::string text(std::size_t row, const std::string& name) const {
    return format_cell(rows.at(row).at(column(name)));
  }
};

[[nodiscard]] inline std::string to_csv(const Table& table) {
  std::string out;
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i) out += ',';
    out += csv_escape(table.columns[i]);
  }
  out += "\r\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_cell(row[i]);
    }
    out += "\r\n";
  }
  return out;
}

[[nodiscard]] inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return ss.str();
}

/// Writes `content` to a temporary sibling and renames it over `path`.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw IoError("write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    std::filesystem::remove(tmp, ignored);
    throw IoError("rename to " + path.string() + " failed: " + ec.message());
  }
}

/// A set of files committed together: every file is staged to a temporary
/// sibling first, and nothing is renamed into place unless all writes succeed.
class OutputBatch {
 public:
  void add(std::filesystem::path path, std::string content) {
    files_.emplace_back(std::move(path), std::move(content));
  }

  void commit() {
    std::vector<std::filesystem::path> staged;
    const auto cleanup = [&staged] {
      for (const auto& p : staged) {
        std::error_code ignored;
        std::filesystem::remove(p, ignored);
      }
    };
    for (const auto& [path, content] : files_) {
      auto tmp = path;
      tmp += ".tmp";
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) {
        cleanup();
        throw IoError("cannot open " + tmp.string() + " for writing");
      }
      staged.push_back(tmp);
      out.write(content.data(), static_cast<std::streamsize>(content.size()));
      out.flush();
      if (!out) {
        cleanup();
        throw IoError("write failed: " + tmp.string());
      }
    }
    for (std::size_t i = 0; i < files_.size(); ++i) {
      std::error_code ec;
      std::filesystem::rename(staged[i], files_[i].first, ec);
      if (ec) {
        cleanup();
        throw IoError("rename to " + files_[i].first.string() + " failed: " + ec.message());
      }
    }
    files_.clear();
  }

 private:
  std::vector<std::pair<std::filesystem::path, std::string>> files_;
};

}  // namespace ctnoise
