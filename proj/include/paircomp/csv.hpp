#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <system_error>
#include <vector>

#include "paircomp/errors.hpp"

namespace paircomp {

// Shortest round-trip decimal rendering; the same value always prints the
// same bytes, which is what makes output files byte-comparable across runs
// and thread counts.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Whole-file atomic write: stage to a sibling temp file, then rename.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  const std::filesystem::path parent = path.parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw solver_error("cannot open " + tmp.string() + " for writing");
    out << text;
    if (!out.good()) throw solver_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

class CsvWriter {
 public:
  explicit CsvWriter(std::initializer_list<std::string> columns) {
    bool first = true;
    for (const auto& c : columns) {
      if (!first) buf_ += ',';
      buf_ += c;
      first = false;
    }
    buf_ += '\n';
  }

  CsvWriter& field(double v) { return raw(format_double(v)); }
  CsvWriter& field(int v) { return raw(std::to_string(v)); }
  CsvWriter& field(long v) { return raw(std::to_string(v)); }
  CsvWriter& field(std::uint64_t v) { return raw(std::to_string(v)); }
  CsvWriter& field(const std::string& v) { return raw(v); }

  void end_row() {
    buf_ += '\n';
    row_open_ = false;
  }

  const std::string& text() const { return buf_; }
  void save(const std::filesystem::path& path) const { write_file_atomic(path, buf_); }

 private:
  CsvWriter& raw(const std::string& cell) {
    if (row_open_) buf_ += ',';
    buf_ += cell;
    row_open_ = true;
    return *this;
  }

  std::string buf_;
  bool row_open_ = false;
};

}  // namespace paircomp
