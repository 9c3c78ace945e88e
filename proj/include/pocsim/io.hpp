#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pocsim {

/// Shortest decimal representation that round-trips the double exactly.
/// Locale-free, so CSV output is byte-stable across runs and machines.
std::string format_double(double x);

/// Minimal CSV emitter: fixed column order, '\n' line ends, full-precision
/// floats. All rows funnel through one writer so row order is deterministic.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> columns);

  void append_row(const std::vector<double>& values);
  void append_row_raw(const std::vector<std::string>& cells);
  const std::string& str() const { return buffer_; }

 private:
  std::size_t n_cols_;
  std::string buffer_;
};

/// FNV-1a 64-bit digest of a byte string; recorded per artifact in run
/// manifests so replays can be checked cheaply.
std::uint64_t fnv1a64(const std::string& bytes);
std::string fnv1a64_hex(const std::string& bytes);

/// Write a file atomically-ish (truncate + write + flush). Throws on error.
void write_file(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

}  // namespace pocsim
