#pragma once
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "desense/haar.hpp"

namespace desense {

// Plain-text key=value configuration with optional [section] headers;
// section keys become "section.key". '#' starts a comment. Values stay raw
// strings until a typed accessor parses them.
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_text(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  long get_long(const std::string& key) const;
  long get_long(const std::string& key, long fallback) const;
  uint64_t get_u64(const std::string& key, uint64_t fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  // comma-separated list of reals; "inf" allowed (noiseless SNR)
  std::vector<double> get_double_list(const std::string& key) const;

  void set(const std::string& key, const std::string& value);
  const std::map<std::string, std::string>& entries() const { return entries_; }

  // FNV-1a over the sorted key=value pairs; recorded in every CSV
  uint64_t hash() const;

 private:
  std::map<std::string, std::string> entries_;
  std::string origin_;
};

double parse_real(const std::string& text);  // accepts "inf"
std::string format_g17(double v);

// CSV with a first comment line "# config_hash=<hex> seed=<dec>", then the
// header row, then %.17g data rows.
class CsvWriter {
 public:
  CsvWriter(std::ostream& os, const std::vector<std::string>& columns, uint64_t config_hash,
            uint64_t seed);
  void row(const std::vector<double>& values);
  void row_mixed(const std::vector<std::string>& values);

 private:
  std::ostream& os_;
  size_t columns_;
};

// Binary PGM (P5), pixels scaled to [0,1].
Mat read_pgm(const std::string& path);
void write_pgm(const std::string& path, const Mat& image);

// IDX (big-endian) readers; errors name the byte offset.
struct ImageSet {
  long count = 0, rows = 0, cols = 0;
  std::vector<Mat> images;  // pixels in [0,1]
};
ImageSet read_idx_images(const std::string& path);
std::vector<int> read_idx_labels(const std::string& path);

void write_vector(const std::string& path, const std::vector<double>& values);

// Minimal line-chart renderer (one gray polyline per series) for --plots.
void write_line_chart_pgm(const std::string& path,
                          const std::vector<std::vector<double>>& series, long width = 640,
                          long height = 480);

}  // namespace desense
