#include "desense/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace desense {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str(), path);
}

Config Config::parse_text(const std::string& text, const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line, section;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::runtime_error("config: " + origin + ":" + std::to_string(lineno) +
                                 ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw std::runtime_error("config: " + origin + ":" + std::to_string(lineno) + ": empty section name");
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: " + origin + ":" + std::to_string(lineno) +
                               ": expected key = value, got '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error("config: " + origin + ":" + std::to_string(lineno) + ": empty key");
    if (!section.empty()) key = section + "." + key;
    cfg.entries_[key] = value;
  }
  return cfg;
}

bool Config::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string Config::get_string(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end())
    throw std::runtime_error("config " + origin_ + ": missing required key '" + key + "'");
  return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

long Config::get_long(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    size_t pos = 0;
    long out = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw std::runtime_error("config " + origin_ + ": key '" + key + "' is not an integer: '" +
                             v + "'");
  }
}

long Config::get_long(const std::string& key, long fallback) const {
  return has(key) ? get_long(key) : fallback;
}

uint64_t Config::get_u64(const std::string& key, uint64_t fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get_string(key);
  try {
    size_t pos = 0;
    unsigned long long out = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return (uint64_t)out;
  } catch (const std::exception&) {
    throw std::runtime_error("config " + origin_ + ": key '" + key +
                             "' is not an unsigned integer: '" + v + "'");
  }
}

double parse_real(const std::string& text) {
  std::string t = trim(text);
  if (t == "inf" || t == "Inf" || t == "INF")
    return std::numeric_limits<double>::infinity();
  size_t pos = 0;
  double out = std::stod(t, &pos);
  if (pos != t.size()) throw std::invalid_argument("not a real number: '" + text + "'");
  return out;
}

double Config::get_double(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    return parse_real(v);
  } catch (const std::exception&) {
    throw std::runtime_error("config " + origin_ + ": key '" + key + "' is not a real: '" + v +
                             "'");
  }
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  std::string v = get_string(key);
  std::transform(v.begin(), v.end(), v.begin(), ::tolower);
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw std::runtime_error("config " + origin_ + ": key '" + key + "' is not a boolean: '" + v +
                           "'");
}

std::vector<double> Config::get_double_list(const std::string& key) const {
  const std::string v = get_string(key);
  std::vector<double> out;
  std::istringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      out.push_back(parse_real(item));
    } catch (const std::exception&) {
      throw std::runtime_error("config " + origin_ + ": key '" + key +
                               "' has a non-real list item: '" + item + "'");
    }
  }
  if (out.empty())
    throw std::runtime_error("config " + origin_ + ": key '" + key + "' is an empty list");
  return out;
}

void Config::set(const std::string& key, const std::string& value) { entries_[key] = value; }

uint64_t Config::hash() const {
  uint64_t h = 14695981039346656037ULL;
  auto mix = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
  };
  for (const auto& [k, v] : entries_) {
    mix(k);
    mix("=");
    mix(v);
    mix("\n");
  }
  return h;
}

std::string format_g17(double v) {
  char buf[64];
  snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(std::ostream& os, const std::vector<std::string>& columns,
                     uint64_t config_hash, uint64_t seed)
    : os_(os), columns_(columns.size()) {
  char head[96];
  snprintf(head, sizeof(head), "# config_hash=%016llx seed=%llu\n",
           (unsigned long long)config_hash, (unsigned long long)seed);
  os_ << head;
  for (size_t i = 0; i < columns.size(); ++i) os_ << (i ? "," : "") << columns[i];
  os_ << "\n";
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != columns_) throw std::invalid_argument("csv row: column count mismatch");
  for (size_t i = 0; i < values.size(); ++i) os_ << (i ? "," : "") << format_g17(values[i]);
  os_ << "\n";
}

void CsvWriter::row_mixed(const std::vector<std::string>& values) {
  if (values.size() != columns_) throw std::invalid_argument("csv row: column count mismatch");
  for (size_t i = 0; i < values.size(); ++i) os_ << (i ? "," : "") << values[i];
  os_ << "\n";
}

namespace {

// Reads one whitespace-delimited PGM header token, skipping '#' comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back((char)c);
  }
  return tok;
}

}  // namespace

Mat read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("pgm: cannot open " + path);
  if (pgm_token(in) != "P5") throw std::runtime_error("pgm: " + path + " is not binary P5");
  long cols, rows, maxval;
  try {
    cols = std::stol(pgm_token(in));
    rows = std::stol(pgm_token(in));
    maxval = std::stol(pgm_token(in));
  } catch (const std::exception&) {
    throw std::runtime_error("pgm: malformed header in " + path);
  }
  if (cols <= 0 || rows <= 0 || maxval <= 0 || maxval > 255)
    throw std::runtime_error("pgm: unsupported header in " + path);
  Mat img(rows, cols);
  std::vector<unsigned char> raw(rows * cols);
  in.read((char*)raw.data(), (std::streamsize)raw.size());
  if (in.gcount() != (std::streamsize)raw.size())
    throw std::runtime_error("pgm: truncated pixel data in " + path);
  for (long i = 0; i < rows * cols; ++i) img.data[i] = raw[i] / (double)maxval;
  return img;
}

void write_pgm(const std::string& path, const Mat& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("pgm: cannot write " + path);
  out << "P5\n" << image.cols << " " << image.rows << "\n255\n";
  std::vector<unsigned char> raw(image.rows * image.cols);
  for (size_t i = 0; i < raw.size(); ++i) {
    double v = std::clamp(image.data[i], 0.0, 1.0);
    raw[i] = (unsigned char)std::lround(v * 255.0);
  }
  out.write((char*)raw.data(), (std::streamsize)raw.size());
}

namespace {

uint32_t read_be32(std::istream& in, const std::string& path, long offset) {
  unsigned char b[4];
  in.read((char*)b, 4);
  if (in.gcount() != 4)
    throw std::runtime_error("idx: " + path + ": truncated at byte " + std::to_string(offset));
  return ((uint32_t)b[0] << 24) | ((uint32_t)b[1] << 16) | ((uint32_t)b[2] << 8) | (uint32_t)b[3];
}

}  // namespace

ImageSet read_idx_images(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("idx: cannot open " + path);
  uint32_t magic = read_be32(in, path, 0);
  if (magic != 0x00000803u)
    throw std::runtime_error("idx: " + path + ": bad image magic at byte 0 (got 0x" +
                             [&] {
                               char b[16];
                               snprintf(b, sizeof(b), "%08x", magic);
                               return std::string(b);
                             }() +
                             ", want 0x00000803)");
  ImageSet set;
  set.count = read_be32(in, path, 4);
  set.rows = read_be32(in, path, 8);
  set.cols = read_be32(in, path, 12);
  if (set.count < 0 || set.rows <= 0 || set.cols <= 0)
    throw std::runtime_error("idx: " + path + ": nonsensical dimensions at byte 4");
  set.images.reserve(set.count);
  std::vector<unsigned char> raw(set.rows * set.cols);
  for (long i = 0; i < set.count; ++i) {
    in.read((char*)raw.data(), (std::streamsize)raw.size());
    if (in.gcount() != (std::streamsize)raw.size())
      throw std::runtime_error("idx: " + path + ": truncated at byte " +
                               std::to_string(16 + i * set.rows * set.cols + in.gcount()));
    Mat img(set.rows, set.cols);
    for (size_t p = 0; p < raw.size(); ++p) img.data[p] = raw[p] / 255.0;
    set.images.push_back(std::move(img));
  }
  return set;
}

std::vector<int> read_idx_labels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("idx: cannot open " + path);
  uint32_t magic = read_be32(in, path, 0);
  if (magic != 0x00000801u)
    throw std::runtime_error("idx: " + path + ": bad label magic at byte 0");
  long count = read_be32(in, path, 4);
  std::vector<unsigned char> raw(count);
  in.read((char*)raw.data(), (std::streamsize)count);
  if (in.gcount() != (std::streamsize)count)
    throw std::runtime_error("idx: " + path + ": truncated at byte " +
                             std::to_string(8 + in.gcount()));
  return std::vector<int>(raw.begin(), raw.end());
}

void write_vector(const std::string& path, const std::vector<double>& values) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (double v : values) out << format_g17(v) << "\n";
}

void write_line_chart_pgm(const std::string& path,
                          const std::vector<std::vector<double>>& series, long width,
                          long height) {
  Mat img(height, width, 1.0);
  double lo = 0.0, hi = 1.0;
  size_t longest = 1;
  bool any = false;
  for (const auto& s : series)
    for (double v : s) {
      if (!std::isfinite(v)) continue;
      if (!any) {
        lo = hi = v;
        any = true;
      }
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  for (const auto& s : series) longest = std::max(longest, s.size());
  if (hi - lo < 1e-12) hi = lo + 1.0;

  const long ml = 8, mr = 8, mt = 8, mb = 8;
  auto px = [&](size_t i) {
    return ml + (long)((double)i / (double)std::max<size_t>(longest - 1, 1) *
                       (double)(width - ml - mr - 1));
  };
  auto py = [&](double v) {
    double t = (v - lo) / (hi - lo);
    return height - 1 - mb - (long)(t * (double)(height - mt - mb - 1));
  };
  auto plot = [&](long x, long y, double shade) {
    if (x >= 0 && x < width && y >= 0 && y < height) img.at(y, x) = shade;
  };
  for (size_t si = 0; si < series.size(); ++si) {
    double shade = 0.7 * (double)si / (double)std::max<size_t>(series.size(), 2);
    const auto& s = series[si];
    for (size_t i = 0; i + 1 < s.size(); ++i) {
      if (!std::isfinite(s[i]) || !std::isfinite(s[i + 1])) continue;
      long x0 = px(i), y0 = py(s[i]), x1 = px(i + 1), y1 = py(s[i + 1]);
      long steps = std::max(std::labs(x1 - x0), std::labs(y1 - y0)) + 1;
      for (long t = 0; t <= steps; ++t) {
        double f = (double)t / (double)steps;
        plot((long)std::lround(x0 + f * (x1 - x0)), (long)std::lround(y0 + f * (y1 - y0)),
             shade);
      }
    }
  }
  write_pgm(path, img);
}

}  // namespace desense
