#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "desense/haar.hpp"
#include "desense/io.hpp"
#include "desense/rng.hpp"

using namespace desense;

namespace {

Mat random_image(long rows, long cols, uint64_t seed) {
  Mat img(rows, cols);
  Rng rng(seed);
  for (auto& v : img.data) v = rng.uniform();
  return img;
}

double sum_sq(const Mat& m) {
  double s = 0.0;
  for (double v : m.data) s += v * v;
  return s;
}

std::string tmp_path(const std::string& name) { return "/tmp/desense_unit_" + name; }

void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), long(bytes.size()));
}

void push_be32(std::string* s, uint32_t v) {
  s->push_back(char((v >> 24) & 0xff));
  s->push_back(char((v >> 16) & 0xff));
  s->push_back(char((v >> 8) & 0xff));
  s->push_back(char(v & 0xff));
}

}  // namespace

TEST_CASE("haar blocks pick out their oriented patterns") {
  Mat img(2, 2);
  img.at(0, 0) = 1.0;
  img.at(0, 1) = -1.0;
  img.at(1, 0) = 1.0;
  img.at(1, 1) = -1.0;
  auto coeffs = haar2d_forward(img, 1);
  CHECK(coeffs.approx.at(0, 0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(coeffs.details[0].horizontal.at(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(coeffs.details[0].vertical.at(0, 0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(coeffs.details[0].diagonal.at(0, 0) == doctest::Approx(0.0).epsilon(1e-15));

  Mat flat(2, 2, 0.75);
  auto fc = haar2d_forward(flat, 1);
  CHECK(fc.approx.at(0, 0) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(fc.details[0].horizontal.at(0, 0) == 0.0);
  CHECK(fc.details[0].vertical.at(0, 0) == 0.0);
  CHECK(fc.details[0].diagonal.at(0, 0) == 0.0);
}

TEST_CASE("haar transform round-trips and preserves energy") {
  auto img = random_image(64, 64, 77);
  auto coeffs = haar2d_forward(img, 3);
  CHECK(coeffs.levels == 3);
  CHECK(coeffs.approx.rows == 8);

  auto back = haar2d_inverse(coeffs);
  double max_err = 0.0;
  for (size_t i = 0; i < img.data.size(); ++i)
    max_err = std::max(max_err, std::fabs(img.data[i] - back.data[i]));
  CHECK(max_err < 1e-12);

  double energy = sum_sq(coeffs.approx);
  for (const auto& d : coeffs.details)
    energy += sum_sq(d.horizontal) + sum_sq(d.vertical) + sum_sq(d.diagonal);
  CHECK(energy == doctest::Approx(sum_sq(img)).epsilon(1e-10));
}

TEST_CASE("haar rejects sizes that do not halve") {
  auto img = random_image(6, 6, 1);
  CHECK_NOTHROW(haar2d_forward(img, 1));
  CHECK_THROWS_AS(haar2d_forward(img, 2), std::invalid_argument);  // 3x3 cannot halve
  CHECK_THROWS_AS(haar2d_forward(random_image(5, 4, 1), 1), std::invalid_argument);
  CHECK_THROWS_AS(haar2d_forward(img, 0), std::invalid_argument);
}

TEST_CASE("partition layout puts the approximation first") {
  auto img = random_image(28, 28, 9);
  auto coeffs = haar2d_forward(img, 1);
  auto part = partition_coefficients(coeffs);
  CHECK(part.n_H == 196);
  CHECK(part.n_L == 588);
  REQUIRE(part.signal.size() == 784);
  REQUIRE(part.labels.size() == 784);
  for (long i = 0; i < 196; ++i) CHECK(part.labels[i] == 'H');
  for (long i = 196; i < 784; ++i) CHECK(part.labels[i] == 'L');
  // Approximation block is stored row-major at the front, then the level's
  // horizontal block.
  CHECK(part.signal[0] == coeffs.approx.at(0, 0));
  CHECK(part.signal[14] == coeffs.approx.at(1, 0));
  CHECK(part.signal[196] == coeffs.details[0].horizontal.at(0, 0));

  auto two = partition_coefficients(haar2d_forward(img, 2));
  CHECK(two.n_H == 49);
  CHECK(two.n_L == 735);
}

TEST_CASE("unpartition inverts the flattening") {
  auto img = random_image(16, 16, 4);
  auto coeffs = haar2d_forward(img, 2);
  auto part = partition_coefficients(coeffs);
  auto back = unpartition_coefficients(part.signal, 16, 16, 2);
  auto restored = haar2d_inverse(back);
  double max_err = 0.0;
  for (size_t i = 0; i < img.data.size(); ++i)
    max_err = std::max(max_err, std::fabs(img.data[i] - restored.data[i]));
  CHECK(max_err < 1e-12);

  CHECK_THROWS_AS(unpartition_coefficients(std::vector<double>(7), 16, 16, 2),
                  std::invalid_argument);
}

TEST_CASE("config text parses sections, comments and types") {
  auto cfg = Config::parse_text(
      "# leading comment\n"
      "top = 3\n"
      "[design]\n"
      "n = 1000   # trailing comment\n"
      "rate = 0.15\n"
      "label = spike\n"
      "flag = true\n"
      "snrs = 1, 10, inf\n",
      "test.cfg");
  CHECK(cfg.get_long("top") == 3);
  CHECK(cfg.get_long("design.n") == 1000);
  CHECK(cfg.get_double("design.rate") == 0.15);
  CHECK(cfg.get_string("design.label") == "spike");
  CHECK(cfg.get_bool("design.flag", false));
  auto snrs = cfg.get_double_list("design.snrs");
  REQUIRE(snrs.size() == 3);
  CHECK(snrs[0] == 1.0);
  CHECK(snrs[1] == 10.0);
  CHECK(std::isinf(snrs[2]));

  CHECK(cfg.has("design.n"));
  CHECK_FALSE(cfg.has("design.missing"));
  CHECK(cfg.get_long("design.missing", 7) == 7);
  CHECK(cfg.get_string("design.missing", "d") == "d");
}

TEST_CASE("config errors name the origin and key") {
  auto cfg = Config::parse_text("n = ten\n", "bad.cfg");
  try {
    cfg.get_long("n");
    FAIL("expected a throw");
  } catch (const std::runtime_error& e) {
    std::string msg = e.what();
    CHECK(msg.find("bad.cfg") != std::string::npos);
    CHECK(msg.find("'n'") != std::string::npos);
  }
  CHECK_THROWS_AS(cfg.get_string("absent"), std::runtime_error);
  CHECK_THROWS_AS(Config::parse_text("novalue\n", "x"), std::runtime_error);
  CHECK_THROWS_AS(Config::parse_text("[unclosed\nk=v\n", "x"), std::runtime_error);
  CHECK_THROWS_AS(Config::parse_file("/nonexistent/path.cfg"), std::runtime_error);
}

TEST_CASE("config hash depends on content, not construction order") {
  auto a = Config::parse_text("x = 1\ny = 2\n");
  auto b = Config::parse_text("y = 2\nx = 1\n");
  CHECK(a.hash() == b.hash());
  auto c = Config::parse_text("x = 1\ny = 3\n");
  CHECK(a.hash() != c.hash());

  Config d = a;
  d.set("x", "1");
  CHECK(d.hash() == a.hash());
  d.set("z", "0");
  CHECK(d.hash() != a.hash());
}

TEST_CASE("real parsing accepts inf and rejects junk") {
  CHECK(parse_real("0.5") == 0.5);
  CHECK(std::isinf(parse_real("inf")));
  CHECK(parse_real("-3e2") == -300.0);
  CHECK_THROWS_AS(parse_real("abc"), std::invalid_argument);
  CHECK_THROWS_AS(parse_real("1.5x"), std::invalid_argument);
  CHECK(format_g17(0.1) == "0.10000000000000001");
  CHECK(parse_real(format_g17(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("csv writer emits the hash comment, header and g17 rows") {
  std::ostringstream os;
  CsvWriter w(os, {"iteration", "E"}, 0xabcdefULL, 42);
  w.row({1.0, 0.25});
  w.row_mixed({"2", "done"});
  std::string text = os.str();
  CHECK(text ==
        "# config_hash=0000000000abcdef seed=42\n"
        "iteration,E\n"
        "1,0.25\n"
        "2,done\n");
  CHECK_THROWS_AS(w.row({1.0}), std::invalid_argument);
  CHECK_THROWS_AS(w.row_mixed({"a", "b", "c"}), std::invalid_argument);
}

TEST_CASE("pgm round trip quantizes to 8 bits") {
  Mat img(3, 5);
  for (size_t i = 0; i < img.data.size(); ++i) img.data[i] = double(i) / 14.0;
  img.data[3] = 1.7;   // clamps to 1
  img.data[4] = -0.3;  // clamps to 0
  auto path = tmp_path("roundtrip.pgm");
  write_pgm(path, img);
  auto back = read_pgm(path);
  REQUIRE(back.rows == 3);
  REQUIRE(back.cols == 5);
  for (size_t i = 0; i < img.data.size(); ++i) {
    double expect = std::min(1.0, std::max(0.0, img.data[i]));
    CHECK(std::fabs(back.data[i] - expect) <= 0.5 / 255.0 + 1e-12);
  }
  std::remove(path.c_str());
}

TEST_CASE("pgm reader rejects other formats and truncation") {
  auto path = tmp_path("bad.pgm");
  write_bytes(path, "P2\n2 2\n255\n0 0 0 0\n");
  CHECK_THROWS_AS(read_pgm(path), std::runtime_error);
  write_bytes(path, "P5\n4 4\n255\nxy");  // 2 bytes instead of 16
  CHECK_THROWS_AS(read_pgm(path), std::runtime_error);
  CHECK_THROWS_AS(read_pgm("/nonexistent.pgm"), std::runtime_error);
  std::remove(path.c_str());
}

TEST_CASE("idx image and label files round trip") {
  std::string img_bytes;
  push_be32(&img_bytes, 0x00000803);
  push_be32(&img_bytes, 2);  // two images
  push_be32(&img_bytes, 2);  // rows
  push_be32(&img_bytes, 3);  // cols
  for (int i = 0; i < 12; ++i) img_bytes.push_back(char(i * 20));
  auto img_path = tmp_path("images.idx");
  write_bytes(img_path, img_bytes);
  auto set = read_idx_images(img_path);
  CHECK(set.count == 2);
  CHECK(set.rows == 2);
  CHECK(set.cols == 3);
  REQUIRE(set.images.size() == 2);
  CHECK(set.images[0].at(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(set.images[0].at(0, 1) == doctest::Approx(20.0 / 255.0).epsilon(1e-12));
  CHECK(set.images[1].at(1, 2) == doctest::Approx(220.0 / 255.0).epsilon(1e-12));

  std::string lab_bytes;
  push_be32(&lab_bytes, 0x00000801);
  push_be32(&lab_bytes, 3);
  lab_bytes.push_back(char(7));
  lab_bytes.push_back(char(0));
  lab_bytes.push_back(char(9));
  auto lab_path = tmp_path("labels.idx");
  write_bytes(lab_path, lab_bytes);
  auto labels = read_idx_labels(lab_path);
  REQUIRE(labels.size() == 3);
  CHECK(labels[0] == 7);
  CHECK(labels[1] == 0);
  CHECK(labels[2] == 9);
  std::remove(img_path.c_str());
  std::remove(lab_path.c_str());
}

TEST_CASE("idx errors name the byte offset") {
  std::string bad;
  push_be32(&bad, 0x00000803);
  push_be32(&bad, 5);
  push_be32(&bad, 2);
  push_be32(&bad, 2);
  bad += "xx";  // far too short for 5 2x2 images
  auto path = tmp_path("trunc.idx");
  write_bytes(path, bad);
  try {
    read_idx_images(path);
    FAIL("expected a throw");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("byte") != std::string::npos);
  }

  std::string wrong_magic;
  push_be32(&wrong_magic, 0x00000801);
  write_bytes(path, wrong_magic);
  CHECK_THROWS_AS(read_idx_images(path), std::runtime_error);
  CHECK_THROWS_AS(read_idx_labels("/nonexistent.idx"), std::runtime_error);
  std::remove(path.c_str());
}

TEST_CASE("vector export writes one g17 value per line") {
  auto path = tmp_path("vector.txt");
  write_vector(path, {1.0, 0.5, 1.0 / 3.0});
  std::ifstream in(path);
  std::string l1, l2, l3;
  std::getline(in, l1);
  std::getline(in, l2);
  std::getline(in, l3);
  CHECK(l1 == "1");
  CHECK(l2 == "0.5");
  CHECK(l3 == format_g17(1.0 / 3.0));
  std::remove(path.c_str());
}

TEST_CASE("line chart renders a readable pgm") {
  auto path = tmp_path("chart.pgm");
  write_line_chart_pgm(path, {{0.0, 1.0, 0.5, 0.25}, {1.0, 0.5, 0.0, 0.75}}, 320, 240);
  auto img = read_pgm(path);
  CHECK(img.rows == 240);
  CHECK(img.cols == 320);
  double mn = 2.0, mx = -1.0;
  for (double v : img.data) {
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  CHECK(mn < 0.9);  // some drawn pixels
  CHECK(mx == 1.0);  // white background
  std::remove(path.c_str());
}
