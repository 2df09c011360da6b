#include "desense/haar.hpp"

#include <stdexcept>
#include <string>

namespace desense {

namespace {

void check_dyadic(long rows, long cols, int levels) {
  if (levels < 1) throw std::invalid_argument("haar: levels must be >= 1");
  if (rows <= 0 || cols <= 0) throw std::invalid_argument("haar: empty image");
  long div = 1L << levels;
  if (rows % div != 0 || cols % div != 0)
    throw std::invalid_argument("haar: dimensions " + std::to_string(rows) + "x" +
                                std::to_string(cols) + " not divisible by 2^" +
                                std::to_string(levels));
}

// One orthonormal analysis level: 2x2 blocks map to
//   a = (p00+p01+p10+p11)/2   h = (p00-p01+p10-p11)/2
//   v = (p00+p01-p10-p11)/2   d = (p00-p01-p10+p11)/2
// so the horizontal detail responds to horizontal differencing.
void analyze_level(const Mat& in, Mat* a, DetailBlocks* det) {
  long hr = in.rows / 2, hc = in.cols / 2;
  *a = Mat(hr, hc);
  det->horizontal = Mat(hr, hc);
  det->vertical = Mat(hr, hc);
  det->diagonal = Mat(hr, hc);
  for (long r = 0; r < hr; ++r) {
    for (long c = 0; c < hc; ++c) {
      double p00 = in.at(2 * r, 2 * c), p01 = in.at(2 * r, 2 * c + 1);
      double p10 = in.at(2 * r + 1, 2 * c), p11 = in.at(2 * r + 1, 2 * c + 1);
      a->at(r, c) = 0.5 * (p00 + p01 + p10 + p11);
      det->horizontal.at(r, c) = 0.5 * (p00 - p01 + p10 - p11);
      det->vertical.at(r, c) = 0.5 * (p00 + p01 - p10 - p11);
      det->diagonal.at(r, c) = 0.5 * (p00 - p01 - p10 + p11);
    }
  }
}

Mat synthesize_level(const Mat& a, const DetailBlocks& det) {
  if (det.horizontal.rows != a.rows || det.horizontal.cols != a.cols ||
      det.vertical.rows != a.rows || det.vertical.cols != a.cols ||
      det.diagonal.rows != a.rows || det.diagonal.cols != a.cols)
    throw std::invalid_argument("haar: inconsistent block shapes");
  Mat out(a.rows * 2, a.cols * 2);
  for (long r = 0; r < a.rows; ++r) {
    for (long c = 0; c < a.cols; ++c) {
      double av = a.at(r, c), h = det.horizontal.at(r, c);
      double v = det.vertical.at(r, c), d = det.diagonal.at(r, c);
      out.at(2 * r, 2 * c) = 0.5 * (av + h + v + d);
      out.at(2 * r, 2 * c + 1) = 0.5 * (av - h + v - d);
      out.at(2 * r + 1, 2 * c) = 0.5 * (av + h - v - d);
      out.at(2 * r + 1, 2 * c + 1) = 0.5 * (av - h - v + d);
    }
  }
  return out;
}

}  // namespace

HaarCoefficients haar2d_forward(const Mat& image, int levels) {
  check_dyadic(image.rows, image.cols, levels);
  HaarCoefficients out;
  out.rows = image.rows;
  out.cols = image.cols;
  out.levels = levels;
  out.details.resize(levels);
  Mat current = image;
  for (int l = 0; l < levels; ++l) {
    Mat next;
    analyze_level(current, &next, &out.details[l]);
    current = std::move(next);
  }
  out.approx = std::move(current);
  return out;
}

Mat haar2d_inverse(const HaarCoefficients& coeffs) {
  check_dyadic(coeffs.rows, coeffs.cols, coeffs.levels);
  if ((int)coeffs.details.size() != coeffs.levels)
    throw std::invalid_argument("haar: level count does not match detail blocks");
  Mat current = coeffs.approx;
  for (int l = coeffs.levels - 1; l >= 0; --l)
    current = synthesize_level(current, coeffs.details[l]);
  if (current.rows != coeffs.rows || current.cols != coeffs.cols)
    throw std::invalid_argument("haar: inconsistent block shapes");
  return current;
}

namespace {

void append_block(const Mat& block, char label, PartitionedSignal* out) {
  for (double x : block.data) {
    out->signal.push_back(x);
    out->labels.push_back(label);
  }
}

}  // namespace

PartitionedSignal partition_coefficients(const HaarCoefficients& coeffs) {
  PartitionedSignal out;
  append_block(coeffs.approx, 'H', &out);
  out.n_H = (long)out.signal.size();
  for (int l = coeffs.levels - 1; l >= 0; --l) {
    append_block(coeffs.details[l].horizontal, 'L', &out);
    append_block(coeffs.details[l].vertical, 'L', &out);
    append_block(coeffs.details[l].diagonal, 'L', &out);
  }
  out.n_L = (long)out.signal.size() - out.n_H;
  return out;
}

HaarCoefficients unpartition_coefficients(const std::vector<double>& signal, long rows, long cols,
                                          int levels) {
  check_dyadic(rows, cols, levels);
  HaarCoefficients out;
  out.rows = rows;
  out.cols = cols;
  out.levels = levels;
  out.details.resize(levels);
  long cr = rows >> levels, cc = cols >> levels;
  size_t pos = 0;
  auto take = [&](long r, long c) {
    Mat m(r, c);
    if (pos + m.data.size() > signal.size())
      throw std::invalid_argument("haar: signal shorter than the coefficient layout");
    for (double& x : m.data) x = signal[pos++];
    return m;
  };
  out.approx = take(cr, cc);
  for (int l = levels - 1; l >= 0; --l) {
    long dr = rows >> (l + 1), dc = cols >> (l + 1);
    out.details[l].horizontal = take(dr, dc);
    out.details[l].vertical = take(dr, dc);
    out.details[l].diagonal = take(dr, dc);
  }
  if (pos != signal.size())
    throw std::invalid_argument("haar: signal longer than the coefficient layout");
  return out;
}

}  // namespace desense
