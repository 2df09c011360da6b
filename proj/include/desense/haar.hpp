#pragma once
#include <vector>

namespace desense {

// Dense row-major real matrix, small and purpose-built for the transforms.
struct Mat {
  long rows = 0, cols = 0;
  std::vector<double> data;

  Mat() = default;
  Mat(long r, long c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  double& at(long r, long c) { return data[r * cols + c]; }
  double at(long r, long c) const { return data[r * cols + c]; }
};

struct DetailBlocks {
  Mat horizontal, vertical, diagonal;
};

// Orthonormal separable Haar decomposition. details[0] is the finest level
// (blocks of size rows/2 x cols/2); approx sits at the coarsest level.
struct HaarCoefficients {
  long rows = 0, cols = 0;
  int levels = 0;
  Mat approx;
  std::vector<DetailBlocks> details;
};

HaarCoefficients haar2d_forward(const Mat& image, int levels);
Mat haar2d_inverse(const HaarCoefficients& coeffs);

// Coefficients flattened row-major, approximation block first (labelled H),
// then per level coarsest-to-finest the horizontal, vertical and diagonal
// blocks (labelled L).
struct PartitionedSignal {
  std::vector<double> signal;
  std::vector<char> labels;  // 'H' or 'L'
  long n_H = 0, n_L = 0;
};

PartitionedSignal partition_coefficients(const HaarCoefficients& coeffs);

// Inverse mapping of partition_coefficients for a signal laid out by it.
HaarCoefficients unpartition_coefficients(const std::vector<double>& signal, long rows, long cols,
                                          int levels);

}  // namespace desense
