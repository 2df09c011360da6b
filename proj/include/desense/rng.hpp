#pragma once
#include <cstdint>
#include <cmath>
#include <vector>

namespace desense {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based generator: draw t of stream s under seed is a pure function
// of (seed, s, t). Trials get independent streams regardless of how many
// draws other trials consume, so sweeps are reproducible under any execution
// order (serial or concurrent).
class Rng {
public:
  explicit Rng(uint64_t seed, uint64_t stream = 0)
      : key_(splitmix64(splitmix64(seed) + 0x9e3779b97f4a7c15ULL * stream)) {}

  uint64_t u64() { return splitmix64(key_ + 0x9e3779b97f4a7c15ULL * ++ctr_); }

  // uniform on [0,1)
  double uniform() { return double(u64() >> 11) * 0x1.0p-53; }

  // uniform on (0,1), never exactly 0 (safe under log)
  double uniform_pos() { return (double(u64() >> 11) + 0.5) * 0x1.0p-53; }

  double gauss() {
    double u1 = uniform_pos();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  // uniform integer in [0, n), n >= 1 (Lemire multiply-shift)
  uint64_t below(uint64_t n) {
    return uint64_t((static_cast<__uint128_t>(u64()) * n) >> 64);
  }

  int sign() { return (u64() & 1) ? 1 : -1; }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = size_t(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

private:
  uint64_t key_;
  uint64_t ctr_ = 0;
};

}  // namespace desense
