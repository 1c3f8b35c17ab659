#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "spikelda/common.hpp"

namespace spikelda {

// Counter-based splittable generator (splitmix64 output function).
//
// A stream is identified by a 64-bit key; child streams derive fresh keys by
// mixing a salt, so replicate r / fold f / purpose q streams can be addressed
// as rng.child(r).child(q) independent of evaluation order. All distributions
// are implemented on top of the raw 64-bit output, so a (seed, salts...)
// address yields the same values regardless of platform libstdc++ details.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : state_(key) {}

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Key derivation for sub-streams; stable under reordering of draws.
  static std::uint64_t derive(std::uint64_t key, std::uint64_t salt) {
    return mix(key + 0x9E3779B97F4A7C15ull * (salt + 1) + 0xD1B54A32D192ED03ull);
  }

  Rng child(std::uint64_t salt) const { return Rng(derive(state_, salt)); }

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    return mix(z);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // Box-Muller; the second value of each pair is cached within the stream.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log1p(-u1));  // 1-u1 in (0,1], no log(0)
    double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  // Student t with `dof` degrees of freedom: z / sqrt(chi2/dof).
  double student_t(int dof) {
    double z = normal();
    double w = 0.0;
    for (int i = 0; i < dof; ++i) {
      double g = normal();
      w += g * g;
    }
    return z / std::sqrt(w / static_cast<double>(dof));
  }

  // Integer in [0, n) without modulo bias (Lemire reduction, fixed draws).
  std::uint64_t bounded(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(bounded(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  Matrix normal_matrix(Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) m(i, j) = normal();
    return m;
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace spikelda
