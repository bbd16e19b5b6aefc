#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "llambo/common.hpp"

namespace llambo {

inline constexpr int kSobolMaxDim = 32;

// Gray-code Sobol sequence with 32 bits of resolution, using the Joe-Kuo
// direction numbers.  The plain constructor yields the unscrambled sequence
// (point 0 is the origin).  The seeded constructor applies a linear matrix
// scramble plus a digital shift per dimension, which breaks the lattice
// alignment while preserving the (t, m, s)-net structure.
class SobolSequence {
 public:
  explicit SobolSequence(int dim);
  SobolSequence(int dim, std::uint64_t seed);

  int dim() const { return dim_; }

  // Advance without emitting (e.g. to skip the origin of the raw sequence).
  void skip(std::uint64_t count);

  // Next point in [0, 1)^dim.
  std::vector<double> next();

 private:
  void init_directions();

  int dim_;
  std::uint64_t index_ = 0;  // how many points have been produced
  std::vector<std::array<std::uint32_t, 32>> dirs_;  // per-dim direction numbers
  std::vector<std::uint32_t> state_;
  std::vector<std::uint32_t> shift_;
};

}  // namespace llambo
