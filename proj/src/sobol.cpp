#include "llambo/sobol.hpp"

#include <bit>

namespace llambo {

namespace {

// Joe-Kuo primitive polynomials and initial direction values for dimensions
// 2..32 (dimension 1 is the van der Corput sequence).  Values match the table
// shipped with scipy's quasi-Monte Carlo engine, which tests cross-check.
struct DimInit {
  std::uint32_t poly;  // full encoding, e.g. x^2 + x + 1 -> 0b111
  std::vector<std::uint32_t> m;
};

const std::vector<DimInit>& joe_kuo_table() {
  static const std::vector<DimInit> table = {
      {3u, {1u}},
      {7u, {1u, 3u}},
      {11u, {1u, 3u, 1u}},
      {13u, {1u, 1u, 1u}},
      {19u, {1u, 1u, 3u, 3u}},
      {25u, {1u, 3u, 5u, 13u}},
      {37u, {1u, 1u, 5u, 5u, 17u}},
      {41u, {1u, 1u, 5u, 5u, 5u}},
      {47u, {1u, 1u, 7u, 11u, 19u}},
      {55u, {1u, 1u, 5u, 1u, 1u}},
      {59u, {1u, 1u, 1u, 3u, 11u}},
      {61u, {1u, 3u, 5u, 5u, 31u}},
      {67u, {1u, 3u, 3u, 9u, 7u, 49u}},
      {91u, {1u, 1u, 1u, 15u, 21u, 21u}},
      {97u, {1u, 3u, 1u, 13u, 27u, 49u}},
      {103u, {1u, 1u, 1u, 15u, 7u, 5u}},
      {109u, {1u, 3u, 1u, 15u, 13u, 25u}},
      {115u, {1u, 1u, 5u, 5u, 19u, 61u}},
      {131u, {1u, 3u, 7u, 11u, 23u, 15u, 103u}},
      {137u, {1u, 3u, 7u, 13u, 13u, 15u, 69u}},
      {143u, {1u, 1u, 3u, 13u, 7u, 35u, 63u}},
      {145u, {1u, 3u, 5u, 9u, 1u, 25u, 53u}},
      {157u, {1u, 3u, 1u, 13u, 9u, 35u, 107u}},
      {167u, {1u, 3u, 1u, 5u, 27u, 61u, 31u}},
      {171u, {1u, 1u, 5u, 11u, 19u, 41u, 61u}},
      {185u, {1u, 3u, 5u, 3u, 3u, 13u, 69u}},
      {191u, {1u, 1u, 7u, 13u, 1u, 19u, 1u}},
      {193u, {1u, 3u, 7u, 5u, 13u, 19u, 59u}},
      {203u, {1u, 1u, 3u, 9u, 25u, 29u, 41u}},
      {211u, {1u, 3u, 5u, 13u, 23u, 1u, 55u}},
      {213u, {1u, 3u, 7u, 3u, 13u, 59u, 17u}},
  };
  return table;
}

}  // namespace

void SobolSequence::init_directions() {
  if (dim_ < 1 || dim_ > kSobolMaxDim)
    throw ValidationError("Sobol sequence supports 1.." + std::to_string(kSobolMaxDim) +
                          " dimensions, got " + std::to_string(dim_));
  dirs_.resize(static_cast<std::size_t>(dim_));

  for (int d = 0; d < dim_; ++d) {
    std::array<std::uint32_t, 32> m{};
    if (d == 0) {
      // Van der Corput: m_k = 1 for all k.
      m.fill(1u);
    } else {
      const DimInit& init = joe_kuo_table()[static_cast<std::size_t>(d - 1)];
      const int s = 32 - std::countl_zero(init.poly) - 1;  // polynomial degree
      for (int k = 0; k < s; ++k) m[static_cast<std::size_t>(k)] = init.m[static_cast<std::size_t>(k)];
      for (int k = s; k < 32; ++k) {
        // m_k = 2^s m_{k-s} ^ m_{k-s} ^ sum_t a_t 2^t m_{k-t}
        std::uint32_t value = m[static_cast<std::size_t>(k - s)] ^
                              (m[static_cast<std::size_t>(k - s)] << s);
        for (int t = 1; t < s; ++t) {
          const std::uint32_t a_t = (init.poly >> (s - t)) & 1u;
          if (a_t) value ^= m[static_cast<std::size_t>(k - t)] << t;
        }
        m[static_cast<std::size_t>(k)] = value;
      }
    }
    for (int k = 0; k < 32; ++k)
      dirs_[static_cast<std::size_t>(d)][static_cast<std::size_t>(k)] =
          m[static_cast<std::size_t>(k)] << (31 - k);
  }
}

SobolSequence::SobolSequence(int dim) : dim_(dim) {
  init_directions();
  state_.assign(static_cast<std::size_t>(dim_), 0u);
  shift_.assign(static_cast<std::size_t>(dim_), 0u);
}

SobolSequence::SobolSequence(int dim, std::uint64_t seed) : dim_(dim) {
  init_directions();
  // Owen-style randomization, cheap variant: a random lower-triangular bit
  // matrix (unit diagonal) applied to every direction number, then a random
  // digital shift.  Keeps the net structure; decollapses the dyadic lattice.
  Rng rng(mix_seed(seed, 0x5c7a3bULL));
  shift_.resize(static_cast<std::size_t>(dim_));
  for (int d = 0; d < dim_; ++d) {
    std::array<std::uint32_t, 32> rows;
    for (int r = 0; r < 32; ++r) {
      const std::uint32_t random_bits =
          r == 0 ? 0u
                 : static_cast<std::uint32_t>(rng.next_u64() >> 32) & (0xffffffffu << (32 - r));
      rows[static_cast<std::size_t>(r)] = random_bits | (1u << (31 - r));
    }
    for (auto& v : dirs_[static_cast<std::size_t>(d)]) {
      std::uint32_t scrambled = 0;
      for (int r = 0; r < 32; ++r)
        scrambled |= static_cast<std::uint32_t>(std::popcount(rows[static_cast<std::size_t>(r)] & v) & 1)
                     << (31 - r);
      v = scrambled;
    }
    shift_[static_cast<std::size_t>(d)] = static_cast<std::uint32_t>(rng.next_u64() >> 32);
  }
  state_ = shift_;
}

void SobolSequence::skip(std::uint64_t count) {
  for (std::uint64_t i = 0; i < count; ++i) {
    const int c = std::countr_one(index_);
    if (c >= 32) throw ValidationError("Sobol sequence exhausted (2^32 points)");
    for (int d = 0; d < dim_; ++d)
      state_[static_cast<std::size_t>(d)] ^= dirs_[static_cast<std::size_t>(d)][static_cast<std::size_t>(c)];
    ++index_;
  }
}

std::vector<double> SobolSequence::next() {
  std::vector<double> point(static_cast<std::size_t>(dim_));
  for (int d = 0; d < dim_; ++d)
    point[static_cast<std::size_t>(d)] =
        static_cast<double>(state_[static_cast<std::size_t>(d)]) * 0x1.0p-32;
  skip(1);
  return point;
}

}  // namespace llambo
