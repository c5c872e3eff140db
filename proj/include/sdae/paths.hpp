#pragma once

// Brownian increments on dyadic grids from a counter-based generator.
//
// Normal number n of stream s under seed k is one half of a Box-Muller pair
// built from Philox4x32-10 applied to the counter (n/2 lo, n/2 hi, s lo, s hi)
// with key (k lo, k hi). Output words (w0, w1) and (w2, w3) form two 64-bit
// integers; the top 53 bits of each give u = (bits + 1/2) 2^-53 in (0, 1).
// Normal n of a lattice with m components belongs to step n / m.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "sdae/linalg.hpp"

namespace sdae {

inline constexpr std::string_view kGeneratorId = "philox4x32-10/box-muller/v1";

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key);

/// Standard normal number `index` of (seed, stream).
double standard_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

struct BrownianLattice {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::size_t m = 0;
  int finest_level = 0;  // fine step 2^-finest_level
  double horizon = 0.0;
  std::vector<Vector> increments;  // count() entries of length m

  std::size_t count() const { return increments.size(); }
  double delta() const;
};

/// Fine increments ~ N(0, 2^-finest_level). Requires horizon * 2^finest_level
/// to be a positive integer; throws std::invalid_argument otherwise.
BrownianLattice generate(std::uint64_t seed, std::size_t m, int finest_level, double horizon,
                         std::uint64_t stream = 0);

/// Increments at step 2^-level. Each coarse increment is the sum of its
/// 2^(finest_level - level) children taken as a balanced binary tree, so
/// coarsening level by level and coarsening directly agree bitwise.
std::vector<Vector> coarsen(const BrownianLattice& lattice, int level);

/// Adds neighbouring pairs: out[k] = in[2k] + in[2k+1]. Requires an even count.
std::vector<Vector> pairwise_sum(const std::vector<Vector>& increments);

/// All-zero increments with the shape of coarsen(lattice, level).
std::vector<Vector> zero_increments(std::size_t count, std::size_t m);

/// 32-byte header (magic "SDAEBM01", u64 m, i64 finest_level, u64 count),
/// then count * m little-endian doubles in step-major order.
void write_lattice_binary(std::ostream& os, const BrownianLattice& lattice);

/// Inverse of write_lattice_binary. Seed and stream are not stored and read
/// back as 0; the horizon is count * 2^-finest_level.
BrownianLattice read_lattice_binary(std::istream& is);

}  // namespace sdae
