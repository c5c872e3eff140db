#include "sdae/paths.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>

namespace sdae {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
constexpr char kMagic[8] = {'S', 'D', 'A', 'E', 'B', 'M', '0', '1'};

double unit_open(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

std::array<double, 2> normal_pair(std::uint64_t seed, std::uint64_t stream, std::uint64_t block) {
  const PhiloxCounter ctr{static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
                          static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  const PhiloxKey key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  const PhiloxCounter w = philox4x32_10(ctr, key);
  const double u1 = unit_open(w[0], w[1]);
  const double u2 = unit_open(w[2], w[3]);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(phi), r * std::sin(phi)};
}

std::size_t grid_count(double horizon, int level) {
  if (level < 0 || level > 40) throw std::invalid_argument("level must lie in [0, 40]");
  const double k = std::ldexp(horizon, level);
  if (!(horizon > 0.0) || k != std::floor(k) || k < 1.0) {
    throw std::invalid_argument("horizon * 2^level must be a positive integer");
  }
  return static_cast<std::size_t>(k);
}

template <typename T>
void put_le(std::ostream& os, T v) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  os.write(buf, sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  char buf[sizeof(T)];
  if (!is.read(buf, sizeof(T))) throw std::runtime_error("truncated lattice file");
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) {
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

double standard_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return normal_pair(seed, stream, index / 2)[index % 2];
}

double BrownianLattice::delta() const { return std::ldexp(1.0, -finest_level); }

BrownianLattice generate(std::uint64_t seed, std::size_t m, int finest_level, double horizon, std::uint64_t stream) {
  if (m == 0) throw std::invalid_argument("generate: m must be positive");
  const std::size_t count = grid_count(horizon, finest_level);
  BrownianLattice lat;
  lat.seed = seed;
  lat.stream = stream;
  lat.m = m;
  lat.finest_level = finest_level;
  lat.horizon = horizon;
  lat.increments.assign(count, Vector(m));

  const double scale = std::sqrt(lat.delta());
  const std::uint64_t total = static_cast<std::uint64_t>(count) * m;
  std::array<double, 2> pair{};
  for (std::uint64_t n = 0; n < total; ++n) {
    if (n % 2 == 0) pair = normal_pair(seed, stream, n / 2);
    lat.increments[n / m][n % m] = scale * pair[n % 2];
  }
  return lat;
}

std::vector<Vector> pairwise_sum(const std::vector<Vector>& in) {
  if (in.size() % 2 != 0) throw std::invalid_argument("pairwise_sum: odd increment count");
  std::vector<Vector> out(in.size() / 2);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const Vector& a = in[2 * k];
    const Vector& b = in[2 * k + 1];
    out[k].resize(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) out[k][j] = a[j] + b[j];
  }
  return out;
}

std::vector<Vector> coarsen(const BrownianLattice& lattice, int level) {
  if (level < 0 || level > lattice.finest_level) {
    throw std::invalid_argument("coarsen: level must lie in [0, " + std::to_string(lattice.finest_level) + "]");
  }
  grid_count(lattice.horizon, level);
  std::vector<Vector> out = lattice.increments;
  for (int l = lattice.finest_level; l > level; --l) out = pairwise_sum(out);
  return out;
}

std::vector<Vector> zero_increments(std::size_t count, std::size_t m) { return std::vector<Vector>(count, Vector(m)); }

void write_lattice_binary(std::ostream& os, const BrownianLattice& lattice) {
  os.write(kMagic, sizeof kMagic);
  put_le<std::uint64_t>(os, lattice.m);
  put_le<std::int64_t>(os, lattice.finest_level);
  put_le<std::uint64_t>(os, lattice.count());
  for (const Vector& inc : lattice.increments) {
    for (double v : inc) put_le<double>(os, v);
  }
}

BrownianLattice read_lattice_binary(std::istream& is) {
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw std::runtime_error("not a lattice file (bad magic)");
  }
  BrownianLattice lat;
  lat.m = get_le<std::uint64_t>(is);
  lat.finest_level = static_cast<int>(get_le<std::int64_t>(is));
  const auto count = get_le<std::uint64_t>(is);
  lat.horizon = std::ldexp(static_cast<double>(count), -lat.finest_level);
  lat.increments.assign(count, Vector(lat.m));
  for (auto& inc : lat.increments) {
    for (double& v : inc) v = get_le<double>(is);
  }
  return lat;
}

}  // namespace sdae
