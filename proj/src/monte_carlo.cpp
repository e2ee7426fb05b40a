#include <cmath>
#include <cstring>
#include <numbers>

#include "rieszstab/energy.hpp"
#include "rieszstab/errors.hpp"

namespace rieszstab {

namespace {

constexpr double kPi = std::numbers::pi;

std::uint64_t splitmix(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Independent stream per (seed, sample index).
class SampleStream {
 public:
  SampleStream(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t s = seed;
    state_ = splitmix(s) ^ (index * 0xD1B54A32D192ED03ULL);
    splitmix(state_);
  }
  double uniform() { return static_cast<double>(splitmix(state_) >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

std::uint64_t hash_point(const Point& x) {
  std::uint64_t h = 0x2545F4914F6CDD1DULL;
  for (double v : x) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    h ^= bits;
    h = splitmix(h);
  }
  return h;
}

}  // namespace

SampledShape shape_of(const GraphSet& e) {
  SampledShape s;
  s.dim = e.dim();
  s.volume = graph_volume(e);
  const double reach = 1.0 + e.max_abs_u();
  for (int d = 0; d < s.dim; ++d) {
    s.lo[d] = e.center()[d] - reach;
    s.hi[d] = e.center()[d] + reach;
  }
  s.contains = [e](const Point& y) {
    const Point d = y - e.center();
    const double t = norm(d);
    if (t == 0.0) return true;
    const std::size_t j = e.grid().locate(d);
    const auto& at = e.cells_at(j);
    if (at.size() == 1) return t <= 1.0 + e.cells()[at[0]].u;
    // Split patches: pick a sub-cell with probability proportional to its weight.
    double pick = static_cast<double>(hash_point(y) >> 11) * 0x1.0p-53 * e.grid().weight(j);
    for (std::size_t c : at) {
      pick -= e.cells()[c].weight;
      if (pick < 0.0) return t <= 1.0 + e.cells()[c].u;
    }
    return t <= 1.0 + e.cells()[at.back()].u;
  };
  return s;
}

SampledShape shape_of(const VoxelSet& v) {
  SampledShape s;
  const Lattice lat = v.lattice();
  s.dim = lat.dim;
  s.volume = v.measure();
  for (int d = 0; d < s.dim; ++d) {
    s.lo[d] = lat.origin[d];
    s.hi[d] = lat.origin[d] + lat.dims[d] * lat.h;
  }
  s.contains = [v, lat](const Point& y) {
    int idx[3] = {0, 0, 0};
    for (int d = 0; d < lat.dim; ++d) {
      idx[d] = static_cast<int>(std::floor((y[d] - lat.origin[d]) / lat.h));
      if (idx[d] < 0 || idx[d] >= lat.dims[d]) return false;
    }
    return v.occupied(lat.index(idx[0], idx[1], idx[2]));
  };
  return s;
}

SampledShape ball_shape(int dim, const Point& c, double r) {
  SampledShape s;
  s.dim = dim;
  s.volume = unit_ball_volume(dim) * std::pow(r, dim);
  for (int d = 0; d < dim; ++d) {
    s.lo[d] = c[d] - r;
    s.hi[d] = c[d] + r;
  }
  s.contains = [c, r](const Point& y) { return distance(y, c) <= r; };
  return s;
}

EnergyEstimate mc_energy(const SampledShape& s, const KernelParams& p, std::uint64_t seed, std::uint64_t n_samples) {
  if (n_samples < 10000) throw PreconditionError("Monte Carlo energy needs at least 1e4 samples");
  if (s.dim != p.dim()) throw PreconditionError("shape and kernel dimensions differ");
  if (!(s.volume > 0.0) || !s.contains) throw DomainError("degenerate set for Monte Carlo");
  const int n = s.dim;
  const double a = p.alpha();
  double diag2 = 0.0;
  for (int d = 0; d < n; ++d) diag2 += (s.hi[d] - s.lo[d]) * (s.hi[d] - s.lo[d]);
  const double rmax = std::sqrt(diag2);
  std::uint64_t hits = 0;
  for (std::uint64_t i = 0; i < n_samples; ++i) {
    SampleStream rng(seed, i);
    Point x{};
    int tries = 0;
    for (;;) {
      for (int d = 0; d < n; ++d) x[d] = s.lo[d] + (s.hi[d] - s.lo[d]) * rng.uniform();
      if (s.contains(x)) break;
      if (++tries > 100000) throw DomainError("degenerate set for Monte Carlo: rejection sampling failed");
    }
    // Offset length with density proportional to R^(alpha-1) on [0, rmax].
    const double len = rmax * std::pow(rng.uniform(), 1.0 / a);
    Point w{};
    if (n == 2) {
      const double th = 2.0 * kPi * rng.uniform();
      w = {std::cos(th), std::sin(th), 0.0};
    } else {
      const double z = 2.0 * rng.uniform() - 1.0;
      const double ph = 2.0 * kPi * rng.uniform();
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      w = {rho * std::cos(ph), rho * std::sin(ph), z};
    }
    if (s.contains(x + len * w)) ++hits;
  }
  const double nn = static_cast<double>(n_samples);
  const double phat = static_cast<double>(hits) / nn;
  const double scale = s.volume * unit_sphere_area(n) * std::pow(rmax, a) / a;
  const double se = scale * std::sqrt(phat * (1.0 - phat) / (nn - 1.0));
  return {scale * phat, se, EnergyMethod::MonteCarlo};
}

}  // namespace rieszstab
