#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "doctest.h"
#include "rieszstab/energy.hpp"
#include "rieszstab/errors.hpp"
#include "rieszstab/spectral.hpp"

using namespace rieszstab;
constexpr double kPi = std::numbers::pi;

namespace {

double ts(auto f, double a, double b) {
  static boost::math::quadrature::tanh_sinh<double> rule;
  return rule.integrate(f, a, b, 1e-12);
}

// Nested one-dimensional oracle for the radial box integral; the inner
// integral is split at rho = r where the integrand peaks.
double box_oracle(double q, double s1, double s2, double t1, double t2, int n, double alpha) {
  auto f = [&](double r, double rho) {
    const double den = (r - rho) * (r - rho) + r * rho * q * q;
    if (den == 0.0) return 0.0;
    return std::pow(r, n - 1) * std::pow(rho, n - 1) / std::pow(den, 0.5 * (n - alpha));
  };
  auto outer = [&](double r) {
    auto g = [&](double rho) { return f(r, rho); };
    if (r > t1 && r < t2) return ts(g, t1, r) + ts(g, r, t2);
    return ts(g, t1, t2);
  };
  double v = 0;
  double cuts[4] = {s1, std::clamp(t1, s1, s2), std::clamp(t2, s1, s2), s2};
  for (int i = 0; i < 3; ++i)
    if (cuts[i + 1] > cuts[i]) v += ts(outer, cuts[i], cuts[i + 1]);
  return v;
}

std::vector<double> smooth_random(const SphereGrid& g, std::mt19937_64& rng, double sup) {
  std::normal_distribution<double> gauss;
  double c[9];
  for (double& x : c) x = gauss(rng);
  std::vector<double> u(g.size());
  double m = 0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    const Point& x = g.node(j);
    u[j] = c[0] * x[0] + c[1] * x[1] + c[2] * x[2] + c[3] * x[0] * x[1] + c[4] * x[1] * x[2] + c[5] * (x[2] * x[2] - x[0] * x[0]) +
           c[6] * std::sin(3 * x[0]) + c[7] * x[0] * x[1] * x[2] + c[8] * std::cos(2 * x[1] + x[2]);
    m = std::max(m, std::abs(u[j]));
  }
  for (double& v : u) v *= sup / m;
  return u;
}

VoxelSet random_blob(int dim, double h, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0, 1);
  const int k = 1 + static_cast<int>(4 * u01(rng));
  std::vector<Point> c(k);
  std::vector<double> r(k);
  for (int i = 0; i < k; ++i) {
    for (int d = 0; d < dim; ++d) c[i][d] = 0.8 * (u01(rng) - 0.5);
    r[i] = 0.2 + 0.4 * u01(rng);
  }
  const Lattice lat = Lattice::covering(dim, h, Point{-1.2, -1.2, dim == 3 ? -1.2 : 0}, Point{1.2, 1.2, dim == 3 ? 1.2 : 0});
  return VoxelSet::from_predicate(lat, [&](const Point& x) {
    for (int i = 0; i < k; ++i)
      if (distance(x, c[i]) <= r[i]) return true;
    return false;
  });
}

}  // namespace

TEST_CASE("radial box kernel against a nested oracle") {
  KernelParams p(3, 2.0);
  const double v = radial_box_kernel(1.0, 0, 1, 0, 1, p);
  CHECK(v == doctest::Approx(box_oracle(1.0, 0, 1, 0, 1, 3, 2.0)).epsilon(1e-6));
  for (auto [q, s1, s2, t1, t2] : {std::array{0.1, 0.9, 1.1, 1.0, 1.2}, std::array{0.02, 0.95, 1.0, 1.0, 1.03},
                                   std::array{0.3, 0.5, 0.7, 1.1, 1.4}, std::array{0.005, 0.99, 1.01, 0.99, 1.01}}) {
    for (double a : {1.3, 2.0, 2.6}) {
      KernelParams pa(3, a);
      CHECK(radial_box_kernel(q, s1, s2, t1, t2, pa) == doctest::Approx(box_oracle(q, s1, s2, t1, t2, 3, a)).epsilon(1e-6));
    }
    KernelParams p2(2, 1.5);
    CHECK(radial_box_kernel(q, s1, s2, t1, t2, p2) == doctest::Approx(box_oracle(q, s1, s2, t1, t2, 2, 1.5)).epsilon(1e-6));
  }
}

TEST_CASE("radial box kernel symmetry and homogeneity") {
  for (auto [n, a] : {std::pair{3, 2.0}, std::pair{3, 1.4}, std::pair{2, 1.7}}) {
    KernelParams p(n, a);
    CHECK(radial_box_kernel(0.2, 0.8, 1.1, 0.95, 1.3, p) == doctest::Approx(radial_box_kernel(0.2, 0.95, 1.3, 0.8, 1.1, p)).epsilon(1e-10));
    const double lam = 1.7;
    CHECK(radial_box_kernel(0.4, 0, lam * 0.9, 0, lam * 1.2, p) ==
          doctest::Approx(std::pow(lam, n + a) * radial_box_kernel(0.4, 0, 0.9, 0, 1.2, p)).epsilon(1e-8));
  }
}

TEST_CASE("radial box kernel divergence is rejected only when genuine") {
  CHECK_THROWS_AS(radial_box_kernel(0.0, 0.9, 1.1, 1.0, 1.2, KernelParams(3, 1.5)), DomainError);
  CHECK_THROWS_AS(radial_box_kernel(-0.1, 0.9, 1.1, 1.0, 1.2, KernelParams(3, 2.0)), DomainError);
  // N - alpha < 1: integrable diagonal.
  KernelParams p(3, 2.5);
  CHECK(radial_box_kernel(0.0, 0.9, 1.1, 1.0, 1.2, p) == doctest::Approx(box_oracle(0.0, 0.9, 1.1, 1.0, 1.2, 3, 2.5)).epsilon(1e-6));
  // Disjoint intervals are fine at q = 0.
  CHECK(radial_box_kernel(0.0, 0.5, 0.8, 1.0, 1.2, KernelParams(3, 1.5)) > 0);
}

// Flat-patch average with the distance density integrated directly, on
// geometric shells toward q = 0.
double patch_oracle(double patch, double lo, double hi, int n, double alpha) {
  using boost::math::quadrature::gauss_kronrod;
  const double len = n == 3 ? 2 * std::sqrt(patch / kPi) : patch, d = n - alpha;
  auto dens = [&](double q) {
    const double x = q / len;
    return (n == 2 ? 2 * (1 - x) : 16 / kPi * x * (std::acos(x) - x * std::sqrt(std::max(0.0, 1 - x * x)))) / len;
  };
  auto kbar = [&](double r, double rho) {
    auto f = [&](double q) { return dens(q) * std::pow((r - rho) * (r - rho) + r * rho * q * q, -d / 2); };
    double tot = 0, b = len;
    for (int i = 0; i < 40; ++i, b /= 4) tot += gauss_kronrod<double, 61>::integrate(f, b / 4, b, 0, 0);
    return tot * std::pow(r * rho, n - 1);
  };
  auto slice = [&](double delta) {
    auto g = [&](double m) { return kbar(m + delta / 2, m - delta / 2); };
    return gauss_kronrod<double, 61>::integrate(g, lo + delta / 2, hi - delta / 2, 0, 0);
  };
  return 2 * ts(slice, 0.0, hi - lo);
}

TEST_CASE("patch-averaged box kernel") {
  for (auto [n, a, patch] : {std::tuple{3, 2.0, 0.005}, std::tuple{3, 1.05, 0.02}, std::tuple{3, 2.9, 0.005}, std::tuple{2, 1.5, 0.025},
                             std::tuple{2, 1.05, 0.01}}) {
    KernelParams p(n, a);
    for (auto [lo, hi] : {std::pair{1.027, 1.079}, std::pair{1.0, 1.001}, std::pair{0.9, 1.1}})
      CHECK(patch_box_kernel(patch, lo, hi, p) == doctest::Approx(patch_oracle(patch, lo, hi, n, a)).epsilon(1e-7));
    CHECK(patch_box_kernel(patch, 1.1, 0.9, p) == patch_box_kernel(patch, 0.9, 1.1, p));
    CHECK(patch_box_kernel(patch, 1.0, 1.0, p) == 0.0);
  }
  CHECK_THROWS_AS(patch_box_kernel(0.0, 0.9, 1.1, KernelParams(3, 2.0)), DomainError);
}

TEST_CASE("cap gradient integral against a two-dimensional oracle") {
  for (double a : {1.3, 2.0, 2.7}) {
    const double patch = 0.01;
    const double top = std::acos(1 - patch / (2 * kPi));
    // g = e1 at the north pole.
    auto inner = [&](double th) {
      if (th < 1e-100) return 0.0;
      auto f = [&](double ph) {
        const double s = std::sin(th) * std::cos(ph);
        return s * s * std::pow(2 * std::sin(th / 2), a - 3) * std::sin(th);
      };
      return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0, 2 * kPi);
    };
    CHECK(cap_gradient_integral(patch, KernelParams(3, a)) == doctest::Approx(ts(inner, 0, top)).epsilon(1e-8));
  }
}

TEST_CASE("graph energy of balls") {
  for (auto [n, a, res] : {std::tuple{3, 2.0, 12}, std::tuple{2, 1.5, 64}}) {
    KernelParams p(n, a);
    auto g = SphereGrid::make(n, res);
    const EnergyEstimate b = energy_graph(GraphSet(g, std::vector<double>(g->size(), 0.0)), p);
    CHECK(b.value == doctest::Approx(ball_energy(p)).epsilon(1e-12));
    CHECK(b.method == EnergyMethod::GraphQuadrature);
    const EnergyEstimate c = energy_graph(GraphSet(g, std::vector<double>(g->size(), 0.15)), p);
    CHECK(c.value == doctest::Approx(std::pow(1.15, n + a) * ball_energy(p)).epsilon(1e-12));
  }
  CHECK(ball_energy(KernelParams(3, 2.0)) == doctest::Approx(32 * kPi * kPi / 15).epsilon(1e-12));
  auto g = SphereGrid::make(3, 8);
  std::vector<double> bad(g->size(), 0.0);
  bad[3] = -1.0;
  CHECK_THROWS_AS(GraphSet(g, bad), DomainError);
  bad[3] = 1.0;
  CHECK_THROWS_AS(energy_graph(GraphSet(g, bad), KernelParams(3, 2.0)), PreconditionError);
}

TEST_CASE("graph energy agrees with Monte Carlo") {
  std::mt19937_64 rng(17);
  for (auto [n, a, res] : {std::tuple{3, 2.0, 24}, std::tuple{3, 1.4, 24}, std::tuple{2, 1.5, 256}}) {
    KernelParams p(n, a);
    auto g = SphereGrid::make(n, res);
    const GraphSet e(g, smooth_random(*g, rng, 0.2));
    const EnergyEstimate q = energy_graph(e, p);
    const EnergyEstimate mc = mc_energy(shape_of(e), p, 5, 1'000'000);
    CHECK(std::abs(q.value - mc.value) <= 3 * mc.error_bound + q.error_bound);
  }
}

TEST_CASE("Monte Carlo energy") {
  KernelParams p(3, 2.0);
  const SampledShape b = ball_shape(3, Point{}, 1.0);
  const EnergyEstimate e1 = mc_energy(b, p, 42, 1'000'000);
  CHECK(std::abs(e1.value - 32 * kPi * kPi / 15) <= 3 * e1.error_bound);
  const EnergyEstimate e2 = mc_energy(b, p, 42, 2'000'000);
  CHECK(e2.error_bound / e1.error_bound == doctest::Approx(1 / std::sqrt(2.0)).epsilon(0.2));
  const EnergyEstimate again = mc_energy(b, p, 42, 1'000'000);
  CHECK(again.value == e1.value);
  CHECK(again.error_bound == e1.error_bound);
  CHECK(mc_energy(b, p, 43, 1'000'000).value != e1.value);
  CHECK_THROWS_AS(mc_energy(b, p, 1, 9999), PreconditionError);
  // Heavy kernel singularity still has finite variance.
  KernelParams light(3, 1.1);
  const EnergyEstimate h = mc_energy(b, light, 3, 400'000);
  CHECK(std::abs(h.value - ball_energy(light)) <= 3 * h.error_bound);
}

TEST_CASE("voxel energy") {
  KernelParams p(3, 2.0);
  const Lattice lat = Lattice::covering(3, 1.0 / 64, Point{-1.05, -1.05, -1.05}, Point{1.05, 1.05, 1.05});
  const VoxelSet ball = VoxelSet::from_predicate(lat, [](const Point& x) { return norm(x) <= 1; });
  const EnergyEstimate e = energy_voxel(ball, p);
  CHECK(e.value == doctest::Approx(32 * kPi * kPi / 15).epsilon(0.01));
  CHECK(e.method == EnergyMethod::VoxelConvolution);
  CHECK(e.value >= 0);

  const Lattice small{3, Point{}, 0.1, {30, 1, 1}};
  std::vector<std::uint8_t> one(small.size(), 0);
  one[0] = 1;
  CHECK(energy_voxel(VoxelSet(small, one), p).value == doctest::Approx(cell_self_energy(small, p)).epsilon(1e-12));
  one[29] = 1;
  const double d = 2.9, h = 0.1;
  for (double a : {1.5, 2.0, 2.5}) {
    KernelParams q(3, a);
    const double expect = 2 * std::pow(h, 6) / std::pow(d, 3 - a) + 2 * cell_self_energy(small, q);
    CHECK(energy_voxel(VoxelSet(small, one), q).value == doctest::Approx(expect).epsilon(1e-3));
  }
}

TEST_CASE("voxel energy respects the memory budget") {
  const std::size_t old = fft_memory_budget();
  set_fft_memory_budget(1 << 20);
  const Lattice lat = Lattice::covering(3, 1.0 / 32, Point{-1, -1, -1}, Point{1, 1, 1});
  const VoxelSet ball = VoxelSet::from_predicate(lat, [](const Point& x) { return norm(x) <= 1; });
  CHECK_THROWS_AS(energy_voxel(ball, KernelParams(3, 2.0)), ResourceError);
  set_fft_memory_budget(old);
}

TEST_CASE("mutual energies") {
  KernelParams p(3, 2.0);
  std::mt19937_64 rng(5);
  const VoxelSet a = random_blob(3, 1.0 / 16, rng);
  const VoxelSet b = random_blob(3, 1.0 / 16, rng).shifted({4, -2, 1});
  CHECK(mutual_energy(a, a, p).value == doctest::Approx(energy_voxel(a, p).value).epsilon(1e-12));
  CHECK(mutual_energy(a, b, p).value == mutual_energy(b, a, p).value);

  auto g = SphereGrid::make(3, 8);
  const GraphSet e(g, smooth_random(*g, rng, 0.1));
  const GraphSet f(g, smooth_random(*g, rng, 0.1));
  CHECK(mutual_energy(e, f, p).value == mutual_energy(f, e, p).value);
  const EnergyEstimate ee = mutual_energy(e, e, p), fe = energy_graph(e, p);
  CHECK(std::abs(ee.value - fe.value) <= ee.error_bound + fe.error_bound);

  // Graph-voxel mixing goes through voxelization.
  const Lattice lat = Lattice::covering(3, 1.0 / 16, Point{-1.2, -1.2, -1.2}, Point{1.2, 1.2, 1.2});
  const VoxelSet bv = VoxelSet::from_predicate(lat, [](const Point& x) { return norm(x) <= 1; });
  CHECK(mutual_energy(e, bv, p).value == mutual_energy(bv, e, p).value);
}

TEST_CASE("mutual energy of disjoint sets obeys the tau1 bound") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u01(0, 1);
  for (double a : {1.5, 2.0, 2.5}) {
    KernelParams p(3, a);
    for (int trial = 0; trial < 5; ++trial) {
      const Lattice lat = Lattice::covering(3, 0.05, Point{-1, -1, -1}, Point{1, 1, 1});
      std::vector<std::uint8_t> og(lat.size()), oh(lat.size());
      for (std::size_t i = 0; i < lat.size(); ++i) {
        const double r = u01(rng);
        og[i] = r < 0.1;
        oh[i] = r > 0.9;
      }
      const VoxelSet G(lat, og), H(lat, oh);
      CHECK(mutual_energy(G, H, p).value <= G.measure() * tau1(H.measure(), p));
    }
  }
}

TEST_CASE("mutual energy of balls") {
  KernelParams p(3, 2.0);
  // Far apart: point-mass limit.
  const double d = 40.0, omega = 4 * kPi / 3;
  CHECK(mutual_energy_balls(Point{}, 1, Point{d, 0, 0}, 1, p) == doctest::Approx(omega * omega / d).epsilon(1e-3));
  // Identical balls: self energy.
  CHECK(mutual_energy_balls(Point{}, 1, Point{}, 1, p) == doctest::Approx(ball_energy(p)).epsilon(1e-8));
}

TEST_CASE("deficit of graph sets") {
  KernelParams p(3, 2.0);
  auto g = SphereGrid::make(3, 24);
  CHECK(deficit(GraphSet(g, std::vector<double>(g->size(), 0.0)), p).value == 0.0);
  const HarmonicBasis basis = build_basis(g, 2);
  std::vector<double> u = basis.function(basis.offset(2));
  for (double& v : u) v *= 0.05;
  const GraphSet e = barycenter_correct(volume_normalize(GraphSet(g, u)));
  const double predicted = 0.05 * 0.05 / 2 * (mu(2, p) - mu(1, p));
  CHECK(deficit(e, p).value == doctest::Approx(predicted).epsilon(0.05));
  std::vector<double> big(g->size(), 0.01);
  CHECK_THROWS_AS(deficit(GraphSet(g, big), p), PreconditionError);
}

TEST_CASE("deficit of voxel sets") {
  KernelParams p(3, 2.0);
  const Lattice lat = Lattice::covering(3, 1.0 / 32, Point{-1.1, -1.1, -1.1}, Point{1.1, 1.1, 1.1});
  const VoxelSet ball = VoxelSet::from_predicate(lat, [](const Point& x) { return norm(x) <= 1; });
  const EnergyEstimate d = deficit(ball, p);
  // Staircase only.
  CHECK(d.value >= -d.error_bound);
  CHECK(d.value < 0.01);
  const VoxelSet fat = VoxelSet::from_predicate(lat, [](const Point& x) { return norm(x) <= 1.05; });
  CHECK_THROWS_AS(deficit(fat, p), PreconditionError);
}

TEST_CASE("Riesz inequality on random sets") {
  std::mt19937_64 rng(2718);
  int checked = 0;
  for (auto [n, a] : {std::pair{3, 2.0}, std::pair{3, 1.3}, std::pair{2, 1.5}, std::pair{3, 2.8}}) {
    KernelParams p(n, a);
    auto g = SphereGrid::make(n, n == 3 ? 10 : 96);
    for (int i = 0; i < 25; ++i, ++checked) {
      const GraphSet e = volume_normalize(GraphSet(g, smooth_random(*g, rng, 0.3)));
      const EnergyEstimate en = energy_graph(e, p);
      CHECK(en.value <= ball_energy(p) + en.error_bound);
      CHECK(deficit(e, p).value >= -en.error_bound);
    }
    for (int i = 0; i < 25; ++i, ++checked) {
      const VoxelSet v = random_blob(n, n == 3 ? 1.0 / 16 : 1.0 / 64, rng);
      const EnergyEstimate en = energy_voxel(v, p);
      // Scale to unit volume: F(lambda E) = lambda^(N+alpha) F(E).
      const double scale = std::pow(unit_ball_volume(n) / v.measure(), (n + a) / n);
      CHECK(scale * en.value <= ball_energy(p) + scale * en.error_bound);
    }
  }
  CHECK(checked == 200);
}

TEST_CASE("voxelized graph energy converges to the graph value") {
  KernelParams p(2, 1.5);
  auto g = SphereGrid::make(2, 512);
  std::mt19937_64 rng(8);
  const GraphSet e(g, smooth_random(*g, rng, 0.15));
  const double exact = energy_graph(e, p).value;
  double prev = 1e300;
  for (double h : {1.0 / 32, 1.0 / 64, 1.0 / 128}) {
    const Lattice lat = Lattice::covering(2, h, Point{-1.2, -1.2, 0}, Point{1.2, 1.2, 0});
    const double err = std::abs(energy_field(voxelize(e, lat, 4), p).value - exact);
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev / exact < 2e-3);
}
