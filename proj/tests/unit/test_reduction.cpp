#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "../support/shapes.hpp"
#include "doctest.h"
#include "rieszstab/errors.hpp"
#include "rieszstab/quadrature.hpp"
#include "rieszstab/reduction.hpp"

using namespace rieszstab;
using rieszstab::testing::fit_volume;
using rieszstab::testing::random_profile;
using rieszstab::testing::voxel_star;
constexpr double kPi = std::numbers::pi;

namespace {

TwoSidedGraphSet random_two_sided(std::shared_ptr<const SphereGrid> g, std::mt19937_64& rng, double amp,
                                  double both_fraction = 0.5) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  TwoSidedGraphSet t{g, std::vector<double>(g->size()), std::vector<double>(g->size()), {}};
  for (std::size_t j = 0; j < g->size(); ++j) {
    const double r = U(rng);
    if (r < both_fraction) {
      t.u_plus[j] = amp * U(rng);
      t.u_minus[j] = amp * U(rng);
    } else if (r < 0.5 + 0.5 * both_fraction) {
      t.u_plus[j] = amp * U(rng);
    } else {
      t.u_minus[j] = amp * U(rng);
    }
  }
  return t;
}

// t^(N-1)-weighted inverse CDF of a profile by bisection on its mass.
double profile_quantile(const RayProfile& p, int n, double q) {
  const double total = p.mass(n);
  double lo = p.breaks.front(), hi = p.breaks.back();
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (p.mass(n, lo == p.breaks.front() ? lo : p.breaks.front(), mid) < q * total ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Point random_direction(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Point x{g(rng), g(rng), dim == 3 ? g(rng) : 0.0};
  return (1.0 / norm(x)) * x;
}

// Monte Carlo estimates of int_H f(Phi(y)) dy and int_K f(z) dz. Directions
// are shared; radii are drawn independently from the source and target
// profiles.
std::pair<double, double> pushforward_pair(const RadialTransport& T, const std::function<double(const Point&)>& f,
                                           int samples, std::uint64_t seed) {
  const int n = T.grid->dim();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double area = unit_sphere_area(n);
  double h = 0.0, k = 0.0;
  for (int i = 0; i < samples; ++i) {
    const Point x = random_direction(n, rng);
    const RayMap& r = T.rays[T.grid->locate(x)];
    const double u1 = U(rng), u2 = U(rng);
    if (r.empty()) continue;
    const double t = profile_quantile(r.source(), n, u1);
    const double s = profile_quantile(r.target(), n, u2);
    h += area * r.source_mass() * f(T.apply(T.center + t * x));
    k += area * r.target_mass() * f(T.center + s * x);
  }
  return {h / samples, k / samples};
}

double potential_ball(const Point& y, const Point& c, double r, const KernelParams& p) {
  return psi_scaled(distance(y, c), r, p);
}

}  // namespace

TEST_CASE("ray profiles") {
  const RayProfile a = interval_profile({{0.0, 0.5}, {0.5, 0.8}, {1.0, 1.2}});
  CHECK(a.breaks == std::vector<double>{0.0, 0.8, 1.0, 1.2});
  CHECK(a.density == std::vector<double>{1.0, 0.0, 1.0});
  CHECK(a.mass(3) == doctest::Approx((0.8 * 0.8 * 0.8 + 1.2 * 1.2 * 1.2 - 1.0) / 3).epsilon(1e-14));
  CHECK(a.mass(2, 0.7, 1.1) == doctest::Approx((0.64 - 0.49 + 1.21 - 1.0) / 2).epsilon(1e-14));
  CHECK_THROWS_AS(interval_profile({{0.0, 0.5}, {0.4, 0.6}}), PreconditionError);

  const RayProfile b = interval_profile({{0.0, 1.0}});
  const RayProfile ab = positive_part(a, b), ba = positive_part(b, a);
  CHECK(ab.breaks == std::vector<double>{1.0, 1.2});
  CHECK(ba.breaks == std::vector<double>{0.8, 1.0});
  CHECK(positive_part(a, a).breaks.empty());

  const RayProfile m = mean_profile({a, b});
  CHECK(m.mass(3) == doctest::Approx(0.5 * (a.mass(3) + b.mass(3))).epsilon(1e-14));
}

TEST_CASE("single ray shell map has the closed form") {
  for (int n : {2, 3}) {
    const RayMap phi(n, interval_profile({{1.0, 1.1}}), interval_profile({{0.9, 1.0}}));
    CHECK(phi(1.0) == doctest::Approx(0.9).epsilon(1e-14));
    CHECK(phi(1.1) == doctest::Approx(1.0).epsilon(1e-14));
    for (double t : {1.01, 1.04, 1.077, 1.099}) {
      // phi^N - 0.9^N is proportional to t^N - 1.
      const double ratio = (1.0 - std::pow(0.9, n)) / (std::pow(1.1, n) - 1.0);
      const double expect = std::pow(std::pow(0.9, n) + (std::pow(t, n) - 1.0) * ratio, 1.0 / n);
      CHECK(phi(t) == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("consolidation keeps the volume and splits by the mass balance") {
  for (int n : {2, 3}) {
    auto g = SphereGrid::make(n, n == 3 ? 8 : 64);
    SUBCASE("one-sided input is not split") {
      std::vector<double> up(g->size()), um(g->size(), 0.0);
      for (std::size_t j = 0; j < up.size(); ++j) up[j] = 0.05 * (1.0 + g->node(j)[0]);
      const TwoSidedGraphSet t{g, um, up, {}};
      const Consolidation c = consolidate(t);
      CHECK(c.split_nodes == 0);
      CHECK_FALSE(c.set.has_subcells());
      for (std::size_t j = 0; j < up.size(); ++j) CHECK(c.set.cells()[j].u == up[j]);
    }
    SUBCASE("equal sides match a one-dimensional root") {
      const double cval = 0.07;
      const TwoSidedGraphSet t{g, std::vector<double>(g->size(), cval), std::vector<double>(g->size(), cval), {}};
      const Consolidation c = consolidate(t);
      CHECK(c.split_nodes == static_cast<int>(g->size()));
      // Bisection on lambda(1-(1-c)^N) - (1-lambda)((1+c)^N-1).
      auto f = [&](double l) { return l * (1 - std::pow(1 - cval, n)) - (1 - l) * (std::pow(1 + cval, n) - 1); };
      double lo = 0, hi = 1;
      for (int i = 0; i < 100; ++i) (f(0.5 * (lo + hi)) < 0 ? lo : hi) = 0.5 * (lo + hi);
      const auto& cell = c.set.cells()[c.set.cells_at(0)[0]];
      const double lambda = cell.weight / g->weight(0);
      CHECK(cell.u == cval);
      CHECK(lambda == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-12));
      const double approx = (std::pow(1 + cval, n) - 1) / (std::pow(1 + cval, n) - std::pow(1 - cval, n));
      CHECK(lambda == doctest::Approx(approx).epsilon(1e-12));
    }
    SUBCASE("random inputs") {
      std::mt19937_64 rng(11 + n);
      for (int rep = 0; rep < 5; ++rep) {
        const TwoSidedGraphSet t = random_two_sided(g, rng, 0.15);
        const Consolidation c = consolidate(t);
        const double v0 = two_sided_volume(t);
        CHECK(std::abs(graph_volume(c.set) - v0) <= 1e-14 * v0);
        const double sup = std::max(*std::max_element(t.u_plus.begin(), t.u_plus.end()),
                                    *std::max_element(t.u_minus.begin(), t.u_minus.end()));
        CHECK(c.set.max_abs_u() <= sup);
        CHECK(c.ratio.passed);
        CHECK(c.sd_before == doctest::Approx(symm_diff_ball(t, {})).epsilon(1e-12));
        CHECK(c.sd_after == doctest::Approx(symm_diff_ball(c.set, {})).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("radial transport of a consolidation") {
  for (int n : {2, 3}) {
    auto g = SphereGrid::make(n, n == 3 ? 8 : 64);
    std::mt19937_64 rng(5 + n);
    SUBCASE("identical sets give the identity") {
      std::vector<double> up(g->size()), um(g->size(), 0.0);
      for (std::size_t j = 0; j < up.size(); ++j) up[j] = 0.03 * (1.0 + g->node(j)[1]);
      const TwoSidedGraphSet t{g, um, up, {0.1, 0.0, 0.0}};
      const RadialTransport T = build_radial_transport(t, consolidate(t).set);
      CHECK(T.is_identity());
      const Point y{0.5, 0.3, 0.0};
      CHECK(T.apply(y) == y);
    }
    SUBCASE("ray masses match and the map moves inward") {
      for (int rep = 0; rep < 5; ++rep) {
        const TwoSidedGraphSet t = random_two_sided(g, rng, 0.12);
        const RadialTransport T = build_radial_transport(t, consolidate(t).set);
        for (const RayMap& r : T.rays) {
          CHECK(std::abs(r.source_mass() - r.target_mass()) <= 1e-10);
          if (r.empty()) continue;
          const double lo = r.source().breaks.front(), hi = r.source().breaks.back();
          for (double s : {0.0, 0.3, 0.7, 1.0}) {
            const double t0 = lo + s * (hi - lo);
            CHECK(r(t0) <= t0 + 1e-14);
          }
        }
        CHECK(T.max_mass_mismatch() <= 1e-10);
      }
    }
    SUBCASE("pushforward on smooth test functions") {
      const TwoSidedGraphSet t = random_two_sided(g, rng, 0.12);
      const RadialTransport T = build_radial_transport(t, consolidate(t).set);
      std::normal_distribution<double> G;
      for (int k = 0; k < 20; ++k) {
        const Point a{3 * G(rng), 3 * G(rng), n == 3 ? 3 * G(rng) : 0.0};
        const double b = G(rng);
        auto f = [&](const Point& y) { return 1.5 + std::sin(dot(a, y) + b); };
        const auto [lhs, rhs] = pushforward_pair(T, f, 20000, 100 + k);
        CHECK(std::abs(lhs - rhs) <= 0.01 * std::abs(rhs));
      }
    }
    SUBCASE("mismatched masses are rejected") {
      const TwoSidedGraphSet t = random_two_sided(g, rng, 0.12);
      std::vector<double> u(g->size(), 0.02);
      CHECK_THROWS_AS(build_radial_transport(t, GraphSet(g, u)), PreconditionError);
      CHECK_THROWS_AS(build_radial_transport(t, GraphSet(SphereGrid::make(n, n == 3 ? 6 : 32), std::vector<double>(n == 3 ? 72 : 32, 0.0))),
                      PreconditionError);
    }
  }
}

TEST_CASE("transport estimate with a ball potential") {
  // |I(G,H) - I(G,K)| <= tau2(|G|) int_H 1 ^ |y - Phi(y)|, G a ball, both
  // sides integrated along the rays of H.
  const GaussRule& gl = gauss_legendre(8);
  for (int n : {2, 3}) {
    const KernelParams p(n, n == 3 ? 2.0 : 1.5);
    auto g = SphereGrid::make(n, n == 3 ? 8 : 64);
    std::mt19937_64 rng(77 + n);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int rep = 0; rep < 10; ++rep) {
      const TwoSidedGraphSet t = random_two_sided(g, rng, 0.15);
      const RadialTransport T = build_radial_transport(t, consolidate(t).set);
      const Point c{1.5 * U(rng), 1.5 * U(rng), n == 3 ? 1.5 * U(rng) : 0.0};
      const double r = 0.3 + 0.6 * (U(rng) + 1.0);
      double lhs = 0.0, move = 0.0;
      for (std::size_t j = 0; j < g->size(); ++j) {
        const RayMap& ray = T.rays[j];
        const RayProfile& s = ray.source();
        for (std::size_t k = 0; k < s.density.size(); ++k) {
          if (s.density[k] == 0.0) continue;
          const double a = s.breaks[k], b = s.breaks[k + 1];
          for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
            const double tt = 0.5 * (a + b) + 0.5 * (b - a) * gl.nodes[q];
            const double w = g->weight(j) * 0.5 * (b - a) * gl.weights[q] * s.density[k] * std::pow(tt, n - 1);
            const Point y = tt * g->node(j);
            const Point z = ray(tt) * g->node(j);
            lhs += w * (potential_ball(y, c, r, p) - potential_ball(z, c, r, p));
            move += w * std::min(1.0, distance(y, z));
          }
        }
      }
      const double bound = tau2(unit_ball_volume(n) * std::pow(r, n), p) * move;
      CHECK(std::abs(lhs) <= bound);
    }
  }
}

TEST_CASE("two-sided deficit against concentric ball energies") {
  for (int n : {2, 3}) {
    const KernelParams p(n, n == 3 ? 2.0 : 1.5);
    auto g = SphereGrid::make(n, n == 3 ? 12 : 96);
    const double c = 0.025;
    const TwoSidedGraphSet t{g, std::vector<double>(g->size(), c), std::vector<double>(g->size(), c), {}};
    // chi = B(1+c) - B(1) + B(1-c)
    const double r[3] = {1 + c, 1.0, 1 - c};
    const double s[3] = {1, -1, 1};
    double f = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) f += s[i] * s[k] * mutual_energy_balls({}, r[i], {}, r[k], p);
    const double vol = two_sided_volume(t);
    const double l = std::pow(unit_ball_volume(n) / vol, 1.0 / n);
    const double oracle = ball_energy(p) - std::pow(l, n + p.alpha()) * f;
    const EnergyEstimate d = deficit(t, p);
    CHECK(std::abs(d.value - oracle) <= std::max(d.error_bound, 1e-6 * ball_energy(p)));
    CHECK(d.value > 0.0);
  }
  // One-sided two-sided sets reduce to graph sets.
  const KernelParams p(3, 2.0);
  auto g = SphereGrid::make(3, 8);
  std::vector<double> up(g->size(), 0.0), um(g->size(), 0.0), u(g->size());
  for (std::size_t j = 0; j < g->size(); ++j) {
    const double v = 0.04 * g->node(j)[2] * g->node(j)[0];
    (v > 0 ? up : um)[j] = std::abs(v);
    u[j] = v;
  }
  const GraphSet e = GraphSet(g, u);
  const double lhs = deficit(TwoSidedGraphSet{g, um, up, {}}, p).value;
  const double rhs = deficit(e, p).value;
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
}

TEST_CASE("truncation to the annulus") {
  const double eps = 0.2, e2 = eps * eps;
  SUBCASE("set inside the annulus is left alone") {
    const VoxelSet v = voxel_star(2, 1.0 / 64, [](const Point& x) { return 0.02 * x[0] * x[1]; });
    const Truncation tr = truncate_to_annulus(v, eps, {});
    CHECK(tr.moved_outer == 0);
    CHECK(tr.moved_inner == 0);
    CHECK(tr.set.count() == v.count());
    CHECK(symm_diff_ball(tr.set, {}) == doctest::Approx(symm_diff_ball(v, {})).epsilon(1e-12));
  }
  SUBCASE("satellite blob and hole") {
    for (int n : {2, 3}) {
      const double h = n == 3 ? 1.0 / 24 : 1.0 / 64;
      const double omega = unit_ball_volume(n);
      const double rb = std::pow(0.01, 1.0 / n);  // blob radius: volume 0.01 omega
      const Point blob{1.5, 0.0, 0.0}, hole{0.0, -0.4, 0.0};
      const Lattice lat = Lattice::covering(n, h, {-1.3, -1.3, n == 3 ? -1.3 : 0.0}, {1.8, 1.3, n == 3 ? 1.3 : 0.0});
      const VoxelSet v = VoxelSet::from_predicate(lat, [&](const Point& x) {
        if (distance(x, blob) < rb) return true;
        return norm(x) < 1.0 && distance(x, hole) >= rb;
      });
      REQUIRE(std::abs(v.measure() - omega) < 5e-3 * omega);
      // Bookkeeping oracle: counts of cells on each side of the radii.
      std::size_t far = 0, holes = 0;
      for (std::size_t i = 0; i < lat.size(); ++i) {
        const double d = norm(lat.center(i));
        if (v.occupied(i) && d > 1 + e2) ++far;
        if (!v.occupied(i) && d < 1 - e2) ++holes;
      }
      const Truncation tr = truncate_to_annulus(v, eps, {});
      CHECK(tr.moved_outer == far);
      CHECK(tr.moved_inner == holes);
      CHECK(far > 0);
      CHECK(holes > 0);
      CHECK(tr.set.count() == v.count());
      const double slack = h * std::sqrt(n);
      const Lattice& out = tr.set.lattice();
      for (std::size_t i = 0; i < out.size(); ++i) {
        const double d = norm(out.center(i));
        if (tr.set.occupied(i)) CHECK(d <= 1 + e2 + slack);
        else CHECK(d >= 1 - e2 - slack);
      }
    }
  }
  SUBCASE("too much mass outside is not applicable") {
    const Lattice lat = Lattice::covering(2, 1.0 / 64, {-3, -3, 0}, {3, 3, 0});
    const VoxelSet v = fit_volume(lat, [](const Point& x, double s) {
      return distance(x, {-1.5, 0.011, 0}) < s * std::sqrt(0.5) || distance(x, {1.513, 0, 0}) < s * std::sqrt(0.5);
    });
    CHECK_THROWS_AS(truncate_to_annulus(v, eps, {}), NotApplicableError);
  }
}

TEST_CASE("radial rearrangement") {
  SUBCASE("voxel ball gives u of the order of the spacing") {
    const double h = 1.0 / 48;
    const VoxelSet v = voxel_star(3, h, [](const Point&) { return 0.0; });
    const Rearrangement r = radial_rearrange(v, SphereGrid::make(3, 12), 0.2);
    for (std::size_t j = 0; j < r.set.u_plus.size(); ++j) {
      CHECK(r.set.u_plus[j] <= h);
      CHECK(r.set.u_minus[j] <= h);
    }
  }
  SUBCASE("single rays by hand") {
    // Square shells along the axes: occupied below 1, in (1.02, 1.06), empty
    // in (0.9, 0.94). Axis rays run along cell faces and see whole cells.
    const double h = 0.02;
    const Lattice lat = Lattice::covering(2, h, {-1.2, -1.2, 0}, {1.2, 1.2, 0});
    const VoxelSet v = VoxelSet::from_predicate(lat, [](const Point& x) {
      const double m = std::max(std::abs(x[0]), std::abs(x[1]));
      return (m < 1.0 && !(m > 0.9 && m < 0.94)) || (m > 1.02 && m < 1.06);
    });
    const Rearrangement r = radial_rearrange(v, SphereGrid::make(2, 4), 0.2, {}, 1);
    const double up = std::sqrt(1 + 1.06 * 1.06 - 1.02 * 1.02) - 1;
    const double um = 1 - std::sqrt(1 - (0.94 * 0.94 - 0.9 * 0.9));
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(r.set.u_plus[j] == doctest::Approx(up).epsilon(1e-10));
      CHECK(r.set.u_minus[j] == doctest::Approx(um).epsilon(1e-10));
    }
  }
  SUBCASE("volume of E'' tracks the input") {
    std::mt19937_64 rng(3);
    for (int n : {2, 3}) {
      const double h = n == 3 ? 1.0 / 32 : 1.0 / 96;
      const VoxelSet v = voxel_star(n, h, random_profile(n, rng, 0.05), {0.013, -0.021, 0.0});
      const Rearrangement r = radial_rearrange(v, SphereGrid::make(n, n == 3 ? 16 : 128), 0.2, {0.01, 0.0, 0.0});
      CHECK(two_sided_volume(r.set) == doctest::Approx(r.ray_volume).epsilon(1e-13));
      CHECK(std::abs(r.ray_volume - v.measure()) <= 1e-3 * v.measure());
    }
  }
  SUBCASE("leaving the eps-regime is reported") {
    const VoxelSet v = voxel_star(2, 1.0 / 64, [](const Point& x) { return 0.6 * x[0] * x[0]; });
    CHECK_THROWS_AS(radial_rearrange(v, SphereGrid::make(2, 64), 0.2), PreconditionError);
  }
}

TEST_CASE("prelem transport from the ray profiles") {
  std::mt19937_64 rng(21);
  for (int n : {2, 3}) {
    const VoxelSet v = voxel_star(n, n == 3 ? 1.0 / 24 : 1.0 / 64, random_profile(n, rng, 0.06));
    const Rearrangement r = radial_rearrange(v, SphereGrid::make(n, n == 3 ? 12 : 96), 0.2);
    const RadialTransport T = build_radial_transport(r.rays, r.set);
    for (const RayMap& ray : T.rays) {
      CHECK(std::abs(ray.source_mass() - ray.target_mass()) <= 1e-10);
      if (ray.empty()) continue;
      // Points of E'' \ E' move away from the unit sphere's inside: |Phi(y)| >= |y|.
      const double lo = ray.source().breaks.front(), hi = ray.source().breaks.back();
      for (double s : {0.1, 0.5, 0.9}) CHECK(ray(lo + s * (hi - lo)) >= lo + s * (hi - lo) - 1e-12);
    }
    std::normal_distribution<double> G;
    for (int k = 0; k < 5; ++k) {
      const Point a{2 * G(rng), 2 * G(rng), n == 3 ? 2 * G(rng) : 0.0};
      auto f = [&](const Point& y) { return 2.0 + std::cos(dot(a, y)); };
      const auto [lhs, rhs] = pushforward_pair(T, f, 20000, 500 + k);
      CHECK(std::abs(lhs - rhs) <= 0.01 * std::abs(rhs));
    }
  }
}

TEST_CASE("barycenter adjustment") {
  const double eps = 0.2;
  SUBCASE("centred ball") {
    const VoxelSet v = voxel_star(3, 1.0 / 24, [](const Point&) { return 0.0; }, {}, 1.3);
    const BarycenterResult b = adjust_barycenter(v, eps, SphereGrid::make(3, 12));
    CHECK(b.iterations == 0);
    CHECK(norm(b.z) == 0.0);
    CHECK(b.boundary_inward());
  }
  SUBCASE("mirror symmetry keeps the first coordinate at zero") {
    const VoxelSet v = voxel_star(2, 1.0 / 64, [](const Point& x) { return 0.04 * x[0] * x[0] + 0.03 * x[1] * x[1] * x[1]; });
    const BarycenterResult b = adjust_barycenter(v, eps, SphereGrid::make(2, 128));
    CHECK(b.residual <= 1e-4);
    CHECK(std::abs(b.z[0]) <= 1e-4);
    CHECK(std::abs(b.z[1]) > 1e-3);
  }
  SUBCASE("graph set with degree-two and some degree-one content") {
    const VoxelSet v = voxel_star(3, 1.0 / 24, [](const Point& x) {
      return 0.05 * (std::sqrt(5 / (16 * kPi)) * (3 * x[2] * x[2] - 1) + 0.2 * std::sqrt(3 / (4 * kPi)) * x[0]);
    });
    const BarycenterResult b = adjust_barycenter(v, eps, SphereGrid::make(3, 12));
    CHECK(b.residual <= 1e-4);
    CHECK(norm(graph_barycenter(b.consolidated.set) - b.z) <= 1e-4);
    CHECK(norm(b.z) <= eps / 2);
    REQUIRE(b.boundary.size() == 6);
    CHECK(b.boundary_inward());
  }
  SUBCASE("an exhausted iteration budget is an error") {
    const VoxelSet v = voxel_star(2, 1.0 / 64, [](const Point& x) { return 0.05 * x[0] * x[0] * x[0]; }, {0.05, 0, 0});
    BarycenterOptions o;
    o.max_iter = 1;
    o.tol = 1e-12;
    try {
      adjust_barycenter(v, eps, SphereGrid::make(2, 64), {}, o);
      FAIL("expected a convergence error");
    } catch (const ConvergenceError& e) {
      CHECK(e.residual() > 1e-12);
    }
  }
  SUBCASE("consolidated sets depend continuously on the centre") {
    const VoxelSet v = voxel_star(2, 1.0 / 128, [](const Point& x) { return 0.04 * x[0] * x[1] + 0.02 * x[1]; });
    auto g = SphereGrid::make(2, 128);
    auto mean_u = [&](const Point& z) {
      const GraphSet e = consolidate(radial_rearrange(v, g, eps, z).set).set;
      std::vector<double> u(g->size(), 0.0);
      for (const GraphCell& c : e.cells()) u[c.node] += c.weight / g->weight(c.node) * c.u;
      return u;
    };
    const auto u0 = mean_u({0.01, 0.0, 0.0});
    const auto u1 = mean_u({0.011, 0.0, 0.0});
    double diff = 0.0;
    for (std::size_t j = 0; j < u0.size(); ++j) diff += std::abs(u1[j] - u0[j]) / u0.size();
    CHECK(diff <= 2e-3);
  }
}

TEST_CASE("reduction pipeline") {
  SUBCASE("voxel ball") {
    const KernelParams p(3, 2.0);
    const VoxelSet v = voxel_star(3, 1.0 / 24, [](const Point&) { return 0.0; }, {}, 1.3);
    const ReductionReport r = reduce_pipeline(v, p);
    CHECK(r.branch == "nearly-spherical");
    CHECK(r.passed());
    CHECK(norm(r.z) <= 1e-2);
    CHECK(r.truncation->moved_volume() == 0.0);
    const auto j = to_json(r);
    CHECK(j["passed"].get<bool>());
    CHECK(j["checks"].size() == r.checks.size());
  }
  SUBCASE("degree-two perturbation") {
    const KernelParams p(3, 2.0);
    const VoxelSet v = voxel_star(3, 1.0 / 24, [](const Point& x) {
      return 0.1 * std::sqrt(5 / (16 * kPi)) * (3 * x[2] * x[2] - 1);
    });
    const ReductionReport r = reduce_pipeline(v, p);
    REQUIRE(r.branch == "nearly-spherical");
    for (const auto& c : r.checks) {
      INFO(c.name << ": " << c.lhs << " vs " << c.rhs << " tol " << c.tol);
      CHECK(c.passed);
    }
    CHECK(r.find("final: D(Ẽ) <= 2 D(E)") != nullptr);
    CHECK(r.find("final: δ(E)/6 <= |ẼΔB|") != nullptr);
  }
  SUBCASE("two far half-discs take the large-asymmetry branch") {
    const KernelParams p(2, 1.5);
    const Lattice lat = Lattice::covering(2, 1.0 / 32, {-4, -1.2, 0}, {4, 1.2, 0});
    const VoxelSet v = fit_volume(lat, [](const Point& x, double s) {
      return (distance(x, {-2.5, 0, 0}) < s && x[0] < -2.5) || (distance(x, {2.5, 0, 0}) < s && x[0] > 2.5);
    });
    const ReductionReport r = reduce_pipeline(v, p);
    CHECK(r.branch == "large-asymmetry");
    CHECK(r.passed());
    CHECK(r.input_asymmetry.delta == doctest::Approx(kPi).epsilon(0.02));
    // delta < 2(omega - xi): no sparse comparison.
    CHECK(r.checks.size() == 1);
  }
  SUBCASE("scattered squares exceed the sparse-set bound") {
    const KernelParams p(2, 1.5);
    const double side = std::sqrt(kPi / 16);
    const Lattice lat = Lattice::covering(2, 1.0 / 64, {-4.5, -4.5, 0}, {4.5, 4.5, 0});
    // Staggered centres so the squares gain cells at different scales.
    const VoxelSet v = fit_volume(lat, [&](const Point& x, double s) {
      for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 4; ++k)
          if (std::abs(x[0] - (-3.75 + 2.5 * i + 0.0031 * k)) < s * side / 2 &&
              std::abs(x[1] - (-3.75 + 2.5 * k + 0.0017 * i)) < s * side / 2)
            return true;
      return false;
    });
    ReductionOptions o;
    const ReductionReport r = reduce_pipeline(v, p, o);
    CHECK(r.branch == "large-asymmetry");
    REQUIRE(r.checks.size() == 2);
    CHECK(r.input_asymmetry.delta >= 2 * (kPi - o.xi));
    CHECK(r.checks[1].lhs == doctest::Approx(sparse_deficit_bound(p)));
    CHECK(r.passed());
  }
}

TEST_CASE("stage inequalities on random admissible inputs") {
  const KernelParams p(2, 1.5);
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int rep = 0; rep < 10; ++rep) {
    const double amp = 0.02 + 0.02 * (U(rng) + 1.0);
    const VoxelSet v = voxel_star(2, 1.0 / 64, random_profile(2, rng, amp), {0.05 * U(rng), 0.05 * U(rng), 0.0});
    const ReductionReport r = reduce_pipeline(v, p);
    INFO("input " << rep << " amplitude " << amp);
    REQUIRE(r.branch == "nearly-spherical");
    for (const auto& c : r.checks) {
      INFO(c.name << ": " << c.lhs << " vs " << c.rhs << " tol " << c.tol);
      CHECK(c.passed);
    }
  }
}
