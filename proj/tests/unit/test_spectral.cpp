#include <cmath>
#include <numbers>
#include <random>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "rieszstab/energy.hpp"
#include "rieszstab/errors.hpp"
#include "rieszstab/spectral.hpp"

using namespace rieszstab;
constexpr double kPi = std::numbers::pi;

namespace {

// Newtonian potential on S^2 has eigenvalues 4 pi / (2k+1) (Funk–Hecke), so
// the N=3, alpha=2 seminorm eigenvalues are 8 pi - 8 pi/(2k+1).
double mu_newton(int k) { return 8 * kPi - 8 * kPi / (2 * k + 1); }

std::vector<double> combo(const HarmonicBasis& b, int kmin, int kmax, std::mt19937_64& rng, double decay) {
  std::normal_distribution<double> g;
  std::vector<double> u(b.grid().size(), 0.0);
  for (std::size_t f = b.offset(kmin); f < b.offset(kmax + 1); ++f) {
    const double c = g(rng) / std::pow(1.0 + b.degree(f), decay);
    for (std::size_t j = 0; j < u.size(); ++j) u[j] += c * b.value(f, j);
  }
  return u;
}

void scale_sup(std::vector<double>& u, double sup) {
  double m = 0;
  for (double v : u) m = std::max(m, std::abs(v));
  for (double& v : u) v *= sup / m;
}

double l2(const std::vector<double>& u, const SphereGrid& g) {
  double s = 0;
  for (std::size_t j = 0; j < u.size(); ++j) s += g.weight(j) * u[j] * u[j];
  return s;
}

}  // namespace

TEST_CASE("basis is orthonormal up to degree 8") {
  for (int n : {2, 3}) {
    auto g = SphereGrid::make(n, n == 2 ? 64 : 16);
    const HarmonicBasis b = build_basis(g, 8);
    CHECK(b.size() == (n == 2 ? 17u : 81u));
    double worst = 0;
    for (std::size_t f1 = 0; f1 < b.size(); ++f1)
      for (std::size_t f2 = 0; f2 < b.size(); ++f2) {
        double s = 0;
        for (std::size_t j = 0; j < g->size(); ++j) s += g->weight(j) * b.value(f1, j) * b.value(f2, j);
        worst = std::max(worst, std::abs(s - (f1 == f2)));
      }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("low-degree basis functions") {
  auto g = SphereGrid::make(3, 12);
  const HarmonicBasis b = build_basis(g, 1);
  const double omega = 4 * kPi / 3;
  for (std::size_t j = 0; j < g->size(); ++j) {
    CHECK(b.value(0, j) == doctest::Approx(1 / std::sqrt(3 * omega)).epsilon(1e-14));
    for (int i = 0; i < 3; ++i) CHECK(b.value(1 + i, j) == doctest::Approx(g->node(j)[i] / std::sqrt(omega)).scale(1).epsilon(1e-13));
  }
  auto c = SphereGrid::make(2, 16);
  const HarmonicBasis b2 = build_basis(c, 1);
  for (std::size_t j = 0; j < c->size(); ++j) {
    CHECK(b2.value(0, j) == doctest::Approx(1 / std::sqrt(2 * kPi)));
    CHECK(b2.value(1, j) == doctest::Approx(c->node(j)[0] / std::sqrt(kPi)).scale(1));
    CHECK(b2.value(2, j) == doctest::Approx(c->node(j)[1] / std::sqrt(kPi)).scale(1));
  }
}

TEST_CASE("under-resolved grid is rejected") {
  CHECK_THROWS_AS(build_basis(SphereGrid::make(3, 4), 8), DomainError);
  CHECK_THROWS_AS(build_basis(SphereGrid::make(2, 10), 6), DomainError);
}

TEST_CASE("analysis of single modes and constants") {
  auto g = SphereGrid::make(3, 16);
  const HarmonicBasis b = build_basis(g, 6);
  const Spectrum s = analyze(b.function(b.offset(2)), b);
  for (const auto& c : s.coefficients) {
    if (c.k == 2 && c.i == 1) CHECK(c.a == doctest::Approx(1.0).epsilon(1e-6));
    else CHECK(std::abs(c.a) <= 1e-6);
  }
  const Spectrum sc = analyze(std::vector<double>(g->size(), 0.3), b);
  CHECK(sc.coefficient(0, 1) == doctest::Approx(0.3 * std::sqrt(4 * kPi)).epsilon(1e-12));
  for (const auto& c : sc.coefficients)
    if (c.k > 0) CHECK(std::abs(c.a) <= 1e-12);
}

TEST_CASE("Parseval with an independently computed tail") {
  auto g = SphereGrid::make(3, 20);
  const HarmonicBasis full = build_basis(g, 14);
  const HarmonicBasis low = build_basis(g, 6);
  std::mt19937_64 rng(7);
  const std::vector<double> u = combo(full, 0, 14, rng, 1.0);
  const Spectrum s = analyze(u, low);
  std::vector<double> tail = u;
  for (std::size_t f = 0; f < low.size(); ++f)
    for (std::size_t j = 0; j < u.size(); ++j) tail[j] -= s.coefficients[f].a * low.value(f, j);
  CHECK(s.residual_norm == doctest::Approx(std::sqrt(l2(tail, *g))).epsilon(1e-8));
  double sum = s.residual_norm * s.residual_norm;
  for (const auto& c : s.coefficients) sum += c.a * c.a;
  CHECK(sum == doctest::Approx(s.l2_norm * s.l2_norm).epsilon(1e-6));
  // Fully resolved: nothing left above K.
  CHECK(analyze(u, full).residual_norm < 1e-6 * s.l2_norm);
}

TEST_CASE("seminorm vanishes on constants") {
  for (int n : {2, 3}) {
    auto g = SphereGrid::make(n, n == 2 ? 64 : 12);
    KernelParams p(n, 1.5);
    CHECK(seminorm_direct(std::vector<double>(g->size(), 2.5), *g, p) == 0.0);
  }
}

TEST_CASE("seminorm of harmonics matches eigenvalues") {
  KernelParams p(3, 2.0);
  auto g = SphereGrid::make(3, 24);
  const HarmonicBasis b = build_basis(g, 6);
  CHECK(seminorm_direct(b.function(b.offset(1)), *g, p) == doctest::Approx(16 * kPi / 3).epsilon(0.02));
  for (int k = 1; k <= 6; ++k) {
    CHECK(mu(k, p) == doctest::Approx(mu_newton(k)).epsilon(1e-12));
    for (int i = 0; i < b.multiplicity(k); ++i) {
      const double r = seminorm_direct(b.function(b.offset(k) + i), *g, p) / mu_newton(k);
      CHECK(r >= 0.98);
      CHECK(r <= 1.02);
    }
  }
  for (double a : {1.2, 1.8}) {
    KernelParams q(2, a);
    auto c = SphereGrid::make(2, 256);
    const HarmonicBasis bc = build_basis(c, 6);
    for (int k = 1; k <= 6; ++k)
      for (int i = 0; i < 2; ++i) {
        const double r = seminorm_direct(bc.function(bc.offset(k) + i), *c, q) / mu(k, q);
        CHECK(r >= 0.98);
        CHECK(r <= 1.02);
      }
  }
}

TEST_CASE("seminorm is invariant under joint rotation") {
  KernelParams p(3, 1.6);
  auto g = SphereGrid::make(3, 14);
  const double c1 = std::cos(0.7), s1 = std::sin(0.7), c2 = std::cos(-1.1), s2 = std::sin(-1.1);
  // Rz(0.7) * Rx(-1.1)
  const std::array<double, 9> rot{c1, -s1 * c2, s1 * s2, s1, c1 * c2, -c1 * s2, 0, s2, c2};
  auto gr = g->rotated(rot);
  std::vector<double> u(g->size());
  for (std::size_t j = 0; j < u.size(); ++j) {
    const Point& x = g->node(j);
    u[j] = std::sin(2 * x[0]) + x[1] * x[2] - 0.3 * x[2];
  }
  const double a = seminorm_direct(u, *g, p);
  const double b = seminorm_direct(u, *gr, p);
  CHECK(std::abs(a - b) <= 1e-8);
}

TEST_CASE("direct and spectral seminorms agree on random smooth data") {
  KernelParams p(3, 2.0);
  auto g = SphereGrid::make(3, 32);
  const HarmonicBasis b = build_basis(g, 12);
  std::mt19937_64 rng(11);
  const std::vector<double> u = combo(b, 0, 12, rng, 1.5);
  const Spectrum s = analyze(u, b);
  CHECK(seminorm_spectral(s, p) == doctest::Approx(seminorm_direct(u, *g, p)).epsilon(0.03));
}

TEST_CASE("spectral seminorm and second variation") {
  KernelParams p(3, 2.0);
  auto g = SphereGrid::make(3, 10);
  const HarmonicBasis b = build_basis(g, 4);
  Spectrum zero = analyze(std::vector<double>(g->size(), 0.0), b);
  CHECK(seminorm_spectral(zero, p) == 0.0);
  CHECK(seminorm_spectral(analyze(b.function(1), b), p) == doctest::Approx(mu(1, p)).epsilon(1e-10));
  for (int i = 0; i < 3; ++i) CHECK(std::abs(second_variation(analyze(b.function(1 + i), b), p)) < 1e-12);
  const Spectrum y2 = analyze(b.function(b.offset(2)), b);
  CHECK(second_variation(y2, p) == doctest::Approx((mu_newton(2) - mu_newton(1)) / 2).epsilon(1e-10));
  std::vector<double> mix(g->size());
  const auto& f2 = b.function(b.offset(2) + 3);
  const auto& f4 = b.function(b.offset(4) + 1);
  for (std::size_t j = 0; j < mix.size(); ++j) mix[j] = 0.4 * f2[j] - 1.3 * f4[j];
  const double expect = 0.16 * (mu_newton(2) - mu_newton(1)) / 2 + 1.69 * (mu_newton(4) - mu_newton(1)) / 2;
  CHECK(second_variation(analyze(mix, b), p) == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("low modes are projected out") {
  auto g = SphereGrid::make(3, 10);
  const HarmonicBasis b = build_basis(g, 4);
  std::mt19937_64 rng(3);
  const Spectrum s = analyze(project_out_low_modes(combo(b, 0, 4, rng, 0.0), b), b);
  for (const auto& c : s.coefficients)
    if (c.k <= 1) CHECK(std::abs(c.a) < 1e-13);
}

TEST_CASE("polar decomposition identity") {
  KernelParams p(3, 2.0);
  auto g = SphereGrid::make(3, 24);
  const HarmonicBasis b = build_basis(g, 6);
  CHECK(fuglede_identity_residual(GraphSet(g, std::vector<double>(g->size(), 0.0)), 0.0, p) == 0.0);
  std::vector<double> y2 = b.function(b.offset(2));
  scale_sup(y2, 0.05);
  CHECK(fuglede_identity_residual(GraphSet(g, y2), 0.05, p) <= 1e-3);
  std::mt19937_64 rng(5);
  std::vector<double> u = combo(b, 2, 6, rng, 0.5);
  scale_sup(u, 0.05);
  const FugledeCheck fc = fuglede_identity(GraphSet(g, u), 0.05, p);
  CHECK(fc.residual <= 1e-3);
  CHECK(fc.g > 0);
  CHECK_THROWS_AS(fuglede_identity(GraphSet(g, u), 0.3, p), PreconditionError);
}

TEST_CASE("deficit is bounded below and above by the L2 norm on nearly spherical sets") {
  KernelParams p(3, 2.0);
  auto g = SphereGrid::make(3, 16);
  const HarmonicBasis b = build_basis(g, 6);
  std::mt19937_64 rng(2024);
  double lo = 1e300, hi = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> u = combo(b, 2, 6, rng, 0.0);
    scale_sup(u, 0.045);
    const GraphSet e = barycenter_correct(volume_normalize(GraphSet(g, u)));
    REQUIRE(e.max_abs_u() <= 0.05);
    const double ratio = deficit(e, p).value / l2(e.node_values(), *g);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  CHECK(lo >= 0.5 * (mu(2, p) - mu(1, p)) / 2);
  CHECK(hi <= 1.1 * (mu_limit(p) - mu(1, p)) / 2);
}

TEST_CASE("serialization") {
  auto g = SphereGrid::make(2, 16);
  const HarmonicBasis b = build_basis(g, 2);
  const auto j = nlohmann::json::parse(to_json(analyze(b.function(3), b)));
  CHECK(j["max_degree"] == 2);
  CHECK(j["coefficients"].size() == 5);
  CHECK(j["coefficients"][3]["k"] == 2);
  CHECK(j["coefficients"][3]["i"] == 1);
  CHECK(j["coefficients"][3]["a"].get<double>() == doctest::Approx(1.0));
  const std::string csv = eigenvalue_csv(KernelParams(3, 2.0), 2);
  CHECK(csv.rfind("k,mu_k\n0,0\n1,", 0) == 0);
}
