#include "rieszstab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rieszstab/energy.hpp"
#include "rieszstab/errors.hpp"
#include "rieszstab/quadrature.hpp"

namespace rieszstab {

namespace {

constexpr double kGramTolerance = 1e-6;

void check_gram(const HarmonicBasis& b) {
  const SphereGrid& g = b.grid();
  for (std::size_t f1 = 0; f1 < b.size(); ++f1) {
    for (std::size_t f2 = f1; f2 < b.size(); ++f2) {
      KahanSum s;
      for (std::size_t j = 0; j < g.size(); ++j) s.add(g.weight(j) * b.value(f1, j) * b.value(f2, j));
      const double expect = f1 == f2 ? 1.0 : 0.0;
      if (std::abs(s.value() - expect) > kGramTolerance) {
        std::ostringstream os;
        os << "grid " << g.describe() << " under-resolves degree " << b.max_degree() << ": <y_{"
           << b.degree(f1) << "," << b.index_in_degree(f1) << "}, y_{" << b.degree(f2) << ","
           << b.index_in_degree(f2) << "}> = " << s.value();
        throw DomainError(os.str());
      }
    }
  }
}

// Box integral in rescaled radii r = 1 + t s, rho = 1 + t sigma over [lo, hi]^2, divided by t^2.
double scaled_box(double q, double lo, double hi, double t, const KernelParams& p) {
  const double width = t * (hi - lo);
  const double ratio = width / (q * (1.0 + t * lo));
  const std::size_t order = ratio <= 0.1 ? 4 : ratio <= 0.3 ? 6 : ratio <= 1.0 ? 12 : 24;
  const GaussRule& rule = gauss_legendre(order);
  const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
  const int n = p.dim();
  const double e = -0.5 * p.decay();
  double sum = 0.0;
  for (std::size_t a = 0; a < order; ++a) {
    const double s = mid + half * rule.nodes[a];
    const double r = 1.0 + t * s;
    const double ra = std::pow(r, n - 1);
    for (std::size_t b = 0; b < order; ++b) {
      const double sg = mid + half * rule.nodes[b];
      const double rho = 1.0 + t * sg;
      const double d = t * (s - sg);
      sum += rule.weights[a] * rule.weights[b] * ra * std::pow(rho, n - 1) * std::pow(d * d + r * rho * q * q, e);
    }
  }
  return sum * half * half;
}

}  // namespace

int HarmonicBasis::multiplicity(int k) const {
  if (grid_->dim() == 2) return k == 0 ? 1 : 2;
  return 2 * k + 1;
}

HarmonicBasis build_basis(std::shared_ptr<const SphereGrid> grid, int max_degree) {
  if (!grid) throw PreconditionError("null grid");
  if (max_degree < 0) throw PreconditionError("max degree must be nonnegative");
  HarmonicBasis b;
  b.grid_ = grid;
  b.max_degree_ = max_degree;
  const std::size_t m = grid->size();
  auto push = [&](int k, int slot, std::vector<double> v) {
    b.degree_.push_back(k);
    b.slot_.push_back(slot);
    b.values_.push_back(std::move(v));
  };
  const double pi = std::numbers::pi;
  for (int k = 0; k <= max_degree; ++k) {
    b.offsets_.push_back(b.degree_.size());
    if (grid->dim() == 2) {
      if (k == 0) {
        push(0, 1, std::vector<double>(m, 1.0 / std::sqrt(2.0 * pi)));
        continue;
      }
      std::vector<double> c(m), s(m);
      for (std::size_t j = 0; j < m; ++j) {
        const double th = std::atan2(grid->node(j)[1], grid->node(j)[0]);
        c[j] = std::cos(k * th) / std::sqrt(pi);
        s[j] = std::sin(k * th) / std::sqrt(pi);
      }
      push(k, 1, std::move(c));
      push(k, 2, std::move(s));
      continue;
    }
    int slot = 1;
    for (int mm = 1; mm <= k; ++mm) {
      std::vector<double> c(m), s(m);
      for (std::size_t j = 0; j < m; ++j) {
        const Point& x = grid->node(j);
        const double th = std::acos(std::clamp(x[2], -1.0, 1.0));
        const double ph = std::atan2(x[1], x[0]);
        // std::sph_legendre carries the (-1)^m phase; drop it.
        const double y = (mm % 2 ? -1.0 : 1.0) * std::sqrt(2.0) * std::sph_legendre(k, mm, th);
        c[j] = y * std::cos(mm * ph);
        s[j] = y * std::sin(mm * ph);
      }
      push(k, slot++, std::move(c));
      push(k, slot++, std::move(s));
    }
    std::vector<double> z(m);
    for (std::size_t j = 0; j < m; ++j)
      z[j] = std::sph_legendre(k, 0, std::acos(std::clamp(grid->node(j)[2], -1.0, 1.0)));
    push(k, slot, std::move(z));
  }
  b.offsets_.push_back(b.degree_.size());
  check_gram(b);
  return b;
}

double Spectrum::coefficient(int k, int i) const {
  for (const auto& c : coefficients)
    if (c.k == k && c.i == i) return c.a;
  throw PreconditionError("no coefficient (" + std::to_string(k) + "," + std::to_string(i) + ")");
}

double Spectrum::degree_energy(int k) const {
  double s = 0.0;
  for (const auto& c : coefficients)
    if (c.k == k) s += c.a * c.a;
  return s;
}

Spectrum analyze(const std::vector<double>& u, const HarmonicBasis& basis) {
  const SphereGrid& g = basis.grid();
  if (u.size() != g.size()) throw PreconditionError("grid function size mismatch");
  Spectrum s;
  s.max_degree = basis.max_degree();
  KahanSum norm2;
  for (std::size_t j = 0; j < g.size(); ++j) norm2.add(g.weight(j) * u[j] * u[j]);
  KahanSum captured;
  for (std::size_t f = 0; f < basis.size(); ++f) {
    KahanSum a;
    for (std::size_t j = 0; j < g.size(); ++j) a.add(g.weight(j) * u[j] * basis.value(f, j));
    s.coefficients.push_back({basis.degree(f), basis.index_in_degree(f), a.value()});
    captured.add(a.value() * a.value());
  }
  s.l2_norm = std::sqrt(norm2.value());
  s.residual_norm = std::sqrt(std::max(0.0, norm2.value() - captured.value()));
  return s;
}

double seminorm_direct(const std::vector<double>& u, const SphereGrid& grid, const KernelParams& p) {
  if (grid.dim() != p.dim()) throw PreconditionError("grid and kernel dimensions differ");
  if (u.size() != grid.size()) throw PreconditionError("grid function size mismatch");
  const double e = -0.5 * p.decay();
  KahanSum sum;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point& x = grid.node(i);
    double row = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      if (j == i || u[i] == u[j]) continue;
      const Point d = x - grid.node(j);
      const double du = u[i] - u[j];
      row += grid.weight(j) * du * du * std::pow(dot(d, d), e);
    }
    sum.add(grid.weight(i) * row);
  }
  const std::vector<Point> grads = tangent_gradients(grid, u);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double g2 = dot(grads[i], grads[i]);
    if (g2 > 0.0) sum.add(grid.weight(i) * g2 * cap_gradient_integral(grid.weight(i), p));
  }
  return sum.value();
}

double seminorm_spectral(const Spectrum& s, const KernelParams& p) {
  KahanSum sum;
  for (const auto& c : s.coefficients)
    if (c.k > 0) sum.add(mu(c.k, p) * c.a * c.a);
  return sum.value();
}

double second_variation(const Spectrum& s, const KernelParams& p) {
  const double mu1 = mu(1, p);
  KahanSum sum;
  for (const auto& c : s.coefficients)
    if (c.k >= 2) sum.add((mu(c.k, p) - mu1) * c.a * c.a);
  return 0.5 * sum.value();
}

std::vector<double> project_out_low_modes(const std::vector<double>& u, const HarmonicBasis& basis) {
  const SphereGrid& g = basis.grid();
  if (u.size() != g.size()) throw PreconditionError("grid function size mismatch");
  std::vector<double> out = u;
  const std::size_t end = basis.max_degree() >= 1 ? basis.offset(2) : basis.size();
  for (std::size_t f = 0; f < end; ++f) {
    KahanSum a;
    for (std::size_t j = 0; j < g.size(); ++j) a.add(g.weight(j) * u[j] * basis.value(f, j));
    for (std::size_t j = 0; j < g.size(); ++j) out[j] -= a.value() * basis.value(f, j);
  }
  return out;
}

FugledeCheck fuglede_identity(const GraphSet& e0, double t, const KernelParams& p) {
  if (!(t >= 0.0 && t <= 0.2)) throw PreconditionError("identity check needs 0 <= t <= 0.2");
  if (e0.has_subcells()) throw PreconditionError("identity check needs one cell per node");
  FugledeCheck out;
  if (t == 0.0) {
    if (e0.max_abs_u() != 0.0) throw PreconditionError("t = 0 requires u = 0");
    return out;
  }
  const GraphSet e = volume_normalize(e0);
  const SphereGrid& grid = e.grid();
  const std::vector<double> u = e.node_values();
  std::vector<double> uh(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) uh[j] = u[j] / t;

  const ReferenceConstants& rc = ReferenceConstants::get(p);
  const int n = p.dim();
  const double a = p.alpha();

  KahanSum hgap;
  for (std::size_t j = 0; j < grid.size(); ++j)
    hgap.add(grid.weight(j) * -std::expm1((n + a) * std::log1p(t * uh[j])));
  out.h_gap = hgap.value();

  KahanSum g;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = i + 1; j < grid.size(); ++j) {
      if (uh[i] == uh[j]) continue;
      const double lo = std::min(uh[i], uh[j]), hi = std::max(uh[i], uh[j]);
      const double q = distance(grid.node(i), grid.node(j));
      g.add(2.0 * grid.weight(i) * grid.weight(j) * scaled_box(q, lo, hi, t, p));
    }
  }
  const std::vector<Point> grads = tangent_gradients(grid, uh);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double g2 = dot(grads[i], grads[i]);
    if (g2 > 0.0)
      g.add(grid.weight(i) * std::pow(1.0 + t * uh[i], n + a - 2.0) * cap_gradient_integral(grid.weight(i), p) * g2);
  }
  out.g = g.value();
  out.rhs = 0.5 * t * t * out.g + rc.ball_energy() / rc.sphere_area() * out.h_gap;
  out.lhs = deficit(e, p).value;
  out.residual = std::abs(out.lhs - out.rhs) / std::max(std::abs(out.lhs), 1e-300);
  return out;
}

double fuglede_identity_residual(const GraphSet& e, double t, const KernelParams& p) {
  return fuglede_identity(e, t, p).residual;
}

std::string to_json(const Spectrum& s) {
  nlohmann::ordered_json j;
  j["max_degree"] = s.max_degree;
  j["l2_norm"] = s.l2_norm;
  j["residual_norm"] = s.residual_norm;
  auto& arr = j["coefficients"] = nlohmann::ordered_json::array();
  for (const auto& c : s.coefficients) arr.push_back({{"k", c.k}, {"i", c.i}, {"a", c.a}});
  return j.dump(2);
}

std::string eigenvalue_csv(const KernelParams& p, int max_degree) {
  std::string out = "k,mu_k\n";
  char buf[64];
  for (int k = 0; k <= max_degree; ++k) {
    std::snprintf(buf, sizeof buf, "%d,%.17g\n", k, mu(k, p));
    out += buf;
  }
  return out;
}

}  // namespace rieszstab
