#include "rieszstab/kernel.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

// Boost 1.74's pchip calls isnan unqualified.
namespace boost::math::interpolators {
using std::isnan;
}
#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "rieszstab/errors.hpp"
#include "rieszstab/quadrature.hpp"

namespace rieszstab {

namespace {
constexpr double kPi = std::numbers::pi;
}

KernelParams::KernelParams(int dim, double alpha) : dim_(dim), alpha_(alpha) {
  if (dim < 2) throw DomainError("kernel dimension must be at least 2");
  if (!(alpha > 1.0 && alpha < dim)) {
    std::ostringstream os;
    os << "kernel exponent alpha=" << alpha << " outside (1, " << dim << ")";
    throw DomainError(os.str());
  }
}

double KernelParams::kernel(double r) const { return std::pow(r, alpha_ - dim_); }

double unit_ball_volume(int n) {
  if (n < 1) throw DomainError("invalid dimension");
  return std::exp(0.5 * n * std::log(kPi) - std::lgamma(0.5 * n + 1.0));
}

double unit_sphere_area(int n) { return n * unit_ball_volume(n); }

double cap_measure(double c, int n) {
  if (c <= -1.0) return 0.0;
  if (c >= 1.0) return unit_sphere_area(n);
  if (n == 2) return 2.0 * (kPi - std::acos(c));
  if (n == 3) return 2.0 * kPi * (1.0 + c);
  const double b = 0.5 * (n - 1);
  const double full = std::pow(2.0, n - 2) * boost::math::beta(b, b);
  return unit_sphere_area(n - 1) * full * boost::math::ibeta(b, b, 0.5 * (1.0 + c));
}

double psi(double t, const KernelParams& p) {
  if (!(t >= 0.0)) throw DomainError("psi requires t >= 0");
  const int n = p.dim();
  const double a = p.alpha();
  const double area = unit_sphere_area(n);
  if (t == 0.0) return area / a;
  // Spherical shells of radius s around the evaluation point; the part of
  // each shell inside B is a cap.
  double value = t < 1.0 ? area * std::pow(1.0 - t, a) / a : 0.0;
  auto integrand = [&](double s) {
    if (s <= 0.0) return 0.0;
    const double c = (1.0 - t * t - s * s) / (2.0 * t * s);
    return std::pow(s, a - 1.0) * cap_measure(c, n);
  };
  thread_local boost::math::quadrature::tanh_sinh<double> rule;
  double err = 0.0, l1 = 0.0;
  const double part = rule.integrate(integrand, std::abs(1.0 - t), 1.0 + t, 1e-11, &err, &l1);
  if (!std::isfinite(part) || err > 1e-8 * l1) throw ConvergenceError("psi quadrature did not converge", err);
  return value + part;
}

double psi_derivative(double t, const KernelParams& p) {
  if (!(t > 0.0)) throw DomainError("psi_derivative requires t > 0");
  const double h = std::min(1e-3, 0.5 * t);
  return (psi(t + h, p) - psi(t - h, p)) / (2.0 * h);
}

double psi_scaled(double t, double r, const KernelParams& p) {
  return std::pow(r, p.alpha()) * psi(t / r, p);
}

double tau1(double m, const KernelParams& p) {
  if (!(m >= 0.0)) throw DomainError("tau1 requires m >= 0");
  const int n = p.dim();
  const double a = p.alpha();
  const double w = unit_ball_volume(n);
  return n * std::pow(w, 1.0 - a / n) / a * std::pow(m, a / n);
}

double tau2(double m, const KernelParams& p) {
  if (!(m >= 0.0)) throw DomainError("tau2 requires m >= 0");
  const int n = p.dim();
  const double a = p.alpha();
  const double w = unit_ball_volume(n);
  const double r = std::pow(m / w, 1.0 / n);
  const double inner = std::pow(std::min(r, 1.0), a - 1.0) / (a - 1.0);
  const double outer = std::max(0.0, (std::pow(r, a) - 1.0) / a);
  return (n - a + 1.0) * n * w * (inner + outer);
}

namespace {

double mu_prefactor(const KernelParams& p) {
  const int n = p.dim();
  const double a = p.alpha();
  return std::pow(2.0, a) * std::pow(kPi, 0.5 * (n - 1)) *
         std::exp(std::lgamma(0.5 * (a - 1.0)) - std::lgamma(0.5 * (n - a)));
}

double gamma_ratio(double k, const KernelParams& p) {
  const int n = p.dim();
  const double a = p.alpha();
  return std::exp(std::lgamma(k + 0.5 * (n - a)) - std::lgamma(k + 0.5 * (n - 2 + a)));
}

}  // namespace

double mu(int k, const KernelParams& p) {
  if (k < 0) throw DomainError("mu requires k >= 0");
  if (k == 0) return 0.0;
  return mu_prefactor(p) * (gamma_ratio(0, p) - gamma_ratio(k, p));
}

double mu_limit(const KernelParams& p) { return mu_prefactor(p) * gamma_ratio(0, p); }

double ball_energy(const KernelParams& p) {
  const int n = p.dim();
  const double a = p.alpha();
  return unit_sphere_area(n) * mu(1, p) / (a * (n + a));
}

double ball_energy_quadrature(const KernelParams& p) {
  const int n = p.dim();
  auto f = [&](double t) { return psi(t, p) * std::pow(t, n - 1); };
  return unit_sphere_area(n) * integrate_adaptive(f, 0.0, 1.0, 1e-10);
}

double sparse_deficit_bound(const KernelParams& p) {
  const int n = p.dim();
  const double w = unit_ball_volume(n);
  return w * w / std::pow(5.0, n) * (1.0 - std::pow(2.0, p.alpha() - n));
}

ReferenceConstants::ReferenceConstants(const KernelParams& p)
    : params_(p),
      omega_(unit_ball_volume(p.dim())),
      sphere_area_(unit_sphere_area(p.dim())),
      ball_energy_(rieszstab::ball_energy(p)),
      ball_energy_check_(ball_energy_quadrature(p)) {
  if (std::abs(ball_energy_check_ - ball_energy_) > 5e-3 * ball_energy_) {
    std::ostringstream os;
    os << "ball energy cross-check failed: eigenvalue identity " << ball_energy_
       << " vs quadrature " << ball_energy_check_;
    throw ConfigurationError(os.str());
  }
  const double step = kTableEnd / kTableSteps;
  std::vector<double> xs(kTableSteps + 1);
  table_.resize(kTableSteps + 1);
  for (int i = 0; i <= kTableSteps; ++i) {
    xs[i] = i * step;
    table_[i] = rieszstab::psi(xs[i], p);
  }
  std::vector<double> ys = table_;
  interp_ = std::make_unique<boost::math::interpolators::pchip<std::vector<double>>>(
      std::move(xs), std::move(ys));
}

ReferenceConstants::~ReferenceConstants() = default;

const ReferenceConstants& ReferenceConstants::get(const KernelParams& p) {
  static std::mutex mutex;
  static std::map<std::pair<int, double>, std::unique_ptr<ReferenceConstants>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[{p.dim(), p.alpha()}];
  if (!slot) slot = std::make_unique<ReferenceConstants>(p);
  return *slot;
}

double ReferenceConstants::psi(double t) const {
  if (!(t >= 0.0)) throw DomainError("psi requires t >= 0");
  if (t >= kTableEnd) return rieszstab::psi(t, params_);
  return (*interp_)(t);
}

double ReferenceConstants::psi_scaled(double t, double r) const {
  return std::pow(r, params_.alpha()) * psi(t / r);
}

}  // namespace rieszstab
