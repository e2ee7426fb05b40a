#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "rieszstab/energy.hpp"
#include "rieszstab/errors.hpp"
#include "rieszstab/quadrature.hpp"

namespace rieszstab {

namespace {

constexpr double kPi = std::numbers::pi;

struct BoxIntegrand {
  double q2;
  int dim;
  double half_decay;

  double operator()(double r, double rho) const {
    const double rr = r * rho;
    const double den = (r - rho) * (r - rho) + rr * q2;
    if (den <= 0.0) return 0.0;
    double num = 1.0;
    for (int k = 1; k < dim; ++k) num *= rr;
    return num * std::pow(den, -half_decay);
  }
};

boost::math::quadrature::tanh_sinh<double>& tanh_sinh_rule() {
  thread_local boost::math::quadrature::tanh_sinh<double> rule;
  return rule;
}

double inner_piece(const BoxIntegrand& f, double r, double a, double b) {
  if (b <= a) return 0.0;
  auto g = [&](double rho) { return f(r, rho); };
  double err = 0.0;
  const double v = tanh_sinh_rule().integrate(g, a, b, 1e-11, &err);
  return v;
}

double adaptive_box(const BoxIntegrand& f, double s1, double s2, double t1, double t2) {
  auto inner = [&](double r) {
    if (r > t1 && r < t2) return inner_piece(f, r, t1, r) + inner_piece(f, r, r, t2);
    return inner_piece(f, r, t1, t2);
  };
  double cuts[4] = {s1, s2, s2, s2};
  int n = 1;
  for (double t : {t1, t2})
    if (t > s1 && t < s2) cuts[n++] = t;
  if (n == 3 && cuts[1] > cuts[2]) std::swap(cuts[1], cuts[2]);
  cuts[n] = s2;
  // Endpoint singularities of the outer integrand sit at the cuts.
  double total = 0.0;
  for (int k = 0; k < n; ++k) {
    if (cuts[k + 1] <= cuts[k]) continue;
    double err = 0.0, l1 = 0.0;
    const double v = tanh_sinh_rule().integrate(inner, cuts[k], cuts[k + 1], 1e-10, &err, &l1);
    if (!std::isfinite(v) || err > 1e-7 * std::max(std::abs(v), l1))
      throw ConvergenceError("box quadrature did not converge on [" + std::to_string(cuts[k]) + ", " + std::to_string(cuts[k + 1]) + "]", err);
    total += v;
  }
  return total;
}

double gauss_box(const BoxIntegrand& f, double s1, double s2, double t1, double t2, std::size_t m) {
  const GaussRule& g = gauss_legendre(m);
  const double hr = 0.5 * (s2 - s1), cr = 0.5 * (s2 + s1);
  const double ht = 0.5 * (t2 - t1), ct = 0.5 * (t2 + t1);
  double total = 0.0;
  for (std::size_t a = 0; a < m; ++a) {
    const double r = cr + hr * g.nodes[a];
    double row = 0.0;
    for (std::size_t b = 0; b < m; ++b) row += g.weights[b] * f(r, ct + ht * g.nodes[b]);
    total += g.weights[a] * row;
  }
  return total * hr * ht;
}

// Gauss order for a box whose width is `ratio` times the distance to the
// nearest kernel singularity; 0 requests adaptive quadrature.
std::size_t gauss_order(double ratio) {
  if (ratio <= 0.1) return 3;
  if (ratio <= 0.25) return 4;
  if (ratio <= 0.5) return 6;
  if (ratio <= 1.0) return 10;
  if (ratio <= 2.0) return 16;
  return 0;
}


// J(c) = int_0^1 f(x) (c^2 + x^2)^(-d/2) dx, f the density of |x - y|/L for two
// uniform points of a flat patch of diameter L (disk for N=3, segment for N=2).
// Tabulated in log-log on [1e-9, 1e4], power-law tails outside.
class PatchProfile {
 public:
  explicit PatchProfile(const KernelParams& p) : dim_(p.dim()), d_(p.decay()) {
    const std::size_t m = 700;
    const double step = (kTmax - kTmin) / static_cast<double>(m - 1);
    std::vector<double> logj(m);
    for (std::size_t i = 0; i < m; ++i) logj[i] = std::log(direct(std::exp(kTmin + step * static_cast<double>(i))));
    jmin_ = std::exp(logj.front());
    jmax_ = std::exp(logj.back());
    spline_ = std::make_unique<boost::math::interpolators::cardinal_cubic_b_spline<double>>(logj.begin(), logj.end(), kTmin, step);
  }

  double operator()(double c) const {
    const double t = std::log(c);
    if (t >= kTmax) return jmax_ * std::pow(std::exp(kTmax) / c, d_);
    if (t > kTmin) return std::exp((*spline_)(t));
    // Small c: f(x) ~ a0 x^(k-1) near 0.
    const double cmin = std::exp(kTmin);
    const double k = dim_ == 3 ? 2.0 : 1.0, a0 = dim_ == 3 ? 8.0 : 2.0;
    if (d_ > k) return jmin_ + a0 * 0.5 * std::beta(0.5 * k, 0.5 * (d_ - k)) * (std::pow(c, k - d_) - std::pow(cmin, k - d_));
    if (d_ == k) return jmin_ + a0 * std::log(cmin / c);
    return jmin_;
  }

 private:
  static constexpr double kTmin = -20.723265836946411;  // log 1e-9
  static constexpr double kTmax = 9.2103403719761836;   // log 1e4

  double density(double x) const {
    if (dim_ == 2) return 2.0 * (1.0 - x);
    return 16.0 / kPi * x * (std::acos(x) - x * std::sqrt(std::max(0.0, 1.0 - x * x)));
  }

  double direct(double c) const {
    auto f = [&](double x) { return density(x) * std::pow(c * c + x * x, -0.5 * d_); };
    // Near x = 1 the disk density has a (1-x)^(3/2) edge.
    double err = 0.0;
    if (c >= 0.5) return integrate_adaptive(f, 0.0, 0.5, 1e-12, 1e-300) + tanh_sinh_rule().integrate(f, 0.5, 1.0, 1e-12, &err);
    const double tail = tanh_sinh_rule().integrate(f, 0.5, 1.0, 1e-12, &err);
    // [0, c] is smooth and tiny next to the rest;
    // log variable on [c, 1/2].
    const GaussRule& gl = gauss_legendre(20);
    double head = 0.0;
    for (std::size_t k = 0; k < gl.nodes.size(); ++k) head += gl.weights[k] * f(0.5 * c * (1.0 + gl.nodes[k]));
    auto g = [&](double t) {
      const double x = std::exp(t);
      return x * f(x);
    };
    return 0.5 * c * head + integrate_adaptive(g, std::log(c), std::log(0.5), 1e-12, 1e-300) + tail;
  }

  int dim_;
  double d_;
  double jmin_ = 0.0, jmax_ = 0.0;
  std::unique_ptr<boost::math::interpolators::cardinal_cubic_b_spline<double>> spline_;
};

const PatchProfile& patch_profile(const KernelParams& p) {
  static std::mutex mutex;
  static std::map<std::pair<int, double>, std::unique_ptr<PatchProfile>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[{p.dim(), p.alpha()}];
  if (!slot) slot = std::make_unique<PatchProfile>(p);
  return *slot;
}

}  // namespace

double radial_box_kernel(double q, double s1, double s2, double t1, double t2, const KernelParams& p) {
  if (!(s1 >= 0.0 && s2 >= s1 && t1 >= 0.0 && t2 >= t1 && q >= 0.0))
    throw DomainError("radial box kernel needs 0 <= s1 <= s2, 0 <= t1 <= t2, q >= 0");
  if (s2 == s1 || t2 == t1) return 0.0;
  const double overlap = std::min(s2, t2) - std::max(s1, t1);
  if (q == 0.0 && overlap > 0.0 && p.decay() >= 1.0)
    throw DomainError("radial box kernel diverges: q = 0 on overlapping intervals with N - alpha >= 1");
  const BoxIntegrand f{q * q, p.dim(), 0.5 * p.decay()};
  const double width = std::max(s2 - s1, t2 - t1);
  const double gap = std::max(0.0, -overlap);
  const double reach = std::sqrt(gap * gap + s1 * t1 * q * q);
  const std::size_t m = reach > 0.0 ? gauss_order(width / reach) : 0;
  if (m > 0) return gauss_box(f, s1, s2, t1, t2, m);
  return adaptive_box(f, s1, s2, t1, t2);
}

double patch_box_kernel(double patch, double a, double b, const KernelParams& p) {
  if (!(patch > 0.0)) throw DomainError("patch measure must be positive");
  if (a == b) return 0.0;
  const double lo = std::min(a, b), hi = std::max(a, b);
  if (!(lo > 0.0)) throw DomainError("patch box kernel needs positive radii");
  const PatchProfile& prof = patch_profile(p);
  const int n = p.dim();
  const double d = p.decay();
  // Flat patch: diameter of the disk (N=3) or length of the segment (N=2).
  const double len = n == 3 ? 2.0 * std::sqrt(patch / kPi) : patch;
  const GaussRule& gl = gauss_legendre(10);
  // r = m + delta/2, rho = m - delta/2; the kernel is even in delta.
  auto slice = [&](double delta) {
    const double m1 = lo + 0.5 * delta, m2 = hi - 0.5 * delta;
    if (m2 <= m1) return 0.0;
    const double hm = 0.5 * (m2 - m1), cm = 0.5 * (m2 + m1);
    double s = 0.0;
    for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
      const double m = cm + hm * gl.nodes[k];
      const double rr = m * m - 0.25 * delta * delta;
      const double ls = len * std::sqrt(rr);
      s += gl.weights[k] * std::pow(rr, n - 1) * std::pow(ls, -d) * prof(delta / ls);
    }
    return s * hm;
  };
  double err = 0.0;
  return 2.0 * tanh_sinh_rule().integrate(slice, 0.0, hi - lo, 1e-10, &err);
}

double cap_gradient_integral(double patch, const KernelParams& p) {
  static std::mutex mutex;
  static std::map<std::tuple<int, double, double>, double> cache;
  const auto key = std::make_tuple(p.dim(), p.alpha(), patch);
  {
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  const double a = p.alpha();
  double value = 0.0;
  if (p.dim() == 2) {
    const double top = 0.5 * patch;
    auto g = [&](double phi) {
      const double s = std::sin(phi);
      return s * s * std::pow(2.0 * std::sin(0.5 * phi), a - 2.0);
    };
    value = 2.0 * integrate_adaptive(g, 0.0, top, 1e-10, 1e-300);
  } else {
    const double top = std::acos(std::max(-1.0, 1.0 - patch / (2.0 * kPi)));
    auto g = [&](double th) {
      const double s = std::sin(th);
      return s * s * s * std::pow(2.0 * std::sin(0.5 * th), a - 3.0);
    };
    value = kPi * integrate_adaptive(g, 0.0, top, 1e-10, 1e-300);
  }
  std::lock_guard<std::mutex> lock(mutex);
  cache[key] = value;
  return value;
}

}  // namespace rieszstab
