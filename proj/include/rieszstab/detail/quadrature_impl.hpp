#pragma once

#include <cmath>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rieszstab/errors.hpp"

namespace rieszstab {

template <class F>
double integrate_adaptive(F&& f, double a, double b, double rel_tol, double abs_tol) {
  if (b <= a) return 0.0;
  double err = 0.0;
  double l1 = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      f, a, b, 20, rel_tol, &err, &l1);
  const double allowed = std::max(abs_tol, rel_tol * std::max(std::abs(value), l1)) * 1e3;
  if (!std::isfinite(value) || err > allowed) {
    throw ConvergenceError("quadrature did not converge on [" + std::to_string(a) + ", " +
                               std::to_string(b) + "]",
                           err);
  }
  return value;
}

}  // namespace rieszstab
