#pragma once

#include <cstddef>
#include <vector>

namespace rieszstab {

// Gauss–Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Cached; valid for 1 <= n <= 256.
const GaussRule& gauss_legendre(std::size_t n);

// Adaptive Gauss–Kronrod on [a, b]. Throws ConvergenceError if the error
// estimate stays above max(abs_tol, rel_tol*|I|) * slack.
template <class F>
double integrate_adaptive(F&& f, double a, double b, double rel_tol = 1e-10, double abs_tol = 0.0);

}  // namespace rieszstab

#include "rieszstab/detail/quadrature_impl.hpp"
