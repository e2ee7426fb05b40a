#include "rieszstab/quadrature.hpp"

#include <array>
#include <mutex>

#include <boost/math/special_functions/legendre.hpp>

#include "rieszstab/errors.hpp"

namespace rieszstab {

namespace {

GaussRule build_rule(std::size_t n) {
  GaussRule rule;
  const auto zeros = boost::math::legendre_p_zeros<double>(static_cast<int>(n));
  // zeros holds the nonnegative roots in increasing order.
  for (auto it = zeros.rbegin(); it != zeros.rend(); ++it) {
    const double x = -*it;
    if (x == 0.0 && !rule.nodes.empty() && rule.nodes.back() == 0.0) continue;
    rule.nodes.push_back(x);
  }
  for (double x : zeros) {
    if (x == 0.0) continue;
    rule.nodes.push_back(x);
  }
  for (double x : rule.nodes) {
    const double d = boost::math::legendre_p_prime(static_cast<int>(n), x);
    rule.weights.push_back(2.0 / ((1.0 - x * x) * d * d));
  }
  return rule;
}

}  // namespace

const GaussRule& gauss_legendre(std::size_t n) {
  constexpr std::size_t kMax = 256;
  if (n < 1 || n > kMax) throw DomainError("Gauss-Legendre order out of range");
  static std::array<GaussRule, kMax + 1> rules;
  static std::array<std::once_flag, kMax + 1> flags;
  std::call_once(flags[n], [n] { rules[n] = build_rule(n); });
  return rules[n];
}

}  // namespace rieszstab
