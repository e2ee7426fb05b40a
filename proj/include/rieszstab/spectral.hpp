#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rieszstab/kernel.hpp"
#include "rieszstab/sets.hpp"
#include "rieszstab/sphere_grid.hpp"

namespace rieszstab {

// Real orthonormal harmonics sampled on a grid. Within degree k the order is
// (cos m.phi, sin m.phi) for m = 1..k, then the zonal function (N=3); for N=2
// cos k.theta then sin k.theta.
class HarmonicBasis {
 public:
  const SphereGrid& grid() const { return *grid_; }
  const std::shared_ptr<const SphereGrid>& grid_ptr() const { return grid_; }
  int max_degree() const noexcept { return max_degree_; }
  std::size_t size() const noexcept { return degree_.size(); }
  int degree(std::size_t f) const { return degree_[f]; }
  // Index of function f inside its degree, starting at 1.
  int index_in_degree(std::size_t f) const { return slot_[f]; }
  // First function of degree k.
  std::size_t offset(int k) const { return offsets_[k]; }
  int multiplicity(int k) const;
  double value(std::size_t f, std::size_t node) const { return values_[f][node]; }
  const std::vector<double>& function(std::size_t f) const { return values_[f]; }

  friend HarmonicBasis build_basis(std::shared_ptr<const SphereGrid> grid, int max_degree);

 private:
  std::shared_ptr<const SphereGrid> grid_;
  int max_degree_ = 0;
  std::vector<int> degree_;
  std::vector<int> slot_;
  std::vector<std::size_t> offsets_;
  std::vector<std::vector<double>> values_;
};

// Throws DomainError naming the first pair whose discrete inner product is off
// by more than 1e-6.
HarmonicBasis build_basis(std::shared_ptr<const SphereGrid> grid, int max_degree);

struct SpectralCoefficient {
  int k;
  int i;  // 1-based within degree
  double a;
};

struct Spectrum {
  int max_degree = 0;
  std::vector<SpectralCoefficient> coefficients;
  double l2_norm = 0.0;
  // L2 mass above max_degree.
  double residual_norm = 0.0;

  double coefficient(int k, int i) const;
  // Sum of a^2 over degree k.
  double degree_energy(int k) const;
};

Spectrum analyze(const std::vector<double>& u, const HarmonicBasis& basis);

double seminorm_direct(const std::vector<double>& u, const SphereGrid& grid, const KernelParams& p);
double seminorm_spectral(const Spectrum& s, const KernelParams& p);
double second_variation(const Spectrum& s, const KernelParams& p);

// Removes the degree 0 and 1 parts of u.
std::vector<double> project_out_low_modes(const std::vector<double>& u, const HarmonicBasis& basis);

// Relative residual of the polar-coordinate identity
//   F(B) - F(E) = (t^2/2) g(t) + F(B)/(N omega) (h(0) - h(t))
// for E written as u = t * uhat. The set is first scaled to unit-ball volume;
// the left side comes from `deficit`, g(t) from an independent quadrature in
// the rescaled radial variables.
struct FugledeCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double g = 0.0;
  double h_gap = 0.0;
  double residual = 0.0;
};
FugledeCheck fuglede_identity(const GraphSet& e, double t, const KernelParams& p);
double fuglede_identity_residual(const GraphSet& e, double t, const KernelParams& p);

std::string to_json(const Spectrum& s);
// Rows "k,mu_k" for k = 0..max_degree.
std::string eigenvalue_csv(const KernelParams& p, int max_degree);

}  // namespace rieszstab
