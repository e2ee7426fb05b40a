#pragma once

#include <memory>
#include <vector>

#include "rieszstab/geometry.hpp"
#include "rieszstab/sets.hpp"
#include "rieszstab/sphere_grid.hpp"

namespace rieszstab {

// Piecewise-constant density on a ray: density[k] on (breaks[k], breaks[k+1]).
struct RayProfile {
  std::vector<double> breaks;
  std::vector<double> density;

  // int_a^b density(t) t^(N-1) dt
  double mass(int dim, double a, double b) const;
  double mass(int dim) const;
};

// Occupancy profile of a list of disjoint radial intervals with density 1.
RayProfile interval_profile(const std::vector<std::pair<double, double>>& intervals);
// Pointwise max(a - b, 0).
RayProfile positive_part(const RayProfile& a, const RayProfile& b);
// Pointwise mean.
RayProfile mean_profile(const std::vector<RayProfile>& rays);

// Monotone map t -> phi(t) with equal t^(N-1)-weighted cumulative mass of
// source and target.
class RayMap {
 public:
  RayMap() = default;
  RayMap(int dim, RayProfile source, RayProfile target);

  bool empty() const noexcept { return source_mass_ == 0.0 && target_mass_ == 0.0; }
  double source_mass() const noexcept { return source_mass_; }
  double target_mass() const noexcept { return target_mass_; }
  const RayProfile& source() const noexcept { return source_; }
  const RayProfile& target() const noexcept { return target_; }
  // Defined on the support of the source; clamps outside it.
  double operator()(double t) const;

 private:
  double cumulative_source(double t) const;
  double target_at(double m) const;

  int dim_ = 3;
  RayProfile source_, target_;
  std::vector<double> source_cum_, target_cum_;
  double source_mass_ = 0.0, target_mass_ = 0.0;
};

// Phi(y) = center + phi_j(|y - center|) (y - center)/|y - center|, j the grid
// cell of the direction. Ray masses are per unit solid angle; the node weight
// scales both sides alike.
struct RadialTransport {
  std::shared_ptr<const SphereGrid> grid;
  Point center{};
  std::vector<RayMap> rays;

  Point apply(const Point& y) const;
  // max_j w_j |source mass - target mass|
  double max_mass_mismatch() const;
  bool is_identity() const;
  // sum_j w_j * int |phi_j(t) - t| source_j(t) t^(N-1) dt
  double displacement() const;
};

// Per-ray mismatch above this raises PreconditionError.
inline constexpr double kTransportMassTolerance = 1e-8;

// Consolidation map from (E'' \ E_z) onto (E_z \ E''), E_z the consolidated
// set on the same grid and centre.
RadialTransport build_radial_transport(const TwoSidedGraphSet& t, const GraphSet& g);

// Knothe-type map from (E'' \ E') onto (E' \ E''), with E' seen through the
// per-node ray profiles it was rearranged from.
RadialTransport build_radial_transport(const std::vector<RayProfile>& e_prime, const TwoSidedGraphSet& t);

// Per-node profiles of graph-type sets.
RayProfile ray_profile(const TwoSidedGraphSet& t, std::size_t node);
RayProfile ray_profile(const GraphSet& g, std::size_t node);

}  // namespace rieszstab
