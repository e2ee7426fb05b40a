#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "rieszstab/geometry.hpp"
#include "rieszstab/kernel.hpp"
#include "rieszstab/sets.hpp"

namespace rieszstab {

enum class EnergyMethod { GraphQuadrature, VoxelConvolution, MonteCarlo };
std::string to_string(EnergyMethod m);

struct EnergyEstimate {
  double value = 0.0;
  double error_bound = 0.0;
  EnergyMethod method = EnergyMethod::GraphQuadrature;
};

// int_{s1}^{s2} int_{t1}^{t2} r^(N-1) rho^(N-1) / ((r-rho)^2 + r rho q^2)^((N-alpha)/2) drho dr
double radial_box_kernel(double q, double s1, double s2, double t1, double t2, const KernelParams& p);

// Box kernel over [a,b]^2 (either order) averaged over the distance between two
// uniform points of a patch of measure `patch` (disk for N=3, arc for N=2).
double patch_box_kernel(double patch, double a, double b, const KernelParams& p);

// Integral of (g.(y-x))^2 |x-y|^(alpha-N) over a geodesic cap of measure `patch`
// around x, for a unit tangent gradient g.
double cap_gradient_integral(double patch, const KernelParams& p);

// Tangent gradients of a grid function by local quadratic least squares.
std::vector<Point> tangent_gradients(const SphereGrid& grid, const std::vector<double>& u);

EnergyEstimate energy_graph(const GraphSet& e, const KernelParams& p);
EnergyEstimate energy_voxel(const VoxelSet& v, const KernelParams& p);
EnergyEstimate energy_field(const VoxelField& f, const KernelParams& p);

EnergyEstimate mutual_energy(const VoxelSet& g, const VoxelSet& h, const KernelParams& p);
EnergyEstimate mutual_energy(const GraphSet& g, const GraphSet& h, const KernelParams& p);
EnergyEstimate mutual_energy(const GraphSet& g, const VoxelSet& h, const KernelParams& p);
EnergyEstimate mutual_energy(const VoxelSet& g, const GraphSet& h, const KernelParams& p);
EnergyEstimate mutual_energy(const VoxelField& g, const VoxelField& h, const KernelParams& p);

// Mutual energy of B(c1, r1) and B(c2, r2) by one-dimensional quadrature.
double mutual_energy_balls(const Point& c1, double r1, const Point& c2, double r2, const KernelParams& p);

// Deficit of the set dilated to unit-ball volume.
EnergyEstimate deficit(const GraphSet& e, const KernelParams& p);
// Two-sided sets as signed combinations of radial cones.
EnergyEstimate deficit(const TwoSidedGraphSet& t, const KernelParams& p);
EnergyEstimate deficit(const VoxelSet& v, const KernelParams& p);
// Same for a density in [0,1]; `center` selects the comparison ball (barycenter if null).
EnergyEstimate deficit(const VoxelField& f, const KernelParams& p, const Point* center = nullptr);

// Membership oracle for Monte Carlo.
struct SampledShape {
  int dim = 3;
  double volume = 0.0;
  Point lo{}, hi{};
  std::function<bool(const Point&)> contains;
};
SampledShape shape_of(const GraphSet& e);
SampledShape shape_of(const VoxelSet& v);
SampledShape ball_shape(int dim, const Point& c, double r);

EnergyEstimate mc_energy(const SampledShape& s, const KernelParams& p, std::uint64_t seed, std::uint64_t n_samples);

// Lattice FFT engine: h^(2N) sum_{c,c'} a_c b_c' K(c-c') with K(0) set from the
// equal-volume ball self-energy. Lattices must be aligned.
double lattice_pair_sum(const VoxelField& a, const VoxelField& b, const KernelParams& p);
double cell_self_energy(const Lattice& lat, const KernelParams& p);

// Memory ceiling (bytes) for FFT work arrays; ResourceError above it.
void set_fft_memory_budget(std::size_t bytes);
std::size_t fft_memory_budget();

}  // namespace rieszstab
