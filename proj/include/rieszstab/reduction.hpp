#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rieszstab/asymmetry.hpp"
#include "rieszstab/energy.hpp"
#include "rieszstab/kernel.hpp"
#include "rieszstab/sets.hpp"
#include "rieszstab/sphere_grid.hpp"
#include "rieszstab/transport.hpp"

namespace rieszstab {

// One recorded inequality lhs <= rhs + tol.
struct StageCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double tol = 0.0;
  bool passed = false;
};
StageCheck make_check(std::string name, double lhs, double rhs, double tol);

struct Truncation {
  VoxelSet set;
  Point center{};
  std::size_t moved_outer = 0;  // |G| in cells
  std::size_t moved_inner = 0;  // |H| in cells
  double moved_volume() const;
};

// Moves E \ B(1+eps^2) into the shell 1+eps^2/3 < r < 1+eps^2/2, then fills
// B(1-eps^2) from the shell 1-eps^2/2 < r < 1-eps^2/3. Radii are measured
// from `center`. The lattice grows if the outer shell does not fit.
// Throws NotApplicableError when a receiving or donating shell is too small.
Truncation truncate_to_annulus(const VoxelSet& v, double eps, const Point& center);

struct Rearrangement {
  TwoSidedGraphSet set;
  // Sub-ray averaged occupancy of the input along each node's ray.
  std::vector<RayProfile> rays;
  // sum_j w_j * mass of rays[j]
  double ray_volume = 0.0;
};

// Ray casting through the occupied cells from `center`; each node averages
// sub_rays^(N-1) rays spread over its cell. Throws PreconditionError if some
// u+ or u- reaches eps.
Rearrangement radial_rearrange(const VoxelSet& v, std::shared_ptr<const SphereGrid> grid, double eps,
                               const Point& center = {}, int sub_rays = 3);

struct Consolidation {
  GraphSet set;
  double sd_before = 0.0;  // |E'' Delta B_center|
  double sd_after = 0.0;   // |E_z Delta B_center|
  int split_nodes = 0;
  StageCheck ratio;        // sd_before / 2 <= sd_after
};

// u+ keeps the fraction lambda = A+/(A+ + A-) of each node with both sides
// nonzero, A+ = (1+u+)^N - 1, A- = 1 - (1-u-)^N.
Consolidation consolidate(const TwoSidedGraphSet& t);

struct BarycenterOptions {
  double kappa = 0.5;
  double tol = 1e-4;
  int max_iter = 200;
  int sub_rays = 3;
  bool boundary_check = true;
};

struct BoundaryProbe {
  Point z{};
  double value = 0.0;  // (Bar(E_z) - z) . (z - origin)
};

struct BarycenterResult {
  Point z{};
  Rearrangement rearranged;
  Consolidation consolidated;
  double residual = 0.0;
  int iterations = 0;
  std::vector<BoundaryProbe> boundary;
  bool boundary_inward() const;
};

// Damped iteration z <- z + kappa (Bar(E_z) - z) with |z - origin| <= eps/2.
// Throws ConvergenceError carrying the best residual if max_iter is reached.
BarycenterResult adjust_barycenter(const VoxelSet& v, double eps, std::shared_ptr<const SphereGrid> grid,
                                   const Point& origin = {}, const BarycenterOptions& opt = {});

struct ReductionOptions {
  double eps = 0.2;
  // Sphere grid resolution: polar nodes for N=3, nodes for N=2. 0 picks 16 / 128.
  int grid = 0;
  int sub_rays = 3;
  // Threshold for the sparse-set comparison in the large-asymmetry branch.
  double xi = 0.25;
  BarycenterOptions barycenter{};
  CenterSearchOptions search{};
  // Slack for the asymmetry comparisons on top of the recorded volume errors.
  double asymmetry_tol = 1e-6;
};

struct ReductionReport {
  int dim = 3;
  double alpha = 0.0;
  double eps = 0.0;
  EnergyEstimate input_deficit{};
  AsymmetryResult input_asymmetry{};
  std::string branch;  // "nearly-spherical" or "large-asymmetry"
  std::string note;

  std::optional<Truncation> truncation;
  std::optional<Rearrangement> rearranged;
  std::optional<GraphSet> consolidated;  // E_z
  std::optional<GraphSet> final_set;     // E_z moved so that z sits at the origin
  Point origin{};                        // annulus center (Fraenkel center of E)
  Point z{};
  double barycenter_residual = 0.0;
  int iterations = 0;
  std::vector<BoundaryProbe> boundary;

  std::vector<StageCheck> checks;
  bool passed() const;
  const StageCheck* find(const std::string& name) const;
};

ReductionReport reduce_pipeline(const VoxelSet& v, const KernelParams& p, const ReductionOptions& opt = {});

nlohmann::ordered_json to_json(const StageCheck& c);
nlohmann::ordered_json to_json(const ReductionReport& r);

}  // namespace rieszstab
