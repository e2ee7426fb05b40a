#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "rieszstab/geometry.hpp"
#include "rieszstab/sphere_grid.hpp"

namespace rieszstab {

// One angular cell of a graph set. Unsplit sets carry one cell per grid node
// with the node weight; consolidation may split a node into weighted sub-cells.
struct GraphCell {
  std::size_t node;
  double weight;
  double u;
};

// E = { center + r x : x in S, 0 <= r <= 1 + u(x) }.
class GraphSet {
 public:
  GraphSet(std::shared_ptr<const SphereGrid> grid, std::vector<double> u, Point center = {});
  static GraphSet from_cells(std::shared_ptr<const SphereGrid> grid, std::vector<GraphCell> cells,
                             Point center = {});

  const SphereGrid& grid() const { return *grid_; }
  const std::shared_ptr<const SphereGrid>& grid_ptr() const { return grid_; }
  const std::vector<GraphCell>& cells() const { return cells_; }
  // Cell indices belonging to grid node j.
  const std::vector<std::size_t>& cells_at(std::size_t j) const { return by_node_[j]; }
  bool has_subcells() const noexcept { return split_; }
  // Per-node radial values; throws if the set has sub-cells.
  std::vector<double> node_values() const;
  const Point& center() const noexcept { return center_; }
  GraphSet with_center(const Point& c) const;
  double max_abs_u() const;
  int dim() const { return grid_->dim(); }

 private:
  GraphSet() = default;
  void index_cells();

  std::shared_ptr<const SphereGrid> grid_;
  std::vector<GraphCell> cells_;
  std::vector<std::vector<std::size_t>> by_node_;
  Point center_{};
  bool split_ = false;
};

// E'' = union over rays of [0, 1-u_minus) and [1, 1+u_plus), measured from center.
struct TwoSidedGraphSet {
  std::shared_ptr<const SphereGrid> grid;
  std::vector<double> u_minus;
  std::vector<double> u_plus;
  Point center{};

  void validate(double eps) const;
};

double graph_volume(const GraphSet& e);
Point graph_barycenter(const GraphSet& e);
GraphSet volume_normalize(const GraphSet& e);
// Alternates volume normalization with removal of the translation mode until
// the barycenter coincides with the center to `tol`.
GraphSet barycenter_correct(const GraphSet& e, double tol = 1e-13, int max_iter = 100);
double symm_diff_ball(const GraphSet& e, const Point& ball_center);

double two_sided_volume(const TwoSidedGraphSet& t);
double symm_diff_ball(const TwoSidedGraphSet& t, const Point& ball_center);

// Uniform Cartesian lattice of cells [origin + k h, origin + (k+1) h).
struct Lattice {
  int dim = 3;
  Point origin{};
  double h = 1.0;
  std::array<int, 3> dims{1, 1, 1};

  std::size_t size() const { return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2]; }
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) + static_cast<std::size_t>(dims[0]) * (j + static_cast<std::size_t>(dims[1]) * k);
  }
  std::array<int, 3> coords(std::size_t idx) const;
  Point center(std::size_t idx) const;
  double cell_volume() const;
  // Lattice with the same spacing whose cells tile [lo, hi], aligned to
  // integer multiples of h from the global origin.
  static Lattice covering(int dim, double h, const Point& lo, const Point& hi);
  // Same spacing and origin offset an integer number of cells apart.
  bool aligned_with(const Lattice& other) const;
};

class VoxelSet {
 public:
  VoxelSet(const Lattice& lattice, std::vector<std::uint8_t> occupancy);
  static VoxelSet from_predicate(const Lattice& lattice, const std::function<bool(const Point&)>& inside);

  const Lattice& lattice() const noexcept { return lattice_; }
  int dim() const noexcept { return lattice_.dim; }
  double spacing() const noexcept { return lattice_.h; }
  const std::vector<std::uint8_t>& occupancy() const noexcept { return occ_; }
  bool occupied(std::size_t idx) const { return occ_[idx] != 0; }
  std::size_t count() const;
  double measure() const;
  // Translate by whole cells (moves the origin).
  VoxelSet shifted(const std::array<int, 3>& cells) const;
  std::vector<std::size_t> occupied_indices() const;

 private:
  Lattice lattice_;
  std::vector<std::uint8_t> occ_;
};

// Real-valued function on a lattice, e.g. a fractional density.
struct VoxelField {
  Lattice lattice;
  std::vector<double> values;
};

VoxelField as_field(const VoxelSet& v);

// Lattice aligned with `ref` whose cells cover [lo, hi].
Lattice aligned_cover(const Lattice& ref, const Point& lo, const Point& hi);
Point upper_corner(const Lattice& l);
// Copy into an aligned lattice that covers the source.
VoxelField embed(const VoxelField& f, const Lattice& to);
VoxelSet embed(const VoxelSet& v, const Lattice& to);

struct VoxelMeasures {
  double volume;
  Point barycenter;
};
VoxelMeasures voxel_measures(const VoxelSet& v);
VoxelMeasures field_measures(const VoxelField& f);

// Volume of (cell idx) intersected with the ball B(c, r); continuous in c.
double cell_ball_overlap(const Lattice& lat, std::size_t idx, const Point& c, double r);
// Same for the cube of side h centred at p.
double cube_ball_overlap(const Point& p, double h, int dim, const Point& c, double r);
double symm_diff_ball(const VoxelSet& v, const Point& ball_center);

// Occupied cell centres as offsets from the first occupied cell. Shifting the
// occupancy by whole cells leaves the offsets bit-identical.
struct VoxelFrame {
  int dim = 3;
  double h = 1.0;
  Point anchor{};
  double measure = 0.0;
  std::vector<Point> offsets;
};
VoxelFrame voxel_frame(const VoxelSet& v);
// |E Delta B(anchor + local_center)|.
double symm_diff_ball(const VoxelFrame& f, const Point& local_center);

// Densities of graph-type sets sampled on a lattice: each lattice cell takes
// the radial profile of the grid cell containing its direction. With
// samples > 1, cells near the boundary average a samples^N sub-lattice
// (partial-volume density).
VoxelField voxelize(const GraphSet& e, const Lattice& lat, int samples = 1);
VoxelField voxelize(const TwoSidedGraphSet& t, const Lattice& lat, int samples = 1);
VoxelSet threshold(const VoxelField& f, double level = 0.5);

class RadialProfile {
 public:
  RadialProfile(int dim, std::vector<double> radii, std::vector<double> values);
  int dim() const noexcept { return dim_; }
  // Outer radius of each shell, increasing.
  const std::vector<double>& radii() const noexcept { return radii_; }
  const std::vector<double>& values() const noexcept { return values_; }
  double operator()(double r) const;
  double l1() const;

 private:
  int dim_;
  std::vector<double> radii_;
  std::vector<double> values_;
};

RadialProfile sd_rearrangement(const VoxelField& g);

// Compensated (Neumaier) summation; used wherever exact bookkeeping matters.
class KahanSum {
 public:
  void add(double x);
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace rieszstab
