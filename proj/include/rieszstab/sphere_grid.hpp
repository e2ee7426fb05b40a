#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "rieszstab/geometry.hpp"

namespace rieszstab {

enum class GridKind { Circle, GaussProduct, Custom };

// Weighted quadrature nodes on the unit sphere of R^2 or R^3.
class SphereGrid {
 public:
  // N=2: `resolution` equispaced angles. N=3: `resolution` Gauss–Legendre
  // polar nodes times 2*resolution azimuthal nodes.
  static std::shared_ptr<const SphereGrid> make(int dim, int resolution);
  static std::shared_ptr<const SphereGrid> custom(int dim, std::vector<Point> nodes,
                                                  std::vector<double> weights);

  int dim() const noexcept { return dim_; }
  GridKind kind() const noexcept { return kind_; }
  int resolution() const noexcept { return resolution_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  const Point& node(std::size_t j) const { return nodes_[j]; }
  double weight(std::size_t j) const { return weights_[j]; }
  const std::vector<Point>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  // sqrt(area/M) for N=3, 2*pi/M for N=2.
  double spacing() const noexcept { return spacing_; }
  // Nodes within 2.5 spacings of node j, j excluded.
  const std::vector<std::size_t>& neighbors(std::size_t j) const { return neighbors_[j]; }

  // Index of the node whose cell contains direction `dir` (nonzero vector).
  std::size_t locate(const Point& dir) const;

  // Same weights, nodes mapped by the orthogonal matrix `rot` (row-major 3x3).
  std::shared_ptr<const SphereGrid> rotated(const std::array<double, 9>& rot) const;

  std::string describe() const;

 private:
  SphereGrid(int dim, GridKind kind, int resolution, std::vector<Point> nodes,
             std::vector<double> weights);
  void validate() const;
  void build_neighbors();

  int dim_;
  GridKind kind_;
  int resolution_;
  std::vector<Point> nodes_;
  std::vector<double> weights_;
  std::vector<double> polar_;  // cos(theta) of the Gauss rings, ascending
  double spacing_;
  std::vector<std::vector<std::size_t>> neighbors_;
};

// Orthonormal tangent frame at the unit vector x (second vector zero for N=2).
std::pair<Point, Point> tangent_frame(const Point& x, int dim);

}  // namespace rieszstab
