#include "rieszstab/sphere_grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "rieszstab/errors.hpp"
#include "rieszstab/kernel.hpp"
#include "rieszstab/quadrature.hpp"

namespace rieszstab {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kNeighborRadius = 2.5;
}  // namespace

SphereGrid::SphereGrid(int dim, GridKind kind, int resolution, std::vector<Point> nodes,
                       std::vector<double> weights)
    : dim_(dim),
      kind_(kind),
      resolution_(resolution),
      nodes_(std::move(nodes)),
      weights_(std::move(weights)) {
  if (dim_ != 2 && dim_ != 3) throw DomainError("sphere grids exist only for N = 2, 3");
  if (nodes_.size() != weights_.size() || nodes_.empty())
    throw PreconditionError("sphere grid needs one positive weight per node");
  const double m = static_cast<double>(nodes_.size());
  spacing_ = dim_ == 2 ? 2.0 * kPi / m : std::sqrt(4.0 * kPi / m);
  validate();
  build_neighbors();
}

void SphereGrid::validate() const {
  double total = 0.0;
  Point moment{0.0, 0.0, 0.0};
  for (std::size_t j = 0; j < nodes_.size(); ++j) {
    if (std::abs(norm(nodes_[j]) - 1.0) > 1e-12) throw PreconditionError("grid node off the unit sphere");
    if (dim_ == 2 && nodes_[j][2] != 0.0) throw PreconditionError("planar grid node has a z component");
    if (!(weights_[j] > 0.0)) throw PreconditionError("grid weight must be positive");
    total += weights_[j];
    moment = moment + weights_[j] * nodes_[j];
  }
  const double area = unit_sphere_area(dim_);
  if (std::abs(total - area) > 1e-8 * area) throw PreconditionError("grid weights do not sum to the sphere area");
  if (norm(moment) > 1e-8 * area) throw PreconditionError("grid is not antipodally balanced");
}

void SphereGrid::build_neighbors() {
  const double reach = kNeighborRadius * spacing_;
  const double min_dot = std::cos(std::min(reach, kPi));
  neighbors_.assign(nodes_.size(), {});
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    for (std::size_t j = i + 1; j < nodes_.size(); ++j) {
      if (dot(nodes_[i], nodes_[j]) >= min_dot) {
        neighbors_[i].push_back(j);
        neighbors_[j].push_back(i);
      }
    }
  }
}

std::shared_ptr<const SphereGrid> SphereGrid::make(int dim, int resolution) {
  if (dim == 2) {
    if (resolution < 3) throw DomainError("circle grid needs at least 3 nodes");
    std::vector<Point> nodes;
    std::vector<double> weights(resolution, 2.0 * kPi / resolution);
    for (int b = 0; b < resolution; ++b) {
      const double th = 2.0 * kPi * b / resolution;
      nodes.push_back({std::cos(th), std::sin(th), 0.0});
    }
    return std::shared_ptr<const SphereGrid>(
        new SphereGrid(2, GridKind::Circle, resolution, std::move(nodes), std::move(weights)));
  }
  if (dim == 3) {
    if (resolution < 2) throw DomainError("product grid needs at least 2 polar nodes");
    const GaussRule& rule = gauss_legendre(resolution);
    const int naz = 2 * resolution;
    std::vector<Point> nodes;
    std::vector<double> weights;
    for (int a = 0; a < resolution; ++a) {
      const double z = rule.nodes[a];
      const double rho = std::sqrt(1.0 - z * z);
      for (int b = 0; b < naz; ++b) {
        const double ph = kPi * b / resolution;
        Point x{rho * std::cos(ph), rho * std::sin(ph), z};
        const double len = norm(x);
        nodes.push_back((1.0 / len) * x);
        weights.push_back(rule.weights[a] * 2.0 * kPi / naz);
      }
    }
    auto* grid = new SphereGrid(3, GridKind::GaussProduct, resolution, std::move(nodes),
                                std::move(weights));
    grid->polar_ = rule.nodes;
    return std::shared_ptr<const SphereGrid>(grid);
  }
  throw DomainError("sphere grids exist only for N = 2, 3");
}

std::shared_ptr<const SphereGrid> SphereGrid::custom(int dim, std::vector<Point> nodes,
                                                     std::vector<double> weights) {
  return std::shared_ptr<const SphereGrid>(
      new SphereGrid(dim, GridKind::Custom, 0, std::move(nodes), std::move(weights)));
}

std::size_t SphereGrid::locate(const Point& dir) const {
  const double len = norm(dir);
  if (!(len > 0.0)) throw DomainError("cannot locate the zero direction");
  if (kind_ == GridKind::Circle) {
    double th = std::atan2(dir[1], dir[0]);
    if (th < 0) th += 2.0 * kPi;
    const auto m = static_cast<long>(nodes_.size());
    long b = std::lround(th * m / (2.0 * kPi)) % m;
    return static_cast<std::size_t>(b);
  }
  if (kind_ == GridKind::GaussProduct) {
    const double z = std::clamp(dir[2] / len, -1.0, 1.0);
    const double th = std::acos(z);
    auto it = std::lower_bound(polar_.begin(), polar_.end(), z);
    std::size_t a = static_cast<std::size_t>(it - polar_.begin());
    if (a == polar_.size()) a = polar_.size() - 1;
    if (a > 0 && std::abs(std::acos(polar_[a - 1]) - th) < std::abs(std::acos(polar_[a]) - th)) --a;
    double ph = std::atan2(dir[1], dir[0]);
    if (ph < 0) ph += 2.0 * kPi;
    const long naz = 2L * resolution_;
    const long b = std::lround(ph * resolution_ / kPi) % naz;
    return a * static_cast<std::size_t>(naz) + static_cast<std::size_t>(b);
  }
  const Point u = (1.0 / len) * dir;
  std::size_t best = 0;
  double best_dot = -2.0;
  for (std::size_t j = 0; j < nodes_.size(); ++j) {
    const double d = dot(nodes_[j], u);
    if (d > best_dot) {
      best_dot = d;
      best = j;
    }
  }
  return best;
}

std::shared_ptr<const SphereGrid> SphereGrid::rotated(const std::array<double, 9>& rot) const {
  std::vector<Point> nodes;
  nodes.reserve(nodes_.size());
  for (const Point& x : nodes_) {
    Point y{rot[0] * x[0] + rot[1] * x[1] + rot[2] * x[2], rot[3] * x[0] + rot[4] * x[1] + rot[5] * x[2],
            rot[6] * x[0] + rot[7] * x[1] + rot[8] * x[2]};
    if (dim_ == 2) y[2] = 0.0;
    const double len = norm(y);
    nodes.push_back((1.0 / len) * y);
  }
  return custom(dim_, std::move(nodes), weights_);
}

std::string SphereGrid::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case GridKind::Circle: os << "circle(" << nodes_.size() << ")"; break;
    case GridKind::GaussProduct: os << "gauss-product(" << resolution_ << "x" << 2 * resolution_ << ")"; break;
    case GridKind::Custom: os << "custom(" << nodes_.size() << ")"; break;
  }
  return os.str();
}

std::pair<Point, Point> tangent_frame(const Point& x, int dim) {
  if (dim == 2) return {Point{-x[1], x[0], 0.0}, Point{}};
  Point axis{1.0, 0.0, 0.0};
  if (std::abs(x[1]) < std::abs(x[0]) && std::abs(x[1]) <= std::abs(x[2])) axis = {0.0, 1.0, 0.0};
  else if (std::abs(x[2]) < std::abs(x[0])) axis = {0.0, 0.0, 1.0};
  Point e1{x[1] * axis[2] - x[2] * axis[1], x[2] * axis[0] - x[0] * axis[2], x[0] * axis[1] - x[1] * axis[0]};
  e1 = (1.0 / norm(e1)) * e1;
  const Point e2{x[1] * e1[2] - x[2] * e1[1], x[2] * e1[0] - x[0] * e1[2], x[0] * e1[1] - x[1] * e1[0]};
  return {e1, e2};
}

}  // namespace rieszstab
