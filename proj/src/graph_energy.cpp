#include <algorithm>
#include <cmath>
#include <tuple>

#include <Eigen/Dense>

#include "rieszstab/energy.hpp"
#include "rieszstab/errors.hpp"

namespace rieszstab {

namespace {

constexpr double kVolumeTolerance = 0.005;

struct BoxSum {
  double total = 0.0;       // pair sum plus own-patch terms
  double own = 0.0;         // own-patch (near-diagonal) part
  double near = 0.0;        // pairs closer than 1.5 grid spacings
};

// Cells may carry negative weights (signed cone combinations); `smooth` holds
// per-node values when every node has exactly one cell.
BoxSum graph_box_sum(const SphereGrid& grid, const std::vector<GraphCell>& cells,
                     const std::vector<double>* smooth, const KernelParams& p) {
  const double near_q = 1.5 * grid.spacing();
  BoxSum out;
  KahanSum pairs;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const Point& x = grid.node(cells[c].node);
    const double ac = 1.0 + cells[c].u;
    for (std::size_t d = c + 1; d < cells.size(); ++d) {
      const double ad = 1.0 + cells[d].u;
      if (ac == ad) continue;
      const double lo = std::min(ac, ad), hi = std::max(ac, ad);
      const double ww = 2.0 * cells[c].weight * cells[d].weight;
      double term;
      if (cells[c].node == cells[d].node) {
        term = ww * patch_box_kernel(grid.weight(cells[c].node), lo, hi, p);
        out.own += std::abs(term);
      } else {
        const double q = distance(x, grid.node(cells[d].node));
        term = ww * radial_box_kernel(q, lo, hi, lo, hi, p);
        if (q < near_q) out.near += std::abs(term);
      }
      pairs.add(term);
    }
  }
  if (smooth) {
    const std::vector<double>& u = *smooth;
    const std::vector<Point> grads = tangent_gradients(grid, u);
    const int n = p.dim();
    const double a = p.alpha();
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double g2 = dot(grads[j], grads[j]);
      if (g2 == 0.0) continue;
      const double term = grid.weight(j) * std::pow(1.0 + u[j], n + a - 2.0) *
                          cap_gradient_integral(grid.weight(j), p) * g2;
      out.own += term;
      pairs.add(term);
    }
  }
  out.total = pairs.value();
  return out;
}

BoxSum graph_box_sum(const GraphSet& e, const KernelParams& p) {
  if (e.has_subcells()) return graph_box_sum(e.grid(), e.cells(), nullptr, p);
  const std::vector<double> u = e.node_values();
  return graph_box_sum(e.grid(), e.cells(), &u, p);
}

double graph_error_bound(bool split, const BoxSum& s) {
  // Smooth profiles: the own-patch model is accurate to a fraction of its size.
  // Piecewise-constant profiles: near pairs carry the jump error.
  if (!split) return 2.0 * s.own + 1e-10 * std::abs(s.total);
  return 0.5 * (s.own + s.near) + 1e-10 * std::abs(s.total);
}

void require_star_shaped(const GraphSet& e) {
  for (const GraphCell& c : e.cells())
    if (!(std::abs(c.u) < 1.0)) throw PreconditionError("graph values must satisfy |u| < 1 for the polar decomposition");
}

}  // namespace

std::vector<Point> tangent_gradients(const SphereGrid& grid, const std::vector<double>& u) {
  if (u.size() != grid.size()) throw PreconditionError("grid function size mismatch");
  const int dim = grid.dim();
  std::vector<Point> out(grid.size(), Point{});
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& nb = grid.neighbors(i);
    const Point& x = grid.node(i);
    const auto [e1, e2] = tangent_frame(x, dim);
    const int quad_cols = dim == 2 ? 2 : 5;
    const int lin_cols = dim == 2 ? 1 : 2;
    const int rows = static_cast<int>(nb.size());
    int cols = rows >= quad_cols + 3 ? quad_cols : lin_cols;
    if (rows < cols) continue;
    Eigen::MatrixXd A(rows, cols);
    Eigen::VectorXd b(rows);
    for (int r = 0; r < rows; ++r) {
      const Point d = grid.node(nb[r]) - x;
      const double s1 = dot(d, e1);
      const double s2 = dot(d, e2);
      if (dim == 2) {
        A(r, 0) = s1;
        if (cols > 1) A(r, 1) = s1 * s1;
      } else {
        A(r, 0) = s1;
        A(r, 1) = s2;
        if (cols > 2) {
          A(r, 2) = s1 * s1;
          A(r, 3) = s1 * s2;
          A(r, 4) = s2 * s2;
        }
      }
      b(r) = u[nb[r]] - u[i];
    }
    const Eigen::VectorXd coef = A.colPivHouseholderQr().solve(b);
    out[i] = dim == 2 ? coef(0) * e1 : coef(0) * e1 + coef(1) * e2;
  }
  return out;
}

EnergyEstimate energy_graph(const GraphSet& e, const KernelParams& p) {
  if (e.dim() != p.dim()) throw PreconditionError("set and kernel dimensions differ");
  require_star_shaped(e);
  const ReferenceConstants& rc = ReferenceConstants::get(p);
  const int n = p.dim();
  const double a = p.alpha();
  KahanSum bulk;
  for (const GraphCell& c : e.cells()) bulk.add(c.weight * std::pow(1.0 + c.u, n + a));
  const BoxSum box = graph_box_sum(e, p);
  const double value = rc.ball_energy() / rc.sphere_area() * bulk.value() - 0.5 * box.total;
  return {value, 0.5 * graph_error_bound(e.has_subcells(), box), EnergyMethod::GraphQuadrature};
}

EnergyEstimate deficit(const GraphSet& e0, const KernelParams& p) {
  if (e0.dim() != p.dim()) throw PreconditionError("set and kernel dimensions differ");
  const ReferenceConstants& rc = ReferenceConstants::get(p);
  const double vol0 = graph_volume(e0);
  if (std::abs(vol0 - rc.omega()) > kVolumeTolerance * rc.omega())
    throw PreconditionError("deficit requires |E| within 0.5% of the unit-ball volume");
  const GraphSet e = volume_normalize(e0);
  require_star_shaped(e);
  const int n = p.dim();
  const double a = p.alpha();
  // F(B) - bulk term, arranged so no O(F(B)) quantities are subtracted.
  KahanSum gap;
  gap.add(n * (rc.omega() - graph_volume(e)));
  for (const GraphCell& c : e.cells())
    gap.add(-c.weight * std::pow(1.0 + c.u, n) * std::expm1(a * std::log1p(c.u)));
  const BoxSum box = graph_box_sum(e, p);
  const double value = rc.ball_energy() / rc.sphere_area() * gap.value() + 0.5 * box.total;
  return {value, 0.5 * graph_error_bound(e.has_subcells(), box), EnergyMethod::GraphQuadrature};
}

EnergyEstimate deficit(const TwoSidedGraphSet& t, const KernelParams& p) {
  const SphereGrid& grid = *t.grid;
  if (grid.dim() != p.dim()) throw PreconditionError("set and kernel dimensions differ");
  const ReferenceConstants& rc = ReferenceConstants::get(p);
  const int n = p.dim();
  const double a = p.alpha();
  const double vol0 = two_sided_volume(t);
  if (std::abs(vol0 - rc.omega()) > kVolumeTolerance * rc.omega())
    throw PreconditionError("deficit requires |E| within 0.5% of the unit-ball volume");
  bool split = false;
  for (std::size_t j = 0; j < grid.size(); ++j) split = split || (t.u_plus[j] > 0.0 && t.u_minus[j] > 0.0);
  if (!split) {
    std::vector<double> u(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) u[j] = t.u_plus[j] > 0.0 ? t.u_plus[j] : -t.u_minus[j];
    return deficit(GraphSet(t.grid, std::move(u), t.center), p);
  }
  // Dilate to unit-ball volume, then write each ray as
  // [0, l(1+u+)) - [0, l) + [0, l(1-u-)).
  const double l = std::pow(rc.omega() / vol0, 1.0 / n);
  std::vector<GraphCell> cells;
  KahanSum vol;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double w = grid.weight(j), up = t.u_plus[j], um = t.u_minus[j];
    if (!(um < 1.0)) throw PreconditionError("u- must stay below 1");
    if (up == 0.0 || um == 0.0) {
      cells.push_back({j, w, l * (up > 0.0 ? 1.0 + up : 1.0 - um) - 1.0});
    } else {
      cells.push_back({j, w, l * (1.0 + up) - 1.0});
      cells.push_back({j, -w, l - 1.0});
      cells.push_back({j, w, l * (1.0 - um) - 1.0});
    }
  }
  for (const GraphCell& c : cells) vol.add(c.weight * std::pow(1.0 + c.u, n) / n);
  KahanSum gap;
  gap.add(n * (rc.omega() - vol.value()));
  for (const GraphCell& c : cells) gap.add(-c.weight * std::pow(1.0 + c.u, n) * std::expm1(a * std::log1p(c.u)));
  const BoxSum box = graph_box_sum(grid, cells, nullptr, p);
  const double value = rc.ball_energy() / rc.sphere_area() * gap.value() + 0.5 * box.total;
  return {value, 0.5 * graph_error_bound(true, box), EnergyMethod::GraphQuadrature};
}

EnergyEstimate mutual_energy(const GraphSet& g0, const GraphSet& h0, const KernelParams& p) {
  if (g0.grid_ptr() != h0.grid_ptr() || norm(g0.center() - h0.center()) != 0.0)
    throw PreconditionError("graph mutual energy needs a shared grid and center; voxelize otherwise");
  require_star_shaped(g0);
  require_star_shaped(h0);
  // Fixed argument order makes the result symmetric bit for bit.
  auto key = [](const GraphSet& s) {
    std::vector<std::tuple<std::size_t, double, double>> k;
    for (const GraphCell& c : s.cells()) k.emplace_back(c.node, c.weight, c.u);
    return k;
  };
  const bool swap = key(h0) < key(g0);
  const GraphSet& g = swap ? h0 : g0;
  const GraphSet& h = swap ? g0 : h0;
  const ReferenceConstants& rc = ReferenceConstants::get(p);
  const SphereGrid& grid = g.grid();
  const int n = p.dim();
  const double a = p.alpha();
  KahanSum bulk;
  for (const GraphCell& c : g.cells()) bulk.add(c.weight * std::pow(1.0 + c.u, n + a));
  for (const GraphCell& c : h.cells()) bulk.add(c.weight * std::pow(1.0 + c.u, n + a));
  KahanSum pairs;
  double own = 0.0;
  for (const GraphCell& c : g.cells()) {
    const double ac = 1.0 + c.u;
    for (const GraphCell& d : h.cells()) {
      const double ad = 1.0 + d.u;
      if (ac == ad) continue;
      const double lo = std::min(ac, ad), hi = std::max(ac, ad);
      double term;
      if (c.node == d.node) {
        term = c.weight * d.weight * patch_box_kernel(grid.weight(c.node), lo, hi, p);
        own += term;
      } else {
        term = c.weight * d.weight * radial_box_kernel(distance(grid.node(c.node), grid.node(d.node)), lo, hi, lo, hi, p);
      }
      pairs.add(term);
    }
  }
  const double value = 0.5 * rc.ball_energy() / rc.sphere_area() * bulk.value() - 0.5 * pairs.value();
  return {value, own + 1e-10 * std::abs(pairs.value()), EnergyMethod::GraphQuadrature};
}

}  // namespace rieszstab
