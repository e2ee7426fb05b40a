#include "rieszstab/sets.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rieszstab/errors.hpp"
#include "rieszstab/kernel.hpp"
#include "rieszstab/quadrature.hpp"

namespace rieszstab {

void KahanSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    comp_ += (sum_ - t) + x;
  } else {
    comp_ += (x - t) + sum_;
  }
  sum_ = t;
}

// ---------------------------------------------------------------- GraphSet

GraphSet::GraphSet(std::shared_ptr<const SphereGrid> grid, std::vector<double> u, Point center)
    : grid_(std::move(grid)), center_(center) {
  if (!grid_) throw PreconditionError("graph set needs a grid");
  if (u.size() != grid_->size()) throw PreconditionError("graph values do not match the grid size");
  cells_.reserve(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) cells_.push_back({j, grid_->weight(j), u[j]});
  index_cells();
}

GraphSet GraphSet::from_cells(std::shared_ptr<const SphereGrid> grid, std::vector<GraphCell> cells,
                              Point center) {
  GraphSet e;
  e.grid_ = std::move(grid);
  e.cells_ = std::move(cells);
  e.center_ = center;
  e.index_cells();
  return e;
}

void GraphSet::index_cells() {
  by_node_.assign(grid_->size(), {});
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    const GraphCell& cell = cells_[c];
    if (cell.node >= grid_->size()) throw PreconditionError("graph cell refers to a missing node");
    if (!(cell.u > -1.0)) throw DomainError("graph values must exceed -1");
    if (!(cell.weight > 0.0)) throw PreconditionError("graph cell weight must be positive");
    by_node_[cell.node].push_back(c);
  }
  split_ = false;
  for (std::size_t j = 0; j < by_node_.size(); ++j) {
    if (by_node_[j].empty()) throw PreconditionError("grid node without a graph cell");
    double w = 0.0;
    for (std::size_t c : by_node_[j]) w += cells_[c].weight;
    if (std::abs(w - grid_->weight(j)) > 1e-12 * grid_->weight(j))
      throw PreconditionError("sub-cell weights do not add up to the node weight");
    if (by_node_[j].size() > 1) split_ = true;
  }
}

std::vector<double> GraphSet::node_values() const {
  if (split_) throw PreconditionError("graph set has sub-cells; no single value per node");
  std::vector<double> u(grid_->size());
  for (const GraphCell& c : cells_) u[c.node] = c.u;
  return u;
}

GraphSet GraphSet::with_center(const Point& c) const {
  GraphSet e = *this;
  e.center_ = c;
  return e;
}

double GraphSet::max_abs_u() const {
  double m = 0.0;
  for (const GraphCell& c : cells_) m = std::max(m, std::abs(c.u));
  return m;
}

double graph_volume(const GraphSet& e) {
  const int n = e.dim();
  KahanSum s;
  for (const GraphCell& c : e.cells()) s.add(c.weight * std::pow(1.0 + c.u, n));
  return s.value() / n;
}

Point graph_barycenter(const GraphSet& e) {
  const int n = e.dim();
  KahanSum s[3];
  for (const GraphCell& c : e.cells()) {
    const double r = c.weight * std::pow(1.0 + c.u, n + 1);
    const Point& x = e.grid().node(c.node);
    for (int d = 0; d < 3; ++d) s[d].add(r * x[d]);
  }
  const double scale = 1.0 / (graph_volume(e) * (n + 1));
  return e.center() + Point{scale * s[0].value(), scale * s[1].value(), scale * s[2].value()};
}

GraphSet volume_normalize(const GraphSet& e) {
  const double vol = graph_volume(e);
  if (!(vol > 0.0)) throw DomainError("cannot normalize a set of zero volume");
  const int n = e.dim();
  const double lambda = std::pow(unit_ball_volume(n) / vol, 1.0 / n);
  std::vector<GraphCell> cells = e.cells();
  for (GraphCell& c : cells) c.u = lambda * (1.0 + c.u) - 1.0;
  return GraphSet::from_cells(e.grid_ptr(), std::move(cells), e.center());
}

GraphSet barycenter_correct(const GraphSet& e, double tol, int max_iter) {
  GraphSet cur = volume_normalize(e);
  for (int it = 0; it < max_iter; ++it) {
    const Point b = graph_barycenter(cur) - cur.center();
    if (norm(b) <= tol) return cur;
    std::vector<GraphCell> cells = cur.cells();
    for (GraphCell& c : cells) c.u -= dot(b, cur.grid().node(c.node));
    cur = volume_normalize(GraphSet::from_cells(cur.grid_ptr(), std::move(cells), cur.center()));
  }
  const double res = norm(graph_barycenter(cur) - cur.center());
  if (res > std::max(tol, 1e-10)) throw ConvergenceError("barycenter correction did not converge", res);
  return cur;
}

namespace {

double ray_exit(const Point& x, const Point& c) {
  const double d = dot(x, c);
  return d + std::sqrt(d * d + 1.0 - dot(c, c));
}

double shell(double a, double b, int n) { return b > a ? (std::pow(b, n) - std::pow(a, n)) / n : 0.0; }

}  // namespace

double symm_diff_ball(const GraphSet& e, const Point& ball_center) {
  const Point c = ball_center - e.center();
  if (!(norm(c) < 1.0)) throw PreconditionError("ball center must lie within distance 1 of the set center");
  const int n = e.dim();
  KahanSum s;
  for (const GraphCell& cell : e.cells()) {
    const double t = ray_exit(e.grid().node(cell.node), c);
    s.add(cell.weight * std::abs(std::pow(1.0 + cell.u, n) - std::pow(t, n)) / n);
  }
  return s.value();
}

// ---------------------------------------------------------- two-sided sets

void TwoSidedGraphSet::validate(double eps) const {
  if (!grid) throw PreconditionError("two-sided set needs a grid");
  if (u_minus.size() != grid->size() || u_plus.size() != grid->size())
    throw PreconditionError("two-sided values do not match the grid size");
  for (std::size_t j = 0; j < grid->size(); ++j) {
    if (!(u_minus[j] >= 0.0 && u_plus[j] >= 0.0)) throw DomainError("two-sided values must be nonnegative");
    if (!(u_minus[j] < eps && u_plus[j] < eps)) throw PreconditionError("two-sided values leave the eps regime");
  }
}

double two_sided_volume(const TwoSidedGraphSet& t) {
  const int n = t.grid->dim();
  KahanSum s;
  for (std::size_t j = 0; j < t.grid->size(); ++j)
    s.add(t.grid->weight(j) * (std::pow(1.0 - t.u_minus[j], n) + std::pow(1.0 + t.u_plus[j], n) - 1.0));
  return s.value() / n;
}

double symm_diff_ball(const TwoSidedGraphSet& t, const Point& ball_center) {
  const Point c = ball_center - t.center;
  if (!(norm(c) < 1.0)) throw PreconditionError("ball center must lie within distance 1 of the set center");
  const int n = t.grid->dim();
  KahanSum s;
  for (std::size_t j = 0; j < t.grid->size(); ++j) {
    const double exit = ray_exit(t.grid->node(j), c);
    const double a = 1.0 - t.u_minus[j];
    const double b = 1.0 + t.u_plus[j];
    const double in_set = shell(0.0, a, n) + shell(1.0, b, n);
    const double in_ball = shell(0.0, exit, n);
    const double both = shell(0.0, std::min(a, exit), n) + shell(1.0, std::min(b, exit), n);
    s.add(t.grid->weight(j) * (in_set + in_ball - 2.0 * both));
  }
  return s.value();
}

// ----------------------------------------------------------------- lattices

std::array<int, 3> Lattice::coords(std::size_t idx) const {
  const std::size_t nx = dims[0], ny = dims[1];
  return {static_cast<int>(idx % nx), static_cast<int>((idx / nx) % ny), static_cast<int>(idx / (nx * ny))};
}

Point Lattice::center(std::size_t idx) const {
  const auto c = coords(idx);
  Point p{origin[0] + (c[0] + 0.5) * h, origin[1] + (c[1] + 0.5) * h, 0.0};
  if (dim == 3) p[2] = origin[2] + (c[2] + 0.5) * h;
  return p;
}

double Lattice::cell_volume() const { return std::pow(h, dim); }

Lattice Lattice::covering(int dim, double h, const Point& lo, const Point& hi) {
  if (dim != 2 && dim != 3) throw DomainError("lattices exist only for N = 2, 3");
  if (!(h > 0.0)) throw DomainError("lattice spacing must be positive");
  Lattice lat;
  lat.dim = dim;
  lat.h = h;
  for (int d = 0; d < 3; ++d) {
    if (d >= dim) {
      lat.origin[d] = 0.0;
      lat.dims[d] = 1;
      continue;
    }
    const double k0 = std::floor(lo[d] / h);
    const double k1 = std::ceil(hi[d] / h);
    lat.origin[d] = k0 * h;
    lat.dims[d] = std::max(1, static_cast<int>(k1 - k0));
  }
  return lat;
}

bool Lattice::aligned_with(const Lattice& other) const {
  if (dim != other.dim) return false;
  if (std::abs(h - other.h) > 1e-12 * h) return false;
  for (int d = 0; d < dim; ++d) {
    const double off = (origin[d] - other.origin[d]) / h;
    if (std::abs(off - std::round(off)) > 1e-9) return false;
  }
  return true;
}

// ---------------------------------------------------------------- VoxelSet

VoxelSet::VoxelSet(const Lattice& lattice, std::vector<std::uint8_t> occupancy)
    : lattice_(lattice), occ_(std::move(occupancy)) {
  if (lattice_.dim != 2 && lattice_.dim != 3) throw DomainError("voxel sets exist only for N = 2, 3");
  if (lattice_.dim == 2 && lattice_.dims[2] != 1) throw PreconditionError("planar lattice must have one layer");
  if (occ_.size() != lattice_.size()) throw PreconditionError("occupancy does not match the lattice");
  for (auto& b : occ_) b = b ? 1 : 0;
}

VoxelSet VoxelSet::from_predicate(const Lattice& lattice, const std::function<bool(const Point&)>& inside) {
  std::vector<std::uint8_t> occ(lattice.size());
  for (std::size_t i = 0; i < occ.size(); ++i) occ[i] = inside(lattice.center(i)) ? 1 : 0;
  return VoxelSet(lattice, std::move(occ));
}

std::size_t VoxelSet::count() const { return static_cast<std::size_t>(std::count(occ_.begin(), occ_.end(), 1)); }

double VoxelSet::measure() const { return static_cast<double>(count()) * lattice_.cell_volume(); }

VoxelSet VoxelSet::shifted(const std::array<int, 3>& cells) const {
  Lattice lat = lattice_;
  for (int d = 0; d < lat.dim; ++d) lat.origin[d] += cells[d] * lat.h;
  return VoxelSet(lat, occ_);
}

std::vector<std::size_t> VoxelSet::occupied_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < occ_.size(); ++i)
    if (occ_[i]) out.push_back(i);
  return out;
}

VoxelField as_field(const VoxelSet& v) {
  VoxelField f{v.lattice(), std::vector<double>(v.occupancy().size())};
  for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] = v.occupancy()[i];
  return f;
}

VoxelMeasures field_measures(const VoxelField& f) {
  KahanSum mass;
  KahanSum m[3];
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    const double v = f.values[i];
    if (v == 0.0) continue;
    const Point c = f.lattice.center(i);
    mass.add(v);
    for (int d = 0; d < 3; ++d) m[d].add(v * c[d]);
  }
  if (!(mass.value() > 0.0)) throw PreconditionError("empty voxel set");
  const double inv = 1.0 / mass.value();
  return {mass.value() * f.lattice.cell_volume(), {inv * m[0].value(), inv * m[1].value(), inv * m[2].value()}};
}

Lattice aligned_cover(const Lattice& ref, const Point& lo, const Point& hi) {
  Lattice out = ref;
  for (int d = 0; d < ref.dim; ++d) {
    const double k0 = std::floor((lo[d] - ref.origin[d]) / ref.h + 1e-9);
    const double k1 = std::ceil((hi[d] - ref.origin[d]) / ref.h - 1e-9);
    out.origin[d] = ref.origin[d] + k0 * ref.h;
    out.dims[d] = std::max(1, static_cast<int>(k1 - k0));
  }
  return out;
}

Point upper_corner(const Lattice& l) {
  Point hi = l.origin;
  for (int d = 0; d < l.dim; ++d) hi[d] += l.dims[d] * l.h;
  return hi;
}

namespace {

template <class T>
std::vector<T> embed_values(const Lattice& from, const std::vector<T>& values, const Lattice& to) {
  if (!from.aligned_with(to)) throw PreconditionError("embedding needs aligned lattices");
  std::vector<T> out(to.size(), T{});
  int off[3] = {0, 0, 0};
  for (int d = 0; d < to.dim; ++d) {
    off[d] = static_cast<int>(std::lround((from.origin[d] - to.origin[d]) / to.h));
    if (off[d] < 0 || off[d] + from.dims[d] > to.dims[d]) throw PreconditionError("target lattice does not cover the source");
  }
  const auto& fd = from.dims;
  for (int k = 0; k < fd[2]; ++k)
    for (int j = 0; j < fd[1]; ++j)
      for (int i = 0; i < fd[0]; ++i) {
        const T v = values[from.index(i, j, k)];
        if (v != T{}) out[to.index(i + off[0], j + off[1], k + off[2])] = v;
      }
  return out;
}

}  // namespace

VoxelField embed(const VoxelField& f, const Lattice& to) { return {to, embed_values(f.lattice, f.values, to)}; }

VoxelSet embed(const VoxelSet& v, const Lattice& to) { return VoxelSet(to, embed_values(v.lattice(), v.occupancy(), to)); }

VoxelMeasures voxel_measures(const VoxelSet& v) { return field_measures(as_field(v)); }

namespace {

// Area of [x0,x1] x [y0,y1] inside the disk of radius r about the origin, in
// closed form between the abscissae where the circle crosses y = y0, y1.
double rect_disk_area(double x0, double x1, double y0, double y1, double r) {
  if (!(r > 0.0)) return 0.0;
  const double a = std::max(x0, -r), b = std::min(x1, r);
  if (!(b > a)) return 0.0;
  const double r2 = r * r;
  double cuts[6] = {a, b, 0, 0, 0, 0};
  int n = 2;
  for (double y : {y0, y1}) {
    if (std::abs(y) >= r) continue;
    const double x = std::sqrt(r2 - y * y);
    for (double xc : {-x, x})
      if (xc > a && xc < b) cuts[n++] = xc;
  }
  std::sort(cuts, cuts + n);
  auto prim = [&](double x) {  // integral of sqrt(r^2 - x^2)
    const double xr = std::clamp(x / r, -1.0, 1.0);
    return 0.5 * (x * std::sqrt(std::max(0.0, r2 - x * x)) + r2 * std::asin(xr));
  };
  double area = 0.0;
  for (int i = 0; i + 1 < n; ++i) {
    const double p = cuts[i], q = cuts[i + 1];
    if (!(q > p)) continue;
    const double m = 0.5 * (p + q);
    const double rho = std::sqrt(r2 - m * m);
    const bool top_clip = y1 < rho, bot_clip = y0 > -rho;
    const double top = top_clip ? y1 : rho, bot = bot_clip ? y0 : -rho;
    if (top <= bot) continue;
    const double len = q - p, arc = prim(q) - prim(p);
    area += (top_clip ? y1 * len : arc) - (bot_clip ? y0 * len : -arc);
  }
  return area;
}

}  // namespace

double cell_ball_overlap(const Lattice& lat, std::size_t idx, const Point& c, double r) {
  return cube_ball_overlap(lat.center(idx), lat.h, lat.dim, c, r);
}

double cube_ball_overlap(const Point& p, double h, int dim, const Point& c, double r) {
  const double half = 0.5 * h;
  double near2 = 0.0, far2 = 0.0;
  for (int d = 0; d < dim; ++d) {
    const double off = std::abs(p[d] - c[d]);
    const double nd = std::max(0.0, off - half);
    const double fd = off + half;
    near2 += nd * nd;
    far2 += fd * fd;
  }
  const double r2 = r * r;
  if (far2 <= r2) return std::pow(h, dim);
  if (near2 >= r2) return 0.0;
  const double x0 = p[0] - half - c[0], x1 = p[0] + half - c[0];
  const double y0 = p[1] - half - c[1], y1 = p[1] + half - c[1];
  if (dim == 2) return rect_disk_area(x0, x1, y0, y1, r);
  // Slices along the last axis; the slice area is smooth between the heights
  // where the slice circle meets an edge line or a corner of the cell.
  const double z0 = std::max(p[2] - half - c[2], -r), z1 = std::min(p[2] + half - c[2], r);
  if (!(z1 > z0)) return 0.0;
  double cuts[2 + 2 * 8] = {z0, z1};
  int n = 2;
  auto add_radius = [&](double d2) {
    if (d2 >= r2) return;
    const double z = std::sqrt(r2 - d2);
    for (double zc : {-z, z})
      if (zc > z0 && zc < z1) cuts[n++] = zc;
  };
  for (double x : {x0, x1}) add_radius(x * x);
  for (double y : {y0, y1}) add_radius(y * y);
  for (double x : {x0, x1})
    for (double y : {y0, y1}) add_radius(x * x + y * y);
  std::sort(cuts, cuts + n);
  // Cubic map with vanishing end derivatives tames the (z - z*)^(3/2) kinks.
  const GaussRule& g = gauss_legendre(6);
  double vol = 0.0;
  for (int i = 0; i + 1 < n; ++i) {
    const double a = cuts[i], b = cuts[i + 1];
    if (!(b > a)) continue;
    const double mid = 0.5 * (a + b), hw = 0.5 * (b - a);
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
      const double t = g.nodes[k];
      const double z = mid + hw * 0.5 * (3.0 * t - t * t * t);
      const double jac = hw * 1.5 * (1.0 - t * t);
      vol += g.weights[k] * jac * rect_disk_area(x0, x1, y0, y1, std::sqrt(std::max(0.0, r2 - z * z)));
    }
  }
  return vol;
}

VoxelFrame voxel_frame(const VoxelSet& v) {
  const Lattice& lat = v.lattice();
  const std::vector<std::size_t> occ = v.occupied_indices();
  if (occ.empty()) throw PreconditionError("empty voxel set");
  VoxelFrame f;
  f.dim = lat.dim;
  f.h = lat.h;
  f.anchor = lat.center(occ.front());
  f.measure = v.measure();
  const auto k0 = lat.coords(occ.front());
  f.offsets.reserve(occ.size());
  for (std::size_t i : occ) {
    const auto k = lat.coords(i);
    Point o{};
    for (int d = 0; d < lat.dim; ++d) o[d] = static_cast<double>(k[d] - k0[d]) * lat.h;
    f.offsets.push_back(o);
  }
  return f;
}

double symm_diff_ball(const VoxelFrame& f, const Point& local_center) {
  KahanSum inter;
  for (const Point& o : f.offsets) inter.add(cube_ball_overlap(o, f.h, f.dim, local_center, 1.0));
  return f.measure + unit_ball_volume(f.dim) - 2.0 * inter.value();
}

double symm_diff_ball(const VoxelSet& v, const Point& ball_center) {
  const VoxelFrame f = voxel_frame(v);
  return symm_diff_ball(f, ball_center - f.anchor);
}

namespace {

// density(x) in [0,1] for x relative to the set centre; rmin/rmax bound the
// radii where it can differ from 1 and 0.
template <class Density>
VoxelField sample_field(const Lattice& lat, const Point& center, double rmin, double rmax, int samples, Density&& density) {
  if (samples < 1) throw PreconditionError("samples must be at least 1");
  VoxelField f{lat, std::vector<double>(lat.size(), 0.0)};
  const double half_diag = 0.5 * lat.h * std::sqrt(static_cast<double>(lat.dim));
  const int sz = lat.dim == 3 ? samples : 1;
  const double inv = 1.0 / (static_cast<double>(samples) * samples * sz);
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    const Point d = lat.center(i) - center;
    const double t = norm(d);
    if (samples == 1) {
      f.values[i] = t >= rmax ? 0.0 : t < rmin ? 1.0 : density(d);
      continue;
    }
    if (t - half_diag >= rmax) continue;
    if (t + half_diag < rmin) {
      f.values[i] = 1.0;
      continue;
    }
    double acc = 0.0;
    for (int c = 0; c < sz; ++c)
      for (int b = 0; b < samples; ++b)
        for (int a = 0; a < samples; ++a) {
          Point x = d;
          x[0] += lat.h * ((a + 0.5) / samples - 0.5);
          x[1] += lat.h * ((b + 0.5) / samples - 0.5);
          if (lat.dim == 3) x[2] += lat.h * ((c + 0.5) / samples - 0.5);
          const double r = norm(x);
          acc += r >= rmax ? 0.0 : r < rmin ? 1.0 : density(x);
        }
    f.values[i] = acc * inv;
  }
  return f;
}

}  // namespace

VoxelField voxelize(const GraphSet& e, const Lattice& lat, int samples) {
  if (lat.dim != e.dim()) throw PreconditionError("lattice and set dimensions differ");
  double lo = 0.0, hi = 0.0;
  for (const GraphCell& c : e.cells()) {
    lo = std::min(lo, c.u);
    hi = std::max(hi, c.u);
  }
  const SphereGrid& grid = e.grid();
  return sample_field(lat, e.center(), 1.0 + lo, 1.0 + hi, samples, [&](const Point& x) {
    const double t = norm(x);
    const std::size_t j = grid.locate(x);
    double in = 0.0;
    for (std::size_t c : e.cells_at(j))
      if (t < 1.0 + e.cells()[c].u) in += e.cells()[c].weight;
    return in / grid.weight(j);
  });
}

VoxelField voxelize(const TwoSidedGraphSet& ts, const Lattice& lat, int samples) {
  if (lat.dim != ts.grid->dim()) throw PreconditionError("lattice and set dimensions differ");
  const double um = *std::max_element(ts.u_minus.begin(), ts.u_minus.end());
  const double up = *std::max_element(ts.u_plus.begin(), ts.u_plus.end());
  return sample_field(lat, ts.center, 1.0 - um, 1.0 + up, samples, [&](const Point& x) {
    const double t = norm(x);
    const std::size_t j = ts.grid->locate(x);
    return t < 1.0 - ts.u_minus[j] || (t >= 1.0 && t < 1.0 + ts.u_plus[j]) ? 1.0 : 0.0;
  });
}

VoxelSet threshold(const VoxelField& f, double level) {
  std::vector<std::uint8_t> occ(f.values.size());
  for (std::size_t i = 0; i < occ.size(); ++i) occ[i] = f.values[i] > level ? 1 : 0;
  return VoxelSet(f.lattice, std::move(occ));
}

// ----------------------------------------------------------- rearrangement

RadialProfile::RadialProfile(int dim, std::vector<double> radii, std::vector<double> values)
    : dim_(dim), radii_(std::move(radii)), values_(std::move(values)) {
  if (radii_.size() != values_.size()) throw PreconditionError("profile radii and values differ in length");
  for (std::size_t i = 1; i < radii_.size(); ++i) {
    if (!(radii_[i] > radii_[i - 1])) throw PreconditionError("profile radii must increase");
    if (values_[i] > values_[i - 1]) throw PreconditionError("profile values must not increase");
  }
}

double RadialProfile::operator()(double r) const {
  auto it = std::upper_bound(radii_.begin(), radii_.end(), r);
  if (it == radii_.end()) return 0.0;
  return values_[static_cast<std::size_t>(it - radii_.begin())];
}

double RadialProfile::l1() const {
  const double w = unit_ball_volume(dim_);
  KahanSum s;
  double prev = 0.0;
  for (std::size_t i = 0; i < radii_.size(); ++i) {
    const double cur = std::pow(radii_[i], dim_);
    s.add(values_[i] * w * (cur - prev));
    prev = cur;
  }
  return s.value();
}

RadialProfile sd_rearrangement(const VoxelField& g) {
  std::vector<double> vals;
  vals.reserve(g.values.size());
  for (double v : g.values) {
    if (v < 0.0) throw DomainError("rearrangement requires nonnegative values");
    if (v > 0.0) vals.push_back(v);
  }
  std::sort(vals.begin(), vals.end(), std::greater<>());
  const int n = g.lattice.dim;
  const double cell = g.lattice.cell_volume();
  const double w = unit_ball_volume(n);
  std::vector<double> radii, values;
  std::size_t count = 0;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    ++count;
    if (i + 1 < vals.size() && vals[i + 1] == vals[i]) continue;
    radii.push_back(std::pow(static_cast<double>(count) * cell / w, 1.0 / n));
    values.push_back(vals[i]);
  }
  return RadialProfile(n, std::move(radii), std::move(values));
}

}  // namespace rieszstab
