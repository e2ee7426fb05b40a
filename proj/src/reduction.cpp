#include "rieszstab/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "rieszstab/errors.hpp"

namespace rieszstab {

namespace {

constexpr double kVolumeTolerance = 5e-3;

Point clip_dim(Point x, int dim) {
  if (dim == 2) x[2] = 0.0;
  return x;
}

// Occupied stretches of the ray c + t d, t >= 0 (Amanatides–Woo traversal).
std::vector<std::pair<double, double>> cast_ray(const VoxelSet& v, const Point& c, const Point& d) {
  const Lattice& lat = v.lattice();
  const int n = lat.dim;
  double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < n; ++a) {
    const double lo = lat.origin[a], hi = lo + lat.dims[a] * lat.h;
    if (d[a] == 0.0) {
      if (c[a] < lo || c[a] >= hi) return {};
      continue;
    }
    double ta = (lo - c[a]) / d[a], tb = (hi - c[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  std::vector<std::pair<double, double>> out;
  if (!(t1 > t0)) return out;

  std::array<int, 3> cell{0, 0, 0}, step{0, 0, 0};
  std::array<double, 3> t_max{t1, t1, t1}, t_delta{0.0, 0.0, 0.0};
  const double probe = 0.5 * (t0 + std::min(t1, t0 + 1e-9 * lat.h));
  for (int a = 0; a < n; ++a) {
    const double x = c[a] + probe * d[a];
    cell[a] = std::clamp(static_cast<int>(std::floor((x - lat.origin[a]) / lat.h)), 0, lat.dims[a] - 1);
    if (d[a] > 0.0) {
      step[a] = 1;
      t_max[a] = (lat.origin[a] + (cell[a] + 1) * lat.h - c[a]) / d[a];
      t_delta[a] = lat.h / d[a];
    } else if (d[a] < 0.0) {
      step[a] = -1;
      t_max[a] = (lat.origin[a] + cell[a] * lat.h - c[a]) / d[a];
      t_delta[a] = -lat.h / d[a];
    }
  }
  double t = t0;
  while (t < t1) {
    int axis = 0;
    for (int a = 1; a < n; ++a)
      if (t_max[a] < t_max[axis]) axis = a;
    const double next = std::min(t_max[axis], t1);
    if (next > t && v.occupied(lat.index(cell[0], cell[1], cell[2]))) {
      if (!out.empty() && out.back().second >= t) out.back().second = next;
      else out.emplace_back(t, next);
    }
    t = next;
    cell[axis] += step[axis];
    if (cell[axis] < 0 || cell[axis] >= lat.dims[axis]) break;
    t_max[axis] += t_delta[axis];
  }
  return out;
}

std::vector<Point> sub_directions(const SphereGrid& grid, std::size_t j, int s) {
  const Point x = grid.node(j);
  const double w = grid.weight(j);
  std::vector<Point> dirs;
  auto offset = [s](int i) { return (i + 0.5) / s - 0.5; };
  if (grid.dim() == 2) {
    const double th = std::atan2(x[1], x[0]);
    for (int i = 0; i < s; ++i) {
      const double a = th + offset(i) * w;
      dirs.push_back({std::cos(a), std::sin(a), 0.0});
    }
    return dirs;
  }
  const auto [e1, e2] = tangent_frame(x, 3);
  const double side = std::sqrt(w);
  for (int i = 0; i < s; ++i)
    for (int k = 0; k < s; ++k) {
      const Point y = x + (offset(i) * side) * e1 + (offset(k) * side) * e2;
      dirs.push_back((1.0 / norm(y)) * y);
    }
  return dirs;
}

std::vector<double> cell_distances(const Lattice& lat, const Point& c) {
  std::vector<double> d(lat.size());
  for (std::size_t i = 0; i < lat.size(); ++i) d[i] = distance(clip_dim(lat.center(i), lat.dim), clip_dim(c, lat.dim));
  return d;
}

// Cells with pred(i), ordered by |d - target| then index.
std::vector<std::size_t> shell_cells(const std::vector<double>& dist, double target,
                                     const std::function<bool(std::size_t)>& pred) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < dist.size(); ++i)
    if (pred(i)) idx.push_back(i);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const double da = std::abs(dist[a] - target), db = std::abs(dist[b] - target);
    return da != db ? da < db : a < b;
  });
  return idx;
}

}  // namespace

StageCheck make_check(std::string name, double lhs, double rhs, double tol) {
  return {std::move(name), lhs, rhs, tol, lhs <= rhs + tol};
}

double Truncation::moved_volume() const {
  return static_cast<double>(moved_outer + moved_inner) * set.lattice().cell_volume();
}

Truncation truncate_to_annulus(const VoxelSet& v, double eps, const Point& center) {
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0, 1)");
  const int n = v.dim();
  const double omega = unit_ball_volume(n);
  if (std::abs(v.measure() - omega) > kVolumeTolerance * omega)
    throw PreconditionError("truncation requires |E| within 0.5% of the unit-ball volume");
  const double e2 = eps * eps, h = v.spacing();

  Point lo = v.lattice().origin, hi = upper_corner(v.lattice());
  for (int a = 0; a < n; ++a) {
    lo[a] = std::min(lo[a], center[a] - 1.0 - e2 - 2.0 * h);
    hi[a] = std::max(hi[a], center[a] + 1.0 + e2 + 2.0 * h);
  }
  const Lattice lat = aligned_cover(v.lattice(), lo, hi);
  std::vector<std::uint8_t> occ = embed(v, lat).occupancy();
  const std::vector<double> dist = cell_distances(lat, center);

  std::size_t moved_outer = 0, moved_inner = 0;
  std::vector<std::size_t> outer;
  for (std::size_t i = 0; i < occ.size(); ++i)
    if (occ[i] && dist[i] > 1.0 + e2) outer.push_back(i);
  if (!outer.empty()) {
    const auto recv = shell_cells(dist, 1.0 + e2 / 3.0, [&](std::size_t i) {
      return !occ[i] && dist[i] > 1.0 + e2 / 3.0 && dist[i] < 1.0 + e2 / 2.0;
    });
    if (recv.size() < outer.size()) {
      std::ostringstream os;
      os << "outer shell holds " << recv.size() << " cells, " << outer.size() << " must move";
      throw NotApplicableError(os.str());
    }
    for (std::size_t i : outer) occ[i] = 0;
    for (std::size_t k = 0; k < outer.size(); ++k) occ[recv[k]] = 1;
    moved_outer = outer.size();
  }

  std::vector<std::size_t> holes;
  for (std::size_t i = 0; i < occ.size(); ++i)
    if (!occ[i] && dist[i] < 1.0 - e2) holes.push_back(i);
  if (!holes.empty()) {
    const auto donors = shell_cells(dist, 1.0 - e2 / 3.0, [&](std::size_t i) {
      return occ[i] && dist[i] > 1.0 - e2 / 2.0 && dist[i] < 1.0 - e2 / 3.0;
    });
    if (donors.size() < holes.size()) {
      std::ostringstream os;
      os << "inner shell holds " << donors.size() << " cells, " << holes.size() << " holes to fill";
      throw NotApplicableError(os.str());
    }
    for (std::size_t k = 0; k < holes.size(); ++k) occ[donors[k]] = 0;
    for (std::size_t i : holes) occ[i] = 1;
    moved_inner = holes.size();
  }
  return {VoxelSet(lat, std::move(occ)), center, moved_outer, moved_inner};
}

Rearrangement radial_rearrange(const VoxelSet& v, std::shared_ptr<const SphereGrid> grid, double eps,
                               const Point& center, int sub_rays) {
  if (!grid || grid->dim() != v.dim()) throw PreconditionError("sphere grid and voxel set dimensions differ");
  if (sub_rays < 1) throw DomainError("need at least one ray per node");
  const int n = v.dim();
  const std::size_t m = grid->size();
  Rearrangement out{TwoSidedGraphSet{grid, std::vector<double>(m), std::vector<double>(m), clip_dim(center, n)}, {}, 0.0};
  out.rays.resize(m);
  KahanSum vol;
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<RayProfile> sub;
    for (const Point& d : sub_directions(*grid, j, sub_rays)) sub.push_back(interval_profile(cast_ray(v, out.set.center, d)));
    RayProfile prof = mean_profile(sub);
    const double outside = prof.mass(n, 1.0, std::numeric_limits<double>::infinity());
    const double missing = std::max(1.0 / n - prof.mass(n, 0.0, 1.0), 0.0);
    const double up = std::pow(1.0 + n * outside, 1.0 / n) - 1.0;
    const double um = 1.0 - std::pow(std::max(1.0 - n * missing, 0.0), 1.0 / n);
    if (up >= eps || um >= eps) {
      std::ostringstream os;
      os << "node " << j << " leaves the eps-regime: u+ = " << up << ", u- = " << um << ", eps = " << eps;
      throw PreconditionError(os.str());
    }
    out.set.u_plus[j] = up;
    out.set.u_minus[j] = um;
    vol.add(grid->weight(j) * prof.mass(n));
    out.rays[j] = std::move(prof);
  }
  out.ray_volume = vol.value();
  return out;
}

Consolidation consolidate(const TwoSidedGraphSet& t) {
  const SphereGrid& grid = *t.grid;
  const int n = grid.dim();
  std::vector<GraphCell> cells;
  KahanSum before, after;
  int split = 0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double up = t.u_plus[j], um = t.u_minus[j], w = grid.weight(j);
    const double ap = std::pow(1.0 + up, n) - 1.0, am = 1.0 - std::pow(1.0 - um, n);
    before.add(w * (ap + am) / n);
    if (up == 0.0 || um == 0.0) {
      cells.push_back({j, w, up > 0.0 ? up : -um});
      after.add(w * (ap + am) / n);
      continue;
    }
    const double lambda = ap / (ap + am);
    cells.push_back({j, lambda * w, up});
    cells.push_back({j, (1.0 - lambda) * w, -um});
    after.add(w * (lambda * ap + (1.0 - lambda) * am) / n);
    ++split;
  }
  Consolidation out{GraphSet::from_cells(t.grid, std::move(cells), t.center), before.value(), after.value(), split, {}};
  out.ratio = make_check("consolidation: |E''ΔB_z|/2 <= |E_zΔB_z|", 0.5 * out.sd_before, out.sd_after,
                         1e-12 * (1.0 + out.sd_before));
  return out;
}

bool BarycenterResult::boundary_inward() const {
  return std::all_of(boundary.begin(), boundary.end(), [](const BoundaryProbe& b) { return b.value < 0.0; });
}

BarycenterResult adjust_barycenter(const VoxelSet& v, double eps, std::shared_ptr<const SphereGrid> grid,
                                   const Point& origin, const BarycenterOptions& opt) {
  if (!(opt.kappa > 0.0 && opt.kappa <= 1.0)) throw DomainError("damping must lie in (0, 1]");
  const int n = v.dim();
  const Point o = clip_dim(origin, n);
  const double radius = 0.5 * eps;
  auto stage = [&](const Point& z) {
    Rearrangement r = radial_rearrange(v, grid, eps, z, opt.sub_rays);
    Consolidation c = consolidate(r.set);
    return std::make_pair(std::move(r), std::move(c));
  };

  std::optional<BarycenterResult> found;
  Point z = o;
  double best = std::numeric_limits<double>::infinity();
  for (int it = 0; it <= opt.max_iter; ++it) {
    auto [r, c] = stage(z);
    const Point step = clip_dim(graph_barycenter(c.set) - z, n);
    const double res = norm(step);
    best = std::min(best, res);
    if (res <= opt.tol) {
      found.emplace(BarycenterResult{z, std::move(r), std::move(c), res, it, {}});
      break;
    }
    if (it == opt.max_iter) {
      std::ostringstream os;
      os << "barycenter iteration stalled after " << opt.max_iter << " steps, best residual " << best;
      throw ConvergenceError(os.str(), best);
    }
    z = z + opt.kappa * step;
    const double off = distance(z, o);
    if (off > radius) z = o + (radius / off) * (z - o);
  }

  if (opt.boundary_check) {
    for (int a = 0; a < n; ++a)
      for (double s : {1.0, -1.0}) {
        Point z_b = o;
        z_b[a] += s * radius;
        const auto [r, c] = stage(z_b);
        found->boundary.push_back({z_b, dot(graph_barycenter(c.set) - z_b, z_b - o)});
      }
  }
  return std::move(*found);
}

bool ReductionReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const StageCheck& c) { return c.passed; });
}

const StageCheck* ReductionReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

ReductionReport reduce_pipeline(const VoxelSet& v, const KernelParams& p, const ReductionOptions& opt) {
  const int n = v.dim();
  if (p.dim() != n) throw PreconditionError("kernel and voxel set dimensions differ");
  ReductionReport rep;
  rep.dim = n;
  rep.alpha = p.alpha();
  rep.eps = opt.eps;
  rep.input_deficit = deficit(v, p);
  rep.input_asymmetry = fraenkel_asymmetry(v, opt.search);
  rep.origin = clip_dim(rep.input_asymmetry.center, n);
  const double omega = unit_ball_volume(n);
  const double d_e = rep.input_deficit.value, err_e = rep.input_deficit.error_bound;
  const double delta_e = rep.input_asymmetry.delta;

  try {
    rep.truncation = truncate_to_annulus(v, opt.eps, rep.origin);
  } catch (const NotApplicableError& e) {
    rep.branch = "large-asymmetry";
    rep.note = e.what();
    rep.checks.push_back(make_check("large asymmetry: δ(E) <= 2ω_N", delta_e, 2.0 * omega, opt.asymmetry_tol));
    if (delta_e >= 2.0 * (omega - opt.xi)) {
      const double bound = sparse_deficit_bound(p);
      rep.checks.push_back(make_check("large asymmetry: sparse bound < D(E)", bound, d_e, err_e));
    }
    return rep;
  }
  rep.branch = "nearly-spherical";
  const Truncation& tr = *rep.truncation;
  const VoxelSet& e1 = tr.set;
  const EnergyEstimate d1 = deficit(e1, p);
  const AsymmetryResult a1 = fraenkel_asymmetry(e1, opt.search);
  rep.checks.push_back(make_check("truncation: D(E') <= D(E)", d1.value, d_e, d1.error_bound + err_e));
  rep.checks.push_back(make_check("truncation: |δ(E') - δ(E)| <= moved", std::abs(a1.delta - delta_e), 0.0,
                                  2.0 * tr.moved_volume() + opt.asymmetry_tol));

  const int res = opt.grid > 0 ? opt.grid : (n == 3 ? 16 : 128);
  auto grid = SphereGrid::make(n, res);
  BarycenterOptions bopt = opt.barycenter;
  bopt.sub_rays = opt.sub_rays;
  BarycenterResult bar = adjust_barycenter(e1, opt.eps, grid, rep.origin, bopt);
  rep.z = bar.z;
  rep.barycenter_residual = bar.residual;
  rep.iterations = bar.iterations;
  rep.boundary = bar.boundary;

  const TwoSidedGraphSet& e2 = bar.rearranged.set;
  const GraphSet& ez = bar.consolidated.set;
  const EnergyEstimate d2 = deficit(e2, p);
  const EnergyEstimate dz = deficit(ez, p);
  const AsymmetryResult a2 = fraenkel_asymmetry(e2, opt.search);
  // Ray sampling can shift the volume of E'' away from |E'|.
  const double vol_gap = std::abs(bar.rearranged.ray_volume - e1.measure());
  const double atol = opt.asymmetry_tol + vol_gap;
  const double sd_z = symm_diff_ball(ez, bar.z);

  rep.checks.push_back(make_check("rearrangement: D(E'') <= D(E')", d2.value, d1.value,
                                  d2.error_bound + d1.error_bound));
  rep.checks.push_back(make_check("rearrangement: δ(E')/2 <= δ(E'')", 0.5 * a1.delta, a2.delta, atol));
  rep.checks.push_back(make_check("consolidation: D(E_z) <= 2 D(E')", dz.value, 2.0 * d1.value,
                                  dz.error_bound + 2.0 * d1.error_bound));
  rep.checks.push_back(make_check("consolidation: δ(E')/6 <= |E_zΔB_z|", a1.delta / 6.0, sd_z, atol));
  rep.checks.push_back(bar.consolidated.ratio);

  GraphSet fin = ez.with_center({0.0, 0.0, 0.0});
  const double final_res = norm(clip_dim(graph_barycenter(fin), n));
  rep.checks.push_back(make_check("final: D(Ẽ) <= 2 D(E)", dz.value, 2.0 * d_e,
                                  dz.error_bound + 2.0 * err_e));
  rep.checks.push_back(make_check("final: δ(E)/6 <= |ẼΔB|", delta_e / 6.0, symm_diff_ball(fin, {0.0, 0.0, 0.0}), atol));
  rep.checks.push_back(make_check("final: |Bar(Ẽ)| <= barycenter tolerance", final_res, bopt.tol, 0.0));
  if (!bar.boundary.empty()) {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& b : bar.boundary) worst = std::max(worst, b.value);
    rep.checks.push_back(make_check("barycenter: (Bar(E_z) - z)·z < 0 on |z| = ε/2", worst, 0.0, 0.0));
  }
  rep.rearranged = std::move(bar.rearranged);
  rep.consolidated = std::move(bar.consolidated.set);
  rep.final_set = std::move(fin);
  return rep;
}

nlohmann::ordered_json to_json(const StageCheck& c) {
  return {{"name", c.name}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"tol", c.tol}, {"passed", c.passed}};
}

nlohmann::ordered_json to_json(const ReductionReport& r) {
  using nlohmann::ordered_json;
  auto pt = [&](const Point& x) {
    ordered_json a = ordered_json::array();
    for (int i = 0; i < r.dim; ++i) a.push_back(x[i]);
    return a;
  };
  ordered_json j;
  j["dim"] = r.dim;
  j["alpha"] = r.alpha;
  j["eps"] = r.eps;
  j["branch"] = r.branch;
  if (!r.note.empty()) j["note"] = r.note;
  j["input"] = {{"deficit", r.input_deficit.value},
                {"deficit_error", r.input_deficit.error_bound},
                {"asymmetry", r.input_asymmetry.delta},
                {"asymmetry_center", pt(r.input_asymmetry.center)}};
  if (r.truncation) {
    j["truncation"] = {{"moved_outer_cells", r.truncation->moved_outer},
                       {"moved_inner_cells", r.truncation->moved_inner},
                       {"moved_volume", r.truncation->moved_volume()},
                       {"volume", r.truncation->set.measure()}};
  }
  if (r.rearranged) {
    const auto& t = r.rearranged->set;
    j["rearranged"] = {{"grid", t.grid->describe()},
                       {"max_u_plus", *std::max_element(t.u_plus.begin(), t.u_plus.end())},
                       {"max_u_minus", *std::max_element(t.u_minus.begin(), t.u_minus.end())},
                       {"ray_volume", r.rearranged->ray_volume}};
  }
  if (r.consolidated) {
    j["consolidated"] = {{"cells", r.consolidated->cells().size()},
                         {"max_abs_u", r.consolidated->max_abs_u()},
                         {"volume", graph_volume(*r.consolidated)}};
    j["z"] = pt(r.z);
    j["barycenter_residual"] = r.barycenter_residual;
    j["iterations"] = r.iterations;
    ordered_json probes = ordered_json::array();
    for (const auto& b : r.boundary) probes.push_back({{"z", pt(b.z)}, {"value", b.value}});
    j["boundary_probes"] = probes;
  }
  ordered_json checks = ordered_json::array();
  for (const auto& c : r.checks) checks.push_back(to_json(c));
  j["checks"] = checks;
  j["passed"] = r.passed();
  return j;
}

}  // namespace rieszstab
