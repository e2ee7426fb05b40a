#include "rieszstab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "rieszstab/asymmetry.hpp"
#include "rieszstab/energy.hpp"
#include "rieszstab/errors.hpp"
#include "rieszstab/io.hpp"
#include "rieszstab/quadrature.hpp"
#include "rieszstab/spectral.hpp"
#include "rieszstab/transport.hpp"

namespace rieszstab {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10e", x);
  return buf;
}

Point random_point(int dim, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> U(lo, hi);
  Point x{};
  for (int d = 0; d < dim; ++d) x[d] = U(rng);
  return x;
}

Point box(int dim, double a) { return {a, a, dim == 3 ? a : 0.0}; }

std::vector<double> random_harmonic_combo(const HarmonicBasis& b, int kmin, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<double> u(b.grid().size(), 0.0);
  for (std::size_t f = b.offset(kmin); f < b.size(); ++f) {
    const double c = g(rng) / (1.0 + b.degree(f));
    for (std::size_t j = 0; j < u.size(); ++j) u[j] += c * b.value(f, j);
  }
  return u;
}

void scale_sup(std::vector<double>& u, double sup) {
  double m = 0.0;
  for (double v : u) m = std::max(m, std::abs(v));
  if (m > 0.0)
    for (double& v : u) v *= sup / m;
}

TwoSidedGraphSet random_two_sided(std::shared_ptr<const SphereGrid> g, std::mt19937_64& rng, double amp) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  TwoSidedGraphSet t{g, std::vector<double>(g->size(), 0.0), std::vector<double>(g->size(), 0.0), {}};
  for (std::size_t j = 0; j < g->size(); ++j) {
    const double r = U(rng);
    if (r < 0.5) {
      t.u_plus[j] = amp * U(rng);
      t.u_minus[j] = amp * U(rng);
    } else if (r < 0.75) {
      t.u_plus[j] = amp * U(rng);
    } else {
      t.u_minus[j] = amp * U(rng);
    }
  }
  return t;
}

// Radius with the given t^(N-1)-weighted mass fraction, by bisection.
double profile_quantile(const RayProfile& prof, int n, double q) {
  const double target = q * prof.mass(n);
  double lo = prof.breaks.front(), hi = prof.breaks.back();
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (prof.mass(n, prof.breaks.front(), mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Point random_direction(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  for (;;) {
    const Point x{g(rng), g(rng), dim == 3 ? g(rng) : 0.0};
    const double r = norm(x);
    if (r > 1e-12) return (1.0 / r) * x;
  }
}

std::shared_ptr<const SphereGrid> transport_grid(int dim) { return SphereGrid::make(dim, dim == 3 ? 8 : 64); }

ordered_json check_json(const CertifiedCheck& c) {
  ordered_json j;
  j["name"] = c.name;
  j["instances"] = c.instances;
  j["passed"] = c.passed;
  j["worst_margin"] = c.worst_margin;
  j["all_passed"] = c.all_passed();
  return j;
}

void record(CertifiedCheck& c, double margin) {
  ++c.instances;
  if (margin > 0.0) ++c.passed;
  c.worst_margin = c.instances == 1 ? margin : std::min(c.worst_margin, margin);
}

}  // namespace

// ---------------------------------------------------------------- config

void ExperimentConfig::validate() const {
  auto bad = [](const std::string& m) { throw ConfigurationError(m); };
  if (dim != 2 && dim != 3) bad("dim must be 2 or 3");
  try {
    KernelParams(dim, alpha);
  } catch (const DomainError& e) {
    bad(e.what());
  }
  if (degree < 2) bad("harmonic degree must be at least 2");
  const int mult = dim == 2 ? 2 : 2 * degree + 1;
  if (index < 1 || index > mult) bad("harmonic index must lie in 1.." + std::to_string(mult));
  for (std::size_t i = 0; i < amplitudes.size(); ++i) {
    if (!(amplitudes[i] >= 0.0 && amplitudes[i] < 0.5)) bad("amplitudes must lie in [0, 0.5)");
    if (i > 0 && !(amplitudes[i] > amplitudes[i - 1])) bad("amplitude grid must be sorted ascending");
  }
  if (grid < 0) bad("grid must be non-negative");
  if (!(spacing >= 0.0)) bad("spacing must be non-negative");
  if (k_max < 0 || k_max > 64) bad("k-max must lie in 0..64");
  if (samples < 1) bad("samples must be positive");
  if (graph_sets < 0 || voxel_sets < 0 || instances < 1 || test_functions < 1) bad("instance counts must be positive");
  if (!(eps > 0.0 && eps < 1.0)) bad("eps must lie in (0, 1)");
  for (double t : {xi, riesz_tol, barycenter_tol, pushforward_tol, slope_tol, predictor_tol})
    if (!(t > 0.0)) bad("tolerances must be positive");
}

std::vector<double> ExperimentConfig::amplitude_grid() const {
  if (!amplitudes.empty()) return amplitudes;
  std::vector<double> s{0.0};
  for (int i = 0; i < 12; ++i) s.push_back(1e-3 * std::pow(50.0, i / 11.0));
  return s;
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigurationError("config must be a JSON object");
  ExperimentConfig c;
  static const std::set<std::string> known{"dim", "alpha", "degree", "index", "amplitudes", "voxel_file", "grid",
                                           "spacing", "k_max", "seed", "samples", "graph_sets", "voxel_sets",
                                           "instances", "test_functions", "eps", "xi", "riesz_tol",
                                           "barycenter_tol", "pushforward_tol", "slope_tol", "predictor_tol", "out"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw ConfigurationError("unknown config key \"" + key + "\"");
  try {
    auto get = [&](const char* key, auto& dst) {
      if (j.contains(key)) j.at(key).get_to(dst);
    };
    get("dim", c.dim);
    get("alpha", c.alpha);
    get("degree", c.degree);
    get("index", c.index);
    get("amplitudes", c.amplitudes);
    get("voxel_file", c.voxel_file);
    get("grid", c.grid);
    get("spacing", c.spacing);
    get("k_max", c.k_max);
    get("seed", c.seed);
    get("samples", c.samples);
    get("graph_sets", c.graph_sets);
    get("voxel_sets", c.voxel_sets);
    get("instances", c.instances);
    get("test_functions", c.test_functions);
    get("eps", c.eps);
    get("xi", c.xi);
    get("riesz_tol", c.riesz_tol);
    get("barycenter_tol", c.barycenter_tol);
    get("pushforward_tol", c.pushforward_tol);
    get("slope_tol", c.slope_tol);
    get("predictor_tol", c.predictor_tol);
    get("out", c.out);
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ordered_json to_json(const ExperimentConfig& c) {
  ordered_json j;
  j["dim"] = c.dim;
  j["alpha"] = c.alpha;
  j["degree"] = c.degree;
  j["index"] = c.index;
  j["amplitudes"] = c.amplitude_grid();
  j["voxel_file"] = c.voxel_file;
  j["grid"] = c.grid;
  j["spacing"] = c.spacing;
  j["k_max"] = c.k_max;
  j["seed"] = c.seed;
  j["samples"] = c.samples;
  j["graph_sets"] = c.graph_sets;
  j["voxel_sets"] = c.voxel_sets;
  j["instances"] = c.instances;
  j["test_functions"] = c.test_functions;
  j["eps"] = c.eps;
  j["xi"] = c.xi;
  j["riesz_tol"] = c.riesz_tol;
  j["barycenter_tol"] = c.barycenter_tol;
  j["pushforward_tol"] = c.pushforward_tol;
  j["slope_tol"] = c.slope_tol;
  j["predictor_tol"] = c.predictor_tol;
  j["out"] = c.out;
  return j;
}

ExperimentConfig load_config(const std::string& path) { return config_from_json(parse_json(read_text_file(path), path)); }

ReductionOptions reduction_options(const ExperimentConfig& cfg) {
  ReductionOptions o;
  o.eps = cfg.eps;
  o.grid = cfg.grid;
  o.xi = cfg.xi;
  o.barycenter.tol = cfg.barycenter_tol;
  return o;
}

VoxelSet fit_unit_volume(const Lattice& lat, const std::function<bool(const Point&, double)>& inside) {
  const double omega = unit_ball_volume(lat.dim);
  auto make = [&](double s) { return VoxelSet::from_predicate(lat, [&](const Point& x) { return inside(x, s); }); };
  double lo = 0.25, hi = 4.0;
  for (int it = 0; it < 40; ++it) {
    const double mid = std::sqrt(lo * hi);
    (make(mid).measure() < omega ? lo : hi) = mid;
  }
  VoxelSet a = make(lo), b = make(hi);
  return std::abs(a.measure() - omega) <= std::abs(b.measure() - omega) ? a : b;
}

// ---------------------------------------------------------------- sweep

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 3 || y.size() != n) throw PreconditionError("least squares needs at least 3 points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw PreconditionError("least squares needs distinct abscissae");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    ssr += r * r;
  }
  f.slope_stderr = std::sqrt(ssr / (n - 2) / sxx);
  return f;
}

SweepResult sharpness_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const KernelParams p = cfg.params();
  auto g = SphereGrid::make(cfg.dim, cfg.grid_or(cfg.dim == 3 ? 24 : 256));
  const HarmonicBasis basis = build_basis(g, cfg.degree + 2);
  const std::vector<double>& y = basis.function(basis.offset(cfg.degree) + cfg.index - 1);
  double y2 = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j) y2 += g->weight(j) * y[j] * y[j];

  SweepResult r;
  r.limit = 0.5 * (mu(cfg.degree, p) - mu(1, p)) * y2;
  for (double s : cfg.amplitude_grid()) {
    std::vector<double> u(y.size());
    for (std::size_t j = 0; j < u.size(); ++j) u[j] = s * y[j];
    const GraphSet e = s == 0.0 ? GraphSet(g, u) : barycenter_correct(volume_normalize(GraphSet(g, u)));
    SweepRow row;
    row.s = s;
    const EnergyEstimate d = deficit(e, p);
    row.deficit = d.value;
    row.deficit_error = d.error_bound;
    row.delta = fraenkel_asymmetry(e).delta;
    if (row.deficit > row.deficit_error + cfg.riesz_tol) row.ratio = row.delta / std::sqrt(row.deficit);
    row.predictor = second_variation(analyze(e.node_values(), basis), p);
    r.rows.push_back(row);
  }

  std::vector<std::size_t> valid;
  for (std::size_t i = 0; i < r.rows.size(); ++i)
    if (r.rows[i].s > 0.0 && r.rows[i].deficit > 0.0 && r.rows[i].delta > 0.0) valid.push_back(i);
  const std::size_t trim = valid.size() / 10;
  std::vector<double> lx, ly;
  for (std::size_t k = trim; k + trim < valid.size(); ++k) {
    SweepRow& row = r.rows[valid[k]];
    row.in_fit = true;
    lx.push_back(std::log(row.deficit));
    ly.push_back(std::log(row.delta));
  }
  r.fit_rows = static_cast<int>(lx.size());
  if (r.fit_rows < 4) throw PreconditionError("degenerate fit: " + std::to_string(r.fit_rows) + " usable rows, need 4");
  const LineFit f = least_squares(lx, ly);
  r.slope = f.slope;
  r.intercept = f.intercept;
  r.slope_stderr = f.slope_stderr;
  const boost::math::students_t dist(r.fit_rows - 2);
  const double q = boost::math::quantile(boost::math::complement(dist, 0.025));
  r.slope_ci_low = f.slope - q * f.slope_stderr;
  r.slope_ci_high = f.slope + q * f.slope_stderr;
  const SweepRow& small = r.rows[valid.front()];
  r.limit_gap = small.deficit / (small.s * small.s) / r.limit - 1.0;
  return r;
}

std::string sweep_csv(const SweepResult& r) {
  std::ostringstream os;
  os << "s,D,D_error,delta,ratio,predictor,D_over_s2,in_fit\n";
  for (const SweepRow& row : r.rows) {
    os << num(row.s) << ',' << num(row.deficit) << ',' << num(row.deficit_error) << ',' << num(row.delta) << ','
       << (row.ratio ? num(*row.ratio) : "") << ',' << num(row.predictor) << ','
       << (row.s > 0.0 ? num(row.deficit / (row.s * row.s)) : "") << ',' << (row.in_fit ? 1 : 0) << '\n';
  }
  return os.str();
}

ordered_json to_json(const SweepResult& r) {
  ordered_json j;
  j["rows"] = r.rows.size();
  j["fit_rows"] = r.fit_rows;
  j["slope"] = r.slope;
  j["intercept"] = r.intercept;
  j["slope_stderr"] = r.slope_stderr;
  j["slope_ci95"] = {r.slope_ci_low, r.slope_ci_high};
  j["limit_D_over_s2"] = r.limit;
  j["smallest_s_relative_gap"] = r.limit_gap;
  return j;
}

// ---------------------------------------------------------------- battery

bool BatteryResult::finite() const { return std::isfinite(max_ratio); }

BatteryResult stability_battery(const ExperimentConfig& cfg) {
  cfg.validate();
  const KernelParams p = cfg.params();
  const int n = cfg.dim;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  BatteryResult out;

  auto finish = [&](BatteryRow row) {
    row.violation = row.deficit < -(row.deficit_error + cfg.riesz_tol);
    if (row.violation) ++out.violations;
    if (row.deficit > row.deficit_error + cfg.riesz_tol) {
      row.ratio = row.delta / std::sqrt(row.deficit);
      out.max_ratio = std::max(out.max_ratio, *row.ratio);
    } else {
      ++out.skipped;
      if (row.flag.empty()) row.flag = "ratio skipped: deficit within its error bound";
    }
    out.rows.push_back(std::move(row));
  };

  auto g = SphereGrid::make(n, cfg.grid_or(n == 3 ? 16 : 128));
  const HarmonicBasis basis = build_basis(g, 6);
  {
    const GraphSet ball(g, std::vector<double>(g->size(), 0.0));
    BatteryRow row{"graph", 0, 0.0, 0.0, 0.0, 0.0, {}, false, "ball: ratio 0/0 skipped"};
    const EnergyEstimate d = deficit(ball, p);
    row.deficit = d.value;
    row.deficit_error = d.error_bound;
    row.delta = fraenkel_asymmetry(ball).delta;
    finish(row);
  }
  for (int i = 1; i <= cfg.graph_sets; ++i) {
    std::vector<double> u = random_harmonic_combo(basis, 1, rng);
    double sup = 0.02 + 0.26 * U(rng);
    scale_sup(u, sup);
    GraphSet e = volume_normalize(GraphSet(g, u));
    while (e.max_abs_u() > 0.3) {
      sup *= 0.9;
      scale_sup(u, sup);
      e = volume_normalize(GraphSet(g, u));
    }
    BatteryRow row;
    row.kind = "graph";
    row.id = i;
    row.sup = e.max_abs_u();
    const EnergyEstimate d = deficit(e, p);
    row.deficit = d.value;
    row.deficit_error = d.error_bound;
    row.delta = fraenkel_asymmetry(e).delta;
    finish(row);
  }

  const double h = cfg.spacing_or(n == 3 ? 1.0 / 16 : 1.0 / 64);
  for (int i = 1; i <= cfg.voxel_sets; ++i) {
    const int k = 1 + static_cast<int>(4 * U(rng));
    std::vector<Point> c(k);
    std::vector<double> rad(k);
    double reach = 0.0, rmax = 0.0;
    for (int m = 0; m < k; ++m) {
      c[m] = random_point(n, rng, -0.4, 0.4);
      rad[m] = 0.5 + 0.3 * U(rng);
      reach = std::max(reach, norm(c[m]) + rad[m]);
      rmax = std::max(rmax, rad[m]);
    }
    // The largest ball alone reaches unit volume at scale 1/rmax.
    const double R = reach / rmax + 2 * h;
    const Lattice lat = Lattice::covering(n, h, box(n, -R), box(n, R));
    const VoxelSet v = fit_unit_volume(lat, [&](const Point& x, double s) {
      for (int m = 0; m < k; ++m)
        if (distance(x, s * c[m]) < s * rad[m]) return true;
      return false;
    });
    BatteryRow row;
    row.kind = "voxel";
    row.id = i;
    row.sup = h;
    const EnergyEstimate d = deficit(v, p);
    row.deficit = d.value;
    row.deficit_error = d.error_bound;
    row.delta = fraenkel_asymmetry(v).delta;
    finish(row);
  }
  return out;
}

ordered_json to_json(const BatteryResult& r) {
  ordered_json j;
  int graphs = 0, voxels = 0;
  ordered_json rows = ordered_json::array();
  for (const BatteryRow& row : r.rows) {
    if (row.kind == "voxel") ++voxels;
    else if (row.id > 0) ++graphs;
    ordered_json o;
    o["kind"] = row.kind;
    o["id"] = row.id;
    o[row.kind == "graph" ? "sup_u" : "spacing"] = row.sup;
    o["D"] = row.deficit;
    o["D_error"] = row.deficit_error;
    o["delta"] = row.delta;
    o["ratio"] = row.ratio ? ordered_json(*row.ratio) : ordered_json(nullptr);
    o["violation"] = row.violation;
    if (!row.flag.empty()) o["flag"] = row.flag;
    rows.push_back(o);
  }
  j["graph_sets"] = graphs;
  j["voxel_sets"] = voxels;
  j["violations"] = r.violations;
  j["skipped_ratios"] = r.skipped;
  j["max_ratio"] = r.max_ratio;
  j["rows"] = rows;
  return j;
}

// ---------------------------------------------------------------- verify

double cell_kernel_integral(const Point& lo, double h, const Point& x, const KernelParams& p) {
  const int n = p.dim();
  const double e = p.alpha() - n;
  bool vertex = true, inside = true;
  double gap2 = 0.0;
  for (int d = 0; d < n; ++d) {
    // Snap rounding noise so lattice vertices are recognised.
    double a = lo[d] - x[d], b = a + h;
    if (std::abs(a) < 1e-9 * h) a = 0.0;
    if (std::abs(b) < 1e-9 * h) b = 0.0;
    vertex = vertex && (a == 0.0 || b == 0.0);
    inside = inside && a < 0.0 && b > 0.0;
    const double g = a > 0.0 ? a : (b < 0.0 ? -b : 0.0);
    gap2 += g * g;
  }
  if (vertex) {
    // int over [0,1]^N of |y|^e. Halving the cube gives I = S + 2^(-alpha) I,
    // S the integral over the 2^N - 1 sub-cubes away from the corner.
    static std::map<std::pair<int, double>, double> cache;
    const auto key = std::make_pair(n, p.alpha());
    auto it = cache.find(key);
    if (it == cache.end()) {
      const GaussRule& gl = gauss_legendre(16);
      KahanSum s;
      for (int mask = 1; mask < (1 << n); ++mask) {
        const std::size_t m = gl.nodes.size();
        const std::size_t total = n == 3 ? m * m * m : m * m;
        for (std::size_t q = 0; q < total; ++q) {
          double r2 = 0.0, w = 1.0;
          std::size_t rest = q;
          for (int d = 0; d < n; ++d) {
            const std::size_t k = rest % m;
            rest /= m;
            const double t = 0.25 * (gl.nodes[k] + 1.0) + 0.5 * ((mask >> d) & 1);
            r2 += t * t;
            w *= 0.25 * gl.weights[k];
          }
          s.add(w * std::pow(r2, 0.5 * e));
        }
      }
      it = cache.emplace(key, s.value() / (1.0 - std::pow(2.0, -p.alpha()))).first;
    }
    return std::pow(h, p.alpha()) * it->second;
  }
  if (inside) throw PreconditionError("kernel point inside the cell");
  const double gap = std::sqrt(gap2);
  const std::size_t m = gap < 2 * h ? 12 : (gap < 6 * h ? 4 : 2);
  const GaussRule& gl = gauss_legendre(m);
  const std::size_t total = n == 3 ? m * m * m : m * m;
  double sum = 0.0;
  for (std::size_t q = 0; q < total; ++q) {
    double r2 = 0.0, w = 1.0;
    std::size_t rest = q;
    for (int d = 0; d < n; ++d) {
      const std::size_t k = rest % m;
      rest /= m;
      const double t = lo[d] + 0.5 * h * (gl.nodes[k] + 1.0) - x[d];
      r2 += t * t;
      w *= 0.5 * h * gl.weights[k];
    }
    sum += w * std::pow(r2, 0.5 * e);
  }
  return sum;
}

CertifiedCheck check_tau1(const ExperimentConfig& cfg) {
  const KernelParams p = cfg.params();
  const int n = cfg.dim;
  std::mt19937_64 rng(cfg.seed + 101);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double h = n == 3 ? 0.05 : 1.0 / 64;
  const Lattice lat = Lattice::covering(n, h, box(n, -1.0), box(n, 1.0));
  CertifiedCheck c{"tau1 bound: I(G,H) <= |G| tau1(|H|)"};
  for (int i = 0; i < cfg.instances; ++i) {
    const double fill = 0.02 + 0.18 * U(rng);
    const int k = 1 + static_cast<int>(3 * U(rng));
    std::vector<Point> ctr(k);
    std::vector<double> rad(k);
    for (int m = 0; m < k; ++m) {
      ctr[m] = random_point(n, rng, -0.6, 0.6);
      rad[m] = 0.1 + 0.3 * U(rng);
    }
    std::vector<std::uint8_t> og(lat.size()), oh(lat.size());
    for (std::size_t q = 0; q < lat.size(); ++q) {
      og[q] = U(rng) < fill;
      if (og[q]) continue;
      for (int m = 0; m < k; ++m)
        if (distance(lat.center(q), ctr[m]) < rad[m]) oh[q] = 1;
    }
    const VoxelSet G(lat, og), H(lat, oh);
    const EnergyEstimate I = mutual_energy(G, H, p);
    record(c, G.measure() * tau1(H.measure(), p) - (I.value + I.error_bound));
  }
  return c;
}

CertifiedCheck check_capture(const ExperimentConfig& cfg) {
  const KernelParams p = cfg.params();
  const int n = cfg.dim;
  std::mt19937_64 rng(cfg.seed + 202);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const int cells = n == 3 ? 20 : 64;
  const double h = 1.0 / cells;
  const Lattice lat = Lattice::covering(n, h, box(n, -0.5), box(n, 0.5));
  CertifiedCheck c{"capture bound: int_H |y-x|^(alpha-N) <= tau1(|H|)"};
  for (int i = 0; i < cfg.instances; ++i) {
    std::vector<std::uint8_t> occ(lat.size());
    if (i % 2 == 0) {
      const double fill = 0.05 + 0.5 * U(rng);
      for (auto& o : occ) o = U(rng) < fill;
    } else {
      // Off-centre ball: close to the extremal configuration.
      const Point ctr = random_point(n, rng, -0.2, 0.2);
      const double r = 0.1 + 0.2 * U(rng);
      for (std::size_t q = 0; q < lat.size(); ++q) occ[q] = distance(lat.center(q), ctr) < r;
    }
    Point x = lat.origin;
    for (int d = 0; d < n; ++d) x[d] += h * std::floor(cells * U(rng));
    double lhs = 0.0, m = 0.0;
    for (std::size_t q = 0; q < lat.size(); ++q) {
      if (!occ[q]) continue;
      const Point ctr = lat.center(q);
      lhs += cell_kernel_integral(ctr - box(n, 0.5 * h), h, x, p);
      m += lat.cell_volume();
    }
    record(c, tau1(m, p) - lhs);
  }
  return c;
}

CertifiedCheck check_transport_estimate(const ExperimentConfig& cfg) {
  const KernelParams p = cfg.params();
  const int n = cfg.dim;
  std::mt19937_64 rng(cfg.seed + 303);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  auto g = transport_grid(n);
  const GaussRule& gl = gauss_legendre(8);
  CertifiedCheck c{"transport estimate: |I(G,H) - I(G,K)| <= tau2(|G|) int_H 1^|y-Phi(y)|"};
  for (int i = 0; i < cfg.instances; ++i) {
    const TwoSidedGraphSet t = random_two_sided(g, rng, 0.05 + 0.1 * U(rng));
    const RadialTransport T = build_radial_transport(t, consolidate(t).set);
    const Point ctr = random_point(n, rng, -1.5, 1.5);
    const double r = 0.3 + 1.2 * U(rng);
    double lhs = 0.0, move = 0.0;
    for (std::size_t j = 0; j < g->size(); ++j) {
      const RayMap& ray = T.rays[j];
      const RayProfile& s = ray.source();
      for (std::size_t k = 0; k < s.density.size(); ++k) {
        if (s.density[k] == 0.0) continue;
        const double a = s.breaks[k], b = s.breaks[k + 1];
        for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
          const double tt = 0.5 * (a + b) + 0.5 * (b - a) * gl.nodes[q];
          const double w = g->weight(j) * 0.5 * (b - a) * gl.weights[q] * s.density[k] * std::pow(tt, n - 1);
          const Point y = tt * g->node(j), z = ray(tt) * g->node(j);
          lhs += w * (psi_scaled(distance(y, ctr), r, p) - psi_scaled(distance(z, ctr), r, p));
          move += w * std::min(1.0, distance(y, z));
        }
      }
    }
    record(c, tau2(unit_ball_volume(n) * std::pow(r, n), p) * move - std::abs(lhs));
  }
  return c;
}

CertifiedCheck check_pushforward(const ExperimentConfig& cfg) {
  const int n = cfg.dim;
  std::mt19937_64 rng(cfg.seed + 404);
  auto g = transport_grid(n);
  const TwoSidedGraphSet t = random_two_sided(g, rng, 0.12);
  const RadialTransport T = build_radial_transport(t, consolidate(t).set);
  const double area = unit_sphere_area(n);
  std::normal_distribution<double> G;
  CertifiedCheck c{"pushforward: int_H f(Phi) = int_K f"};
  for (int k = 0; k < cfg.test_functions; ++k) {
    const Point a{3 * G(rng), 3 * G(rng), n == 3 ? 3 * G(rng) : 0.0};
    const double b = G(rng);
    auto f = [&](const Point& y) { return 1.5 + std::sin(dot(a, y) + b); };
    std::mt19937_64 mc(cfg.seed * 7919 + k);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double lh = 0.0, rh = 0.0;
    for (int i = 0; i < cfg.samples; ++i) {
      const Point x = random_direction(n, mc);
      const RayMap& r = T.rays[g->locate(x)];
      const double q1 = U(mc), q2 = U(mc);
      if (r.empty()) continue;
      lh += area * r.source_mass() * f(T.apply(profile_quantile(r.source(), n, q1) * x));
      rh += area * r.target_mass() * f(profile_quantile(r.target(), n, q2) * x);
    }
    lh /= cfg.samples;
    rh /= cfg.samples;
    record(c, cfg.pushforward_tol - std::abs(lh - rh) / std::abs(rh));
  }
  return c;
}

CertifiedCheck check_sparse(const ExperimentConfig& cfg) {
  const KernelParams p = cfg.params();
  const int n = cfg.dim;
  const int m = n == 3 ? 3 : 4;
  const double gap = 2.5;
  const double h = n == 3 ? 1.0 / 12 : 1.0 / 48;
  const double half = 0.5 * gap * (m - 1);
  const double side = std::pow(unit_ball_volume(n) / std::pow(m, n), 1.0 / n);
  const Lattice lat = Lattice::covering(n, h, box(n, -half - side), box(n, half + side));
  const VoxelSet v = fit_unit_volume(lat, [&](const Point& x, double s) {
    // Staggered centres so the boxes gain cells at different scales.
    for (int q = 0; q < (n == 3 ? m * m * m : m * m); ++q) {
      bool in = true;
      for (int d = 0; d < n && in; ++d) {
        const int k = (d == 0 ? q : d == 1 ? q / m : q / (m * m)) % m;
        const double ctr = -half + gap * k + h * std::fmod(0.618034 * (3 * q + d + 1), 1.0);
        in = std::abs(x[d] - ctr) < 0.5 * s * side;
      }
      if (in) return true;
    }
    return false;
  });
  CertifiedCheck c{"sparse bound: D(E) > sparse bound when delta(E) >= 2(omega - xi)"};
  const double delta = fraenkel_asymmetry(v).delta;
  const EnergyEstimate d = deficit(v, p);
  const double margin = d.value - d.error_bound - sparse_deficit_bound(p);
  record(c, delta >= 2 * (unit_ball_volume(n) - cfg.xi) ? margin : -1.0);
  return c;
}

bool Certification::all_passed() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const CertifiedCheck& c) { return c.all_passed(); });
}

Certification verify_inequalities(const ExperimentConfig& cfg) {
  cfg.validate();
  Certification out;
  out.checks.push_back(check_tau1(cfg));
  out.checks.push_back(check_capture(cfg));
  out.checks.push_back(check_transport_estimate(cfg));
  out.checks.push_back(check_pushforward(cfg));
  out.checks.push_back(check_sparse(cfg));
  return out;
}

ordered_json to_json(const Certification& c) {
  ordered_json j;
  j["all_passed"] = c.all_passed();
  ordered_json arr = ordered_json::array();
  for (const auto& k : c.checks) arr.push_back(check_json(k));
  j["checks"] = arr;
  return j;
}

// ---------------------------------------------------------------- spectral

std::vector<SpectralRow> spectral_table(const ExperimentConfig& cfg) {
  cfg.validate();
  const KernelParams p = cfg.params();
  const int direct_max = std::min(cfg.k_max, 6);
  auto g = SphereGrid::make(cfg.dim, cfg.grid_or(cfg.dim == 3 ? 24 : 256));
  const HarmonicBasis basis = build_basis(g, std::max(direct_max, 1));
  std::vector<SpectralRow> rows;
  for (int k = 0; k <= cfg.k_max; ++k) {
    SpectralRow row;
    row.k = k;
    row.mu = mu(k, p);
    if (k <= direct_max) {
      const std::vector<double>& y = basis.function(basis.offset(k));
      double y2 = 0.0;
      for (std::size_t j = 0; j < y.size(); ++j) y2 += g->weight(j) * y[j] * y[j];
      row.direct = seminorm_direct(y, *g, p) / y2;
      if (k > 0) row.relative_gap = *row.direct / row.mu - 1.0;
    }
    rows.push_back(row);
  }
  return rows;
}

std::string spectral_csv(const std::vector<SpectralRow>& rows) {
  std::ostringstream os;
  os << "k,mu,direct,relative_gap\n";
  for (const auto& r : rows)
    os << r.k << ',' << num(r.mu) << ',' << (r.direct ? num(*r.direct) : "") << ','
       << (r.relative_gap ? num(*r.relative_gap) : "") << '\n';
  return os.str();
}

}  // namespace rieszstab
