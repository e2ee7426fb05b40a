#include "rieszstab/asymmetry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "rieszstab/errors.hpp"
#include "rieszstab/kernel.hpp"

namespace rieszstab {

namespace {

constexpr double kVolumeTolerance = 0.01;

struct Objective {
  int dim;
  const std::function<double(const Point&)>* f;
  int evaluations = 0;
};

double gsl_objective(const gsl_vector* x, void* params) {
  auto* obj = static_cast<Objective*>(params);
  Point c{};
  for (int d = 0; d < obj->dim; ++d) c[d] = gsl_vector_get(x, d);
  ++obj->evaluations;
  return (*obj->f)(c);
}

struct RunResult {
  Point x;
  double value;
  bool converged;
};

RunResult nelder_mead(Objective& obj, const Point& start, double step, const CenterSearchOptions& opt) {
  const int n = obj.dim;
  gsl_vector* x = gsl_vector_alloc(n);
  gsl_vector* steps = gsl_vector_alloc(n);
  for (int d = 0; d < n; ++d) {
    gsl_vector_set(x, d, start[d]);
    gsl_vector_set(steps, d, step);
  }
  gsl_multimin_function fn{&gsl_objective, static_cast<std::size_t>(n), &obj};
  gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
  gsl_multimin_fminimizer_set(s, &fn, x, steps);
  bool converged = false;
  // The simplex values are not exposed, so the value test watches the
  // incumbent over a window of iterations.
  const int window = 5 * (n + 1);
  std::vector<double> history;
  for (int it = 0; it < opt.max_iter; ++it) {
    const int status = gsl_multimin_fminimizer_iterate(s);
    if (status == GSL_ENOPROG) {
      converged = true;
      break;
    }
    if (status != GSL_SUCCESS) break;
    history.push_back(s->fval);
    const bool stalled = static_cast<int>(history.size()) > window &&
                         history[history.size() - 1 - window] - s->fval <= opt.value_tol;
    if (stalled || gsl_multimin_fminimizer_size(s) < opt.size_tol) {
      converged = true;
      break;
    }
  }
  RunResult r{{}, s->fval, converged};
  for (int d = 0; d < n; ++d) r.x[d] = gsl_vector_get(s->x, d);
  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(x);
  gsl_vector_free(steps);
  return r;
}

void check_volume(double vol, int dim) {
  const double w = unit_ball_volume(dim);
  if (std::abs(vol - w) > kVolumeTolerance * w)
    throw PreconditionError("asymmetry requires |E| close to the unit-ball volume");
}

}  // namespace

AsymmetryResult minimize_over_centers(int dim, const std::function<double(const Point&)>& f,
                                      const std::vector<Point>& starts, const CenterSearchOptions& opt) {
  gsl_set_error_handler_off();
  Objective obj{dim, &f};
  AsymmetryResult best;
  best.delta = std::numeric_limits<double>::infinity();
  bool all_converged = true;
  int runs = 0;
  for (const Point& s : starts) {
    if (runs >= opt.restarts) break;
    const RunResult r = nelder_mead(obj, s, opt.simplex_size, opt);
    ++runs;
    if (r.value < best.delta) {
      best.delta = r.value;
      best.center = r.x;
    }
  }
  // Remaining restarts polish the incumbent with progressively smaller simplices.
  double step = opt.simplex_size;
  bool last_converged = true;
  for (; runs < opt.restarts; ++runs) {
    step *= 0.5;
    const RunResult r = nelder_mead(obj, best.center, step, opt);
    last_converged = r.converged;
    if (r.value <= best.delta) {
      best.delta = r.value;
      best.center = r.x;
    }
  }
  all_converged = last_converged;
  best.converged = all_converged && std::isfinite(best.delta);
  best.evaluations = obj.evaluations;
  for (int d = dim; d < 3; ++d) best.center[d] = 0.0;
  return best;
}

AsymmetryResult fraenkel_asymmetry(const GraphSet& e, const CenterSearchOptions& opt) {
  check_volume(graph_volume(e), e.dim());
  const Point origin = e.center();
  std::function<double(const Point&)> f = [&](const Point& c) {
    const double r = norm(c - origin);
    if (r >= 1.0 - 1e-9) return 1e3 + r;
    return symm_diff_ball(e, c);
  };
  return minimize_over_centers(e.dim(), f, {graph_barycenter(e), origin}, opt);
}

AsymmetryResult fraenkel_asymmetry(const TwoSidedGraphSet& t, const CenterSearchOptions& opt) {
  check_volume(two_sided_volume(t), t.grid->dim());
  const Point origin = t.center;
  std::function<double(const Point&)> f = [&](const Point& c) {
    const double r = norm(c - origin);
    if (r >= 1.0 - 1e-9) return 1e3 + r;
    return symm_diff_ball(t, c);
  };
  return minimize_over_centers(t.grid->dim(), f, {origin, Point{}}, opt);
}

AsymmetryResult fraenkel_asymmetry(const VoxelSet& v, const CenterSearchOptions& opt) {
  const VoxelFrame frame = voxel_frame(v);
  check_volume(frame.measure, v.dim());
  // Search in anchor-relative coordinates so whole-cell shifts change nothing.
  Point bary{}, lo{}, hi{};
  for (int d = 0; d < frame.dim; ++d) lo[d] = hi[d] = frame.offsets.front()[d];
  KahanSum m[3];
  for (const Point& o : frame.offsets)
    for (int d = 0; d < frame.dim; ++d) {
      m[d].add(o[d]);
      lo[d] = std::min(lo[d], o[d]);
      hi[d] = std::max(hi[d], o[d]);
    }
  for (int d = 0; d < frame.dim; ++d) bary[d] = m[d].value() / static_cast<double>(frame.offsets.size());
  const Point mid = 0.5 * (lo + hi);
  std::function<double(const Point&)> f = [&](const Point& c) { return symm_diff_ball(frame, c); };
  AsymmetryResult r = minimize_over_centers(v.dim(), f, {bary, mid}, opt);
  // Balls that miss most of E sit on a flat plateau; retry from spread-out cells.
  if (r.delta >= unit_ball_volume(v.dim())) {
    std::vector<Point> starts;
    std::vector<double> gap(frame.offsets.size());
    for (std::size_t i = 0; i < gap.size(); ++i) gap[i] = distance(frame.offsets[i], bary);
    for (int k = 0; k < 6; ++k) {
      const std::size_t far = static_cast<std::size_t>(std::max_element(gap.begin(), gap.end()) - gap.begin());
      starts.push_back(frame.offsets[far]);
      for (std::size_t i = 0; i < gap.size(); ++i) gap[i] = std::min(gap[i], distance(frame.offsets[i], frame.offsets[far]));
    }
    const int evals = r.evaluations;
    AsymmetryResult s = minimize_over_centers(v.dim(), f, starts, opt);
    s.evaluations += evals;
    if (s.delta < r.delta) r = s;
    else r.evaluations = s.evaluations;
  }
  r.center = r.center + frame.anchor;
  return r;
}

}  // namespace rieszstab
