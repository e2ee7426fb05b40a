#include "rieszstab/transport.hpp"

#include <algorithm>
#include <cmath>

#include "rieszstab/errors.hpp"
#include "rieszstab/quadrature.hpp"

namespace rieszstab {

namespace {

double shell(int dim, double a, double b) { return (std::pow(b, dim) - std::pow(a, dim)) / dim; }

double density_at(const RayProfile& p, double t) {
  if (p.breaks.empty() || t < p.breaks.front() || t >= p.breaks.back()) return 0.0;
  const auto it = std::upper_bound(p.breaks.begin(), p.breaks.end(), t);
  return p.density[static_cast<std::size_t>(it - p.breaks.begin()) - 1];
}

// Merge equal neighbours, drop empty pieces and zero ends.
RayProfile compact(const std::vector<double>& breaks, const std::vector<double>& dens) {
  RayProfile out;
  for (std::size_t k = 0; k < dens.size(); ++k) {
    if (!(breaks[k + 1] > breaks[k])) continue;
    if (out.density.empty()) {
      if (dens[k] == 0.0) continue;
      out.breaks = {breaks[k], breaks[k + 1]};
      out.density = {dens[k]};
    } else if (out.breaks.back() == breaks[k] && out.density.back() == dens[k]) {
      out.breaks.back() = breaks[k + 1];
    } else {
      if (out.breaks.back() < breaks[k]) {
        out.density.push_back(0.0);
        out.breaks.push_back(breaks[k]);
      }
      out.density.push_back(dens[k]);
      out.breaks.push_back(breaks[k + 1]);
    }
  }
  while (!out.density.empty() && out.density.back() == 0.0) {
    out.density.pop_back();
    out.breaks.pop_back();
  }
  if (out.density.empty()) out.breaks.clear();
  return out;
}

std::vector<double> cumulative(const RayProfile& p, int dim) {
  std::vector<double> c(p.breaks.size(), 0.0);
  for (std::size_t k = 0; k < p.density.size(); ++k) c[k + 1] = c[k] + p.density[k] * shell(dim, p.breaks[k], p.breaks[k + 1]);
  return c;
}

}  // namespace

double RayProfile::mass(int dim, double a, double b) const {
  double m = 0.0;
  for (std::size_t k = 0; k < density.size(); ++k) {
    const double lo = std::max(a, breaks[k]), hi = std::min(b, breaks[k + 1]);
    if (hi > lo) m += density[k] * shell(dim, lo, hi);
  }
  return m;
}

double RayProfile::mass(int dim) const {
  return breaks.empty() ? 0.0 : mass(dim, breaks.front(), breaks.back());
}

RayProfile interval_profile(const std::vector<std::pair<double, double>>& intervals) {
  std::vector<double> breaks, dens;
  for (const auto& [a, b] : intervals) {
    if (!(b > a)) continue;
    if (!breaks.empty() && a < breaks.back()) throw PreconditionError("ray intervals must be sorted and disjoint");
    if (!breaks.empty() && a > breaks.back()) {
      dens.push_back(0.0);
      breaks.push_back(a);
    }
    if (breaks.empty()) breaks.push_back(a);
    dens.push_back(1.0);
    breaks.push_back(b);
  }
  return compact(breaks, dens);
}

RayProfile positive_part(const RayProfile& a, const RayProfile& b) {
  std::vector<double> cuts = a.breaks;
  cuts.insert(cuts.end(), b.breaks.begin(), b.breaks.end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  if (cuts.size() < 2) return {};
  std::vector<double> dens(cuts.size() - 1);
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double mid = 0.5 * (cuts[k] + cuts[k + 1]);
    const double d = density_at(a, mid) - density_at(b, mid);
    // Weight fractions that sum to one only up to rounding.
    dens[k] = d > 1e-12 ? d : 0.0;
  }
  return compact(cuts, dens);
}

RayProfile mean_profile(const std::vector<RayProfile>& rays) {
  std::vector<double> cuts;
  for (const auto& r : rays) cuts.insert(cuts.end(), r.breaks.begin(), r.breaks.end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  if (cuts.size() < 2) return {};
  std::vector<double> dens(cuts.size() - 1, 0.0);
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double mid = 0.5 * (cuts[k] + cuts[k + 1]);
    for (const auto& r : rays) dens[k] += density_at(r, mid);
    dens[k] /= static_cast<double>(rays.size());
  }
  return compact(cuts, dens);
}

RayMap::RayMap(int dim, RayProfile source, RayProfile target)
    : dim_(dim), source_(std::move(source)), target_(std::move(target)) {
  source_cum_ = cumulative(source_, dim_);
  target_cum_ = cumulative(target_, dim_);
  source_mass_ = source_cum_.empty() ? 0.0 : source_cum_.back();
  target_mass_ = target_cum_.empty() ? 0.0 : target_cum_.back();
}

double RayMap::cumulative_source(double t) const {
  if (source_.breaks.empty() || t <= source_.breaks.front()) return 0.0;
  if (t >= source_.breaks.back()) return source_mass_;
  const std::size_t k = static_cast<std::size_t>(std::upper_bound(source_.breaks.begin(), source_.breaks.end(), t) - source_.breaks.begin()) - 1;
  return source_cum_[k] + source_.density[k] * shell(dim_, source_.breaks[k], t);
}

double RayMap::target_at(double m) const {
  if (target_.density.empty()) throw PreconditionError("ray map has no target mass");
  // The last positive-density piece reaching mass m.
  std::size_t k = 0;
  for (std::size_t i = 0; i < target_.density.size(); ++i) {
    if (target_.density[i] == 0.0) continue;
    k = i;
    if (target_cum_[i + 1] >= m) break;
  }
  const double rest = std::clamp(m - target_cum_[k], 0.0, target_cum_[k + 1] - target_cum_[k]);
  const double b0 = target_.breaks[k];
  const double s = std::pow(std::pow(b0, dim_) + dim_ * rest / target_.density[k], 1.0 / dim_);
  return std::clamp(s, b0, target_.breaks[k + 1]);
}

double RayMap::operator()(double t) const {
  if (empty()) return t;
  // Rescale so unequal totals (within tolerance) still map end to end.
  const double m = cumulative_source(t) * (source_mass_ > 0.0 ? target_mass_ / source_mass_ : 0.0);
  return target_at(m);
}

Point RadialTransport::apply(const Point& y) const {
  const Point d = y - center;
  const double t = norm(d);
  if (t == 0.0) return y;
  const RayMap& r = rays[grid->locate(d)];
  if (r.empty()) return y;
  return center + (r(t) / t) * d;
}

double RadialTransport::max_mass_mismatch() const {
  double m = 0.0;
  for (std::size_t j = 0; j < rays.size(); ++j)
    m = std::max(m, grid->weight(j) * std::abs(rays[j].source_mass() - rays[j].target_mass()));
  return m;
}

bool RadialTransport::is_identity() const {
  return std::all_of(rays.begin(), rays.end(), [](const RayMap& r) { return r.empty(); });
}

double RadialTransport::displacement() const {
  const GaussRule& g = gauss_legendre(8);
  const int n = grid->dim();
  KahanSum total;
  for (std::size_t j = 0; j < rays.size(); ++j) {
    const RayMap& r = rays[j];
    const RayProfile& s = r.source();
    double acc = 0.0;
    for (std::size_t k = 0; k < s.density.size(); ++k) {
      if (s.density[k] == 0.0) continue;
      const double h = 0.5 * (s.breaks[k + 1] - s.breaks[k]), c = 0.5 * (s.breaks[k + 1] + s.breaks[k]);
      for (std::size_t q = 0; q < g.nodes.size(); ++q) {
        const double t = c + h * g.nodes[q];
        acc += g.weights[q] * h * s.density[k] * std::abs(r(t) - t) * std::pow(t, n - 1);
      }
    }
    total.add(grid->weight(j) * acc);
  }
  return total.value();
}

RayProfile ray_profile(const TwoSidedGraphSet& t, std::size_t node) {
  return interval_profile({{0.0, 1.0 - t.u_minus[node]}, {1.0, 1.0 + t.u_plus[node]}});
}

RayProfile ray_profile(const GraphSet& g, std::size_t node) {
  const auto& idx = g.cells_at(node);
  std::vector<std::pair<double, double>> ends;  // (radius, weight fraction)
  const double w = g.grid().weight(node);
  for (std::size_t c : idx) ends.emplace_back(1.0 + g.cells()[c].u, g.cells()[c].weight / w);
  std::sort(ends.begin(), ends.end());
  std::vector<double> breaks{0.0}, dens;
  double remaining = 0.0;
  for (const auto& e : ends) remaining += e.second;
  for (const auto& [r, f] : ends) {
    if (r > breaks.back()) {
      dens.push_back(remaining);
      breaks.push_back(r);
    }
    remaining -= f;
  }
  return compact(breaks, dens);
}

namespace {

RadialTransport assemble(std::shared_ptr<const SphereGrid> grid, const Point& center,
                         const std::vector<RayProfile>& from, const std::vector<RayProfile>& to) {
  RadialTransport out{grid, center, {}};
  out.rays.reserve(grid->size());
  for (std::size_t j = 0; j < grid->size(); ++j) {
    RayMap r(grid->dim(), positive_part(from[j], to[j]), positive_part(to[j], from[j]));
    const double mismatch = std::abs(r.source_mass() - r.target_mass());
    if (mismatch > kTransportMassTolerance)
      throw PreconditionError("ray " + std::to_string(j) + " moves mass " + std::to_string(r.source_mass()) +
                              " onto " + std::to_string(r.target_mass()));
    out.rays.push_back(std::move(r));
  }
  return out;
}

}  // namespace

RadialTransport build_radial_transport(const TwoSidedGraphSet& t, const GraphSet& g) {
  if (t.grid != g.grid_ptr()) throw PreconditionError("transport needs sets on one grid");
  if (norm(t.center - g.center()) != 0.0) throw PreconditionError("transport needs sets with one centre");
  std::vector<RayProfile> from, to;
  for (std::size_t j = 0; j < t.grid->size(); ++j) {
    from.push_back(ray_profile(t, j));
    to.push_back(ray_profile(g, j));
  }
  return assemble(t.grid, t.center, from, to);
}

RadialTransport build_radial_transport(const std::vector<RayProfile>& e_prime, const TwoSidedGraphSet& t) {
  if (e_prime.size() != t.grid->size()) throw PreconditionError("one ray profile per grid node expected");
  std::vector<RayProfile> from;
  for (std::size_t j = 0; j < t.grid->size(); ++j) from.push_back(ray_profile(t, j));
  return assemble(t.grid, t.center, from, e_prime);
}

}  // namespace rieszstab
