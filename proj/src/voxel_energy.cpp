#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <memory>
#include <sstream>

#include <fftw3.h>

#include "rieszstab/energy.hpp"
#include "rieszstab/errors.hpp"
#include "rieszstab/quadrature.hpp"

namespace rieszstab {

namespace {

constexpr double kVolumeTolerance = 0.005;
std::atomic<std::size_t> g_fft_budget{std::size_t{2} << 30};

int fft_size(int m) {
  for (int n = std::max(m, 1);; ++n) {
    int r = n;
    for (int f : {2, 3, 5, 7})
      while (r % f == 0) r /= f;
    if (r == 1) return n;
  }
}

struct FftwDeleter {
  void operator()(void* p) const { fftw_free(p); }
};
template <class T>
using FftwBuffer = std::unique_ptr<T[], FftwDeleter>;

template <class T>
FftwBuffer<T> fftw_buffer(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
  if (!p) throw ResourceError("FFT buffer allocation failed");
  return FftwBuffer<T>(p);
}

double signed_offset(int i, int n) { return i <= n / 2 ? i : i - n; }

}  // namespace

void set_fft_memory_budget(std::size_t bytes) { g_fft_budget = bytes; }
std::size_t fft_memory_budget() { return g_fft_budget; }

std::string to_string(EnergyMethod m) {
  switch (m) {
    case EnergyMethod::GraphQuadrature: return "graph-quadrature";
    case EnergyMethod::VoxelConvolution: return "voxel-convolution";
    case EnergyMethod::MonteCarlo: return "monte-carlo";
  }
  return "unknown";
}

double cell_self_energy(const Lattice& lat, const KernelParams& p) {
  const ReferenceConstants& rc = ReferenceConstants::get(p);
  const int n = p.dim();
  return std::pow(lat.cell_volume() / rc.omega(), (n + p.alpha()) / n) * rc.ball_energy();
}

double lattice_pair_sum(const VoxelField& a, const VoxelField& b, const KernelParams& p) {
  if (a.lattice.dim != p.dim() || b.lattice.dim != p.dim()) throw PreconditionError("lattice and kernel dimensions differ");
  if (!a.lattice.aligned_with(b.lattice)) throw PreconditionError("mutual energy needs aligned lattices");
  const int dim = p.dim();
  Point lo = a.lattice.origin, hi = upper_corner(a.lattice);
  const Point bhi = upper_corner(b.lattice);
  for (int d = 0; d < dim; ++d) {
    lo[d] = std::min(lo[d], b.lattice.origin[d]);
    hi[d] = std::max(hi[d], bhi[d]);
  }
  const Lattice u = aligned_cover(a.lattice, lo, hi);
  const double h = u.h;

  int pad[3] = {1, 1, 1};
  for (int d = 0; d < dim; ++d) pad[d] = fft_size(2 * u.dims[d] - 1);
  const std::size_t total = static_cast<std::size_t>(pad[0]) * pad[1] * pad[2];
  const std::size_t half = static_cast<std::size_t>(pad[0] / 2 + 1) * pad[1] * pad[2];
  const std::size_t bytes = total * sizeof(double) + 2 * half * sizeof(fftw_complex);
  if (bytes > g_fft_budget) {
    std::ostringstream os;
    os << "voxel convolution needs " << bytes / (1 << 20) << " MiB, budget is " << g_fft_budget / (1 << 20) << " MiB";
    throw ResourceError(os.str());
  }

  auto real = fftw_buffer<double>(total);
  auto kern = fftw_buffer<fftw_complex>(half);
  auto data = fftw_buffer<fftw_complex>(half);
  // FFTW wants the slowest index first.
  int n_rev[3];
  for (int d = 0; d < dim; ++d) n_rev[d] = pad[dim - 1 - d];
  fftw_plan fwd_k = fftw_plan_dft_r2c(dim, n_rev, real.get(), kern.get(), FFTW_ESTIMATE);
  fftw_plan fwd_d = fftw_plan_dft_r2c(dim, n_rev, real.get(), data.get(), FFTW_ESTIMATE);
  fftw_plan back = fftw_plan_dft_c2r(dim, n_rev, data.get(), real.get(), FFTW_ESTIMATE);

  const double expo = p.alpha() - dim;
  const double k0 = cell_self_energy(u, p) / std::pow(h, 2 * dim);
  for (int k = 0; k < pad[2]; ++k) {
    const double z = signed_offset(k, pad[2]);
    for (int j = 0; j < pad[1]; ++j) {
      const double y = signed_offset(j, pad[1]);
      for (int i = 0; i < pad[0]; ++i) {
        const double x = signed_offset(i, pad[0]);
        const double r2 = x * x + y * y + z * z;
        real[i + static_cast<std::size_t>(pad[0]) * (j + static_cast<std::size_t>(pad[1]) * k)] =
            r2 == 0.0 ? k0 : std::pow(h * h * r2, 0.5 * expo);
      }
    }
  }
  fftw_execute(fwd_k);

  const std::vector<double> bu = embed(b, u).values;
  std::fill(real.get(), real.get() + total, 0.0);
  for (int k = 0; k < u.dims[2]; ++k)
    for (int j = 0; j < u.dims[1]; ++j)
      for (int i = 0; i < u.dims[0]; ++i)
        real[i + static_cast<std::size_t>(pad[0]) * (j + static_cast<std::size_t>(pad[1]) * k)] = bu[u.index(i, j, k)];
  fftw_execute(fwd_d);
  for (std::size_t i = 0; i < half; ++i) {
    const std::complex<double> x(data[i][0], data[i][1]);
    const std::complex<double> kk(kern[i][0], kern[i][1]);
    const std::complex<double> y = x * kk;
    data[i][0] = y.real();
    data[i][1] = y.imag();
  }
  fftw_execute(back);
  fftw_destroy_plan(fwd_k);
  fftw_destroy_plan(fwd_d);
  fftw_destroy_plan(back);

  const std::vector<double> au = embed(a, u).values;
  KahanSum s;
  for (int k = 0; k < u.dims[2]; ++k)
    for (int j = 0; j < u.dims[1]; ++j)
      for (int i = 0; i < u.dims[0]; ++i) {
        const double v = au[u.index(i, j, k)];
        if (v != 0.0) s.add(v * real[i + static_cast<std::size_t>(pad[0]) * (j + static_cast<std::size_t>(pad[1]) * k)]);
      }
  return s.value() / static_cast<double>(total) * std::pow(h, 2 * dim);
}

EnergyEstimate energy_field(const VoxelField& f, const KernelParams& p) {
  KahanSum self;
  for (double v : f.values) self.add(v * v);
  if (!(self.value() > 0.0)) throw PreconditionError("empty voxel set");
  const double value = lattice_pair_sum(f, f, p);
  return {value, self.value() * cell_self_energy(f.lattice, p), EnergyMethod::VoxelConvolution};
}

EnergyEstimate energy_voxel(const VoxelSet& v, const KernelParams& p) { return energy_field(as_field(v), p); }

namespace {

bool field_less(const VoxelField& a, const VoxelField& b) {
  if (a.lattice.origin != b.lattice.origin) return a.lattice.origin < b.lattice.origin;
  if (a.lattice.dims != b.lattice.dims) return a.lattice.dims < b.lattice.dims;
  return a.values < b.values;
}

}  // namespace

EnergyEstimate mutual_energy(const VoxelField& g, const VoxelField& h, const KernelParams& p) {
  // Fixed argument order makes the result symmetric bit for bit.
  const bool swap = field_less(h, g);
  const VoxelField& a = swap ? h : g;
  const VoxelField& b = swap ? g : h;
  const double value = lattice_pair_sum(a, b, p);
  // Coincident cells carry the self-term approximation.
  KahanSum overlap;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    if (a.values[i] == 0.0) continue;
    const Point c = a.lattice.center(i);
    int idx[3] = {0, 0, 0};
    bool inside = true;
    for (int d = 0; d < b.lattice.dim; ++d) {
      idx[d] = static_cast<int>(std::floor((c[d] - b.lattice.origin[d]) / b.lattice.h));
      if (idx[d] < 0 || idx[d] >= b.lattice.dims[d]) inside = false;
    }
    if (inside) overlap.add(a.values[i] * b.values[b.lattice.index(idx[0], idx[1], idx[2])]);
  }
  return {value, overlap.value() * cell_self_energy(a.lattice, p), EnergyMethod::VoxelConvolution};
}

EnergyEstimate mutual_energy(const VoxelSet& g, const VoxelSet& h, const KernelParams& p) {
  return mutual_energy(as_field(g), as_field(h), p);
}

EnergyEstimate mutual_energy(const GraphSet& g, const VoxelSet& h, const KernelParams& p) {
  const double reach = 1.0 + g.max_abs_u() + h.spacing();
  const Point lo = g.center() - Point{reach, reach, g.dim() == 3 ? reach : 0.0};
  const Point hi = g.center() + Point{reach, reach, g.dim() == 3 ? reach : 0.0};
  const Lattice lat = aligned_cover(h.lattice(), lo, hi);
  return mutual_energy(voxelize(g, lat), as_field(h), p);
}

EnergyEstimate mutual_energy(const VoxelSet& g, const GraphSet& h, const KernelParams& p) {
  return mutual_energy(h, g, p);
}

EnergyEstimate deficit(const VoxelField& f, const KernelParams& p, const Point* center) {
  if (f.lattice.dim != p.dim()) throw PreconditionError("lattice and kernel dimensions differ");
  const ReferenceConstants& rc = ReferenceConstants::get(p);
  const VoxelMeasures m = field_measures(f);
  if (std::abs(m.volume - rc.omega()) > kVolumeTolerance * rc.omega())
    throw PreconditionError("deficit requires |E| within 0.5% of the unit-ball volume");
  const int n = p.dim();
  const double a = p.alpha();
  const double r = std::pow(m.volume / rc.omega(), 1.0 / n);
  const Point c = center ? *center : m.barycenter;
  const double h = f.lattice.h;

  // F(E) = 2 I(B_r, E) - F(B_r) + F(chi_E - chi_B_r); only the last term needs
  // the lattice, and its density lives near the boundaries.
  Point lo = f.lattice.origin, hi = upper_corner(f.lattice);
  for (int d = 0; d < n; ++d) {
    lo[d] = std::min(lo[d], c[d] - r - 2.0 * h);
    hi[d] = std::max(hi[d], c[d] + r + 2.0 * h);
  }
  const Lattice work = aligned_cover(f.lattice, lo, hi);
  std::vector<double> dens = embed(f, work).values;
  const double cell = work.cell_volume();
  const GaussRule& g2 = gauss_legendre(2);
  const int pts = n == 3 ? 8 : 4;
  KahanSum cross;
  VoxelField sigma{work, std::vector<double>(work.size(), 0.0)};
  for (std::size_t i = 0; i < work.size(); ++i) {
    const double v = dens[i];
    if (v != 0.0) {
      const Point x = work.center(i);
      double acc = 0.0;
      for (int q = 0; q < pts; ++q) {
        Point y = x;
        for (int d = 0; d < n; ++d) y[d] += 0.5 * h * g2.nodes[(q >> d) & 1];
        acc += rc.psi_scaled(distance(y, c), r);
      }
      cross.add(v * acc * cell / pts);
    }
    sigma.values[i] = v - cell_ball_overlap(work, i, c, r) / cell;
  }
  KahanSum self;
  for (double s : sigma.values) self.add(s * s);
  const double q = self.value() > 0.0 ? lattice_pair_sum(sigma, sigma, p) : 0.0;
  const double ball_r = std::pow(r, n + a) * rc.ball_energy();
  const double scale = std::pow(r, -(n + a));
  const double value = (2.0 * ball_r - 2.0 * cross.value() - q) * scale;
  const double err = (self.value() * cell_self_energy(work, p) + 0.02 * std::abs(q)) * scale;
  return {value, err, EnergyMethod::VoxelConvolution};
}

EnergyEstimate deficit(const VoxelSet& v, const KernelParams& p) { return deficit(as_field(v), p); }

double mutual_energy_balls(const Point& c1, double r1, const Point& c2, double r2, const KernelParams& p) {
  if (!(r1 > 0.0 && r2 > 0.0)) throw DomainError("ball radii must be positive");
  const int n = p.dim();
  const double d = distance(c1, c2);
  // Shells of radius s around c1 intersect B(c2, r2) in a cap.
  auto shell_area = [&](double s) {
    if (d == 0.0) return s < r2 ? unit_sphere_area(n) * std::pow(s, n - 1) : 0.0;
    const double c0 = (s * s + d * d - r2 * r2) / (2.0 * s * d);
    return std::pow(s, n - 1) * cap_measure(-c0, n);
  };
  auto f = [&](double s) { return s > 0.0 ? psi_scaled(s, r1, p) * shell_area(s) : 0.0; };
  const double top = d + r2;
  std::vector<double> cuts{0.0, top};
  for (double t : {std::abs(d - r2), r1})
    if (t > 0.0 && t < top) cuts.push_back(t);
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) total += integrate_adaptive(f, cuts[k], cuts[k + 1], 1e-9);
  return total;
}

}  // namespace rieszstab
