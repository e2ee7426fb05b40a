#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rieszstab/kernel.hpp"
#include "rieszstab/reduction.hpp"

namespace rieszstab {

struct ExperimentConfig {
  int dim = 3;
  double alpha = 2.0;

  // Harmonic family u = s * y_{degree,index} for sweeps.
  int degree = 2;
  int index = 1;
  // Empty: 0 followed by 12 log-spaced values in [1e-3, 5e-2].
  std::vector<double> amplitudes;
  std::string voxel_file;

  // Sphere grid resolution; 0 picks a per-command default.
  int grid = 0;
  // Voxel spacing; 0 picks a per-command default.
  double spacing = 0.0;
  int k_max = 16;
  std::uint64_t seed = 1;
  // Monte Carlo samples per pushforward test function.
  int samples = 40000;

  int graph_sets = 100;
  int voxel_sets = 20;
  int instances = 50;
  int test_functions = 20;

  double eps = 0.2;
  double xi = 0.25;
  // Riesz violations must exceed error_bound + riesz_tol.
  double riesz_tol = 1e-9;
  double barycenter_tol = 1e-4;
  double pushforward_tol = 0.01;
  // Half-width of the accepted band around slope 1/2.
  double slope_tol = 0.03;
  double predictor_tol = 0.03;

  std::string out;

  // Throws ConfigurationError.
  void validate() const;
  KernelParams params() const { return KernelParams(dim, alpha); }
  std::vector<double> amplitude_grid() const;
  int grid_or(int fallback) const { return grid > 0 ? grid : fallback; }
  double spacing_or(double fallback) const { return spacing > 0.0 ? spacing : fallback; }
};

// Unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::string& path);

struct SweepRow {
  double s = 0.0;
  double deficit = 0.0;
  double deficit_error = 0.0;
  double delta = 0.0;
  std::optional<double> ratio;  // delta / sqrt(D); empty for D <= 0
  double predictor = 0.0;       // second variation of the corrected profile
  bool in_fit = false;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  int fit_rows = 0;
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double slope_ci_low = 0.0;   // 95% Student t
  double slope_ci_high = 0.0;
  // (mu_k - mu_1) ||y||^2 / 2, the limit of D / s^2.
  double limit = 0.0;
  // D / s^2 at the smallest positive amplitude, relative to `limit`.
  double limit_gap = 0.0;
};

// Throws PreconditionError when fewer than 4 rows enter the fit.
SweepResult sharpness_sweep(const ExperimentConfig& cfg);
std::string sweep_csv(const SweepResult& r);
nlohmann::ordered_json to_json(const SweepResult& r);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
};
LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

struct BatteryRow {
  std::string kind;  // "graph" or "voxel"
  int id = 0;
  double sup = 0.0;  // ||u||_inf for graph sets, spacing for voxel sets
  double deficit = 0.0;
  double deficit_error = 0.0;
  double delta = 0.0;
  std::optional<double> ratio;
  bool violation = false;
  std::string flag;
};

struct BatteryResult {
  std::vector<BatteryRow> rows;
  int violations = 0;
  int skipped = 0;
  double max_ratio = 0.0;
  bool finite() const;
};

BatteryResult stability_battery(const ExperimentConfig& cfg);
nlohmann::ordered_json to_json(const BatteryResult& r);

struct CertifiedCheck {
  std::string name;
  int instances = 0;
  int passed = 0;
  // Smallest rhs - lhs over the instances (relative for the pushforward).
  double worst_margin = 0.0;
  bool all_passed() const { return instances > 0 && passed == instances; }
};

// Integral of |y - x|^(alpha - N) over the cell with corner `lo` and side h.
// x may be a vertex of the cell but not an interior point.
double cell_kernel_integral(const Point& lo, double h, const Point& x, const KernelParams& p);

CertifiedCheck check_tau1(const ExperimentConfig& cfg);
CertifiedCheck check_capture(const ExperimentConfig& cfg);
CertifiedCheck check_transport_estimate(const ExperimentConfig& cfg);
CertifiedCheck check_pushforward(const ExperimentConfig& cfg);
CertifiedCheck check_sparse(const ExperimentConfig& cfg);

struct Certification {
  std::vector<CertifiedCheck> checks;
  bool all_passed() const;
};
Certification verify_inequalities(const ExperimentConfig& cfg);
nlohmann::ordered_json to_json(const Certification& c);

struct SpectralRow {
  int k = 0;
  double mu = 0.0;
  std::optional<double> direct;  // k <= 6
  std::optional<double> relative_gap;
};
// Throws ConfigurationError for k_max > 64.
std::vector<SpectralRow> spectral_table(const ExperimentConfig& cfg);
std::string spectral_csv(const std::vector<SpectralRow>& rows);

ReductionOptions reduction_options(const ExperimentConfig& cfg);

// Scales a one-parameter family {x : inside(x, s)} by bisection on s so the
// voxel measure is as close as possible to the unit-ball volume.
VoxelSet fit_unit_volume(const Lattice& lat, const std::function<bool(const Point&, double)>& inside);

}  // namespace rieszstab
