#include <chrono>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "rieszstab/errors.hpp"
#include "rieszstab/experiments.hpp"
#include "rieszstab/io.hpp"
#include "rieszstab/reduction.hpp"

using namespace rieszstab;
using nlohmann::ordered_json;

namespace {

enum Exit { kOk = 0, kFailedCheck = 1, kPrecondition = 2, kConvergence = 3, kIo = 4 };

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text << std::flush;
    if (!std::cout) throw IoError("write to stdout failed");
  } else {
    write_text_file(path, text);
  }
}

std::string report(const std::string& command, const ExperimentConfig& cfg, ordered_json result) {
  ordered_json j;
  j["command"] = command;
  j["config"] = to_json(cfg);
  // Reruns into different files must stay byte-identical.
  j["config"].erase("out");
  j["result"] = std::move(result);
  return seal_report(std::move(j));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Riesz energy deficits, asymmetries and stability experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, input;
  int dim = 3, grid = 0, k_max = 16, samples = 0;
  double alpha = 2.0, eps = 0.2;
  std::uint64_t seed = 1;
  std::string out;
  auto* o_dim = app.add_option("--dim", dim, "space dimension N (2 or 3)");
  auto* o_alpha = app.add_option("--alpha", alpha, "Riesz exponent, 1 < alpha < N");
  auto* o_grid = app.add_option("--grid", grid, "sphere grid resolution (0: command default)");
  auto* o_kmax = app.add_option("--k-max", k_max, "largest degree in the spectral table (<= 64)");
  auto* o_seed = app.add_option("--seed", seed, "random seed");
  auto* o_samples = app.add_option("--samples", samples, "Monte Carlo samples per pushforward test function");
  auto* o_eps = app.add_option("--eps", eps, "nearly-spherical threshold");
  auto* o_out = app.add_option("--out", out, "output file (default: stdout)");
  app.add_option("--config", config_path, "JSON file mirroring the experiment configuration");

  auto* sweep = app.add_subcommand("sharpness-sweep", "log-log fit of asymmetry against deficit for u = s y_{k,i}");
  auto* battery = app.add_subcommand("stability-battery", "random graph and voxel sets: Riesz check and delta/sqrt(D)");
  auto* reduce = app.add_subcommand("reduce", "run the reduction pipeline on a voxel set file");
  reduce->add_option("input", input, "voxel set JSON file");
  auto* spectral = app.add_subcommand("spectral-table", "eigenvalues mu_k with direct seminorm estimates");
  auto* verify = app.add_subcommand("verify", "certify the energy and transport inequalities on random instances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kPrecondition;
  }

  const auto start = std::chrono::steady_clock::now();
  try {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    if (o_dim->count()) cfg.dim = dim;
    if (o_alpha->count()) cfg.alpha = alpha;
    if (o_grid->count()) cfg.grid = grid;
    if (o_kmax->count()) cfg.k_max = k_max;
    if (o_seed->count()) cfg.seed = seed;
    if (o_samples->count()) cfg.samples = samples;
    if (o_eps->count()) cfg.eps = eps;
    if (o_out->count()) cfg.out = out;
    std::optional<VoxelSet> voxels;
    if (reduce->parsed()) {
      if (!input.empty()) cfg.voxel_file = input;
      if (cfg.voxel_file.empty()) throw ConfigurationError("reduce needs an input voxel set file");
      voxels = load_voxel_set(cfg.voxel_file);
      if (!o_dim->count() && config_path.empty()) cfg.dim = voxels->dim();
      if (cfg.dim != voxels->dim()) throw ConfigurationError("--dim does not match the voxel set");
    }
    // Admissible default exponent when only the dimension was given.
    if (cfg.dim == 2 && !o_alpha->count() && config_path.empty()) cfg.alpha = 1.5;
    cfg.validate();

    int rc = kOk;
    if (sweep->parsed()) {
      const SweepResult r = sharpness_sweep(cfg);
      ordered_json summary = to_json(r);
      summary["slope_within_tol"] = std::abs(r.slope - 0.5) <= cfg.slope_tol;
      summary["limit_within_tol"] = std::abs(r.limit_gap) <= cfg.predictor_tol;
      emit(sweep_csv(r), cfg.out);
      const std::string text = report("sharpness-sweep", cfg, summary);
      if (cfg.out.empty()) std::cerr << text;
      else write_text_file(cfg.out + ".json", text);
    } else if (battery->parsed()) {
      const BatteryResult r = stability_battery(cfg);
      emit(report("stability-battery", cfg, to_json(r)), cfg.out);
      if (r.violations > 0 || !r.finite()) rc = kFailedCheck;
    } else if (reduce->parsed()) {
      const ReductionReport r = reduce_pipeline(*voxels, cfg.params(), reduction_options(cfg));
      emit(report("reduce", cfg, to_json(r)), cfg.out);
      if (!r.passed()) rc = kFailedCheck;
    } else if (spectral->parsed()) {
      emit(spectral_csv(spectral_table(cfg)), cfg.out);
    } else if (verify->parsed()) {
      const Certification c = verify_inequalities(cfg);
      emit(report("verify", cfg, to_json(c)), cfg.out);
      if (!c.all_passed()) rc = kFailedCheck;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cerr << "done in " << secs << " s\n";
    return rc;
  } catch (const ConvergenceError& e) {
    std::cerr << "convergence failure: " << e.what() << " (residual " << e.residual() << ")\n";
    return kConvergence;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const Error& e) {
    std::cerr << "precondition failure: " << e.what() << "\n";
    return kPrecondition;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kFailedCheck;
  }
}
