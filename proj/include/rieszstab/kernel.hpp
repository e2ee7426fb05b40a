#pragma once

#include <memory>
#include <vector>

namespace boost::math::interpolators {
template <class RandomAccessContainer>
class pchip;
}

namespace rieszstab {

// Dimension N and exponent alpha of the kernel |x-y|^(alpha-N).
class KernelParams {
 public:
  KernelParams(int dim, double alpha);

  int dim() const noexcept { return dim_; }
  double alpha() const noexcept { return alpha_; }
  // N - alpha, the decay rate of the kernel.
  double decay() const noexcept { return dim_ - alpha_; }
  double kernel(double r) const;

  friend bool operator==(const KernelParams& a, const KernelParams& b) {
    return a.dim_ == b.dim_ && a.alpha_ == b.alpha_;
  }

 private:
  int dim_;
  double alpha_;
};

double unit_ball_volume(int n);
double unit_sphere_area(int n);

// Measure of the spherical cap {w in S^(N-1) : w.e <= c}.
double cap_measure(double c, int n);

double psi(double t, const KernelParams& p);
double psi_derivative(double t, const KernelParams& p);
double tau1(double m, const KernelParams& p);
double tau2(double m, const KernelParams& p);
double mu(int k, const KernelParams& p);
double mu_limit(const KernelParams& p);
double ball_energy(const KernelParams& p);
// N omega_N * int_0^1 psi(t) t^(N-1) dt; the independent check on ball_energy.
double ball_energy_quadrature(const KernelParams& p);
double sparse_deficit_bound(const KernelParams& p);

// Potential at distance t of the ball of radius r: r^alpha psi(t/r).
double psi_scaled(double t, double r, const KernelParams& p);

class ReferenceConstants {
 public:
  static constexpr double kTableEnd = 4.0;
  static constexpr int kTableSteps = 4096;

  explicit ReferenceConstants(const KernelParams& p);
  ~ReferenceConstants();
  ReferenceConstants(const ReferenceConstants&) = delete;
  ReferenceConstants& operator=(const ReferenceConstants&) = delete;

  // Shared instance per parameter pair, built once.
  static const ReferenceConstants& get(const KernelParams& p);

  const KernelParams& params() const noexcept { return params_; }
  double omega() const noexcept { return omega_; }
  double sphere_area() const noexcept { return sphere_area_; }
  double ball_energy() const noexcept { return ball_energy_; }
  double ball_energy_check() const noexcept { return ball_energy_check_; }

  double psi(double t) const;
  double psi_scaled(double t, double r) const;
  const std::vector<double>& psi_table() const noexcept { return table_; }

 private:
  KernelParams params_;
  double omega_;
  double sphere_area_;
  double ball_energy_;
  double ball_energy_check_;
  std::vector<double> table_;
  std::unique_ptr<boost::math::interpolators::pchip<std::vector<double>>> interp_;
};

}  // namespace rieszstab
