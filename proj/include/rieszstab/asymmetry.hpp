#pragma once

#include <functional>
#include <vector>

#include "rieszstab/geometry.hpp"
#include "rieszstab/sets.hpp"

namespace rieszstab {

struct AsymmetryResult {
  double delta = 0.0;
  Point center{};
  bool converged = true;
  int evaluations = 0;
};

struct CenterSearchOptions {
  int restarts = 6;
  double simplex_size = 0.2;
  // Stop when the best value improves by at most value_tol over 5(dim+1)
  // iterations, or when the simplex is smaller than size_tol.
  double value_tol = 1e-7;
  double size_tol = 1e-10;
  int max_iter = 4000;
};

// Multi-start Nelder–Mead over centers in R^dim (remaining coordinates zero).
AsymmetryResult minimize_over_centers(int dim, const std::function<double(const Point&)>& f,
                                      const std::vector<Point>& starts,
                                      const CenterSearchOptions& opt = {});

AsymmetryResult fraenkel_asymmetry(const GraphSet& e, const CenterSearchOptions& opt = {});
AsymmetryResult fraenkel_asymmetry(const TwoSidedGraphSet& t, const CenterSearchOptions& opt = {});
AsymmetryResult fraenkel_asymmetry(const VoxelSet& v, const CenterSearchOptions& opt = {});

}  // namespace rieszstab
