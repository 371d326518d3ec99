#pragma once

#include "greybox/types.hpp"

#include <cstdint>
#include <functional>

namespace greybox {

using Objective = std::function<double(const Vector&)>;

/// Returns f(x) and, when `grad` is non-null, writes the gradient into it.
using ObjectiveWithGradient = std::function<double(const Vector& x, Vector* grad)>;

struct DescentOptions {
  int max_iterations = 200;
  double gradient_tolerance = 1e-6;
  double armijo = 1e-4;
  // Forward-difference step in unit-box coordinates.
  double fd_step = 1e-7;
  // Relative decrease below which an iteration counts as stalled.
  double stall_tolerance = 1e-13;
  int stall_iterations = 3;
};

struct LocalResult {
  Vector x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

/// Projected gradient descent with Barzilai-Borwein trial steps and Armijo
/// backtracking along the projection arc. Every iterate lies in `box`.
/// Non-finite objective values are treated as +inf by the line search.
LocalResult projected_gradient(const ObjectiveWithGradient& fn, const Vector& x0,
                               const BoxDomain& box, const DescentOptions& opts = {});

/// Same descent with forward-difference gradients, run in unit-box
/// coordinates so step sizes and tolerances are scale free.
LocalResult minimize_from(const Objective& fn, const Vector& x0, const BoxDomain& box,
                          const DescentOptions& opts = {});

struct OptimizeReport {
  Vector argmin;
  double value = 0.0;
  int starts_used = 0;
  int converged_starts = 0;
  long evaluations = 0;
};

/// Multi-start box-constrained minimization from `starts` uniformly drawn
/// initial points. Ties are broken by value, then lexicographically by
/// argmin; the result depends only on (objective, domain, starts, seed).
/// Throws NumericalError when the objective is non-finite at every start.
OptimizeReport minimize_box(const Objective& fn, const BoxDomain& domain, int starts,
                            std::uint64_t seed, const DescentOptions& opts = {});

struct PatternSearchOptions {
  int grid_levels = 6;  // per axis, endpoints included
  int refine_top = 10;  // best grid points refined by compass search
  double initial_step = 0.1;  // unit-box coordinates
  double min_step = 1e-9;
};

/// Derivative-free reference search: full grid over the box, then compass
/// search with step halving from the best grid points. Deterministic;
/// non-finite values count as +inf. Cost grows as grid_levels^dim.
OptimizeReport pattern_search(const Objective& fn, const BoxDomain& domain, const PatternSearchOptions& opts = {});

}  // namespace greybox
