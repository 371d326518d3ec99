#pragma once

#include "greybox/composite.hpp"
#include "greybox/counters.hpp"
#include "greybox/optimize.hpp"

#include <cstdint>
#include <vector>

namespace greybox {

/// Confidence box for y at x: m -/+ kappa sigma intersected with the
/// feasibility bounds. Nested nodes see clipped upstream means.
struct ConfidenceBox {
  Vector lower;
  Vector upper;
  // Components whose interval was empty and collapsed to the clipped mean.
  std::vector<bool> collapsed;
};

ConfidenceBox confidence_bounds(const CompositeProblem& problem, const Vector& x, double kappa,
                                EvalCounters* counters = nullptr);

struct AuxiliarySolution {
  Vector x;
  Vector y;
  double value = 0.0;
  OptimizeReport outer;
  // Number of bound evaluations in which at least one interval collapsed.
  long collapsed_evaluations = 0;
};

/// Inner problem: min over y in the confidence box at fixed x, started at
/// the box midpoint. Degenerate components stay fixed.
LocalResult solve_inner(const CompositeProblem& problem, const Vector& x, const ConfidenceBox& box,
                        EvalCounters* counters = nullptr, const DescentOptions& opts = {});

/// min_{x, y} f(x, y) s.t. l_y(x) <= y <= u_y(x), solved as multi-start over
/// x with the inner problem nested inside the outer objective.
AuxiliarySolution solve_opbo_auxiliary(const CompositeProblem& problem, double kappa, int starts,
                                       std::uint64_t seed, EvalCounters* counters = nullptr,
                                       const DescentOptions& opts = {});

/// True when y lies inside confidence_bounds(problem, x, kappa) with zero
/// violation.
bool auxiliary_feasible(const CompositeProblem& problem, const Vector& x, const Vector& y, double kappa);

}  // namespace greybox
