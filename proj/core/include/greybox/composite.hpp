#pragma once

#include "greybox/counters.hpp"
#include "greybox/gp.hpp"
#include "greybox/types.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace greybox {

using WhiteboxG = std::function<double(const Vector& x)>;
using WhiteboxH = std::function<double(const Vector& x, const Vector& y)>;
/// The expensive system: returns the observed intermediate vector at x.
using Sampler = std::function<Vector(const Vector& x)>;

struct IntermediateNode {
  std::string name;
  std::vector<int> x_inputs;             // design-variable indices
  std::vector<std::string> y_inputs;     // upstream node names
  double lower_bound = 0.0;              // may be -inf
  double upper_bound = 0.0;              // may be +inf
  std::shared_ptr<const GpModel> model;  // null until trained
};

/// f(x, y) = g(x) + h(x, y) with y produced by a DAG of intermediate nodes.
/// The position of a node in `nodes` is its index in the y vector.
struct CompositeProblem {
  std::string id;
  BoxDomain design_box;
  std::vector<IntermediateNode> nodes;
  WhiteboxG g;
  WhiteboxH h;
  Sampler sampler;

  [[nodiscard]] Eigen::Index dx() const { return design_box.dim(); }
  [[nodiscard]] Eigen::Index dy() const { return static_cast<Eigen::Index>(nodes.size()); }
  [[nodiscard]] Vector y_lower() const;
  [[nodiscard]] Vector y_upper() const;
  [[nodiscard]] std::size_t node_index(const std::string& name) const;
  [[nodiscard]] double f(const Vector& x, const Vector& y) const { return g(x) + h(x, y); }

  /// GP input vector of node i: its x_inputs followed by the given values of
  /// its y_inputs.
  [[nodiscard]] Vector node_query(std::size_t i, const Vector& x, const Vector& y) const;

  /// Checks bounds, name uniqueness, references, index ranges, acyclicity,
  /// and that g, h, and sampler are set.
  void validate() const;
};

/// Node indices such that every node follows its y_inputs. Ready nodes are
/// released in lexicographic name order. Throws InvalidArgument naming a
/// cycle when the graph is not a DAG.
std::vector<std::size_t> topo_order(const CompositeProblem& problem);

/// m + max(0, lo - m) + min(0, hi - m), evaluated as a clamp
/// so the result lands on the bound exactly.
double clip_to_bounds(double m, double lo, double hi);

struct IntermediatePrediction {
  Vector raw_means;  // GP means before clipping
  Vector means;      // clipped means y-hat
  Vector variances;
  std::vector<bool> clipped;
  std::vector<Vector> queries;  // GP input used for each node
};

/// Nested mean propagation: downstream queries use clipped upstream means.
IntermediatePrediction predict_intermediates(const CompositeProblem& problem, const Vector& x,
                                             EvalCounters* counters = nullptr);

struct MomentEstimate {
  double mean = 0.0;
  double stdev = 0.0;
  std::vector<bool> clipped_mask;
};

/// Exact moments of a^T y + b for y ~ N(means, diag(variances)).
MomentEstimate linear_moments(const Vector& a, double b, const Vector& means, const Vector& variances);

/// Monte-Carlo moments of f with y_s = m_y + diag(sigma_y) z_s clipped into
/// the feasibility bounds. Standard deviation uses the 1/(S-1) sample
/// variance. Deterministic for a fixed seed.
MomentEstimate mc_moments(const CompositeProblem& problem, const Vector& x, int samples,
                          std::uint64_t seed, EvalCounters* counters = nullptr);

/// Central-difference gradient of h in y at y0 with step
/// max(|y0_i| 1e-3, 1e-8). Components with an active clip, or whose central
/// probe would leave the feasibility bounds, use a one-sided difference
/// stepping into the feasible side. `h0`, when given, is h(x, y0) and saves
/// one evaluation for one-sided components.
Vector bois_jacobian(const CompositeProblem& problem, const Vector& x, const Vector& y0,
                     const std::vector<bool>& clipped, EvalCounters* counters = nullptr,
                     const double* h0 = nullptr);

/// Linearized moments around y-hat: mean g(x) + h(x, y-hat), stdev
/// sqrt(sum_i J_i^2 var_i).
MomentEstimate bois_moments(const CompositeProblem& problem, const Vector& x,
                            EvalCounters* counters = nullptr);

}  // namespace greybox
