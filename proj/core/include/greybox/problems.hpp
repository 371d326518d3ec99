#pragma once

#include "greybox/composite.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace greybox {

struct ProblemEntry {
  std::string id;
  std::string description;
  std::function<CompositeProblem()> make;
  /// Known or reference optimum value, when one is available in code.
  std::optional<double> f_star;
};

/// Registered problems in id order: chemproc, pbr and the synthetic toys.
const std::vector<ProblemEntry>& problem_registry();

/// Throws InvalidArgument listing the known ids when `id` is not registered.
const ProblemEntry& find_problem(const std::string& id);
CompositeProblem make_registered(const std::string& id);

namespace toys {

/// h affine in y: h = 2 y1 - 3 y2 + 1, g = x0^2. Linearization is exact.
CompositeProblem affine();
/// Smooth quadratic h over two intermediates.
CompositeProblem quadratic();
/// Three-node chain y1 -> y2 -> y3 with design inputs at each stage.
CompositeProblem nested_chain();
/// One design variable, one intermediate; small enough for grid oracles.
CompositeProblem scalar();
/// Two design variables, one intermediate, h affine in y: the auxiliary
/// problem over (x, y) is three-dimensional and grid-searchable.
CompositeProblem opbo_affine();

}  // namespace toys
}  // namespace greybox
