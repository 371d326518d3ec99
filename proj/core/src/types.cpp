#include "greybox/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace greybox {

BoxDomain::BoxDomain(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size() || lower.size() == 0) {
    throw InvalidArgument("BoxDomain: lower/upper must be non-empty and equal length");
  }
  require_finite(lower, "BoxDomain lower");
  require_finite(upper, "BoxDomain upper");
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!(lower[i] < upper[i])) {
      throw InvalidArgument("BoxDomain: lower must be < upper in component " + std::to_string(i));
    }
  }
}

bool BoxDomain::contains(const Vector& x, double tol) const {
  if (x.size() != lower.size()) return false;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(x[i] >= lower[i] - tol && x[i] <= upper[i] + tol)) return false;
  }
  return true;
}

Vector BoxDomain::project(const Vector& x) const { return x.cwiseMax(lower).cwiseMin(upper); }

Vector BoxDomain::to_unit(const Vector& x) const {
  return (x - lower).cwiseQuotient(upper - lower);
}

Vector BoxDomain::from_unit(const Vector& u) const {
  Vector x = lower + u.cwiseProduct(upper - lower);
  // Exact endpoints survive the round trip so active bounds stay active.
  // Rounding must never push a point outside the box.
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (u[i] <= 0.0) x[i] = lower[i];
    if (u[i] >= 1.0) x[i] = upper[i];
    x[i] = std::clamp(x[i], lower[i], upper[i]);
  }
  return x;
}

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw InvalidArgument(std::string(what) + ": non-finite entry");
}

}  // namespace greybox
