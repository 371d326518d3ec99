#include "greybox/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <utility>
#include <vector>

namespace greybox {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double finite_or_inf(double v) { return std::isfinite(v) ? v : kInf; }

// Projected-gradient stationarity measure: ||P(x - g) - x||_inf.
double projected_gradient_norm(const Vector& x, const Vector& g, const BoxDomain& box) {
  return (box.project(x - g) - x).lpNorm<Eigen::Infinity>();
}

bool lex_less(const Vector& a, const Vector& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

}  // namespace

LocalResult projected_gradient(const ObjectiveWithGradient& fn, const Vector& x0,
                               const BoxDomain& box, const DescentOptions& opts) {
  LocalResult res;
  res.x = box.project(x0);
  Vector g(res.x.size());
  res.value = finite_or_inf(fn(res.x, &g));
  ++res.evaluations;
  if (!std::isfinite(res.value) || !g.allFinite()) return res;

  double step = 1.0 / std::max(1.0, g.lpNorm<Eigen::Infinity>());
  Vector x_prev, g_prev;
  int stalled = 0;

  for (res.iterations = 0; res.iterations < opts.max_iterations; ++res.iterations) {
    if (projected_gradient_norm(res.x, g, box) <= opts.gradient_tolerance) {
      res.converged = true;
      break;
    }
    if (x_prev.size() == res.x.size()) {
      const Vector s = res.x - x_prev;
      const Vector y = g - g_prev;
      const double sy = s.dot(y);
      if (sy > 0.0) {
        step = std::clamp(s.squaredNorm() / sy, 1e-12, 1e12);
      } else {
        step = std::min(step * 4.0, 1e12);
      }
    }

    Vector trial;
    double trial_value = kInf;
    bool accepted = false;
    for (int k = 0; k < 60; ++k) {
      trial = box.project(res.x - step * g);
      const double decrease = g.dot(trial - res.x);
      if ((trial - res.x).lpNorm<Eigen::Infinity>() == 0.0) break;
      trial_value = finite_or_inf(fn(trial, nullptr));
      ++res.evaluations;
      if (trial_value <= res.value + opts.armijo * decrease) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No descent along the projection arc at any resolvable step.
      res.converged = true;
      break;
    }

    Vector g_new(res.x.size());
    const double v_new = finite_or_inf(fn(trial, &g_new));
    ++res.evaluations;
    if (!std::isfinite(v_new) || !g_new.allFinite()) break;

    const double rel = (res.value - v_new) / std::max(1.0, std::abs(res.value));
    stalled = rel < opts.stall_tolerance ? stalled + 1 : 0;

    x_prev = res.x;
    g_prev = g;
    res.x = trial;
    res.value = v_new;
    g = g_new;
    if (stalled >= opts.stall_iterations) {
      res.converged = true;
      break;
    }
  }
  return res;
}

LocalResult minimize_from(const Objective& fn, const Vector& x0, const BoxDomain& box,
                          const DescentOptions& opts) {
  const Eigen::Index d = box.dim();
  const BoxDomain unit(Vector::Zero(d), Vector::Ones(d));
  const double h = opts.fd_step;
  const ObjectiveWithGradient wrapped = [&](const Vector& u, Vector* grad) {
    const double f0 = fn(box.from_unit(u));
    if (grad != nullptr && std::isfinite(f0)) {
      Vector probe = u;
      for (Eigen::Index i = 0; i < d; ++i) {
        const double ui = u[i];
        const double hi = (ui + h <= 1.0) ? h : -h;
        probe[i] = ui + hi;
        (*grad)[i] = (fn(box.from_unit(probe)) - f0) / hi;
        probe[i] = ui;
      }
    }
    return f0;
  };

  LocalResult r = projected_gradient(wrapped, box.to_unit(x0), unit, opts);
  // Gradient probes are d extra objective calls per gradient evaluation.
  r.evaluations += static_cast<int>(d) * (r.iterations + 1);
  r.x = box.from_unit(r.x);
  return r;
}

OptimizeReport minimize_box(const Objective& fn, const BoxDomain& domain, int starts,
                            std::uint64_t seed, const DescentOptions& opts) {
  if (starts < 1) throw InvalidArgument("minimize_box: starts must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Eigen::Index d = domain.dim();

  OptimizeReport report;
  report.value = kInf;
  bool found = false;
  for (int s = 0; s < starts; ++s) {
    Vector u(d);
    for (Eigen::Index i = 0; i < d; ++i) u[i] = unif(rng);
    const Vector x0 = domain.from_unit(u);
    LocalResult r = minimize_from(fn, x0, domain, opts);
    ++report.starts_used;
    report.evaluations += r.evaluations;
    if (!std::isfinite(r.value)) continue;
    if (r.converged) ++report.converged_starts;
    if (!found || r.value < report.value ||
        (r.value == report.value && lex_less(r.x, report.argmin))) {
      report.argmin = r.x;
      report.value = r.value;
      found = true;
    }
  }
  if (!found) throw NumericalError("minimize_box: objective non-finite at every start");
  return report;
}

OptimizeReport pattern_search(const Objective& fn, const BoxDomain& domain, const PatternSearchOptions& opts) {
  if (opts.grid_levels < 2 || opts.refine_top < 1 || !(opts.initial_step > 0.0)) {
    throw InvalidArgument("pattern_search: bad options");
  }
  const Eigen::Index d = domain.dim();
  OptimizeReport rep;
  const auto eval = [&](const Vector& u) {
    ++rep.evaluations;
    const double v = fn(domain.from_unit(u));
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  long cells = 1;
  for (Eigen::Index i = 0; i < d; ++i) cells *= opts.grid_levels;
  std::vector<std::pair<double, Vector>> grid;
  grid.reserve(static_cast<std::size_t>(cells));
  for (long c = 0; c < cells; ++c) {
    Vector u(d);
    long rest = c;
    for (Eigen::Index i = d - 1; i >= 0; --i) {
      u[i] = static_cast<double>(rest % opts.grid_levels) / (opts.grid_levels - 1);
      rest /= opts.grid_levels;
    }
    grid.emplace_back(eval(u), u);
  }
  std::stable_sort(grid.begin(), grid.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  double best = std::numeric_limits<double>::infinity();
  Vector best_u = grid.front().second;
  const int top = std::min<int>(opts.refine_top, static_cast<int>(grid.size()));
  for (int s = 0; s < top; ++s) {
    Vector u = grid[static_cast<std::size_t>(s)].second;
    double fu = grid[static_cast<std::size_t>(s)].first;
    if (!std::isfinite(fu)) continue;
    for (double step = opts.initial_step; step > opts.min_step;) {
      bool improved = false;
      for (Eigen::Index i = 0; i < d; ++i) {
        for (const double sign : {-1.0, 1.0}) {
          Vector v = u;
          v[i] = std::clamp(v[i] + sign * step, 0.0, 1.0);
          if (v[i] == u[i]) continue;
          const double fv = eval(v);
          if (fv < fu) {
            fu = fv;
            u = v;
            improved = true;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
    ++rep.starts_used;
    if (fu < best) {
      best = fu;
      best_u = u;
    }
  }
  if (!std::isfinite(best)) throw NumericalError("pattern_search: objective non-finite everywhere sampled");
  rep.argmin = domain.from_unit(best_u);
  rep.value = best;
  rep.converged_starts = rep.starts_used;
  return rep;
}

}  // namespace greybox
