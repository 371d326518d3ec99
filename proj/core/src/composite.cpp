#include "greybox/composite.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace greybox {
namespace {

double eval_h(const CompositeProblem& p, const Vector& x, const Vector& y, EvalCounters* c) {
  if (c != nullptr) ++c->whitebox_evals;
  return p.h(x, y);
}

}  // namespace

Vector CompositeProblem::y_lower() const {
  Vector v(dy());
  for (Eigen::Index i = 0; i < dy(); ++i) v[i] = nodes[static_cast<std::size_t>(i)].lower_bound;
  return v;
}

Vector CompositeProblem::y_upper() const {
  Vector v(dy());
  for (Eigen::Index i = 0; i < dy(); ++i) v[i] = nodes[static_cast<std::size_t>(i)].upper_bound;
  return v;
}

std::size_t CompositeProblem::node_index(const std::string& name) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].name == name) return i;
  }
  throw InvalidArgument("unknown intermediate node '" + name + "'");
}

Vector CompositeProblem::node_query(std::size_t i, const Vector& x, const Vector& y) const {
  const IntermediateNode& n = nodes[i];
  Vector q(static_cast<Eigen::Index>(n.x_inputs.size() + n.y_inputs.size()));
  Eigen::Index k = 0;
  for (int xi : n.x_inputs) q[k++] = x[xi];
  for (const std::string& up : n.y_inputs) q[k++] = y[static_cast<Eigen::Index>(node_index(up))];
  return q;
}

void CompositeProblem::validate() const {
  if (design_box.dim() == 0) throw InvalidArgument("CompositeProblem: empty design box");
  if (!g || !h) throw InvalidArgument("CompositeProblem: white-box g and h must be set");
  std::set<std::string> names;
  for (const IntermediateNode& n : nodes) {
    if (!names.insert(n.name).second) throw InvalidArgument("duplicate node name '" + n.name + "'");
    if (!(n.lower_bound < n.upper_bound)) {
      throw InvalidArgument("node '" + n.name + "': lower bound must be < upper bound");
    }
    if (n.x_inputs.empty() && n.y_inputs.empty()) {
      throw InvalidArgument("node '" + n.name + "' has no inputs");
    }
    for (int xi : n.x_inputs) {
      if (xi < 0 || xi >= dx()) throw InvalidArgument("node '" + n.name + "': x index out of range");
    }
  }
  for (const IntermediateNode& n : nodes) {
    for (const std::string& up : n.y_inputs) {
      if (names.count(up) == 0) {
        throw InvalidArgument("node '" + n.name + "' references unknown node '" + up + "'");
      }
    }
  }
  (void)topo_order(*this);
}

std::vector<std::size_t> topo_order(const CompositeProblem& problem) {
  const std::size_t n = problem.nodes.size();
  std::vector<std::vector<std::size_t>> downstream(n);
  std::vector<int> pending(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (const std::string& up : problem.nodes[i].y_inputs) {
      downstream[problem.node_index(up)].push_back(i);
      ++pending[i];
    }
  }
  const auto by_name = [&](std::size_t a, std::size_t b) {
    return problem.nodes[a].name > problem.nodes[b].name;  // min-heap on name
  };
  std::vector<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i) {
    if (pending[i] == 0) ready.push_back(i);
  }
  std::make_heap(ready.begin(), ready.end(), by_name);

  std::vector<std::size_t> order;
  while (!ready.empty()) {
    std::pop_heap(ready.begin(), ready.end(), by_name);
    const std::size_t i = ready.back();
    ready.pop_back();
    order.push_back(i);
    for (std::size_t d : downstream[i]) {
      if (--pending[d] == 0) {
        ready.push_back(d);
        std::push_heap(ready.begin(), ready.end(), by_name);
      }
    }
  }
  if (order.size() == n) return order;

  // Walk upstream from any blocked node until a node repeats.
  std::size_t cur = 0;
  while (pending[cur] == 0) ++cur;
  std::vector<std::size_t> path;
  std::map<std::size_t, std::size_t> seen;
  while (seen.count(cur) == 0) {
    seen[cur] = path.size();
    path.push_back(cur);
    for (const std::string& up : problem.nodes[cur].y_inputs) {
      const std::size_t u = problem.node_index(up);
      if (pending[u] > 0) {
        cur = u;
        break;
      }
    }
  }
  std::ostringstream os;
  os << "intermediate graph has a cycle:";
  for (std::size_t k = seen[cur]; k < path.size(); ++k) os << ' ' << problem.nodes[path[k]].name << " <-";
  os << ' ' << problem.nodes[cur].name;
  throw InvalidArgument(os.str());
}

double clip_to_bounds(double m, double lo, double hi) {
  if (m < lo) return lo;
  if (m > hi) return hi;
  return m;
}

IntermediatePrediction predict_intermediates(const CompositeProblem& problem, const Vector& x,
                                             EvalCounters* counters) {
  if (x.size() != problem.dx()) throw InvalidArgument("predict_intermediates: x dimension mismatch");
  require_finite(x, "predict_intermediates");
  if (!problem.design_box.contains(x, 1e-12)) {
    throw InvalidArgument("predict_intermediates: x outside the design box");
  }
  const Eigen::Index dy = problem.dy();
  IntermediatePrediction out;
  out.raw_means = Vector::Zero(dy);
  out.means = Vector::Zero(dy);
  out.variances = Vector::Zero(dy);
  out.clipped.assign(static_cast<std::size_t>(dy), false);
  out.queries.resize(static_cast<std::size_t>(dy));

  for (std::size_t i : topo_order(problem)) {
    const IntermediateNode& node = problem.nodes[i];
    if (!node.model) throw InvalidArgument("predict_intermediates: node '" + node.name + "' is untrained");
    const auto k = static_cast<Eigen::Index>(i);
    out.queries[i] = problem.node_query(i, x, out.means);
    const Prediction p = node.model->posterior(out.queries[i]);
    if (counters != nullptr) {
      ++counters->gp_mean_queries;
      ++counters->gp_variance_queries;
    }
    out.raw_means[k] = p.mean;
    out.variances[k] = p.variance;
    out.means[k] = clip_to_bounds(p.mean, node.lower_bound, node.upper_bound);
    out.clipped[i] = out.means[k] != p.mean;
  }
  return out;
}

MomentEstimate linear_moments(const Vector& a, double b, const Vector& means, const Vector& variances) {
  if (a.size() != means.size() || a.size() != variances.size()) {
    throw InvalidArgument("linear_moments: dimension mismatch");
  }
  MomentEstimate m;
  m.mean = a.dot(means) + b;
  m.stdev = std::sqrt(std::max(0.0, a.cwiseAbs2().dot(variances)));
  m.clipped_mask.assign(static_cast<std::size_t>(a.size()), false);
  return m;
}

MomentEstimate mc_moments(const CompositeProblem& problem, const Vector& x, int samples,
                          std::uint64_t seed, EvalCounters* counters) {
  if (samples < 2) throw InvalidArgument("mc_moments: at least two samples required");
  const IntermediatePrediction pred = predict_intermediates(problem, x, counters);
  const Vector sd = pred.variances.cwiseSqrt();
  const Vector lo = problem.y_lower();
  const Vector hi = problem.y_upper();
  const double g0 = problem.g(x);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> values(static_cast<std::size_t>(samples));
  Vector y(problem.dy());
  for (double& v : values) {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      y[i] = clip_to_bounds(pred.raw_means[i] + sd[i] * normal(rng), lo[i], hi[i]);
    }
    v = g0 + eval_h(problem, x, y, counters);
  }
  if (counters != nullptr) counters->posterior_draws += static_cast<std::uint64_t>(samples);

  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= samples;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);

  MomentEstimate m;
  m.mean = mean;
  m.stdev = std::sqrt(ss / (samples - 1));
  m.clipped_mask = pred.clipped;
  if (!std::isfinite(m.mean) || !std::isfinite(m.stdev)) {
    throw NumericalError("mc_moments: non-finite white-box value");
  }
  return m;
}

Vector bois_jacobian(const CompositeProblem& problem, const Vector& x, const Vector& y0,
                     const std::vector<bool>& clipped, EvalCounters* counters, const double* h0) {
  const Eigen::Index dy = problem.dy();
  if (y0.size() != dy || clipped.size() != static_cast<std::size_t>(dy)) {
    throw InvalidArgument("bois_jacobian: dimension mismatch");
  }
  const Vector lo = problem.y_lower();
  const Vector hi = problem.y_upper();
  double base = 0.0;
  bool have_base = false;
  if (h0 != nullptr) {
    base = *h0;
    have_base = true;
  }

  const auto probe = [&](Vector& y, Eigen::Index i, double value) {
    const double saved = y[i];
    y[i] = value;
    const double v = eval_h(problem, x, y, counters);
    y[i] = saved;
    if (!std::isfinite(v)) {
      throw NumericalError("bois_jacobian: white-box h non-finite when probing component '" +
                           problem.nodes[static_cast<std::size_t>(i)].name + "'");
    }
    return v;
  };

  Vector jac(dy);
  Vector y = y0;
  for (Eigen::Index i = 0; i < dy; ++i) {
    const double eps = std::max(std::abs(y0[i]) * 1e-3, 1e-8);
    const bool at_lower = clipped[static_cast<std::size_t>(i)] && y0[i] <= lo[i];
    const bool at_upper = clipped[static_cast<std::size_t>(i)] && y0[i] >= hi[i];
    const bool room_below = y0[i] - eps >= lo[i];
    const bool room_above = y0[i] + eps <= hi[i];
    if (!at_lower && !at_upper && room_below && room_above) {
      jac[i] = (probe(y, i, y0[i] + eps) - probe(y, i, y0[i] - eps)) / (2.0 * eps);
      continue;
    }
    if (!have_base) {
      base = eval_h(problem, x, y0, counters);
      have_base = true;
    }
    // Step into the feasible side: forward at a lower bound, backward at an
    // upper bound.
    const bool forward = at_lower || (!at_upper && room_above);
    const double step = forward ? eps : -eps;
    jac[i] = (probe(y, i, y0[i] + step) - base) / step;
  }
  return jac;
}

MomentEstimate bois_moments(const CompositeProblem& problem, const Vector& x, EvalCounters* counters) {
  const IntermediatePrediction pred = predict_intermediates(problem, x, counters);
  const double h0 = eval_h(problem, x, pred.means, counters);
  if (!std::isfinite(h0)) throw NumericalError("bois_moments: white-box h non-finite at y-hat");
  const Vector jac = bois_jacobian(problem, x, pred.means, pred.clipped, counters, &h0);
  MomentEstimate m;
  m.mean = problem.g(x) + h0;
  m.stdev = std::sqrt(jac.cwiseAbs2().dot(pred.variances));
  m.clipped_mask = pred.clipped;
  return m;
}

}  // namespace greybox
