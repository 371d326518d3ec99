#include "greybox/engine.hpp"

#include "greybox/acquisition.hpp"
#include "greybox/auxiliary.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>

namespace greybox {
namespace {

using Clock = std::chrono::steady_clock;

struct History {
  std::vector<Vector> xs;
  std::vector<Vector> ys;
  std::vector<double> fs;
};

// Proposes the next design given the data so far. Work is charged to `ctr`.
using Proposer = std::function<Vector(const History&, int iteration, EvalCounters& ctr, TrialResult& res)>;

std::uint64_t gp_calls(const EvalCounters& c, Eigen::Index dy) {
  return c.gp_mean_queries + c.posterior_draws * static_cast<std::uint64_t>(dy);
}

BoxDomain data_box(const Matrix& inputs, const BoxDomain& design, const std::vector<int>& x_inputs) {
  BoxDomain box;
  box.lower = inputs.colwise().minCoeff().transpose();
  box.upper = inputs.colwise().maxCoeff().transpose();
  for (std::size_t k = 0; k < x_inputs.size(); ++k) {
    const auto c = static_cast<Eigen::Index>(k);
    box.lower[c] = design.lower[x_inputs[k]];
    box.upper[c] = design.upper[x_inputs[k]];
  }
  for (Eigen::Index c = static_cast<Eigen::Index>(x_inputs.size()); c < box.dim(); ++c) {
    if (box.upper[c] - box.lower[c] <= 1e-12 * std::max(1.0, std::abs(box.lower[c]))) {
      box.upper[c] = box.lower[c] + std::max(1.0, std::abs(box.lower[c]));
    }
  }
  return box;
}

TrialResult run_loop(const TrialConfig& cfg, const CompositeProblem& problem, const Proposer& propose) {
  cfg.validate(problem);
  TrialResult res;
  res.config = cfg;
  EvalCounters ctr;
  History hist;
  double best = std::numeric_limits<double>::infinity();
  const Eigen::Index dy = problem.dy();

  const auto sample = [&](int iteration, const Vector& x, const EvalCounters& before, Clock::time_point t0) {
    Vector y = problem.sampler(x);
    if (y.size() != dy || !y.allFinite()) {
      throw NumericalError("sampler returned an invalid intermediate vector");
    }
    ++ctr.system_samples;
    ++ctr.whitebox_evals;
    const double f = problem.f(x, y);
    if (!std::isfinite(f)) throw NumericalError("composite objective non-finite at a sampled design");
    best = std::min(best, f);
    hist.xs.push_back(x);
    hist.ys.push_back(y);
    hist.fs.push_back(f);

    const EvalCounters spent = ctr - before;
    SampleRecord rec;
    rec.iteration = iteration;
    rec.x = x;
    rec.y = y;
    rec.f = f;
    rec.best_f = best;
    rec.regret = cfg.f_star ? regret_value(best, *cfg.f_star) : std::numeric_limits<double>::quiet_NaN();
    rec.gp_calls = gp_calls(spent, dy);
    rec.f_evals = spent.whitebox_evals;
    rec.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    res.samples.push_back(rec);
    res.best_trace.push_back(best);
    if (cfg.f_star) res.regret_trace.push_back(rec.regret);
    res.wall_time_per_iter.push_back(rec.seconds);
  };

  try {
    const int n_init = static_cast<int>(cfg.init_points.size());
    for (int i = 0; i < n_init; ++i) {
      const EvalCounters before = ctr;
      sample(i + 1 - n_init, cfg.init_points[static_cast<std::size_t>(i)], before, Clock::now());
    }
    for (int it = 1; it <= cfg.iterations; ++it) {
      const auto t0 = Clock::now();
      const EvalCounters before = ctr;
      const Vector x = propose(hist, it, ctr, res);
      sample(it, x, before, t0);
    }
  } catch (const std::exception& e) {
    res.aborted = true;
    res.error = e.what();
  }
  res.counters.detail = ctr;
  res.counters.gp_posterior_calls = gp_calls(ctr, dy);
  res.counters.f_evals = ctr.whitebox_evals;
  res.counters.system_samples = ctr.system_samples;
  return res;
}

std::vector<KernelConfig> kernels_of(const CompositeProblem& p) {
  std::vector<KernelConfig> out;
  for (const IntermediateNode& n : p.nodes) {
    if (n.model) out.push_back(n.model->kernel());
  }
  return out;
}

// Composite-model proposers share node training with warm starts carried
// across iterations.
Proposer composite_proposer(const TrialConfig& cfg, const CompositeProblem& problem,
                            std::function<Vector(const CompositeProblem&, int, EvalCounters&, TrialResult&)> choose) {
  auto model = std::make_shared<CompositeProblem>(problem);
  auto warm = std::make_shared<std::vector<KernelConfig>>();
  return [=](const History& h, int it, EvalCounters& ctr, TrialResult& res) {
    train_node_models(*model, h.xs, h.ys, cfg, derive_seed(cfg.seed, 10, static_cast<std::uint64_t>(it)), *warm);
    *warm = kernels_of(*model);
    return choose(*model, it, ctr, res);
  };
}

}  // namespace

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::kSbo: return "SBO";
    case Algorithm::kMcbo: return "MCBO";
    case Algorithm::kOpbo: return "OPBO";
    case Algorithm::kBois: return "BOIS";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& name) {
  for (Algorithm a : {Algorithm::kSbo, Algorithm::kMcbo, Algorithm::kOpbo, Algorithm::kBois}) {
    if (algorithm_name(a) == name) return a;
  }
  throw InvalidArgument("unknown algorithm '" + name + "' (expected SBO, MCBO, OPBO or BOIS)");
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
  const auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ stream) ^ index);
}

void TrialConfig::validate(const CompositeProblem& problem) const {
  if (iterations < 1) throw InvalidArgument("TrialConfig: iterations must be >= 1");
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw InvalidArgument("TrialConfig: kappa must be >= 0");
  if (af_starts < 1) throw InvalidArgument("TrialConfig: af_starts must be >= 1");
  if (algorithm == Algorithm::kMcbo && mc_samples < 2) {
    throw InvalidArgument("TrialConfig: mc_samples must be >= 2");
  }
  if (init_points.size() < 2) throw InvalidArgument("TrialConfig: at least two init points required");
  for (const Vector& p : init_points) {
    if (p.size() != problem.dx() || !problem.design_box.contains(p)) {
      throw InvalidArgument("TrialConfig: init point outside the design box");
    }
  }
  if (f_star && *f_star == 0.0) throw InvalidArgument("TrialConfig: f_star must be non-zero");
  if (!problem.sampler) throw InvalidArgument("TrialConfig: problem has no sampler");
  gp_space.validate();
}

double regret_value(double f, double f_star) {
  if (f_star == 0.0) throw InvalidArgument("regret: f_star must be non-zero");
  const double rel = std::abs((f - f_star) / f_star);
  if (rel == 0.0) return -16.0;
  return std::max(-16.0, std::log10(rel));
}

std::vector<double> regret(const std::vector<double>& trace, double f_star) {
  if (f_star == 0.0) throw InvalidArgument("regret: f_star must be non-zero");
  std::vector<double> out;
  out.reserve(trace.size());
  for (double f : trace) out.push_back(regret_value(f, f_star));
  return out;
}

void train_node_models(CompositeProblem& problem, const std::vector<Vector>& xs,
                       const std::vector<Vector>& ys, const TrialConfig& cfg, std::uint64_t seed,
                       const std::vector<KernelConfig>& warm) {
  if (xs.size() != ys.size() || xs.empty()) throw InvalidArgument("train_node_models: bad history");
  const auto n = static_cast<Eigen::Index>(xs.size());
  for (std::size_t i = 0; i < problem.nodes.size(); ++i) {
    IntermediateNode& node = problem.nodes[i];
    Dataset data;
    data.inputs.resize(n, static_cast<Eigen::Index>(node.x_inputs.size() + node.y_inputs.size()));
    data.outputs.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto s = static_cast<std::size_t>(k);
      data.inputs.row(k) = problem.node_query(i, xs[s], ys[s]).transpose();
      data.outputs[k] = ys[s][static_cast<Eigen::Index>(i)];
    }
    GpTrainOptions opts;
    opts.nu = cfg.nu;
    opts.space = cfg.gp_space;
    opts.seed = derive_seed(seed, 20, i);
    opts.input_box = data_box(data.inputs, problem.design_box, node.x_inputs);
    if (i < warm.size()) {
      opts.warm_start = warm[i];
      opts.restarts = cfg.gp_refit_restarts;
    } else {
      opts.restarts = cfg.gp_restarts;
    }
    node.model = std::make_shared<const GpModel>(train_gp(data, opts));
  }
}

TrialResult run_sbo(const TrialConfig& cfg, const CompositeProblem& problem) {
  auto warm = std::make_shared<std::optional<KernelConfig>>();
  const Proposer propose = [&, warm](const History& h, int it, EvalCounters& ctr, TrialResult&) {
    Dataset data;
    data.inputs.resize(static_cast<Eigen::Index>(h.xs.size()), problem.dx());
    for (std::size_t k = 0; k < h.xs.size(); ++k) data.inputs.row(static_cast<Eigen::Index>(k)) = h.xs[k].transpose();
    data.outputs = Eigen::Map<const Vector>(h.fs.data(), static_cast<Eigen::Index>(h.fs.size()));
    GpTrainOptions opts;
    opts.nu = cfg.nu;
    opts.space = cfg.gp_space;
    opts.seed = derive_seed(cfg.seed, 10, static_cast<std::uint64_t>(it));
    opts.input_box = problem.design_box;
    opts.warm_start = *warm;
    opts.restarts = warm->has_value() ? cfg.gp_refit_restarts : cfg.gp_restarts;
    const GpModel model = train_gp(data, opts);
    *warm = model.kernel();
    const Objective af = [&](const Vector& x) { return eval_lcb(model, x, cfg.kappa, &ctr); };
    return minimize_box(af, problem.design_box, cfg.af_starts,
                        derive_seed(cfg.seed, 1, static_cast<std::uint64_t>(it)), cfg.af_options)
        .argmin;
  };
  return run_loop(cfg, problem, propose);
}

TrialResult run_mcbo(const TrialConfig& cfg, const CompositeProblem& problem) {
  const Proposer propose = composite_proposer(
      cfg, problem, [&cfg](const CompositeProblem& model, int it, EvalCounters& ctr, TrialResult&) {
        // One seed per iteration: common random numbers across all probes.
        const std::uint64_t mc_seed = derive_seed(cfg.seed, 2, static_cast<std::uint64_t>(it));
        const Objective af = [&](const Vector& x) {
          return eval_lcb_cf(model, x, cfg.kappa, cfg.mc_samples, mc_seed, &ctr);
        };
        return minimize_box(af, model.design_box, cfg.af_starts,
                            derive_seed(cfg.seed, 1, static_cast<std::uint64_t>(it)), cfg.af_options)
            .argmin;
      });
  return run_loop(cfg, problem, propose);
}

TrialResult run_opbo(const TrialConfig& cfg, const CompositeProblem& problem) {
  const Proposer propose = composite_proposer(
      cfg, problem, [&cfg](const CompositeProblem& model, int it, EvalCounters& ctr, TrialResult& res) {
        const AuxiliarySolution sol = solve_opbo_auxiliary(
            model, cfg.kappa, cfg.af_starts, derive_seed(cfg.seed, 1, static_cast<std::uint64_t>(it)), &ctr,
            cfg.af_options);
        res.opbo_collapses += sol.collapsed_evaluations;
        res.proposed_y.push_back(sol.y);
        if (!auxiliary_feasible(model, sol.x, sol.y, cfg.kappa)) ++res.opbo_infeasible;
        // The proposed y is discarded; the system is sampled at x.
        return sol.x;
      });
  return run_loop(cfg, problem, propose);
}

TrialResult run_bois(const TrialConfig& cfg, const CompositeProblem& problem) {
  const Proposer propose = composite_proposer(
      cfg, problem, [&cfg](const CompositeProblem& model, int it, EvalCounters& ctr, TrialResult&) {
        const Objective af = [&](const Vector& x) { return eval_lcb_bois(model, x, cfg.kappa, &ctr); };
        return minimize_box(af, model.design_box, cfg.af_starts,
                            derive_seed(cfg.seed, 1, static_cast<std::uint64_t>(it)), cfg.af_options)
            .argmin;
      });
  return run_loop(cfg, problem, propose);
}

TrialResult run_trial(const TrialConfig& cfg, const CompositeProblem& problem) {
  switch (cfg.algorithm) {
    case Algorithm::kSbo: return run_sbo(cfg, problem);
    case Algorithm::kMcbo: return run_mcbo(cfg, problem);
    case Algorithm::kOpbo: return run_opbo(cfg, problem);
    case Algorithm::kBois: return run_bois(cfg, problem);
  }
  throw InvalidArgument("run_trial: unknown algorithm");
}

}  // namespace greybox
