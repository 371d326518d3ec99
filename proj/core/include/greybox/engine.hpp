#pragma once

#include "greybox/composite.hpp"
#include "greybox/counters.hpp"
#include "greybox/gp.hpp"
#include "greybox/optimize.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace greybox {

enum class Algorithm { kSbo, kMcbo, kOpbo, kBois };

std::string algorithm_name(Algorithm a);  // "SBO", "MCBO", "OPBO", "BOIS"
Algorithm parse_algorithm(const std::string& name);

/// Deterministic child seed for (base, stream, index) via splitmix64 mixing.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index);

struct TrialConfig {
  Algorithm algorithm = Algorithm::kBois;
  double kappa = 2.0;
  int iterations = 1;
  int mc_samples = 100;
  int af_starts = 50;
  std::uint64_t seed = 0;
  std::vector<Vector> init_points;
  std::string problem_id;
  std::optional<double> f_star;  // enables the regret trace

  Smoothness nu = Smoothness::kMatern52;
  SearchSpace gp_space;
  int gp_restarts = 4;        // restarts for the first fit
  int gp_refit_restarts = 1;  // fresh restarts added to the warm start later
  DescentOptions af_options;

  void validate(const CompositeProblem& problem) const;
};

struct SampleRecord {
  int iteration = 0;  // init points are 1 - n_init .. 0
  Vector x;
  Vector y;  // observed intermediates
  double f = 0.0;
  double best_f = 0.0;
  double regret = 0.0;  // NaN when no f_star
  // Work spent producing this sample (AF optimization plus the sample).
  std::uint64_t gp_calls = 0;
  std::uint64_t f_evals = 0;
  double seconds = 0.0;
};

struct TrialCounters {
  std::uint64_t gp_posterior_calls = 0;
  std::uint64_t f_evals = 0;
  std::uint64_t system_samples = 0;
  EvalCounters detail;
};

struct TrialResult {
  TrialConfig config;
  std::vector<SampleRecord> samples;
  std::vector<double> best_trace;
  std::vector<double> regret_trace;
  std::vector<double> wall_time_per_iter;
  TrialCounters counters;
  // OP-BO only: auxiliary y per iteration and feasibility audit.
  std::vector<Vector> proposed_y;
  long opbo_infeasible = 0;
  long opbo_collapses = 0;
  bool aborted = false;
  std::string error;
};

/// Log-normalized regret log10(|f - f_star| / |f_star|) of each entry of `trace`. Exact hits are
/// reported as -16. Throws InvalidArgument when f_star == 0.
std::vector<double> regret(const std::vector<double>& trace, double f_star);
double regret_value(double f, double f_star);

/// Trains one GP per node on observed (x, y) pairs; downstream inputs use
/// the observed upstream values. `warm` holds previous kernels (may be
/// empty).
void train_node_models(CompositeProblem& problem, const std::vector<Vector>& xs,
                       const std::vector<Vector>& ys, const TrialConfig& cfg, std::uint64_t seed,
                       const std::vector<KernelConfig>& warm = {});

TrialResult run_sbo(const TrialConfig& cfg, const CompositeProblem& problem);
TrialResult run_mcbo(const TrialConfig& cfg, const CompositeProblem& problem);
TrialResult run_opbo(const TrialConfig& cfg, const CompositeProblem& problem);
TrialResult run_bois(const TrialConfig& cfg, const CompositeProblem& problem);

/// Dispatches on cfg.algorithm.
TrialResult run_trial(const TrialConfig& cfg, const CompositeProblem& problem);

}  // namespace greybox
