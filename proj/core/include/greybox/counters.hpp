#pragma once

#include <cstdint>

namespace greybox {

/// Operation accounting for surrogate and white-box work. One instance is
/// owned by whoever drives the evaluation (a trial, a parity sweep); it is
/// not synchronized.
struct EvalCounters {
  std::uint64_t gp_mean_queries = 0;
  std::uint64_t gp_variance_queries = 0;
  // Vector draws y_s = m + A z_s, one per Monte-Carlo sample.
  std::uint64_t posterior_draws = 0;
  // Calls of the composite f (or its y-dependent part h).
  std::uint64_t whitebox_evals = 0;
  std::uint64_t af_probes = 0;
  std::uint64_t system_samples = 0;

  EvalCounters& operator+=(const EvalCounters& o) {
    gp_mean_queries += o.gp_mean_queries;
    gp_variance_queries += o.gp_variance_queries;
    posterior_draws += o.posterior_draws;
    whitebox_evals += o.whitebox_evals;
    af_probes += o.af_probes;
    system_samples += o.system_samples;
    return *this;
  }

  friend EvalCounters operator-(EvalCounters a, const EvalCounters& b) {
    a.gp_mean_queries -= b.gp_mean_queries;
    a.gp_variance_queries -= b.gp_variance_queries;
    a.posterior_draws -= b.posterior_draws;
    a.whitebox_evals -= b.whitebox_evals;
    a.af_probes -= b.af_probes;
    a.system_samples -= b.system_samples;
    return a;
  }

  bool operator==(const EvalCounters&) const = default;
};

}  // namespace greybox
