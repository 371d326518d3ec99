#pragma once

#include "greybox/composite.hpp"
#include "greybox/counters.hpp"
#include "greybox/gp.hpp"

#include <cstdint>

namespace greybox {

enum class AcquisitionKind { kLcb, kLcbCf, kLcbBois };

struct AcquisitionSpec {
  AcquisitionKind kind = AcquisitionKind::kLcb;
  double kappa = 2.0;
  int mc_samples = 100;  // LCB-CF only
  std::uint64_t seed = 0;

  void validate() const;
};

/// m_f(x) - kappa sigma_f(x) from a black-box GP on f.
double eval_lcb(const GpModel& model, const Vector& x, double kappa, EvalCounters* counters = nullptr);

/// Monte-Carlo composite bound. Callers pass one seed for every probe of an
/// acquisition optimization so the surface is deterministic.
double eval_lcb_cf(const CompositeProblem& problem, const Vector& x, double kappa, int samples,
                   std::uint64_t seed, EvalCounters* counters = nullptr);

/// Linearized composite bound from bois_moments.
double eval_lcb_bois(const CompositeProblem& problem, const Vector& x, double kappa,
                     EvalCounters* counters = nullptr);

}  // namespace greybox
