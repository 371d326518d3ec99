#include "greybox/acquisition.hpp"

#include <cmath>

namespace greybox {
namespace {

void check_kappa(double kappa) {
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw InvalidArgument("kappa must be finite and >= 0");
}

}  // namespace

void AcquisitionSpec::validate() const {
  check_kappa(kappa);
  if (kind == AcquisitionKind::kLcbCf && mc_samples < 2) {
    throw InvalidArgument("AcquisitionSpec: LCB-CF needs mc_samples >= 2");
  }
}

double eval_lcb(const GpModel& model, const Vector& x, double kappa, EvalCounters* counters) {
  check_kappa(kappa);
  const Prediction p = model.posterior(x);
  if (counters != nullptr) {
    ++counters->af_probes;
    ++counters->gp_mean_queries;
    ++counters->gp_variance_queries;
  }
  return p.mean - kappa * std::sqrt(p.variance);
}

double eval_lcb_cf(const CompositeProblem& problem, const Vector& x, double kappa, int samples,
                   std::uint64_t seed, EvalCounters* counters) {
  check_kappa(kappa);
  if (counters != nullptr) ++counters->af_probes;
  const MomentEstimate m = mc_moments(problem, x, samples, seed, counters);
  return m.mean - kappa * m.stdev;
}

double eval_lcb_bois(const CompositeProblem& problem, const Vector& x, double kappa,
                     EvalCounters* counters) {
  check_kappa(kappa);
  if (counters != nullptr) ++counters->af_probes;
  const MomentEstimate m = bois_moments(problem, x, counters);
  return m.mean - kappa * m.stdev;
}

}  // namespace greybox
