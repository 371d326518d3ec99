#include "greybox/chemproc.hpp"

#include <boost/math/tools/roots.hpp>

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>

namespace greybox::chemproc {
namespace {

constexpr double kMmHgToBar = 1.01325 / 760.0;

Flows add(const Flows& a, const Flows& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Flows scale(const Flows& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }
double sum(const Flows& a) { return a[0] + a[1] + a[2]; }
double max_abs(const Flows& a) { return std::max({std::abs(a[0]), std::abs(a[1]), std::abs(a[2])}); }

Flows fractions(const Flows& n) {
  const double t = sum(n);
  if (!(t > 0.0)) return {0.0, 0.0, 0.0};
  return scale(n, 1.0 / t);
}

// Dimensionless cp/R at T.
double cp_over_r(double T, const Coeffs& c) {
  return c.alpha + c.beta * T + c.gamma * T * T + c.zeta / (T * T);
}

double utility_cost(double Q, const EconParams& e) { return Q >= 0.0 ? e.w_heat * Q : e.w_cool * (-Q); }

template <class F>
double solve_bracketed(F fn, double lo, double hi, const char* what) {
  const double flo = fn(lo);
  const double fhi = fn(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (!(std::signbit(flo) != std::signbit(fhi)) || !std::isfinite(flo) || !std::isfinite(fhi)) {
    std::ostringstream os;
    os << what << ": no sign change in bracket [" << lo << ", " << hi << "] (residuals " << flo << ", " << fhi
       << ")";
    throw NumericalError(os.str());
  }
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(fn, lo, hi, flo, fhi,
                                                   boost::math::tools::eps_tolerance<double>(52), iters);
  return 0.5 * (r.first + r.second);
}

void check_design(const Vector& x) {
  if (x.size() != 5) throw InvalidArgument("chemproc: design vector must have 5 entries");
  require_finite(x, "chemproc design");
  if (!design_box().contains(x, 1e-9)) throw InvalidArgument("chemproc: design outside the box");
}

Flows pure(Species s) {
  Flows f{0.0, 0.0, 0.0};
  f[s] = 1.0;
  return f;
}

struct LoopPass {
  Flows inlet{};
  double extent = 0.0;
  Flows outlet{};
  FlashResult sep;
};

}  // namespace

Coeffs ThermoParams::reaction() const {
  Coeffs c;
  for (int i = 0; i < 3; ++i) {
    c.alpha += nu[i] * species[i].alpha;
    c.beta += nu[i] * species[i].beta;
    c.gamma += nu[i] * species[i].gamma;
    c.zeta += nu[i] * species[i].zeta;
  }
  return c;
}

Coeffs ThermoParams::mixture(const Flows& n) const {
  const Flows x = fractions(n);
  Coeffs c;
  for (int i = 0; i < 3; ++i) {
    c.alpha += x[i] * species[i].alpha;
    c.beta += x[i] * species[i].beta;
    c.gamma += x[i] * species[i].gamma;
    c.zeta += x[i] * species[i].zeta;
  }
  return c;
}

BoxDomain design_box() {
  Vector lo(5), hi(5);
  lo << 673.0, 250.0, 288.0, 140.0, 0.5;
  hi << 973.0, 450.0, 338.0, 170.0, 0.9;
  return {lo, hi};
}

double icph(double T, const Coeffs& c, double T0) {
  if (!(T > 0.0)) throw InvalidArgument("icph: temperature must be positive");
  return c.alpha * (T - T0) + c.beta / 2.0 * (T * T - T0 * T0) + c.gamma / 3.0 * (T * T * T - T0 * T0 * T0) -
         c.zeta * (1.0 / T - 1.0 / T0);
}

double icps(double T, const Coeffs& c, double T0) {
  if (!(T > 0.0)) throw InvalidArgument("icps: temperature must be positive");
  return c.alpha * (std::log(T) - std::log(T0)) + c.beta * (T - T0) + c.gamma / 2.0 * (T * T - T0 * T0) -
         c.zeta * (1.0 / (T * T) - 1.0 / (T0 * T0));
}

double heater_duty(double F, double T_in, double T_out, const Flows& composition, const ThermoParams& p) {
  if (F == 0.0 || T_in == T_out) return 0.0;
  const Coeffs c = p.mixture(composition);
  return F * p.R * (icph(T_out, c, p.T0) - icph(T_in, c, p.T0)) / 1000.0;
}

CompressorResult compressor(double F, double T_in, double P_in, double P_out, const Flows& composition,
                            const ThermoParams& p) {
  if (!(T_in > 0.0) || !(P_in > 0.0)) throw InvalidArgument("compressor: T_in and P_in must be positive");
  if (P_out < P_in) throw InvalidArgument("compressor: outlet pressure below inlet pressure");
  if (P_out == P_in || F == 0.0) return {T_in, 0.0};
  const Coeffs c = p.mixture(composition);
  const double log_ratio = std::log(P_out / P_in);
  // Pass 1 uses cp at the inlet; pass 2 the mean cp over [T_in, T_out].
  double T_out = T_in * std::exp(log_ratio / cp_over_r(T_in, c));
  const double cp_mean = (icph(T_out, c, p.T0) - icph(T_in, c, p.T0)) / (T_out - T_in);
  T_out = T_in * std::exp(log_ratio / cp_mean);
  const double W = F * p.R * (icph(T_out, c, p.T0) - icph(T_in, c, p.T0)) / 3600.0;
  return {T_out, W};
}

double log_equilibrium_constant(double T, const ThermoParams& p) {
  const Coeffs c = p.reaction();
  const double dG = p.dH0_rxn - (T / p.T0) * (p.dH0_rxn - p.dG0_rxn) +
                    p.R * (icph(T, c, p.T0) - T * icps(T, c, p.T0));
  return -dG / (p.R * T);
}

double equilibrium_extent(double T, double P, const Flows& feed, const ThermoParams& p) {
  if (!(T > 0.0) || !(P > 0.0)) throw InvalidArgument("equilibrium_extent: T and P must be positive");
  for (double n : feed) {
    if (!(n >= 0.0) || !std::isfinite(n)) throw InvalidArgument("equilibrium_extent: feed must be >= 0");
  }
  // Admissible extents keep every outlet flow non-negative.
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (p.nu[i] > 0.0) lo = std::max(lo, -feed[i] / p.nu[i]);
    if (p.nu[i] < 0.0) hi = std::min(hi, -feed[i] / p.nu[i]);
  }
  if (!(hi > lo)) return lo;  // nothing can react

  const double n0 = sum(feed);
  const double nu = p.nu_total();
  const double rhs = -nu * std::log(P / p.P0) + log_equilibrium_constant(T, p);
  const auto residual = [&](double e) {
    double r = 0.0;
    const double total = n0 + nu * e;
    for (int i = 0; i < 3; ++i) r += p.nu[i] * std::log((feed[i] + p.nu[i] * e) / total);
    return r - rhs;
  };
  const double pad = 1e-13 * (hi - lo);
  return solve_bracketed(residual, lo + pad, hi - pad, "equilibrium_extent");
}

double reactor_duty(double r_C, double T, const ThermoParams& p) {
  return r_C * (p.dH0_rxn + p.R * icph(T, p.reaction(), p.T0)) / 1000.0;
}

double saturation_pressure_C(double T, const PlantParams& p) {
  return std::pow(10.0, p.antoine_a - p.antoine_b / (T - p.antoine_c)) * kMmHgToBar;
}

FlashResult flash(const Flows& feed, double T_in, double T_S, double P_S, const Params& p) {
  const double F = sum(feed);
  FlashResult out;
  if (!(F > 0.0)) return out;
  const Flows z = scale(feed, 1.0 / F);
  const double KA = p.plant.k_A;
  const double KC = saturation_pressure_C(T_S, p.plant) / P_S;

  // Rachford-Rice with B sent entirely to the vapor.
  const auto rr = [&](double v) {
    return z[kA] * (KA - 1.0) / (1.0 + v * (KA - 1.0)) + z[kB] / v + z[kC] * (KC - 1.0) / (1.0 + v * (KC - 1.0));
  };
  double v = 1.0;
  if (rr(1.0) >= 0.0) {
    out.single_phase = true;  // dew point not reached: all vapor
  } else {
    double lo = 0.5;
    while (rr(lo) <= 0.0) lo *= 0.5;
    v = solve_bracketed(rr, lo, 1.0, "flash");
  }
  out.vapor_fraction = v;
  if (!out.single_phase) {
    out.liquid[kA] = (1.0 - v) * feed[kA] / (1.0 + v * (KA - 1.0));
    out.liquid[kC] = (1.0 - v) * feed[kC] / (1.0 + v * (KC - 1.0));
  }
  for (int i = 0; i < 3; ++i) out.vapor[i] = feed[i] - out.liquid[i];

  out.duty = heater_duty(F, T_in, T_S, feed, p.thermo) - p.plant.latent_C * out.liquid[kC];
  return out;
}

SimulationResult simulate(const Vector& x, const Params& p) {
  check_design(x);
  const double T_RX = x[0], P_RX = x[1], T_S = x[2], P_S = x[3], R = x[4];
  const EconParams& e = p.econ;
  const ThermoParams& th = p.thermo;
  SimulationResult res;
  ProcessState& s = res.state;

  const CompressorResult cA = compressor(e.F_A, p.plant.feed_temperature, p.plant.feed_pressure, P_RX, pure(kA), th);
  const CompressorResult cB = compressor(e.F_B, p.plant.feed_temperature, p.plant.feed_pressure, P_RX, pure(kB), th);
  s.W[0] = cA.W;
  s.W[1] = cB.W;
  s.Q[0] = heater_duty(e.F_A, cA.T_out, T_RX, pure(kA), th);
  s.Q[1] = heater_duty(e.F_B, cB.T_out, T_RX, pure(kB), th);
  s.feed_A = {{e.F_A, 0.0, 0.0}, T_RX, P_RX};
  s.feed_B = {{0.0, e.F_B, 0.0}, T_RX, P_RX};
  const Flows fresh{e.F_A, e.F_B, 0.0};

  const auto run_pass = [&](const Flows& recycle) {
    LoopPass lp;
    lp.inlet = add(fresh, recycle);
    lp.extent = equilibrium_extent(T_RX, P_RX, lp.inlet, th);
    for (int i = 0; i < 3; ++i) lp.outlet[i] = std::max(0.0, lp.inlet[i] + th.nu[i] * lp.extent);
    lp.sep = flash(lp.outlet, T_RX, T_S, P_S, p);
    return lp;
  };
  const auto tear_map = [&](const Flows& r) { return scale(run_pass(r).sep.vapor, R); };
  const auto rel_residual = [&](const Flows& r, const Flows& next) {
    return max_abs(add(next, scale(r, -1.0))) / std::max(1.0, max_abs(next));
  };

  // Damped direct substitution from zero recycle.
  Flows r{0.0, 0.0, 0.0};
  double resid = std::numeric_limits<double>::infinity();
  for (s.tear_passes = 0; s.tear_passes < p.plant.max_passes && resid > p.plant.tear_tolerance; ++s.tear_passes) {
    const Flows next = tear_map(r);
    resid = rel_residual(r, next);
    r = add(scale(r, 1.0 - p.plant.damping), scale(next, p.plant.damping));
  }

  // Newton polishing so the stream table closes to round-off.
  Eigen::Vector3d rv(r[0], r[1], r[2]);
  const auto G = [&](const Eigen::Vector3d& v) {
    const Flows rf{v[0], v[1], v[2]};
    const Flows next = tear_map(rf);
    return Eigen::Vector3d(next[0] - v[0], next[1] - v[1], next[2] - v[2]);
  };
  Eigen::Vector3d g = G(rv);
  for (int it = 0; it < 30 && g.lpNorm<Eigen::Infinity>() > 1e-12 * std::max(1.0, rv.lpNorm<Eigen::Infinity>()); ++it) {
    Eigen::Matrix3d J;
    for (int j = 0; j < 3; ++j) {
      Eigen::Vector3d probe = rv;
      const double h = 1e-7 * std::max(1.0, std::abs(rv[j]));
      probe[j] += h;
      J.col(j) = (G(probe) - g) / h;
    }
    const Eigen::Vector3d step = J.partialPivLu().solve(-g);
    double t = 1.0;
    bool moved = false;
    for (int k = 0; k < 20; ++k, t *= 0.5) {
      Eigen::Vector3d cand = (rv + t * step).cwiseMax(0.0);
      const Eigen::Vector3d gc = G(cand);
      if (gc.lpNorm<Eigen::Infinity>() < g.lpNorm<Eigen::Infinity>()) {
        rv = cand;
        g = gc;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  r = {rv[0], rv[1], rv[2]};
  const LoopPass lp = run_pass(r);
  const Flows recycle_out = scale(lp.sep.vapor, R);
  s.tear_residual = rel_residual(r, recycle_out);
  if (!(s.tear_residual <= p.plant.tear_tolerance)) {
    std::ostringstream os;
    os << "chemproc: recycle loop did not converge (relative residual " << s.tear_residual << " after "
       << s.tear_passes << " passes)";
    throw NumericalError(os.str());
  }

  s.reactor_in = {lp.inlet, T_RX, P_RX};
  s.reactor_out = {lp.outlet, T_RX, P_RX};
  s.extent = lp.extent;
  s.product = {lp.sep.liquid, T_S, P_S};
  s.vapor = {lp.sep.vapor, T_S, P_S};
  s.purge = {scale(lp.sep.vapor, 1.0 - R), T_S, P_S};
  s.recycle = {r, T_S, P_S};

  const CompressorResult c3 = compressor(sum(r), T_S, P_S, P_RX, r, th);
  s.W[2] = c3.W;
  s.Q[2] = heater_duty(sum(r), c3.T_out, T_RX, r, th);
  s.Q[3] = reactor_duty(th.nu[kC] * lp.extent, T_RX, th);
  s.Q[4] = lp.sep.duty;

  res.y.resize(5);
  res.y[0] = s.product.n[kA] / s.purge.n[kA];
  res.y[1] = s.purge.n[kB] / e.F_B;
  res.y[2] = s.purge.n[kC] / s.product.n[kC];
  res.y[3] = s.Q[3];
  res.y[4] = -s.Q[4];
  if (!res.y.allFinite()) throw NumericalError("chemproc: intermediate undefined (no liquid product)");

  double f = e.w_A0 * e.F_A + e.w_B0 * e.F_B;
  for (int i = 0; i < 3; ++i) f -= e.w_product[i] * s.product.n[i];
  const double dev = (s.product.n[kC] - e.F_bar) / e.F_bar;
  f += e.w3 * dev * dev;
  for (double q : s.Q) f += utility_cost(q, e);
  for (double w : s.W) f += e.w_e * w;
  res.f = f;
  return res;
}

StreamTable reconstruct_streams(double eta_A, double eta_B, double eta_C, double F_A, double F_B, double R,
                                const ThermoParams& p) {
  if (!(R >= 0.0 && R < 1.0)) throw InvalidArgument("reconstruct_streams: recycle fraction must lie in [0, 1)");
  StreamTable t;
  const double rB = -(1.0 - eta_B) * F_B;
  t.generation = {p.nu[kA] / p.nu[kB] * rB, rB, p.nu[kC] / p.nu[kB] * rB};
  t.purge[kA] = (F_A + t.generation[kA]) / (1.0 + eta_A);
  t.purge[kB] = eta_B * F_B;
  t.purge[kC] = eta_C * t.generation[kC] / (1.0 + eta_C);
  t.product[kA] = eta_A * (F_A + t.generation[kA]) / (1.0 + eta_A);
  t.product[kB] = 0.0;
  t.product[kC] = t.generation[kC] / (1.0 + eta_C);
  t.recycle = scale(t.purge, R / (1.0 - R));
  return t;
}

double cost_g(const Vector& x, const Params& p) {
  check_design(x);
  const EconParams& e = p.econ;
  const double T_RX = x[0], P_RX = x[1];
  double f = e.w_A0 * e.F_A + e.w_B0 * e.F_B;
  const std::array<std::pair<Species, double>, 2> feeds{{{kA, e.F_A}, {kB, e.F_B}}};
  for (const auto& [sp, F] : feeds) {
    const CompressorResult c = compressor(F, p.plant.feed_temperature, p.plant.feed_pressure, P_RX, pure(sp), p.thermo);
    f += e.w_e * c.W + utility_cost(heater_duty(F, c.T_out, T_RX, pure(sp), p.thermo), e);
  }
  return f;
}

double cost_h(const Vector& x, const Vector& y, const Params& p) {
  if (y.size() != 5) throw InvalidArgument("chemproc cost_h: y must have 5 entries");
  const EconParams& e = p.econ;
  const double T_RX = x[0], P_RX = x[1], T_S = x[2], P_S = x[3], R = x[4];
  const StreamTable t = reconstruct_streams(y[0], y[1], y[2], e.F_A, e.F_B, R, p.thermo);
  double f = 0.0;
  for (int i = 0; i < 3; ++i) f -= e.w_product[i] * t.product[i];
  const double dev = (t.product[kC] - e.F_bar) / e.F_bar;
  f += e.w3 * dev * dev;
  const double F_R = sum(t.recycle);
  if (F_R > 0.0) {
    const CompressorResult c3 = compressor(F_R, T_S, P_S, P_RX, t.recycle, p.thermo);
    f += e.w_e * c3.W + utility_cost(heater_duty(F_R, c3.T_out, T_RX, t.recycle, p.thermo), e);
  }
  f += utility_cost(y[3], e) + utility_cost(-y[4], e);
  return f;
}

CompositeProblem make_problem(const Params& p) {
  CompositeProblem prob;
  prob.id = "chemproc";
  prob.design_box = design_box();
  const double inf = std::numeric_limits<double>::infinity();
  // x indices: 0 T_RX, 1 P_RX, 2 T_S, 3 P_S, 4 R.
  prob.nodes = {
      {"eta_A", {2, 3}, {"eta_B"}, 1e-6, 1.0, nullptr},
      {"eta_B", {0, 1, 4, 2}, {}, 1e-6, inf, nullptr},
      {"eta_C", {2, 3}, {"eta_B"}, 1e-6, inf, nullptr},
      {"Q4", {0, 1}, {"eta_A", "eta_B"}, 1e-6, inf, nullptr},
      {"Q5", {0, 4, 2, 3}, {"eta_B"}, 1e-6, inf, nullptr},
  };
  prob.g = [p](const Vector& x) { return cost_g(x, p); };
  prob.h = [p](const Vector& x, const Vector& y) { return cost_h(x, y, p); };
  prob.sampler = [p](const Vector& x) { return simulate(x, p).y; };
  prob.validate();
  return prob;
}

}  // namespace greybox::chemproc
