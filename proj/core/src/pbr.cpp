#include "greybox/pbr.hpp"

#include <algorithm>
#include <cmath>

namespace greybox::pbr {

BoxDomain design_box() {
  Vector lo(3), hi(3);
  lo << 11.5, 19.2, 0.013;
  hi << 22.5, 37.5, 0.154;
  return {lo, hi};
}

double steady_titer(double SV, const GrowthParams& p) {
  // umol/(m^2 s) * 1/m / (umol/(kg s)) = kg/m^3 = g/L
  return p.titer_scale * p.eta * p.I0 * SV / p.m_nu;
}

double growth_rate(const GrowthParams& p) { return p.Y_Xnu * p.m_nu * kSecondsPerDay; }

double cb_titer(double t_b, double SV, const GrowthParams& p) {
  if (t_b < 0.0 || SV <= 0.0) throw InvalidArgument("cb_titer: need t_b >= 0 and S/V > 0");
  const double decay = std::exp(-growth_rate(p) * t_b);
  return p.X0 * decay + steady_titer(SV, p) * (1.0 - decay);
}

Sizing sizing_from_intermediates(double t_b, double V, double X, const Params& p) {
  const double years = t_b / kDaysPerYear;
  Sizing s;
  s.V = V;
  s.SA = p.process.rho_W * V / p.process.sigma;
  s.m_CB = X * V / years / 1000.0;
  s.m_PBR = p.process.rho_W * V / years / 1000.0;
  return s;
}

Sizing reactor_sizing(const Vector& x, const Params& p) {
  if (x.size() != 3) throw InvalidArgument("reactor_sizing: x must have 3 entries");
  if (x[2] <= 0.0) throw InvalidArgument("reactor_sizing: rho_P must be positive");
  const double X = cb_titer(x[1], x[0], p.growth);
  const double m_CB = p.process.m_P / x[2];
  const double V = m_CB * 1000.0 * (x[1] / kDaysPerYear) / X;
  return sizing_from_intermediates(x[1], V, X, p);
}

Nutrients nutrient_demands(const Sizing& s, double X, const Params& p) {
  const ProcessParams& q = p.process;
  Nutrients n;
  n.m_U = std::max(0.0, q.x_UN * (q.rho_N * s.m_CB - q.m_N));
  // Water leaving with the filter cake is evaporated in the dryer; the rest
  // of the broth water is recovered and partly recycled.
  n.water_removed = s.m_CB * q.rho_W / p.yields.filter_solids;
  const double recovered = std::max(0.0, s.m_PBR - s.m_CB - n.water_removed);
  n.m_RW = (1.0 - q.purge_fraction) * recovered;
  n.m_FW = std::max(0.0, s.m_CB * (q.rho_W / X - 1.0) - (n.m_RW + q.m_W));
  return n;
}

double lambda_sv(double SV, double SV0) { return std::max(1.0, 3.0 * SV / SV0 - 2.0); }

double lambda_lb(double t_b, double t_b0) { return std::max(0.0, 0.05 * (t_b0 - t_b)); }

double annuity_factor(double rate, int years) {
  double a = 0.0;
  for (int j = 1; j <= years; ++j) a += std::pow(1.0 + rate, -j);
  return a;
}

double scaled_cost(const ScaledUnit& u, double size, double base_size, double PI) {
  return u.c_ref * std::pow(u.size_ratio * size / base_size, u.phi) * PI / u.PI_ref;
}

Ledger build_ledger(const Vector& x, double V, double X, const Params& p) {
  if (x.size() != 3) throw InvalidArgument("build_ledger: x must have 3 entries");
  if (!(V > 0.0) || !(X > 0.0)) throw InvalidArgument("build_ledger: V and X must be positive");
  const ProcessParams& q = p.process;
  const YieldParams& yl = p.yields;
  const CapitalParams& cp = p.capital;
  const OperatingParams& op = p.operating;
  const FinanceParams& fin = p.finance;
  const double PI = fin.PI;

  Ledger l;
  l.X = X;
  l.sizing = sizing_from_intermediates(x[1], V, X, p);
  l.nutrients = nutrient_demands(l.sizing, X, p);
  l.acres = l.sizing.SA / kSquareMetersPerAcre;
  const double m_CB = l.sizing.m_CB;

  Vector base(3);
  base << q.SV0, q.t_b0, q.rho_P0;
  const Sizing base_size = reactor_sizing(base, p);

  l.m_CH4 = yl.ch4 * q.m_M;
  l.m_CO2 = yl.co2 * q.m_M;
  l.biogas = (yl.ch4 + yl.co2 + yl.h2s) * q.m_M;
  l.sls_capacity = (q.m_M - l.biogas) * kPoundsPerTonne / kHoursPerYear;
  l.power = yl.electricity * l.m_CH4 * 1000.0 * fin.x_CH4;
  l.m_NG = l.m_CH4 * (1.0 - fin.x_CH4);

  l.c_AD = (937.1 * std::pow(q.m_M, 0.6) + 75355.0) * PI / cp.PI_AD;
  const double m = l.sls_capacity;
  l.c_SLS = (14.9 * m + 1786.9 * std::log(m) - 9506.6) * PI / cp.PI_SLS;
  l.c_generator = 0.67 * (l.c_AD * cp.PI_AD / PI) * fin.x_CH4 * PI / cp.PI_generator;
  l.c_h2s = scaled_cost(cp.h2s_scrubber, 1.0, 1.0, PI);
  l.c_co2 = scaled_cost(cp.co2_scrubber, 1.0, 1.0, PI);
  l.c_pbr = scaled_cost(cp.pbr, V, base_size.V, PI);
  l.c_flocculation = scaled_cost(cp.flocculation, m_CB, base_size.m_CB, PI);
  l.c_lamella = scaled_cost(cp.lamella, m_CB, base_size.m_CB, PI);
  l.c_filter = scaled_cost(cp.filter, m_CB, base_size.m_CB, PI);
  const double dryer_load = l.nutrients.water_removed * 1000.0 / kHoursPerYear;  // kg/hr
  l.c_dryer = cp.dryer_cost * std::pow(dryer_load / cp.dryer_capacity, cp.dryer_phi) * PI / cp.dryer_PI;

  l.c_IS = l.c_AD + l.c_SLS + l.c_generator + l.c_h2s + l.c_co2 + l.c_pbr + l.c_flocculation +
           l.c_lamella + l.c_filter + l.c_dryer;
  l.c_OS = 0.4 * l.c_IS;
  l.c_ENG = 0.3 * (l.c_IS + l.c_OS);
  l.c_CON = 0.2 * (l.c_IS + l.c_OS);
  l.C = l.c_IS + l.c_OS + l.c_ENG + l.c_CON;

  l.labor = op.labor_ref * l.acres / op.labor_area_ref + lambda_lb(x[1], q.t_b0) * 1e6;
  l.FOC = (op.maintenance + op.operations + op.overhead) * l.c_IS + l.labor;

  l.v_AD = op.ad_fraction * l.c_AD;
  l.v_SLS = op.sls_per_capacity * l.sls_capacity + op.sls_fraction * l.c_SLS;
  l.v_h2s = op.h2s_per_biogas * l.biogas;
  l.v_co2 = op.co2_per_co2 * l.m_CO2;
  l.v_pbr = op.pbr_per_acre * l.acres * lambda_sv(x[0], q.SV0);
  l.v_flocculation = op.flocculation_per_cb * m_CB;
  l.v_lamella = op.lamella_per_cb * m_CB;
  l.v_filter = op.filter_per_cb * m_CB;
  l.v_dryer = op.dryer_per_water * l.nutrients.water_removed;
  l.VOC = l.v_AD + l.v_SLS + l.v_h2s + l.v_co2 + l.v_pbr + l.v_flocculation + l.v_lamella +
          l.v_filter + l.v_dryer;
  l.O = l.FOC + l.VOC;

  l.depreciation = l.c_IS / fin.lifetime;
  const double ng_price_per_tonne = fin.p_NG / 1000.0 * kCubicFeetPerCubicMeter / q.rho_NG * 1000.0;
  l.other_revenue = fin.p_EL * l.power + ng_price_per_tonne * l.m_NG;
  l.annuity = annuity_factor(fin.droi, fin.lifetime);
  return l;
}

double profit(double p_CB, const Ledger& l, const Params& p) {
  const double revenue = p_CB * l.sizing.m_CB * 1000.0 + l.other_revenue;
  return (1.0 - p.finance.tax) * (revenue - l.O - l.depreciation) + l.depreciation;
}

double npv(double p_CB, const Ledger& l, const Params& p) {
  return -l.C + l.annuity * profit(p_CB, l, p);
}

double msp(const Ledger& l, const Params& p) {
  const double m_CB = l.sizing.m_CB * 1000.0;
  if (!(m_CB > 0.0)) throw InvalidArgument("msp: CB production rate is zero");
  const double target_profit = l.C / l.annuity;
  const double revenue = (target_profit - l.depreciation) / (1.0 - p.finance.tax) + l.O + l.depreciation;
  return (revenue - l.other_revenue) / m_CB;
}

double msp(const Vector& x, const Params& p) { return simulate(x, p).f; }

SimulationResult simulate(const Vector& x, const Params& p) {
  require_finite(x, "pbr::simulate");
  const Sizing s = reactor_sizing(x, p);
  const double X = cb_titer(x[1], x[0], p.growth);
  SimulationResult r;
  r.y = Vector(2);
  r.y << s.V, X;
  r.ledger = build_ledger(x, s.V, X, p);
  r.f = msp(r.ledger, p);
  return r;
}

std::vector<std::pair<std::string, double>> Ledger::items() const {
  return {{"V_m3", sizing.V},
          {"X_g_per_L", X},
          {"SA_m2", sizing.SA},
          {"SA_acres", acres},
          {"m_CB_t_per_yr", sizing.m_CB},
          {"m_PBR_t_per_yr", sizing.m_PBR},
          {"m_U_t_per_yr", nutrients.m_U},
          {"m_RW_t_per_yr", nutrients.m_RW},
          {"m_FW_t_per_yr", nutrients.m_FW},
          {"dryer_water_t_per_yr", nutrients.water_removed},
          {"biogas_t_per_yr", biogas},
          {"m_NG_t_per_yr", m_NG},
          {"power_kWh_per_yr", power},
          {"c_AD", c_AD},
          {"c_SLS", c_SLS},
          {"c_generator", c_generator},
          {"c_H2S_scrubber", c_h2s},
          {"c_CO2_scrubber", c_co2},
          {"c_PBR", c_pbr},
          {"c_flocculation", c_flocculation},
          {"c_lamella", c_lamella},
          {"c_filter", c_filter},
          {"c_dryer", c_dryer},
          {"c_IS", c_IS},
          {"c_OS", c_OS},
          {"c_ENG", c_ENG},
          {"c_CON", c_CON},
          {"TCI", C},
          {"labor", labor},
          {"FOC", FOC},
          {"voc_AD", v_AD},
          {"voc_SLS", v_SLS},
          {"voc_H2S_scrubber", v_h2s},
          {"voc_CO2_scrubber", v_co2},
          {"voc_PBR", v_pbr},
          {"voc_flocculation", v_flocculation},
          {"voc_lamella", v_lamella},
          {"voc_filter", v_filter},
          {"voc_dryer", v_dryer},
          {"VOC", VOC},
          {"TOC", O},
          {"depreciation", depreciation},
          {"other_revenue", other_revenue},
          {"annuity", annuity}};
}

CompositeProblem make_problem(const Params& p) {
  CompositeProblem prob;
  prob.id = "pbr";
  prob.design_box = design_box();
  prob.nodes = {IntermediateNode{"V", {0, 1, 2}, {}, 1e-6, 1e6, nullptr},
                IntermediateNode{"X", {0, 1, 2}, {}, 1e-6, 10.0, nullptr}};
  prob.g = [](const Vector&) { return 0.0; };
  prob.h = [p](const Vector& x, const Vector& y) { return msp(build_ledger(x, y[0], y[1], p), p); };
  prob.sampler = [p](const Vector& x) { return simulate(x, p).y; };
  prob.validate();
  return prob;
}

}  // namespace greybox::pbr
