#pragma once

#include "greybox/composite.hpp"
#include "greybox/types.hpp"

#include <string>
#include <utility>
#include <vector>

// Cyanobacteria biofertilizer plant fed by dairy manure: anaerobic digestion
// with biogas cleanup and power generation, bag photobioreactors, and a
// flocculation / clarifier / filter / dryer harvesting train. Mass flows are
// tonnes/yr and money is USD unless a name says otherwise.
namespace greybox::pbr {

inline constexpr double kSecondsPerDay = 86400.0;
inline constexpr double kDaysPerYear = 365.0;
inline constexpr double kHoursPerYear = 8760.0;
inline constexpr double kSquareMetersPerAcre = 4046.8564224;
inline constexpr double kPoundsPerTonne = 2204.62262185;
inline constexpr double kCubicFeetPerCubicMeter = 35.3146667215;

struct GrowthParams {
  double Y_Xnu = 2.02e-9;    // kg/umol
  double m_nu = 255.0;       // umol/(kg s)
  double eta = 0.24;
  double X0 = 0.03;          // g/L
  double I0 = 350.0;         // umol/(m^2 s)
  double titer_scale = 0.32; // applied to the steady-state titer only
};

struct ProcessParams {
  double m_M = 20830.0;  // manure
  double m_P = 9.64;     // P in SLS extrudate
  double m_N = 10.60;    // N in SLS extrudate
  double m_W = 18030.0;  // water in SLS extrudate
  double SV0 = 15.4;     // 1/m
  double sigma = 70.0;   // kg/m^2
  double t_b0 = 30.0;    // days
  double rho_P0 = 0.023;
  double rho_N = 0.05;
  double x_UN = 0.467;
  double rho_W = 1000.0;  // kg/m^3
  double rho_NG = 0.72;   // kg/m^3
  double purge_fraction = 0.1;
};

struct YieldParams {
  double ch4 = 3.09e-2;  // kg/kg manure
  double co2 = 1.66e-2;
  double h2s = 1.14e-4;
  double electricity = 4.33;     // kWh/kg CH4
  double clarifier_solids = 16.0;  // kg/m^3 (1.60e-2 kg/L)
  double filter_solids = 270.0;    // kg/m^3
};

/// c = c_ref (size_ratio * S / S_base)^phi * PI / PI_ref, where S_base is
/// the unit size at the base design.
struct ScaledUnit {
  double c_ref = 0.0;  // USD
  double PI_ref = 1.0;
  double size_ratio = 1.0;
  double phi = 0.6;
};

struct CapitalParams {
  double PI_AD = 539.1;
  double PI_SLS = 556.7;
  double PI_generator = 539.1;
  ScaledUnit h2s_scrubber{348.0, 521.9, 2.59e1, 0.6};
  ScaledUnit co2_scrubber{13.1e6, 444.2, 4.37e-4, 0.8};
  ScaledUnit pbr{279.0, 556.8, 1.08e5, 0.6};
  ScaledUnit flocculation{0.115e6, 585.7, 1.57e-3, 0.6};
  ScaledUnit lamella{2.50e6, 585.7, 1.57e-3, 0.6};
  ScaledUnit filter{0.137e6, 381.8, 2.39e-1, 0.6};
  // The dryer's tabulated size is a reference capacity (kg/hr of water
  // removed), not a ratio.
  double dryer_cost = 0.706e6;
  double dryer_PI = 539.1;
  double dryer_capacity = 2.20e3;
  double dryer_phi = 0.6;
};

struct OperatingParams {
  double ad_fraction = 0.096;           // of c_AD, per yr
  double sls_per_capacity = 0.488;      // USD/yr per lb/hr
  double sls_fraction = 0.1;            // of c_SLS, per yr
  double h2s_per_biogas = 66.7;         // USD/t biogas
  double co2_per_co2 = 40.0;            // USD/t CO2
  double pbr_per_acre = 12100.0;        // USD/acre/yr
  double flocculation_per_cb = 100.0;   // USD/t CB
  double lamella_per_cb = 0.43;
  double filter_per_cb = 2.06;
  double dryer_per_water = 19.3;        // USD/t water removed
  double maintenance = 0.05;            // fractions of c_IS
  double operations = 0.025;
  double overhead = 0.05;
  double labor_ref = 2.5e6;             // USD/yr at labor_area_ref
  double labor_area_ref = 5000.0;       // acres
  double labor_penalty = 0.05e6;        // USD/yr per day below t_b0
};

struct FinanceParams {
  double PI = 596.2;
  int lifetime = 10;  // years
  double tax = 0.21;
  double droi = 0.15;
  double p_EL = 0.11;   // USD/kWh
  double p_NG = 5.84;   // USD/1000 SCF
  double x_CH4 = 1.0;   // fraction of CH4 burned for power
};

struct Params {
  GrowthParams growth;
  ProcessParams process;
  YieldParams yields;
  CapitalParams capital;
  OperatingParams operating;
  FinanceParams finance;
};

/// (S/V [1/m], t_b [days], rho_P [g P/g CB]).
BoxDomain design_box();

double steady_titer(double SV, const GrowthParams& p = {});  // g/L
double growth_rate(const GrowthParams& p = {});              // 1/day
double cb_titer(double t_b, double SV, const GrowthParams& p = {});

struct Sizing {
  double V = 0.0;      // m^3
  double SA = 0.0;     // m^2
  double m_CB = 0.0;   // t/yr
  double m_PBR = 0.0;  // t/yr
};

/// Sizing from the design alone (true growth model).
Sizing reactor_sizing(const Vector& x, const Params& p = {});
/// Sizing from the reactor intermediates V and X.
Sizing sizing_from_intermediates(double t_b, double V, double X, const Params& p = {});

struct Nutrients {
  double m_U = 0.0;   // urea
  double m_RW = 0.0;  // recycled water
  double m_FW = 0.0;  // fresh makeup water
  double water_removed = 0.0;  // in the dryer
};

Nutrients nutrient_demands(const Sizing& s, double X, const Params& p = {});

double lambda_sv(double SV, double SV0);
double lambda_lb(double t_b, double t_b0);  // MMUSD/yr
double annuity_factor(double rate, int years);
double scaled_cost(const ScaledUnit& u, double size, double base_size, double PI);

struct Ledger {
  Sizing sizing;
  Nutrients nutrients;
  double X = 0.0;
  double acres = 0.0;
  double sls_capacity = 0.0;  // lb/hr of digestate
  double biogas = 0.0;        // t/yr
  double m_CH4 = 0.0;
  double m_CO2 = 0.0;
  double m_NG = 0.0;          // t/yr exported
  double power = 0.0;         // kWh/yr

  // Installed costs.
  double c_AD = 0.0, c_SLS = 0.0, c_generator = 0.0, c_h2s = 0.0, c_co2 = 0.0;
  double c_pbr = 0.0, c_flocculation = 0.0, c_lamella = 0.0, c_filter = 0.0, c_dryer = 0.0;
  double c_IS = 0.0, c_OS = 0.0, c_ENG = 0.0, c_CON = 0.0, C = 0.0;

  // Annual operating costs.
  double labor = 0.0;
  double FOC = 0.0;
  double v_AD = 0.0, v_SLS = 0.0, v_h2s = 0.0, v_co2 = 0.0, v_pbr = 0.0;
  double v_flocculation = 0.0, v_lamella = 0.0, v_filter = 0.0, v_dryer = 0.0;
  double VOC = 0.0;
  double O = 0.0;

  double depreciation = 0.0;
  double other_revenue = 0.0;  // electricity and natural gas
  double annuity = 0.0;

  /// Flat (name, value) view for reporting.
  [[nodiscard]] std::vector<std::pair<std::string, double>> items() const;
};

/// Full cost ledger at design x with reactor volume V and titer X.
Ledger build_ledger(const Vector& x, double V, double X, const Params& p = {});

/// Annual after-tax profit and NPV at CB price p_CB (USD/kg).
double profit(double p_CB, const Ledger& l, const Params& p = {});
double npv(double p_CB, const Ledger& l, const Params& p = {});

/// CB price that zeroes the NPV. Throws InvalidArgument when m_CB == 0.
double msp(const Ledger& l, const Params& p = {});
double msp(const Vector& x, const Params& p = {});

struct SimulationResult {
  Vector y;  // V, X
  double f = 0.0;
  Ledger ledger;
};

SimulationResult simulate(const Vector& x, const Params& p = {});

/// g = 0; h(x, [V, X]) = MSP; simulate() is the sampler.
CompositeProblem make_problem(const Params& p = {});

}  // namespace greybox::pbr
