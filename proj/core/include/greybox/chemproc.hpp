#pragma once

#include "greybox/composite.hpp"
#include "greybox/types.hpp"

#include <array>
#include <string>

// Ammonia-like process: feeds A and B are compressed and heated, react in an
// equilibrium reactor (A/2 + 3B/2 <-> C), and the effluent is flashed; the
// vapor is partly purged and partly recycled. Flows are kmol/hr, duties
// MJ/hr, compressor loads kW, temperatures K, pressures bar.
namespace greybox::chemproc {

enum Species { kA = 0, kB = 1, kC = 2 };
using Flows = std::array<double, 3>;

/// Heat-capacity coefficients: cp/R = alpha + beta T + gamma T^2 + zeta T^-2.
struct Coeffs {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double zeta = 0.0;
};

struct ThermoParams {
  double R = 8.314;             // J/mol K
  double T0 = 298.0;            // K
  double P0 = 1.0;              // bar
  double dH0_rxn = 39200.0;     // J/mol
  double dG0_rxn = 32900.0;     // J/mol
  Flows nu = {-0.5, -1.5, 1.0};
  std::array<Coeffs, 3> species = {Coeffs{3.280, 0.593e-3, 0.0, 0.040e5},
                                   Coeffs{3.249, 0.422e-3, 0.0, 0.083e5},
                                   Coeffs{5.578, 3.020e-3, 0.0, -0.186e5}};

  /// Coefficients weighted by stoichiometry.
  [[nodiscard]] Coeffs reaction() const;
  /// Coefficients weighted by the mole fractions of `n` (all zero if empty).
  [[nodiscard]] Coeffs mixture(const Flows& n) const;
  [[nodiscard]] double nu_total() const { return nu[0] + nu[1] + nu[2]; }
};

struct EconParams {
  double F_A = 1000.0;
  double F_B = 3000.0;
  double F_bar = 1900.0;
  double w_A0 = 6.00;
  double w_B0 = 1.40;
  Flows w_product = {0.0, 0.0, 8.50};
  double w_heat = 1.92e-2;  // USD/MJ
  double w_cool = 5.00e-3;  // USD/MJ
  double w_e = 1.42e-1;     // USD/kWh
  double w3 = 1000.0;       // demand penalty weight, USD/hr
};

/// Substituted unit models and declared operating constants.
struct PlantParams {
  double feed_temperature = 298.0;
  double feed_pressure = 10.0;
  // log10 Psat[mmHg] = a - b / (T - c) for C.
  double antoine_a = 7.36050;
  double antoine_b = 926.132;
  double antoine_c = 32.98;
  double k_A = 50.0;          // fixed vapor/liquid ratio of A
  double latent_C = 23.35;    // MJ/kmol
  double damping = 0.5;
  double tear_tolerance = 1e-6;
  int max_passes = 200;
};

struct Params {
  ThermoParams thermo;
  EconParams econ;
  PlantParams plant;
};

/// Design box for (T_RX, P_RX, T_S, P_S, R).
BoxDomain design_box();

double icph(double T, const Coeffs& c, double T0 = 298.0);
double icps(double T, const Coeffs& c, double T0 = 298.0);

/// F R (ICPH(T_out) - ICPH(T_in)) in MJ/hr for a stream of mole fractions
/// `composition`; positive when heating.
double heater_duty(double F, double T_in, double T_out, const Flows& composition,
                   const ThermoParams& p = {});

struct CompressorResult {
  double T_out = 0.0;
  double W = 0.0;  // kW
};

/// Ideal-gas isentropic compression with a two-pass mean heat capacity.
CompressorResult compressor(double F, double T_in, double P_in, double P_out, const Flows& composition,
                            const ThermoParams& p = {});

/// ln K = -dG(T) / (R T).
double log_equilibrium_constant(double T, const ThermoParams& p = {});

/// Extent of reaction at chemical equilibrium for inlet flows `feed`.
double equilibrium_extent(double T, double P, const Flows& feed, const ThermoParams& p = {});

/// r_C (dH0 + R ICPH_rxn(T)) in MJ/hr.
double reactor_duty(double r_C, double T, const ThermoParams& p = {});

double saturation_pressure_C(double T, const PlantParams& p = {});  // bar

struct FlashResult {
  Flows liquid{};
  Flows vapor{};
  double vapor_fraction = 1.0;
  double duty = 0.0;  // MJ/hr, <= 0 for cooling
  bool single_phase = false;
};

/// Isothermal flash of `feed` (entering at T_in) at (T_S, P_S).
FlashResult flash(const Flows& feed, double T_in, double T_S, double P_S, const Params& p = {});

struct Stream {
  Flows n{};
  double T = 0.0;
  double P = 0.0;
  [[nodiscard]] double total() const { return n[0] + n[1] + n[2]; }
};

struct ProcessState {
  Stream feed_A, feed_B;      // after compression and heating
  Stream reactor_in, reactor_out;
  Stream product, vapor, purge, recycle;
  double extent = 0.0;
  std::array<double, 5> Q{};  // MJ/hr: A heater, B heater, recycle heater, reactor, separator
  std::array<double, 3> W{};  // kW: A, B, recycle compressors
  int tear_passes = 0;
  double tear_residual = 0.0;
};

struct SimulationResult {
  Vector y;  // eta_A, eta_B, eta_C, Q4, -Q5
  double f = 0.0;
  ProcessState state;
};

/// Converges the recycle loop and evaluates intermediates and cost.
SimulationResult simulate(const Vector& x, const Params& p = {});

struct StreamTable {
  Flows generation{};
  Flows product{};
  Flows purge{};
  Flows recycle{};
};

StreamTable reconstruct_streams(double eta_A, double eta_B, double eta_C, double F_A, double F_B,
                                double R, const ThermoParams& p = {});

/// y-independent cost: reagents, feed compressors and feed heaters.
double cost_g(const Vector& x, const Params& p = {});
/// y-dependent cost: product value, demand penalty, recycle compressor and
/// heater, reactor and separator utilities.
double cost_h(const Vector& x, const Vector& y, const Params& p = {});

/// Composite problem with the nested intermediate DAG and simulate() as the
/// sampler.
CompositeProblem make_problem(const Params& p = {});

}  // namespace greybox::chemproc
