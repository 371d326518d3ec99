#pragma once

#include "greybox/types.hpp"

#include <Eigen/Cholesky>

#include <cstdint>
#include <optional>
#include <vector>

namespace greybox {

/// Sample archive: one row of `inputs` per observation.
struct Dataset {
  Matrix inputs;
  Vector outputs;

  [[nodiscard]] Eigen::Index size() const { return outputs.size(); }
  [[nodiscard]] Eigen::Index dim() const { return inputs.cols(); }
  void validate() const;
  void append(const Vector& x, double y);
};

enum class Smoothness { kMatern32, kMatern52 };

struct KernelConfig {
  Smoothness nu = Smoothness::kMatern52;
  Vector length_scales;     // diagonal of Theta, one per input dimension
  double output_scale = 1;  // signal variance multiplier
  double noise = 0;         // variance added to the Gram diagonal

  void validate() const;
};

/// Matern kernel value output_scale * M_nu(sqrt(2 nu) * d(a, b)) with the
/// anisotropic distance d = sqrt((a-b)^T Theta^-2 (a-b)).
double kernel_eval(const KernelConfig& cfg, const Vector& a, const Vector& b);

/// Gram matrix of `cfg` over the rows of `x` (no noise, no jitter).
Matrix gram_matrix(const KernelConfig& cfg, const Matrix& x);

/// Diagonal jitter added before every factorization.
inline constexpr double kGramJitter = 1e-10;

/// -1/2 f^T (K + noise I)^-1 f - 1/2 log|K + noise I| - n/2 log(2 pi).
/// Throws FactorizationError when K + noise I (+ jitter) is not positive
/// definite.
double log_marginal_likelihood(const Dataset& data, const KernelConfig& cfg);

/// LML and its gradient with respect to the log-parameters
/// [log length_scales..., log output_scale, log noise]. The noise entry is
/// zero when cfg.noise == 0.
double log_marginal_likelihood(const Dataset& data, const KernelConfig& cfg, Vector* grad_log);

/// Bounds for hyperparameter search; all strictly positive.
struct SearchSpace {
  double length_scale_lo = 1e-2;
  double length_scale_hi = 2e1;
  double output_scale_lo = 1e-2;
  double output_scale_hi = 1e2;
  double noise_lo = 1e-6;
  double noise_hi = 1e-1;

  void validate() const;
};

/// Maximizes the LML by multi-start projected gradient ascent in log-space.
/// Starts are `restarts` Latin-hypercube points plus every entry of
/// `candidates` (projected into the search box). The result's LML is at
/// least the LML of every start. Deterministic for a fixed seed.
KernelConfig fit_hyperparameters(const Dataset& data, const SearchSpace& space, int restarts,
                                 std::uint64_t seed, Smoothness nu = Smoothness::kMatern52,
                                 const std::vector<KernelConfig>& candidates = {});

/// Affine input/output maps applied inside a GpModel. The identity scaling
/// leaves data untouched.
struct Scaling {
  Vector input_offset;  // empty = identity
  Vector input_span;
  double output_mean = 0.0;
  double output_std = 1.0;

  static Scaling identity(Eigen::Index dim);
  /// Inputs mapped from `box` to the unit box, outputs standardized over
  /// `outputs` (a zero spread falls back to 1).
  static Scaling standardize(const BoxDomain& box, const Vector& outputs);

  [[nodiscard]] Vector scale_input(const Vector& x) const;
  [[nodiscard]] Dataset apply(const Dataset& raw) const;
};

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// Trained single-output GP. Immutable after construction; concurrent
/// reads are safe.
class GpModel {
 public:
  /// Conditions on `raw` with hyperparameters `cfg` expressed in the scaled
  /// space defined by `scaling`.
  GpModel(Dataset raw, KernelConfig cfg, Scaling scaling);

  /// Posterior mean and (clamped, non-negative) variance in raw units.
  [[nodiscard]] Prediction posterior(const Vector& query) const;

  [[nodiscard]] const Dataset& dataset() const { return raw_; }
  [[nodiscard]] const KernelConfig& kernel() const { return cfg_; }
  [[nodiscard]] const Scaling& scaling() const { return scaling_; }
  [[nodiscard]] Matrix chol_factor() const { return llt_.matrixL(); }
  [[nodiscard]] const Vector& weights() const { return weights_; }
  [[nodiscard]] Eigen::Index input_dim() const { return raw_.dim(); }

 private:
  Dataset raw_;
  Dataset scaled_;
  KernelConfig cfg_;
  Scaling scaling_;
  Eigen::LLT<Matrix> llt_;
  Vector weights_;
};

struct GpTrainOptions {
  Smoothness nu = Smoothness::kMatern52;
  SearchSpace space;
  int restarts = 3;
  std::uint64_t seed = 0;
  std::optional<KernelConfig> warm_start;
  /// Input normalization box; when absent the per-column data range is used.
  std::optional<BoxDomain> input_box;
};

/// Normalizes, fits hyperparameters, and conditions a GpModel.
GpModel train_gp(const Dataset& data, const GpTrainOptions& opts);

}  // namespace greybox
