#include "greybox/gp.hpp"

#include "greybox/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

namespace greybox {
namespace {

constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kSqrt5 = 2.2360679774997896;
const double kLog2Pi = std::log(2.0 * M_PI);

// Matern profile M(r) with unit amplitude.
double matern(Smoothness nu, double r) {
  if (nu == Smoothness::kMatern32) {
    const double a = kSqrt3 * r;
    return (1.0 + a) * std::exp(-a);
  }
  const double a = kSqrt5 * r;
  return (1.0 + a + a * a / 3.0) * std::exp(-a);
}

// dM/dlog(theta_k) = D(r) * (delta_k / theta_k)^2.
double matern_log_scale_factor(Smoothness nu, double r) {
  if (nu == Smoothness::kMatern32) return 3.0 * std::exp(-kSqrt3 * r);
  return (5.0 / 3.0) * (1.0 + kSqrt5 * r) * std::exp(-kSqrt5 * r);
}

// Rows of x divided by the length scales.
Matrix scaled_rows(const Matrix& x, const Vector& length_scales) {
  return x * length_scales.cwiseInverse().asDiagonal();
}

void check_dim(const KernelConfig& cfg, Eigen::Index d, const char* who) {
  if (cfg.length_scales.size() != d) {
    std::ostringstream os;
    os << who << ": dimension mismatch (kernel has " << cfg.length_scales.size()
       << " length scales, input has " << d << ")";
    throw InvalidArgument(os.str());
  }
}

Eigen::LLT<Matrix> factorize(const Matrix& gram, double noise) {
  Matrix k = gram;
  k.diagonal().array() += noise + kGramJitter;
  Eigen::LLT<Matrix> llt(k);
  if (llt.info() != Eigen::Success || !llt.matrixLLT().diagonal().allFinite() ||
      (llt.matrixLLT().diagonal().array() <= 0.0).any()) {
    throw FactorizationError("Cholesky factorization of K + noise*I failed (matrix not positive definite)");
  }
  return llt;
}

std::string describe(const KernelConfig& c) {
  std::ostringstream os;
  os << "theta=[" << c.length_scales.transpose() << "] scale=" << c.output_scale << " noise=" << c.noise;
  return os.str();
}

}  // namespace

void Dataset::validate() const {
  if (outputs.size() < 1) throw InvalidArgument("Dataset: at least one sample required");
  if (inputs.rows() != outputs.size()) {
    throw InvalidArgument("Dataset: input row count differs from output length");
  }
  if (!inputs.allFinite() || !outputs.allFinite()) throw InvalidArgument("Dataset: non-finite entry");
}

void Dataset::append(const Vector& x, double y) {
  if (inputs.size() != 0 && x.size() != inputs.cols()) {
    throw InvalidArgument("Dataset::append: dimension mismatch");
  }
  const Eigen::Index n = outputs.size();
  inputs.conservativeResize(n + 1, x.size());
  inputs.row(n) = x.transpose();
  outputs.conservativeResize(n + 1);
  outputs[n] = y;
}

void KernelConfig::validate() const {
  if (length_scales.size() == 0) throw InvalidArgument("KernelConfig: empty length scales");
  if (!length_scales.allFinite() || (length_scales.array() <= 0.0).any()) {
    throw InvalidArgument("KernelConfig: length scales must be finite and positive");
  }
  if (!(output_scale > 0.0) || !std::isfinite(output_scale)) {
    throw InvalidArgument("KernelConfig: output_scale must be positive");
  }
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw InvalidArgument("KernelConfig: noise must be >= 0");
}

void SearchSpace::validate() const {
  const auto ok = [](double lo, double hi) { return lo > 0.0 && lo <= hi && std::isfinite(hi); };
  if (!ok(length_scale_lo, length_scale_hi) || !ok(output_scale_lo, output_scale_hi) ||
      !ok(noise_lo, noise_hi)) {
    throw InvalidArgument("SearchSpace: bounds must be positive with lo <= hi");
  }
}

double kernel_eval(const KernelConfig& cfg, const Vector& a, const Vector& b) {
  check_dim(cfg, a.size(), "kernel_eval");
  check_dim(cfg, b.size(), "kernel_eval");
  require_finite(a, "kernel_eval");
  require_finite(b, "kernel_eval");
  const double r = (a - b).cwiseQuotient(cfg.length_scales).norm();
  return cfg.output_scale * matern(cfg.nu, r);
}

Matrix gram_matrix(const KernelConfig& cfg, const Matrix& x) {
  check_dim(cfg, x.cols(), "gram_matrix");
  const Matrix z = scaled_rows(x, cfg.length_scales);
  const Eigen::Index n = x.rows();
  Matrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = cfg.output_scale;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double r = (z.row(i) - z.row(j)).norm();
      k(i, j) = k(j, i) = cfg.output_scale * matern(cfg.nu, r);
    }
  }
  return k;
}

double log_marginal_likelihood(const Dataset& data, const KernelConfig& cfg) {
  return log_marginal_likelihood(data, cfg, nullptr);
}

double log_marginal_likelihood(const Dataset& data, const KernelConfig& cfg, Vector* grad_log) {
  data.validate();
  cfg.validate();
  check_dim(cfg, data.dim(), "log_marginal_likelihood");
  const Eigen::Index n = data.size();
  const Eigen::Index d = data.dim();

  const Matrix gram = gram_matrix(cfg, data.inputs);
  const Eigen::LLT<Matrix> llt = factorize(gram, cfg.noise);
  const Vector alpha = llt.solve(data.outputs);
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double lml = -0.5 * data.outputs.dot(alpha) - 0.5 * log_det - 0.5 * static_cast<double>(n) * kLog2Pi;

  if (grad_log != nullptr) {
    grad_log->setZero(d + 2);
    const Matrix w = alpha * alpha.transpose() - llt.solve(Matrix::Identity(n, n));
    const Matrix z = scaled_rows(data.inputs, cfg.length_scales);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < i; ++j) {
        const auto diff = (z.row(i) - z.row(j)).array();
        const double r = std::sqrt(diff.square().sum());
        const double coef = w(i, j) * cfg.output_scale * matern_log_scale_factor(cfg.nu, r);
        // Off-diagonal pairs appear twice in the trace; the 1/2 cancels.
        grad_log->head(d).array() += coef * diff.square().transpose();
      }
    }
    (*grad_log)[d] = 0.5 * (w.array() * gram.array()).sum();
    (*grad_log)[d + 1] = 0.5 * cfg.noise * w.trace();
  }
  return lml;
}

KernelConfig fit_hyperparameters(const Dataset& data, const SearchSpace& space, int restarts,
                                 std::uint64_t seed, Smoothness nu,
                                 const std::vector<KernelConfig>& candidates) {
  data.validate();
  space.validate();
  if (data.size() < 2) throw InvalidArgument("fit_hyperparameters: at least two samples required");
  if (restarts < 0) throw InvalidArgument("fit_hyperparameters: restarts must be >= 0");
  const Eigen::Index d = data.dim();
  const Eigen::Index p = d + 2;

  // Search box in log space; a degenerate range pins that parameter.
  BoxDomain box;
  box.lower.resize(p);
  box.upper.resize(p);
  box.lower.head(d).setConstant(std::log(space.length_scale_lo));
  box.upper.head(d).setConstant(std::log(space.length_scale_hi));
  box.lower[d] = std::log(space.output_scale_lo);
  box.upper[d] = std::log(space.output_scale_hi);
  box.lower[d + 1] = std::log(space.noise_lo);
  box.upper[d + 1] = std::log(space.noise_hi);

  const auto unpack = [&](const Vector& v) {
    KernelConfig c;
    c.nu = nu;
    c.length_scales = v.head(d).array().exp();
    c.output_scale = std::exp(v[d]);
    c.noise = std::exp(v[d + 1]);
    return c;
  };
  const auto pack = [&](const KernelConfig& c) {
    check_dim(c, d, "fit_hyperparameters");
    Vector v(p);
    v.head(d) = c.length_scales.array().log();
    v[d] = std::log(c.output_scale);
    v[d + 1] = std::log(std::max(c.noise, space.noise_lo));
    return box.project(v);
  };

  std::vector<Vector> starts;
  for (const KernelConfig& c : candidates) starts.push_back(pack(c));

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (restarts > 0) {
    // Latin hypercube: one stratum per restart in every coordinate.
    std::vector<std::vector<int>> strata(p);
    for (auto& s : strata) {
      s.resize(restarts);
      std::iota(s.begin(), s.end(), 0);
      std::shuffle(s.begin(), s.end(), rng);
    }
    for (int r = 0; r < restarts; ++r) {
      Vector v(p);
      for (Eigen::Index k = 0; k < p; ++k) {
        const double u = (strata[k][r] + unif(rng)) / restarts;
        v[k] = box.lower[k] + u * (box.upper[k] - box.lower[k]);
      }
      starts.push_back(v);
    }
  }
  if (starts.empty()) starts.push_back(0.5 * (box.lower + box.upper));

  const ObjectiveWithGradient neg_lml = [&](const Vector& v, Vector* grad) {
    try {
      Vector g;
      const double lml = log_marginal_likelihood(data, unpack(v), grad ? &g : nullptr);
      if (grad != nullptr) *grad = -g;
      return -lml;
    } catch (const FactorizationError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  DescentOptions opts;
  opts.max_iterations = 100;
  opts.gradient_tolerance = 1e-5;
  opts.stall_tolerance = 1e-10;

  double best = std::numeric_limits<double>::infinity();
  Vector best_v;
  for (const Vector& s : starts) {
    const LocalResult r = projected_gradient(neg_lml, s, box, opts);
    if (std::isfinite(r.value) && r.value < best) {
      best = r.value;
      best_v = r.x;
    }
  }
  if (!std::isfinite(best)) {
    std::ostringstream os;
    os << "fit_hyperparameters: no start produced a finite LML (" << starts.size()
       << " starts, n=" << data.size() << ", first start " << describe(unpack(starts.front())) << ")";
    throw NumericalError(os.str());
  }
  return unpack(best_v);
}

Scaling Scaling::identity(Eigen::Index dim) {
  Scaling s;
  s.input_offset = Vector::Zero(dim);
  s.input_span = Vector::Ones(dim);
  return s;
}

Scaling Scaling::standardize(const BoxDomain& box, const Vector& outputs) {
  Scaling s;
  s.input_offset = box.lower;
  s.input_span = box.width();
  if (outputs.size() > 0) {
    s.output_mean = outputs.mean();
    if (outputs.size() > 1) {
      const double var = (outputs.array() - s.output_mean).square().sum() / static_cast<double>(outputs.size() - 1);
      const double sd = std::sqrt(var);
      s.output_std = (sd > 1e-12 * std::max(1.0, std::abs(s.output_mean))) ? sd : 1.0;
    }
  }
  return s;
}

Vector Scaling::scale_input(const Vector& x) const {
  return (x - input_offset).cwiseQuotient(input_span);
}

Dataset Scaling::apply(const Dataset& raw) const {
  Dataset out;
  out.inputs = (raw.inputs.rowwise() - input_offset.transpose()).array().rowwise() /
               input_span.transpose().array();
  out.outputs = (raw.outputs.array() - output_mean) / output_std;
  return out;
}

GpModel::GpModel(Dataset raw, KernelConfig cfg, Scaling scaling)
    : raw_(std::move(raw)), cfg_(std::move(cfg)), scaling_(std::move(scaling)) {
  raw_.validate();
  cfg_.validate();
  check_dim(cfg_, raw_.dim(), "GpModel");
  if (scaling_.input_offset.size() != raw_.dim() || scaling_.input_span.size() != raw_.dim()) {
    throw InvalidArgument("GpModel: scaling dimension mismatch");
  }
  scaled_ = scaling_.apply(raw_);
  llt_ = factorize(gram_matrix(cfg_, scaled_.inputs), cfg_.noise);
  weights_ = llt_.solve(scaled_.outputs);
  // Store rows pre-divided by the length scales for fast queries.
  scaled_.inputs = scaled_rows(scaled_.inputs, cfg_.length_scales);
}

Prediction GpModel::posterior(const Vector& query) const {
  if (query.size() != raw_.dim()) throw InvalidArgument("GpModel::posterior: dimension mismatch");
  const Vector zq = scaling_.scale_input(query).cwiseQuotient(cfg_.length_scales);
  const Eigen::Index n = raw_.size();
  Vector k(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = (scaled_.inputs.row(i).transpose() - zq).norm();
    k[i] = cfg_.output_scale * matern(cfg_.nu, r);
  }
  const double mean_s = k.dot(weights_);
  const Vector v = llt_.matrixL().solve(k);
  const double var_s = std::max(0.0, cfg_.output_scale - v.squaredNorm());
  return {scaling_.output_mean + scaling_.output_std * mean_s,
          var_s * scaling_.output_std * scaling_.output_std};
}

GpModel train_gp(const Dataset& data, const GpTrainOptions& opts) {
  data.validate();
  BoxDomain box;
  if (opts.input_box) {
    if (opts.input_box->dim() != data.dim()) throw InvalidArgument("train_gp: input box dimension mismatch");
    box = *opts.input_box;
  } else {
    box.lower = data.inputs.colwise().minCoeff().transpose();
    box.upper = data.inputs.colwise().maxCoeff().transpose();
    for (Eigen::Index i = 0; i < box.dim(); ++i) {
      if (box.upper[i] - box.lower[i] <= 1e-12 * std::max(1.0, std::abs(box.lower[i]))) {
        box.upper[i] = box.lower[i] + std::max(1.0, std::abs(box.lower[i]));
      }
    }
  }
  const Scaling scaling = Scaling::standardize(box, data.outputs);
  if (data.size() < 2) {
    KernelConfig c = opts.warm_start.value_or(KernelConfig{});
    c.nu = opts.nu;
    if (c.length_scales.size() != data.dim()) c.length_scales = Vector::Ones(data.dim());
    c.noise = std::max(c.noise, opts.space.noise_lo);
    return GpModel(data, c, scaling);
  }
  std::vector<KernelConfig> candidates;
  if (opts.warm_start && opts.warm_start->length_scales.size() == data.dim()) {
    candidates.push_back(*opts.warm_start);
  }
  const KernelConfig cfg =
      fit_hyperparameters(scaling.apply(data), opts.space, opts.restarts, opts.seed, opts.nu, candidates);
  return GpModel(data, cfg, scaling);
}

}  // namespace greybox
