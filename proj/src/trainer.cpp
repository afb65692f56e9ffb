#include "shift_audit/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "shift_audit/errors.hpp"
#include "shift_audit/rng.hpp"

namespace shift_audit {

namespace {

// Forward-mode dual number: one directional derivative per sweep.
struct Dual {
  double v = 0.0;
  double d = 0.0;

  Dual() = default;
  Dual(double value) : v(value) {}
  Dual(double value, double deriv) : v(value), d(deriv) {}
};

inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual operator/(Dual a, Dual b) { return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)}; }
inline Dual operator-(Dual a) { return {-a.v, -a.d}; }
inline Dual exp(Dual a) {
  const double e = std::exp(a.v);
  return {e, a.d * e};
}
inline Dual log1p_exp(Dual a) {
  // softplus log(1 + e^a), stable for large |a|
  if (a.v > 30.0) return a;
  const double e = std::exp(a.v);
  return {std::log1p(e), a.d * e / (1.0 + e)};
}
inline Dual relu(Dual a) { return a.v > 0.0 ? a : Dual{0.0, 0.0}; }

inline double value_of(double x) { return x; }
inline double value_of(Dual x) { return x.v; }
inline double d_exp(double a) { return std::exp(a); }
inline double d_log1p_exp(double a) { return a > 30.0 ? a : std::log1p(std::exp(a)); }
inline double d_relu(double a) { return a > 0.0 ? a : 0.0; }
inline Dual d_exp(Dual a) { return exp(a); }
inline Dual d_log1p_exp(Dual a) { return log1p_exp(a); }
inline Dual d_relu(Dual a) { return relu(a); }

// Parameter vector layout: W (k x d row-major), then v (k), then b.
std::size_t param_count(std::size_t k, std::size_t d) { return k * d + k + 1; }

template <typename T>
struct Objective {
  const SampleSet& source;
  const SampleSet& target;
  const TrainConfig& config;

  // Projections z = W x for every point of one set.
  std::vector<T> project(const SampleSet& s, std::span<const T> params) const {
    const std::size_t k = config.representation_dim;
    const std::size_t d = s.dim;
    std::vector<T> z(s.size() * k);
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto x = s.point(i);
      for (std::size_t r = 0; r < k; ++r) {
        T acc = 0.0;
        for (std::size_t c = 0; c < d; ++c) acc = acc + params[r * d + c] * x[c];
        z[i * k + r] = acc;
      }
    }
    return z;
  }

  T logistic_risk(std::span<const T> z_source, std::span<const T> params) const {
    const std::size_t k = config.representation_dim;
    const std::size_t d = source.dim;
    const std::size_t n = source.size();
    const auto v = params.subspan(k * d, k);
    const T b = params[k * d + k];
    T acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      T score = b;
      for (std::size_t r = 0; r < k; ++r) score = score + v[r] * z_source[i * k + r];
      const double y_signed = (*source.labels)[i] == 1 ? 1.0 : -1.0;
      acc = acc + d_log1p_exp(-y_signed * score);
    }
    return acc / T(static_cast<double>(n));
  }

  T gaussian_kernel(std::span<const T> za, std::size_t i, std::span<const T> zb, std::size_t j,
                    double sigma) const {
    const std::size_t k = config.representation_dim;
    T d2 = 0.0;
    for (std::size_t r = 0; r < k; ++r) {
      const T diff = za[i * k + r] - zb[j * k + r];
      d2 = d2 + diff * diff;
    }
    return d_exp(-d2 / (2.0 * sigma * sigma));
  }

  T mmd_penalty(std::span<const T> z_s, std::span<const T> z_t) const {
    const std::size_t n = source.size();
    const std::size_t m = target.size();
    const double sigma = config.kernel.sigma;
    T aa = 0.0, ab = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) aa = aa + gaussian_kernel(z_s, i, z_s, j, sigma);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) ab = ab + gaussian_kernel(z_s, i, z_t, j, sigma);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) bb = bb + gaussian_kernel(z_t, i, z_t, j, sigma);
    const double nn = static_cast<double>(n) * static_cast<double>(n);
    const double nm = static_cast<double>(n) * static_cast<double>(m);
    const double mm = static_cast<double>(m) * static_cast<double>(m);
    return aa / T(nn) - T(2.0) * ab / T(nm) + bb / T(mm);
  }

  // KDE value of one point against a support set, Gaussian product kernel.
  T kde_at(std::span<const T> z, std::size_t i, std::span<const T> support, std::size_t count,
           double h) const {
    const std::size_t k = config.representation_dim;
    T acc = 0.0;
    for (std::size_t j = 0; j < count; ++j) {
      T e = 0.0;
      for (std::size_t r = 0; r < k; ++r) {
        const T diff = (z[i * k + r] - support[j * k + r]) / T(h);
        e = e + diff * diff;
      }
      acc = acc + d_exp(T(-0.5) * e);
    }
    const double norm = static_cast<double>(count) * std::pow(h * std::sqrt(2.0 * 3.14159265358979323846),
                                                              static_cast<double>(k));
    return acc / T(norm);
  }

  T hinge_penalty(std::span<const T> z_s, std::span<const T> z_t) const {
    if (!(config.eps > 0.0)) throw std::invalid_argument("trainer: hinge penalty needs eps > 0");
    const std::size_t n = source.size();
    const std::size_t m = target.size();
    const double h = config.kde_bandwidth;
    T target_side = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const T p = kde_at(z_t, j, z_s, n, h);
      const T q = kde_at(z_t, j, z_t, m, h);
      target_side = target_side + d_relu(T(2.0) - p / T(config.eps)) * d_relu(T(2.0) - p / q);
    }
    T source_side = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const T p = kde_at(z_s, i, z_s, n, h);
      const T q = kde_at(z_s, i, z_t, m, h);
      source_side = source_side + d_relu(T(1.0) - p / T(config.eps)) * d_relu(T(1.0) - p / q);
    }
    return target_side / T(static_cast<double>(m)) - source_side / T(static_cast<double>(n));
  }

  T evaluate(std::span<const T> params, T* risk_out, T* penalty_out) const {
    const auto z_s = project(source, params);
    const auto z_t = project(target, params);
    const T risk = logistic_risk(z_s, params);
    const T penalty =
        config.penalty == PenaltyKind::mmd ? mmd_penalty(z_s, z_t) : hinge_penalty(z_s, z_t);
    if (risk_out) *risk_out = risk;
    if (penalty_out) *penalty_out = penalty;
    const double scale = 2.0 * (1.0 - std::abs(config.alpha - 0.5));
    return T(scale) * (T(1.0 - config.alpha) * risk + T(config.alpha) * penalty);
  }
};

void validate_config(const TrainConfig& config) {
  if (!(config.alpha >= 0.0 && config.alpha <= 1.0)) throw std::invalid_argument("trainer: alpha must be in [0, 1]");
  if (!(config.learning_rate > 0.0)) throw std::invalid_argument("trainer: learning rate must be > 0");
  if (config.representation_dim == 0) throw std::invalid_argument("trainer: representation_dim must be >= 1");
  if (!(config.kernel.sigma > 0.0)) throw std::invalid_argument("trainer: kernel sigma must be > 0");
  if (!(config.kde_bandwidth > 0.0)) throw std::invalid_argument("trainer: kde bandwidth must be > 0");
}

void validate_samples(const SampleSet& source, const SampleSet& target, bool need_labels) {
  source.validate();
  target.validate();
  if (source.dim != target.dim) throw dimension_error("trainer: sample dimension mismatch");
  if (source.size() < 2 || target.size() < 2) throw std::invalid_argument("trainer: need at least 2 samples per domain");
  if (need_labels && !source.labels.has_value())
    throw std::invalid_argument("trainer: source labels required");
}

double objective_at(const Objective<double>& objective, std::span<const double> params,
                    double* risk = nullptr, double* penalty = nullptr) {
  return objective.evaluate(params, risk, penalty);
}

std::vector<double> gradient_at(const Objective<Dual>& objective, std::span<const double> params) {
  std::vector<Dual> dual_params(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) dual_params[i] = Dual(params[i], 0.0);
  std::vector<double> grad(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    dual_params[i].d = 1.0;
    const Dual out = objective.evaluate(dual_params, nullptr, nullptr);
    grad[i] = out.d;
    dual_params[i].d = 0.0;
    if (!std::isfinite(grad[i])) throw numeric_error("trainer: non-finite gradient (learning rate too large?)");
  }
  return grad;
}

std::vector<double> params_of(const TrainedModel& model) {
  std::vector<double> params = model.representation.matrix;
  params.insert(params.end(), model.predictor.weights.begin(), model.predictor.weights.end());
  params.push_back(model.predictor.bias);
  return params;
}

TrainedModel model_from_params(std::span<const double> params, std::size_t k, std::size_t d) {
  std::vector<double> w(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(k * d));
  std::vector<double> v(params.begin() + static_cast<std::ptrdiff_t>(k * d),
                        params.begin() + static_cast<std::ptrdiff_t>(k * d + k));
  TrainedModel model{Representation::linear_projection(d, k, std::move(w)),
                     Predictor::logistic(std::move(v), params[k * d + k]),
                     {}};
  return model;
}

}  // namespace

ObjectiveParts objective_value(const TrainedModel& model, const SampleSet& source, const SampleSet& target,
                               const TrainConfig& config) {
  validate_config(config);
  validate_samples(source, target, true);
  if (model.representation.output_dim() != config.representation_dim)
    throw dimension_error("objective_value: model representation does not match config");
  const Objective<double> objective{source, target, config};
  ObjectiveParts parts;
  parts.total = objective.evaluate(params_of(model), &parts.risk_term, &parts.penalty_term);
  return parts;
}

TrainedModel train(const SampleSet& source, const SampleSet& target, const TrainConfig& config) {
  validate_config(config);
  validate_samples(source, target, true);
  const std::size_t k = config.representation_dim;
  const std::size_t d = source.dim;

  Rng rng(config.seed);
  std::vector<double> params(param_count(k, d));
  for (double& p : params) p = config.init_scale * rng.normal();

  const Objective<double> value_objective{source, target, config};
  const Objective<Dual> grad_objective{source, target, config};

  TrainedModel model = model_from_params(params, k, d);
  double risk = 0.0, penalty = 0.0;
  double current = objective_at(value_objective, params, &risk, &penalty);
  model.objective_trace.push_back({risk, penalty, current});

  for (std::size_t iter = 0; iter < config.max_iters; ++iter) {
    const auto grad = gradient_at(grad_objective, params);
    double step = config.learning_rate;
    std::vector<double> trial(params.size());
    double trial_value = current;
    bool accepted = false;
    while (step >= 1e-8) {
      for (std::size_t i = 0; i < params.size(); ++i) trial[i] = params[i] - step * grad[i];
      trial_value = objective_at(value_objective, trial, &risk, &penalty);
      if (std::isfinite(trial_value) && trial_value <= current) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    params.swap(trial);
    const double change = current - trial_value;
    current = trial_value;
    model.objective_trace.push_back({risk, penalty, current});
    if (change < config.tolerance) break;
  }

  auto trace = std::move(model.objective_trace);
  model = model_from_params(params, k, d);
  model.objective_trace = std::move(trace);
  return model;
}

TrainedModel tune_predictor_on_target(const TrainedModel& model, const SampleSet& labeled_target,
                                      const TrainConfig& config) {
  validate_config(config);
  labeled_target.validate();
  if (!labeled_target.labels.has_value())
    throw std::invalid_argument("tune_predictor_on_target: target labels required");

  // Freeze the representation and refit (v, b) by plain logistic descent on
  // the projected target sample.
  const SampleSet z = transform(labeled_target, model.representation);
  const std::size_t k = model.representation.output_dim();
  std::vector<double> v = model.predictor.weights;
  double b = model.predictor.bias;

  auto risk_and_grad = [&](std::vector<double>& grad_v, double& grad_b) {
    std::fill(grad_v.begin(), grad_v.end(), 0.0);
    grad_b = 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const auto zi = z.point(i);
      double score = b;
      for (std::size_t r = 0; r < k; ++r) score += v[r] * zi[r];
      const double y = (*z.labels)[i];
      const double sig = 1.0 / (1.0 + std::exp(-score));
      acc += y == 1.0 ? d_log1p_exp(-score) : d_log1p_exp(score);
      const double g = sig - y;
      for (std::size_t r = 0; r < k; ++r) grad_v[r] += g * zi[r];
      grad_b += g;
    }
    const double n = static_cast<double>(z.size());
    for (double& g : grad_v) g /= n;
    grad_b /= n;
    return acc / n;
  };

  std::vector<double> grad_v(k);
  double grad_b = 0.0;
  double current = risk_and_grad(grad_v, grad_b);
  TrainedModel tuned = model;
  tuned.objective_trace.clear();
  tuned.objective_trace.push_back({current, 0.0, current});

  for (std::size_t iter = 0; iter < config.max_iters; ++iter) {
    std::vector<double> v_old = v;
    const double b_old = b;
    double step = config.learning_rate;
    bool accepted = false;
    while (step >= 1e-8) {
      for (std::size_t r = 0; r < k; ++r) v[r] = v_old[r] - step * grad_v[r];
      b = b_old - step * grad_b;
      std::vector<double> probe_v(k);
      double probe_b = 0.0;
      const double trial = risk_and_grad(probe_v, probe_b);
      if (std::isfinite(trial) && trial <= current) {
        const double change = current - trial;
        current = trial;
        grad_v = probe_v;
        grad_b = probe_b;
        tuned.objective_trace.push_back({current, 0.0, current});
        accepted = true;
        if (change < config.tolerance) iter = config.max_iters;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      v = v_old;
      b = b_old;
      break;
    }
  }

  tuned.predictor = Predictor::logistic(std::move(v), b);
  return tuned;
}

GradientCheckResult gradient_check(const TrainedModel& model, const SampleSet& source, const SampleSet& target,
                                   const TrainConfig& config, double tolerance) {
  validate_config(config);
  validate_samples(source, target, true);
  std::vector<double> params = params_of(model);
  const Objective<double> value_objective{source, target, config};
  const Objective<Dual> grad_objective{source, target, config};
  const auto analytic = gradient_at(grad_objective, params);

  constexpr double kStep = 1e-5;
  GradientCheckResult result;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + kStep;
    const double up = objective_at(value_objective, params);
    params[i] = saved - kStep;
    const double down = objective_at(value_objective, params);
    params[i] = saved;
    const double fd = (up - down) / (2.0 * kStep);
    const double denom = std::max({1e-6, std::abs(fd), std::abs(analytic[i])});
    result.max_relative_error = std::max(result.max_relative_error, std::abs(fd - analytic[i]) / denom);
  }
  result.ok = result.max_relative_error < tolerance;
  return result;
}

}  // namespace shift_audit
