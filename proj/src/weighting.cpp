#include "shift_audit/weighting.hpp"

#include <stdexcept>
#include <string>

#include "shift_audit/errors.hpp"

namespace shift_audit {

WeightConfig::WeightConfig(Epsilon e, Density source, Density target)
    : eps(e), source_density(std::move(source)), target_density(std::move(target)) {
  if (density_dim(source_density) != density_dim(target_density))
    throw dimension_error("WeightConfig: densities must share dimensionality");
}

double truncated_weight(const WeightConfig& config, std::span<const double> point) {
  const double p = evaluate_density(config.source_density, point);
  if (p < config.eps.value) return 1.0;
  return evaluate_density(config.target_density, point) / p;
}

WeightedRisk weighted_risk(const SampleSet& samples, std::span<const double> weights,
                           const Hypothesis& hypothesis, const Loss& loss) {
  samples.validate();
  const std::size_t n = samples.size();
  if (n == 0) throw std::invalid_argument("weighted_risk: empty sample set");
  if (!samples.labels.has_value()) throw std::invalid_argument("weighted_risk: samples must be labeled");
  if (weights.size() != n) throw std::invalid_argument("weighted_risk: weight count mismatch");

  WeightedRisk result;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(weights[i] >= 0.0)) throw std::invalid_argument("weighted_risk: negative weight");
    result.value += weights[i] * loss(hypothesis.predict(samples.point(i)), (*samples.labels)[i]);
    result.weight_second_moment += weights[i] * weights[i];
  }
  result.value /= static_cast<double>(n);
  result.weight_second_moment /= static_cast<double>(n);
  return result;
}

Lemma1Report lemma1_bound(const DiscreteDensity& p, const DiscreteDensity& q,
                          std::span<const double> loss_values, double M, const Epsilon& eps) {
  if (p.states() != q.states()) throw dimension_error("lemma1_bound: densities must share a state space");
  if (loss_values.size() != p.states()) throw std::invalid_argument("lemma1_bound: loss table size mismatch");
  if (!(M > 0.0)) throw std::invalid_argument("lemma1_bound: M must be > 0");
  for (double l : loss_values)
    if (!(l >= 0.0 && l <= M)) throw std::invalid_argument("lemma1_bound: loss value outside [0, M]");

  Lemma1Report report;
  for (std::size_t s = 0; s < p.states(); ++s) {
    const double ps = p.probabilities[s];
    const double qs = q.probabilities[s];
    report.lhs += qs * loss_values[s];
    const double w = ps >= eps.value ? qs / ps : 1.0;
    report.weighted_term += ps * w * loss_values[s];
    if (delta_indicator(ps, qs, eps)) report.support_term += M * (qs - ps);
  }
  report.rhs = report.weighted_term + report.support_term;
  if (report.lhs > report.rhs + 1e-12)
    throw numeric_error("lemma1_bound: inequality violated by " + std::to_string(report.lhs - report.rhs));
  return report;
}

}  // namespace shift_audit
