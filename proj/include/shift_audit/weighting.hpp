#pragma once

#include "shift_audit/densities.hpp"
#include "shift_audit/divergence.hpp"
#include "shift_audit/hypotheses.hpp"

namespace shift_audit {

struct WeightConfig {
  Epsilon eps;
  Density source_density;
  Density target_density;

  WeightConfig(Epsilon e, Density source, Density target);
};

// Truncated importance weight: target(x)/source(x) where source(x) >= eps,
// and 1 elsewhere. The threshold guards the division since eps > 0.
double truncated_weight(const WeightConfig& config, std::span<const double> point);

struct WeightedRisk {
  double value = 0.0;
  // Empirical second moment of the weights, reported as a variance guard.
  double weight_second_moment = 0.0;
};

// (1/n) sum_i w_i * loss(h(x_i), y_i) over a labeled sample.
WeightedRisk weighted_risk(const SampleSet& samples, std::span<const double> weights, const Hypothesis& hypothesis,
                           const Loss& loss);

struct Lemma1Report {
  double lhs = 0.0;            // E_q[loss]
  double weighted_term = 0.0;  // E_p[w * loss]
  double support_term = 0.0;   // M * d_supp(p || q)
  double rhs = 0.0;
};

// Weighted-expectation bound on discrete states: E_q[l] <= E_p[w l] + M d_supp.
// loss_values[i] is the loss at state i and must lie in [0, M].
Lemma1Report lemma1_bound(const DiscreteDensity& p, const DiscreteDensity& q,
                          std::span<const double> loss_values, double M, const Epsilon& eps);

}  // namespace shift_audit
