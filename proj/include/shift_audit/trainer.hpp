#pragma once

#include <cstdint>
#include <vector>

#include "shift_audit/divergence.hpp"
#include "shift_audit/hypotheses.hpp"

namespace shift_audit {

enum class PenaltyKind { mmd, hinge_support };

// Configuration for minimizing  2(1 - |alpha - 0.5|) ((1 - alpha) R_s + alpha d)
// over a linear representation and logistic predictor. alpha = 0 is plain ERM,
// alpha = 0.5 the usual equally-weighted form, alpha > 0.5 invariance-heavy.
struct TrainConfig {
  double alpha = 0.5;
  PenaltyKind penalty = PenaltyKind::mmd;
  Kernel kernel = Kernel{KernelFamily::gaussian, 0.5};  // penalty kernel (mmd)
  double eps = 0.05;           // hinge penalty threshold; must be > 0 there
  double kde_bandwidth = 0.25; // plug-in densities inside the hinge penalty
  double learning_rate = 1.0;
  std::size_t max_iters = 300;
  std::uint64_t seed = 0;
  double init_scale = 0.1;
  double tolerance = 1e-9;        // stop when the objective moves less than this
  std::size_t representation_dim = 1;
};

struct ObjectiveParts {
  double risk_term = 0.0;     // logistic surrogate for the source risk
  double penalty_term = 0.0;  // divergence between projected domains
  double total = 0.0;         // scaled combination
};

struct TrainedModel {
  Representation representation;  // linear projection, k x d
  Predictor predictor;            // logistic on the k-dimensional representation
  std::vector<ObjectiveParts> objective_trace;

  Hypothesis hypothesis() const { return Hypothesis(representation, predictor); }
};

ObjectiveParts objective_value(const TrainedModel& model, const SampleSet& source, const SampleSet& target,
                               const TrainConfig& config);

// Full-batch gradient descent with backtracking halving (floor 1e-8) from a
// seeded Gaussian init. Deterministic per config.
TrainedModel train(const SampleSet& source, const SampleSet& target, const TrainConfig& config);

// Refit the predictor on labeled target samples with the representation
// frozen; the "tuned" comparator.
TrainedModel tune_predictor_on_target(const TrainedModel& model, const SampleSet& labeled_target,
                                      const TrainConfig& config);

struct GradientCheckResult {
  bool ok = false;
  double max_relative_error = 0.0;
};

// Analytic gradient (forward-mode duals) against central finite differences
// with step 1e-5, on every parameter.
GradientCheckResult gradient_check(const TrainedModel& model, const SampleSet& source, const SampleSet& target,
                                   const TrainConfig& config, double tolerance);

}  // namespace shift_audit
