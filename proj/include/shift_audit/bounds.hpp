#pragma once

#include <optional>
#include <string>
#include <vector>

#include "shift_audit/divergence.hpp"
#include "shift_audit/hypotheses.hpp"
#include "shift_audit/synthetic.hpp"

namespace shift_audit {

struct EtaReport {
  double delta_target_mean = 0.0;  // E_{p_t}[Delta_{p_t,p}]
  double delta_source_mean = 0.0;  // E_{p_t}[Delta_{p_s,p}]
  double eta = 0.0;                // difference; 0 for invertible representations
};

enum class SupportTermKind { max_loss, ipm_kernel, ipm_exact };
enum class EtaSource { oracle, unobservable };

// Itemized bound evaluation. When eta is unobservable the total is absent and
// observable_part is the reportable lower piece of the bound.
struct BoundReport {
  double weighted_risk_term = 0.0;
  double support_term = 0.0;
  SupportTermKind support_term_kind = SupportTermKind::max_loss;
  std::optional<double> eta_term;  // empty = unobservable
  double observable_part = 0.0;    // weighted_risk_term + support_term
  std::optional<double> total;     // empty when eta is unobservable
  Epsilon epsilon;
  double M = 1.0;

  BoundReport(Epsilon eps, double m) : epsilon(eps), M(m) {}
};

// P(Y=1 | z-cell) for one domain, on the grid of push_forward(domain density).
// Cells carrying zero mass under that domain get the convention value 0.5.
std::vector<double> induced_posterior(const SyntheticProblem& problem, DomainTag domain,
                                      const Representation& representation);

// Excess target information loss of a non-invertible representation,
// computed by exact cell-wise integration. Requires a grid problem and an
// axis-aligned representation; other cases throw std::invalid_argument and
// callers report the eta term as unobservable.
EtaReport eta_excess_loss(const SyntheticProblem& problem, const Representation& representation,
                          const Predictor& predictor, const Loss& loss);

// Support-based target-risk bound, exact on grid problems:
//   E_{p_s}[w(z) l(f(z), y)] + M * d_supp(p_s(z) || p_t(z)) + eta.
BoundReport theorem2_bound(const SyntheticProblem& problem, const Representation& representation,
                           const Predictor& predictor, const Loss& loss, const Epsilon& eps,
                           EtaSource eta_source);

// Plug-in variant from samples; eta is always unobservable here.
BoundReport theorem2_bound(const SampleSet& source, const SampleSet& target,
                           const Representation& representation, const Predictor& predictor, const Loss& loss,
                           const Epsilon& eps, const EstimatorConfig& config = {});

// IPM variant. On exact problems the support term uses the closed-form IPM
// divergence over [0, M]-valued losses; rkhs_norm_bound (Lambda) defaults to
// M when NaN is passed.
BoundReport theorem3_bound(const SyntheticProblem& problem, const Representation& representation,
                           const Predictor& predictor, const Loss& loss, const Epsilon& eps,
                           EtaSource eta_source, double rkhs_norm_bound);

// Sample path: support term is Lambda * sqrt(kernel support divergence).
BoundReport theorem3_bound(const SampleSet& source, const SampleSet& target,
                           const Representation& representation, const Predictor& predictor, const Loss& loss,
                           const Epsilon& eps, const Kernel& kernel, double rkhs_norm_bound,
                           const EstimatorConfig& config = {});

struct HypothesisEntry {
  std::string id;
  Hypothesis hypothesis;
  HypothesisClass theorem1_class;  // class used for the Theorem 1 column
};

struct BoundComparisonRow {
  std::string hypothesis_id;
  double eps = 0.0;
  double kernel_sigma = 0.0;
  double exact_target_risk = 0.0;
  double theorem1_total = 0.0;
  double theorem2_total = 0.0;
  double theorem3_total = 0.0;
  double mmd_squared = 0.0;  // sampled in z-space at kernel_sigma
  double d_supp = 0.0;       // exact, z-space
};

struct BoundComparisonOptions {
  std::size_t mmd_samples = 1000;
  std::uint64_t mmd_seed = 7;
};

// One row per (hypothesis, eps, sigma). Column order is fixed:
// hypothesis, eps, sigma, exact_target_risk, theorem1_total, theorem2_total,
// theorem3_total, mmd_squared, d_supp.
struct BoundComparisonTable {
  std::vector<BoundComparisonRow> rows;
  BoundComparisonOptions options;
  static const std::vector<std::string>& columns();
};

BoundComparisonTable compare_bounds(const SyntheticProblem& problem,
                                    std::span<const HypothesisEntry> inventory,
                                    std::span<const double> eps_sweep, std::span<const double> sigma_sweep,
                                    const BoundComparisonOptions& options = {});

}  // namespace shift_audit
