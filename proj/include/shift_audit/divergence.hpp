#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "shift_audit/densities.hpp"

namespace shift_audit {

// Density level below which support is considered insufficient.
struct Epsilon {
  double value;

  explicit Epsilon(double v) : value(v) {
    if (!(v > 0.0)) throw std::invalid_argument("Epsilon: value must be > 0");
  }
};

struct Kernel {
  KernelFamily family = KernelFamily::gaussian;
  double sigma = 1.0;

  static Kernel gaussian(double sigma);
  double operator()(std::span<const double> a, std::span<const double> b) const;
};

enum class MmdVariant { u_statistic, v_statistic };
enum class EstimatorVariant { exact, plug_in };

struct DivergenceEstimate {
  double value = 0.0;
  std::string method;
  std::optional<Epsilon> epsilon;
  std::optional<Kernel> kernel;
  EstimatorVariant estimator_variant = EstimatorVariant::exact;
  std::optional<std::pair<std::size_t, std::size_t>> sample_sizes;
};

// Plug-in density configuration for the empirical estimators.
struct EstimatorConfig {
  enum class Kind { kde, histogram };
  Kind kind = Kind::kde;
  BandwidthRule bandwidth = BandwidthRule::silverman();
  std::size_t histogram_resolution = 200;  // cells per axis for d <= 2
};

// Pointwise lack-of-sufficient-support indicator: 1 iff q(x) >= p(x) and
// p(x) <= eps. Thresholds are non-strict throughout the library.
int delta_indicator(double p_at_x, double q_at_x, const Epsilon& eps);

// Plug-in density per config: Gaussian KDE, or a histogram over the padded
// bounding box of the pooled samples and reference points.
Density fit_plug_in_density(const SampleSet& samples, const SampleSet& reference,
                            const EstimatorConfig& config);

// Support sufficiency divergence E_q[delta] - E_p[delta] by exact summation
// over a shared state space or grid. Always in [0, 1].
DivergenceEstimate support_divergence_exact(const DiscreteDensity& p, const DiscreteDensity& q, const Epsilon& eps);
DivergenceEstimate support_divergence_exact(const GridDensity& p, const GridDensity& q, const Epsilon& eps);

// Plug-in estimate from samples: fits densities per config, then averages the
// indicator over target minus source points. Clipped to [0, 1].
DivergenceEstimate support_divergence_empirical(const SampleSet& source, const SampleSet& target,
                                                const Epsilon& eps, const EstimatorConfig& config = {});

// Squared maximum mean discrepancy. The V-statistic keeps diagonal terms and
// is non-negative; the U-statistic drops them and may go negative.
DivergenceEstimate mmd_squared(const SampleSet& a, const SampleSet& b, const Kernel& kernel,
                               MmdVariant variant = MmdVariant::v_statistic);

// Kernel form of the support sufficiency divergence: the V-statistic of
//   E_pp[dd'k] - 2 E_pq[dd'k] + E_qq[dd'k]
// with d(x) = 1[p(x) <= eps] read off the supplied plug-in source density.
DivergenceEstimate kernel_support_divergence(const SampleSet& source, const SampleSet& target,
                                             const Density& plug_in_source_density, const Epsilon& eps,
                                             const Kernel& kernel);

// Differentiable hinge upper bound on the support divergence. Ratios with a
// zero denominator (including 0/0) are treated as +inf, killing the factor.
DivergenceEstimate hinge_support_divergence(const DiscreteDensity& p, const DiscreteDensity& q, const Epsilon& eps);
DivergenceEstimate hinge_support_divergence(const GridDensity& p, const GridDensity& q, const Epsilon& eps);

// IPM support sufficiency divergence with the loss class = all functions into
// [0, M], in closed form:
//   M * max( sum_{p<=eps, q>p} (q-p), sum_{p<=eps, q<p} (p-q) ).
double ipm_support_divergence_oracle(const DiscreteDensity& p, const DiscreteDensity& q, const Epsilon& eps, double M);
double ipm_support_divergence_oracle(const GridDensity& p, const GridDensity& q, const Epsilon& eps, double M);

// Median of pairwise Euclidean distances over the pooled samples.
double median_heuristic_bandwidth(const SampleSet& a, const SampleSet& b);

}  // namespace shift_audit
