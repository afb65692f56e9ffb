#include "shift_audit/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "shift_audit/errors.hpp"
#include "shift_audit/parallel.hpp"

namespace shift_audit {

Kernel Kernel::gaussian(double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("Kernel: sigma must be > 0");
  return Kernel{KernelFamily::gaussian, sigma};
}

double Kernel::operator()(std::span<const double> a, std::span<const double> b) const {
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    d2 += d * d;
  }
  return std::exp(-d2 / (2.0 * sigma * sigma));
}

int delta_indicator(double p_at_x, double q_at_x, const Epsilon& eps) {
  return (q_at_x >= p_at_x && p_at_x <= eps.value) ? 1 : 0;
}

namespace {

// E_q[delta] - E_p[delta] over per-site (density, mass) pairs.
double support_divergence_from_sites(std::span<const double> p_density, std::span<const double> q_density,
                                     std::span<const double> p_mass, std::span<const double> q_mass,
                                     const Epsilon& eps) {
  double value = 0.0;
  for (std::size_t i = 0; i < p_density.size(); ++i)
    if (delta_indicator(p_density[i], q_density[i], eps)) value += q_mass[i] - p_mass[i];
  return value;
}

void require_same_layout(const GridDensity& p, const GridDensity& q, const char* who) {
  if (p.layout.resolution != q.layout.resolution || p.layout.box.lower != q.layout.box.lower ||
      p.layout.box.upper != q.layout.box.upper)
    throw dimension_error(std::string(who) + ": densities must share box and resolution");
}

double hinge_factor(double numerator, double denominator, double offset) {
  // numerator/denominator with 0-denominator (and 0/0) read as +inf.
  if (denominator <= 0.0) return 0.0;
  return std::max(0.0, offset - numerator / denominator);
}

// E_q[max(0, 2 - p/eps) max(0, 2 - p/q)] - E_p[max(0, 1 - p/eps) max(0, 1 - p/q)]
double hinge_from_sites(std::span<const double> p_density, std::span<const double> q_density,
                        std::span<const double> p_mass, std::span<const double> q_mass, const Epsilon& eps) {
  double value = 0.0;
  for (std::size_t i = 0; i < p_density.size(); ++i) {
    const double p = p_density[i];
    const double q = q_density[i];
    value += q_mass[i] * hinge_factor(p, eps.value, 2.0) * hinge_factor(p, q, 2.0);
    value -= p_mass[i] * hinge_factor(p, eps.value, 1.0) * hinge_factor(p, q, 1.0);
  }
  return value;
}

double ipm_from_sites(std::span<const double> p_density, std::span<const double> p_mass,
                      std::span<const double> q_mass, const Epsilon& eps, double M) {
  if (!(M > 0.0)) throw std::invalid_argument("ipm_support_divergence_oracle: M must be > 0");
  double positive = 0.0;
  double negative = 0.0;
  for (std::size_t i = 0; i < p_density.size(); ++i) {
    if (p_density[i] > eps.value) continue;
    const double gap = q_mass[i] - p_mass[i];
    if (gap > 0.0)
      positive += gap;
    else
      negative -= gap;
  }
  return M * std::max(positive, negative);
}

}  // namespace

DivergenceEstimate support_divergence_exact(const DiscreteDensity& p, const DiscreteDensity& q,
                                            const Epsilon& eps) {
  if (p.states() != q.states())
    throw dimension_error("support_divergence_exact: densities must share a state space");
  DivergenceEstimate est;
  est.value = support_divergence_from_sites(p.probabilities, q.probabilities, p.probabilities,
                                            q.probabilities, eps);
  est.method = "support-sufficiency";
  est.epsilon = eps;
  est.estimator_variant = EstimatorVariant::exact;
  return est;
}

DivergenceEstimate support_divergence_exact(const GridDensity& p, const GridDensity& q, const Epsilon& eps) {
  require_same_layout(p, q, "support_divergence_exact");
  const double vol = p.layout.cell_volume();
  std::vector<double> p_mass(p.cell_values.size()), q_mass(q.cell_values.size());
  for (std::size_t i = 0; i < p.cell_values.size(); ++i) {
    p_mass[i] = p.cell_values[i] * vol;
    q_mass[i] = q.cell_values[i] * vol;
  }
  DivergenceEstimate est;
  est.value = support_divergence_from_sites(p.cell_values, q.cell_values, p_mass, q_mass, eps);
  est.method = "support-sufficiency";
  est.epsilon = eps;
  est.estimator_variant = EstimatorVariant::exact;
  return est;
}

Density fit_plug_in_density(const SampleSet& samples, const SampleSet& other, const EstimatorConfig& config) {
  if (config.kind == EstimatorConfig::Kind::kde) return fit_kde(samples, config.bandwidth);

  // Histogram over the pooled bounding box, padded so boundary points of
  // either set fall strictly inside.
  const std::size_t d = samples.dim;
  std::vector<double> lo(d, std::numeric_limits<double>::infinity());
  std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
  auto expand = [&](const SampleSet& s) {
    for (std::size_t i = 0; i < s.size(); ++i)
      for (std::size_t a = 0; a < d; ++a) {
        lo[a] = std::min(lo[a], s.point(i)[a]);
        hi[a] = std::max(hi[a], s.point(i)[a]);
      }
  };
  expand(samples);
  expand(other);
  for (std::size_t a = 0; a < d; ++a) {
    const double pad = std::max(1e-9, 1e-3 * (hi[a] - lo[a]));
    lo[a] -= pad;
    hi[a] += pad;
  }
  GridLayout layout{Box{lo, hi}, std::vector<std::size_t>(d, config.histogram_resolution)};
  std::vector<double> counts(layout.cell_count(), 0.0);
  for (std::size_t i = 0; i < samples.size(); ++i) counts[layout.cell_index(samples.point(i))] += 1.0;
  const double norm = static_cast<double>(samples.size()) * layout.cell_volume();
  for (double& c : counts) c /= norm;
  return GridDensity(std::move(layout), std::move(counts));
}

DivergenceEstimate support_divergence_empirical(const SampleSet& source, const SampleSet& target,
                                                const Epsilon& eps, const EstimatorConfig& config) {
  source.validate();
  target.validate();
  if (source.size() == 0 || target.size() == 0)
    throw std::invalid_argument("support_divergence_empirical: empty sample set");
  if (source.dim != target.dim)
    throw dimension_error("support_divergence_empirical: sample dimension mismatch");

  const Density p_hat = fit_plug_in_density(source, target, config);
  const Density q_hat = fit_plug_in_density(target, source, config);

  auto mean_delta = [&](const SampleSet& s) {
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto x = s.point(i);
      acc += delta_indicator(evaluate_density(p_hat, x), evaluate_density(q_hat, x), eps);
    }
    return acc / static_cast<double>(s.size());
  };

  DivergenceEstimate est;
  est.value = std::clamp(mean_delta(target) - mean_delta(source), 0.0, 1.0);
  est.method = "support-sufficiency";
  est.epsilon = eps;
  est.estimator_variant = EstimatorVariant::plug_in;
  est.sample_sizes = {source.size(), target.size()};
  return est;
}

namespace {

// Masked V-statistic core shared by mmd_squared (mask == nullptr) and
// kernel_support_divergence, so the delta == 1 limit matches bit for bit.
double masked_v_statistic(const SampleSet& a, const SampleSet& b, const Kernel& kernel,
                          const std::vector<int>* mask_a, const std::vector<int>* mask_b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  const double term_aa = blocked_sum(n, [&](std::size_t i) {
    if (mask_a && !(*mask_a)[i]) return 0.0;
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (mask_a && !(*mask_a)[j]) continue;
      row += kernel(a.point(i), a.point(j));
    }
    return row;
  });
  const double term_ab = blocked_sum(n, [&](std::size_t i) {
    if (mask_a && !(*mask_a)[i]) return 0.0;
    double row = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (mask_b && !(*mask_b)[j]) continue;
      row += kernel(a.point(i), b.point(j));
    }
    return row;
  });
  const double term_bb = blocked_sum(m, [&](std::size_t i) {
    if (mask_b && !(*mask_b)[i]) return 0.0;
    double row = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (mask_b && !(*mask_b)[j]) continue;
      row += kernel(b.point(i), b.point(j));
    }
    return row;
  });
  const double nn = static_cast<double>(n) * static_cast<double>(n);
  const double nm = static_cast<double>(n) * static_cast<double>(m);
  const double mm = static_cast<double>(m) * static_cast<double>(m);
  return term_aa / nn - 2.0 * term_ab / nm + term_bb / mm;
}

}  // namespace

DivergenceEstimate mmd_squared(const SampleSet& a, const SampleSet& b, const Kernel& kernel,
                               MmdVariant variant) {
  a.validate();
  b.validate();
  if (a.size() == 0 || b.size() == 0) throw std::invalid_argument("mmd_squared: empty sample set");
  if (a.dim != b.dim) throw dimension_error("mmd_squared: sample dimension mismatch");

  DivergenceEstimate est;
  est.kernel = kernel;
  est.sample_sizes = {a.size(), b.size()};
  est.estimator_variant = EstimatorVariant::plug_in;

  if (variant == MmdVariant::v_statistic) {
    est.method = "mmd-squared-v";
    est.value = std::max(0.0, masked_v_statistic(a, b, kernel, nullptr, nullptr));
    return est;
  }

  const std::size_t n = a.size();
  const std::size_t m = b.size();
  if (n < 2 || m < 2) throw std::invalid_argument("mmd_squared: U-statistic needs >= 2 points per set");
  const double term_aa = blocked_sum(n, [&](std::size_t i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) row += kernel(a.point(i), a.point(j));
    return row;
  });
  const double term_ab = blocked_sum(n, [&](std::size_t i) {
    double row = 0.0;
    for (std::size_t j = 0; j < m; ++j) row += kernel(a.point(i), b.point(j));
    return row;
  });
  const double term_bb = blocked_sum(m, [&](std::size_t i) {
    double row = 0.0;
    for (std::size_t j = 0; j < m; ++j)
      if (j != i) row += kernel(b.point(i), b.point(j));
    return row;
  });
  est.method = "mmd-squared-u";
  est.value = term_aa / (static_cast<double>(n) * (n - 1.0)) -
              2.0 * term_ab / (static_cast<double>(n) * static_cast<double>(m)) +
              term_bb / (static_cast<double>(m) * (m - 1.0));
  return est;
}

DivergenceEstimate kernel_support_divergence(const SampleSet& source, const SampleSet& target,
                                             const Density& plug_in_source_density, const Epsilon& eps,
                                             const Kernel& kernel) {
  source.validate();
  target.validate();
  if (source.size() == 0 || target.size() == 0)
    throw std::invalid_argument("kernel_support_divergence: empty sample set");
  if (source.dim != target.dim) throw dimension_error("kernel_support_divergence: sample dimension mismatch");

  auto mask_of = [&](const SampleSet& s) {
    std::vector<int> mask(s.size());
    for (std::size_t i = 0; i < s.size(); ++i)
      mask[i] = evaluate_density(plug_in_source_density, s.point(i)) <= eps.value ? 1 : 0;
    return mask;
  };
  const std::vector<int> mask_source = mask_of(source);
  const std::vector<int> mask_target = mask_of(target);

  DivergenceEstimate est;
  est.value = masked_v_statistic(source, target, kernel, &mask_source, &mask_target);
  est.method = "kernel-support";
  est.epsilon = eps;
  est.kernel = kernel;
  est.estimator_variant = EstimatorVariant::plug_in;
  est.sample_sizes = {source.size(), target.size()};
  return est;
}

DivergenceEstimate hinge_support_divergence(const DiscreteDensity& p, const DiscreteDensity& q,
                                            const Epsilon& eps) {
  if (p.states() != q.states())
    throw dimension_error("hinge_support_divergence: densities must share a state space");
  DivergenceEstimate est;
  est.value = hinge_from_sites(p.probabilities, q.probabilities, p.probabilities, q.probabilities, eps);
  est.method = "hinge-support";
  est.epsilon = eps;
  est.estimator_variant = EstimatorVariant::exact;
  return est;
}

DivergenceEstimate hinge_support_divergence(const GridDensity& p, const GridDensity& q, const Epsilon& eps) {
  require_same_layout(p, q, "hinge_support_divergence");
  const double vol = p.layout.cell_volume();
  std::vector<double> p_mass(p.cell_values.size()), q_mass(q.cell_values.size());
  for (std::size_t i = 0; i < p.cell_values.size(); ++i) {
    p_mass[i] = p.cell_values[i] * vol;
    q_mass[i] = q.cell_values[i] * vol;
  }
  DivergenceEstimate est;
  est.value = hinge_from_sites(p.cell_values, q.cell_values, p_mass, q_mass, eps);
  est.method = "hinge-support";
  est.epsilon = eps;
  est.estimator_variant = EstimatorVariant::exact;
  return est;
}

double ipm_support_divergence_oracle(const DiscreteDensity& p, const DiscreteDensity& q, const Epsilon& eps,
                                     double M) {
  if (p.states() != q.states())
    throw dimension_error("ipm_support_divergence_oracle: densities must share a state space");
  return ipm_from_sites(p.probabilities, p.probabilities, q.probabilities, eps, M);
}

double ipm_support_divergence_oracle(const GridDensity& p, const GridDensity& q, const Epsilon& eps,
                                     double M) {
  require_same_layout(p, q, "ipm_support_divergence_oracle");
  const double vol = p.layout.cell_volume();
  std::vector<double> p_mass(p.cell_values.size()), q_mass(q.cell_values.size());
  for (std::size_t i = 0; i < p.cell_values.size(); ++i) {
    p_mass[i] = p.cell_values[i] * vol;
    q_mass[i] = q.cell_values[i] * vol;
  }
  return ipm_from_sites(p.cell_values, p_mass, q_mass, eps, M);
}

double median_heuristic_bandwidth(const SampleSet& a, const SampleSet& b) {
  if (a.dim != b.dim) throw dimension_error("median_heuristic_bandwidth: sample dimension mismatch");
  std::vector<double> pooled = a.data;
  pooled.insert(pooled.end(), b.data.begin(), b.data.end());
  const std::size_t d = a.dim;
  std::size_t n = pooled.size() / d;
  if (n < 2) throw std::invalid_argument("median_heuristic_bandwidth: need at least 2 pooled points");

  // Deterministic stride subsample above 2048 pooled points; the full
  // pairwise distance set grows quadratically and adds nothing to a median.
  constexpr std::size_t kCap = 2048;
  if (n > kCap) {
    std::vector<double> thinned;
    thinned.reserve(kCap * d);
    const std::size_t stride = (n + kCap - 1) / kCap;
    for (std::size_t i = 0; i < n; i += stride)
      thinned.insert(thinned.end(), pooled.begin() + static_cast<std::ptrdiff_t>(i * d),
                     pooled.begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
    pooled.swap(thinned);
    n = pooled.size() / d;
  }

  std::vector<double> dists;
  dists.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t ax = 0; ax < d; ++ax) {
        const double diff = pooled[i * d + ax] - pooled[j * d + ax];
        d2 += diff * diff;
      }
      dists.push_back(std::sqrt(d2));
    }
  std::nth_element(dists.begin(), dists.begin() + dists.size() / 2, dists.end());
  double med = dists[dists.size() / 2];
  if (!(med > 0.0)) throw numeric_error("median_heuristic_bandwidth: median pairwise distance is 0");
  return med;
}

}  // namespace shift_audit
