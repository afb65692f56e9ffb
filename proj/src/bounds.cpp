#include "shift_audit/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "shift_audit/errors.hpp"
#include "shift_audit/weighting.hpp"

namespace shift_audit {

namespace {

const GridDensity& require_grid(const Density& density, const char* who) {
  const auto* grid = std::get_if<GridDensity>(&density);
  if (!grid) throw std::invalid_argument(std::string(who) + ": exact evaluation needs a grid problem");
  return *grid;
}

void require_axis_aligned(const Representation& rep, const char* who) {
  if (rep.kind == Representation::Kind::linear_projection)
    throw std::invalid_argument(std::string(who) +
                                ": induced posteriors are only analytic for axis-aligned representations");
}

// Flat z-cell index of an x-cell under an identity or variable-selection map.
std::size_t z_cell_of(const GridLayout& x_layout, const std::vector<std::size_t>& x_coords,
                      const Representation& rep, const GridLayout& z_layout) {
  if (rep.kind == Representation::Kind::identity) {
    std::size_t flat = 0;
    for (std::size_t a = 0; a < x_layout.dim(); ++a) flat = flat * z_layout.resolution[a] + x_coords[a];
    return flat;
  }
  std::size_t flat = 0;
  for (std::size_t i = 0; i < rep.indices.size(); ++i)
    flat = flat * z_layout.resolution[i] + x_coords[rep.indices[i]];
  return flat;
}

}  // namespace

std::vector<double> induced_posterior(const SyntheticProblem& problem, DomainTag domain,
                                      const Representation& representation) {
  require_axis_aligned(representation, "induced_posterior");
  const GridDensity& own = require_grid(
      domain == DomainTag::source ? problem.source_density : problem.target_density, "induced_posterior");
  const GridDensity& other = require_grid(
      domain == DomainTag::source ? problem.target_density : problem.source_density, "induced_posterior");
  if (own.layout.resolution != other.layout.resolution)
    throw dimension_error("induced_posterior: domains must share the grid");
  const GridDensity z_density = push_forward(own, representation);

  // z-cells with no mass under the requested domain borrow the pooled
  // (source + target) posterior; this keeps eta exactly zero for invertible
  // representations, where the conditional is determined by the shared
  // posterior alone. Cells empty under both domains get 0.5 and never carry
  // weight downstream.
  std::vector<double> mass(z_density.layout.cell_count(), 0.0);
  std::vector<double> weighted(z_density.layout.cell_count(), 0.0);
  std::vector<double> pooled_mass(z_density.layout.cell_count(), 0.0);
  std::vector<double> pooled_weighted(z_density.layout.cell_count(), 0.0);
  const double vol = own.layout.cell_volume();
  for (std::size_t flat = 0; flat < own.layout.cell_count(); ++flat) {
    const double m_own = own.cell_values[flat] * vol;
    const double m_pool = m_own + other.cell_values[flat] * vol;
    if (m_pool == 0.0) continue;
    const auto coords = own.layout.cell_coords(flat);
    const std::size_t z = z_cell_of(own.layout, coords, representation, z_density.layout);
    const double p1 = posterior_probability(problem.posterior, own.layout.cell_center(flat));
    mass[z] += m_own;
    weighted[z] += m_own * p1;
    pooled_mass[z] += m_pool;
    pooled_weighted[z] += m_pool * p1;
  }
  std::vector<double> posterior(mass.size(), 0.5);
  for (std::size_t z = 0; z < mass.size(); ++z) {
    if (mass[z] > 0.0)
      posterior[z] = weighted[z] / mass[z];
    else if (pooled_mass[z] > 0.0)
      posterior[z] = pooled_weighted[z] / pooled_mass[z];
  }
  return posterior;
}

EtaReport eta_excess_loss(const SyntheticProblem& problem, const Representation& representation,
                          const Predictor& predictor, const Loss& loss) {
  require_axis_aligned(representation, "eta_excess_loss");
  const GridDensity& target = require_grid(problem.target_density, "eta_excess_loss");
  const GridDensity z_target = push_forward(target, representation);

  const std::vector<double> post_s = induced_posterior(problem, DomainTag::source, representation);
  const std::vector<double> post_t = induced_posterior(problem, DomainTag::target, representation);

  EtaReport report;
  const double vol = target.layout.cell_volume();
  for (std::size_t flat = 0; flat < target.layout.cell_count(); ++flat) {
    const double m = target.cell_values[flat] * vol;
    if (m == 0.0) continue;
    const auto coords = target.layout.cell_coords(flat);
    const std::size_t z = z_cell_of(target.layout, coords, representation, z_target.layout);
    const auto z_center = z_target.layout.cell_center(z);
    const int pred = predictor.predict(z_center);
    const double loss1 = loss(pred, 1);
    const double loss0 = loss(pred, 0);

    const double point_term = [&] {
      const double p1 = posterior_probability(problem.posterior, target.layout.cell_center(flat));
      return p1 * loss1 + (1.0 - p1) * loss0;
    }();
    const double target_term = post_t[z] * loss1 + (1.0 - post_t[z]) * loss0;
    const double source_term = post_s[z] * loss1 + (1.0 - post_s[z]) * loss0;

    report.delta_target_mean += m * (target_term - point_term);
    report.delta_source_mean += m * (source_term - point_term);
  }
  report.eta = report.delta_target_mean - report.delta_source_mean;
  return report;
}

namespace {

double exact_weighted_risk_term(const SyntheticProblem& problem, const Representation& rep,
                                const Predictor& predictor, const Loss& loss, const Epsilon& eps,
                                const GridDensity& z_source, const GridDensity& z_target) {
  const std::vector<double> post_s = induced_posterior(problem, DomainTag::source, rep);
  const double vol = z_source.layout.cell_volume();
  double acc = 0.0;
  for (std::size_t z = 0; z < z_source.layout.cell_count(); ++z) {
    const double mass = z_source.cell_values[z] * vol;
    if (mass == 0.0) continue;
    const double w = z_source.cell_values[z] >= eps.value ? z_target.cell_values[z] / z_source.cell_values[z] : 1.0;
    const auto center = z_source.layout.cell_center(z);
    const int pred = predictor.predict(center);
    const double expected_loss = post_s[z] * loss(pred, 1) + (1.0 - post_s[z]) * loss(pred, 0);
    acc += mass * w * expected_loss;
  }
  return acc;
}

}  // namespace

BoundReport theorem2_bound(const SyntheticProblem& problem, const Representation& representation,
                           const Predictor& predictor, const Loss& loss, const Epsilon& eps,
                           EtaSource eta_source) {
  require_axis_aligned(representation, "theorem2_bound");
  const GridDensity& source = require_grid(problem.source_density, "theorem2_bound");
  const GridDensity& target = require_grid(problem.target_density, "theorem2_bound");
  const GridDensity z_source = push_forward(source, representation);
  const GridDensity z_target = push_forward(target, representation);

  BoundReport report(eps, loss.M);
  report.weighted_risk_term =
      exact_weighted_risk_term(problem, representation, predictor, loss, eps, z_source, z_target);
  report.support_term = loss.M * support_divergence_exact(z_source, z_target, eps).value;
  report.support_term_kind = SupportTermKind::max_loss;
  report.observable_part = report.weighted_risk_term + report.support_term;
  if (eta_source == EtaSource::oracle) {
    report.eta_term = eta_excess_loss(problem, representation, predictor, loss).eta;
    report.total = report.observable_part + *report.eta_term;
    const double target_risk = risk(Hypothesis(representation, predictor), problem, DomainTag::target,
                                    EvalMode::exact(), loss);
    if (target_risk > *report.total + 1e-9)
      throw numeric_error("theorem2_bound: bound below the exact target risk");
  }
  return report;
}

BoundReport theorem2_bound(const SampleSet& source, const SampleSet& target,
                           const Representation& representation, const Predictor& predictor, const Loss& loss,
                           const Epsilon& eps, const EstimatorConfig& config) {
  source.validate();
  target.validate();
  if (!source.labels.has_value()) throw std::invalid_argument("theorem2_bound: source labels required");
  const SampleSet z_source = transform(source, representation);
  const SampleSet z_target = transform(target, representation);

  const Density p_hat = fit_plug_in_density(z_source, z_target, config);
  const Density q_hat = fit_plug_in_density(z_target, z_source, config);

  BoundReport report(eps, loss.M);
  double acc = 0.0;
  for (std::size_t i = 0; i < z_source.size(); ++i) {
    const auto z = z_source.point(i);
    const double p = evaluate_density(p_hat, z);
    const double w = p >= eps.value ? evaluate_density(q_hat, z) / p : 1.0;
    acc += w * loss(predictor.predict(z), (*source.labels)[i]);
  }
  report.weighted_risk_term = acc / static_cast<double>(z_source.size());
  report.support_term = loss.M * support_divergence_empirical(z_source, z_target, eps, config).value;
  report.support_term_kind = SupportTermKind::max_loss;
  report.observable_part = report.weighted_risk_term + report.support_term;
  return report;
}

BoundReport theorem3_bound(const SyntheticProblem& problem, const Representation& representation,
                           const Predictor& predictor, const Loss& loss, const Epsilon& eps,
                           EtaSource eta_source, double rkhs_norm_bound) {
  BoundReport report = theorem2_bound(problem, representation, predictor, loss, eps, eta_source);
  const GridDensity z_source = push_forward(require_grid(problem.source_density, "theorem3_bound"), representation);
  const GridDensity z_target = push_forward(require_grid(problem.target_density, "theorem3_bound"), representation);
  const double M = std::isnan(rkhs_norm_bound) ? loss.M : rkhs_norm_bound;
  report.support_term = ipm_support_divergence_oracle(z_source, z_target, eps, M);
  report.support_term_kind = SupportTermKind::ipm_exact;
  report.observable_part = report.weighted_risk_term + report.support_term;
  if (report.eta_term.has_value()) report.total = report.observable_part + *report.eta_term;
  return report;
}

BoundReport theorem3_bound(const SampleSet& source, const SampleSet& target,
                           const Representation& representation, const Predictor& predictor, const Loss& loss,
                           const Epsilon& eps, const Kernel& kernel, double rkhs_norm_bound,
                           const EstimatorConfig& config) {
  BoundReport report = theorem2_bound(source, target, representation, predictor, loss, eps, config);
  const SampleSet z_source = transform(source, representation);
  const SampleSet z_target = transform(target, representation);
  const Density p_hat = fit_plug_in_density(z_source, z_target, config);
  const double lambda = std::isnan(rkhs_norm_bound) ? loss.M : rkhs_norm_bound;
  const double kernel_div = kernel_support_divergence(z_source, z_target, p_hat, eps, kernel).value;
  report.support_term = lambda * std::sqrt(std::max(0.0, kernel_div));
  report.support_term_kind = SupportTermKind::ipm_kernel;
  report.observable_part = report.weighted_risk_term + report.support_term;
  return report;
}

const std::vector<std::string>& BoundComparisonTable::columns() {
  static const std::vector<std::string> cols = {
      "hypothesis", "eps",           "sigma",         "exact_target_risk", "theorem1_total",
      "theorem2_total", "theorem3_total", "mmd_squared", "d_supp"};
  return cols;
}

BoundComparisonTable compare_bounds(const SyntheticProblem& problem,
                                    std::span<const HypothesisEntry> inventory,
                                    std::span<const double> eps_sweep, std::span<const double> sigma_sweep,
                                    const BoundComparisonOptions& options) {
  if (inventory.empty()) throw std::invalid_argument("compare_bounds: empty hypothesis inventory");
  if (eps_sweep.empty() || sigma_sweep.empty())
    throw std::invalid_argument("compare_bounds: empty sweep");

  BoundComparisonTable table;
  table.options = options;
  const Loss loss = Loss::zero_one();

  const SampleSet x_source = sample(problem, DomainTag::source, options.mmd_samples, options.mmd_seed);
  const SampleSet x_target = sample(problem, DomainTag::target, options.mmd_samples, options.mmd_seed);

  for (const auto& entry : inventory) {
    const auto& rep = entry.hypothesis.representation;
    const double exact_rt = risk(entry.hypothesis, problem, DomainTag::target);
    const Theorem1Report t1 = theorem1_bound(entry.hypothesis, entry.theorem1_class, problem);
    const GridDensity z_source = push_forward(require_grid(problem.source_density, "compare_bounds"), rep);
    const GridDensity z_target = push_forward(require_grid(problem.target_density, "compare_bounds"), rep);
    const SampleSet z_source_samples = transform(x_source, rep);
    const SampleSet z_target_samples = transform(x_target, rep);

    for (double eps_value : eps_sweep) {
      const Epsilon eps(eps_value);
      const BoundReport t2 =
          theorem2_bound(problem, rep, entry.hypothesis.predictor, loss, eps, EtaSource::oracle);
      const BoundReport t3 = theorem3_bound(problem, rep, entry.hypothesis.predictor, loss, eps,
                                            EtaSource::oracle, loss.M);
      const double d_supp = support_divergence_exact(z_source, z_target, eps).value;
      for (double sigma : sigma_sweep) {
        BoundComparisonRow row;
        row.hypothesis_id = entry.id;
        row.eps = eps_value;
        row.kernel_sigma = sigma;
        row.exact_target_risk = exact_rt;
        row.theorem1_total = t1.total;
        row.theorem2_total = t2.total.value();
        row.theorem3_total = t3.total.value();
        row.mmd_squared = mmd_squared(z_source_samples, z_target_samples, Kernel::gaussian(sigma)).value;
        row.d_supp = d_supp;
        table.rows.push_back(std::move(row));
      }
    }
  }
  return table;
}

}  // namespace shift_audit
