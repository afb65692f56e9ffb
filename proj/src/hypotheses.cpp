#include "shift_audit/hypotheses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

#include "shift_audit/errors.hpp"
#include "shift_audit/rng.hpp"

namespace shift_audit {

Representation Representation::identity(std::size_t dim) {
  Representation r;
  r.kind = Kind::identity;
  r.input_dim = dim;
  return r;
}

Representation Representation::variable_selection(std::size_t input_dim, std::vector<std::size_t> indices) {
  if (indices.empty()) throw std::invalid_argument("variable_selection: empty index set");
  std::set<std::size_t> seen;
  for (std::size_t i : indices) {
    if (i >= input_dim) throw std::invalid_argument("variable_selection: index out of range");
    if (!seen.insert(i).second) throw std::invalid_argument("variable_selection: duplicate index");
  }
  Representation r;
  r.kind = Kind::variable_selection;
  r.input_dim = input_dim;
  r.indices = std::move(indices);
  return r;
}

Representation Representation::linear_projection(std::size_t input_dim, std::size_t output_rows,
                                                 std::vector<double> matrix) {
  if (output_rows == 0 || matrix.size() != output_rows * input_dim)
    throw std::invalid_argument("linear_projection: matrix shape mismatch");
  for (double v : matrix)
    if (!std::isfinite(v)) throw std::invalid_argument("linear_projection: non-finite entry");
  Representation r;
  r.kind = Kind::linear_projection;
  r.input_dim = input_dim;
  r.output_rows = output_rows;
  r.matrix = std::move(matrix);
  return r;
}

std::size_t Representation::output_dim() const {
  switch (kind) {
    case Kind::identity:
      return input_dim;
    case Kind::variable_selection:
      return indices.size();
    case Kind::linear_projection:
      return output_rows;
  }
  return 0;
}

bool Representation::invertible() const {
  switch (kind) {
    case Kind::identity:
      return true;
    case Kind::variable_selection:
      return indices.size() == input_dim;
    case Kind::linear_projection: {
      if (output_rows != input_dim) return false;
      // Rank by Gaussian elimination with partial pivoting.
      std::vector<double> m = matrix;
      const std::size_t n = input_dim;
      for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
          if (std::abs(m[r * n + col]) > std::abs(m[pivot * n + col])) pivot = r;
        if (std::abs(m[pivot * n + col]) < 1e-12) return false;
        if (pivot != col)
          for (std::size_t c = 0; c < n; ++c) std::swap(m[pivot * n + c], m[col * n + c]);
        for (std::size_t r = col + 1; r < n; ++r) {
          const double f = m[r * n + col] / m[col * n + col];
          for (std::size_t c = col; c < n; ++c) m[r * n + c] -= f * m[col * n + c];
        }
      }
      return true;
    }
  }
  return false;
}

std::vector<double> Representation::apply(std::span<const double> x) const {
  if (x.size() != input_dim) throw dimension_error("Representation::apply: dimension mismatch");
  switch (kind) {
    case Kind::identity:
      return {x.begin(), x.end()};
    case Kind::variable_selection: {
      std::vector<double> z(indices.size());
      for (std::size_t i = 0; i < indices.size(); ++i) z[i] = x[indices[i]];
      return z;
    }
    case Kind::linear_projection: {
      std::vector<double> z(output_rows, 0.0);
      for (std::size_t r = 0; r < output_rows; ++r)
        for (std::size_t c = 0; c < input_dim; ++c) z[r] += matrix[r * input_dim + c] * x[c];
      return z;
    }
  }
  return {};
}

GridDensity push_forward(const GridDensity& density, const Representation& representation) {
  if (representation.input_dim != density.dim())
    throw dimension_error("push_forward: representation input dimension mismatch");
  if (representation.kind == Representation::Kind::identity) return density;
  if (representation.kind != Representation::Kind::variable_selection)
    throw std::invalid_argument("push_forward: exact push-forward needs an axis-aligned representation");

  const auto& in = density.layout;
  const auto& keep = representation.indices;

  GridLayout out_layout;
  out_layout.box.lower.resize(keep.size());
  out_layout.box.upper.resize(keep.size());
  out_layout.resolution.resize(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    out_layout.box.lower[i] = in.box.lower[keep[i]];
    out_layout.box.upper[i] = in.box.upper[keep[i]];
    out_layout.resolution[i] = in.resolution[keep[i]];
  }

  // Dropped-axis cell volume turns marginal mass back into density units.
  double dropped_width = 1.0;
  for (std::size_t a = 0; a < in.dim(); ++a)
    if (std::find(keep.begin(), keep.end(), a) == keep.end()) dropped_width *= in.cell_width(a);

  std::vector<double> out_values(out_layout.cell_count(), 0.0);
  const std::size_t n = in.cell_count();
  for (std::size_t flat = 0; flat < n; ++flat) {
    if (density.cell_values[flat] == 0.0) continue;
    const auto coords = in.cell_coords(flat);
    std::size_t out_flat = 0;
    for (std::size_t i = 0; i < keep.size(); ++i) out_flat = out_flat * out_layout.resolution[i] + coords[keep[i]];
    out_values[out_flat] += density.cell_values[flat] * dropped_width;
  }
  return GridDensity(std::move(out_layout), std::move(out_values));
}

SampleSet transform(const SampleSet& samples, const Representation& representation) {
  SampleSet out(representation.output_dim(), samples.domain);
  out.labels = samples.labels;
  out.data.reserve(samples.size() * out.dim);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto z = representation.apply(samples.point(i));
    out.data.insert(out.data.end(), z.begin(), z.end());
  }
  return out;
}

Predictor Predictor::threshold(std::size_t axis, double cutoff, bool positive_above) {
  Predictor p;
  p.kind = Kind::threshold;
  p.axis = axis;
  p.cutoff = cutoff;
  p.positive_above = positive_above;
  return p;
}

Predictor Predictor::logistic(std::vector<double> weights, double bias) {
  if (weights.empty()) throw std::invalid_argument("logistic: empty weights");
  Predictor p;
  p.kind = Kind::logistic;
  p.weights = std::move(weights);
  p.bias = bias;
  return p;
}

Predictor Predictor::constant(int label) {
  if (label != 0 && label != 1) throw std::invalid_argument("constant predictor: label must be 0 or 1");
  Predictor p;
  p.kind = Kind::constant;
  p.constant_label = label;
  return p;
}

double Predictor::score(std::span<const double> z) const {
  if (kind != Kind::logistic) throw std::invalid_argument("score: only defined for logistic predictors");
  double s = bias;
  for (std::size_t i = 0; i < weights.size(); ++i) s += weights[i] * z[i];
  return s;
}

int Predictor::predict(std::span<const double> z) const {
  switch (kind) {
    case Kind::threshold:
      if (axis >= z.size()) throw dimension_error("threshold predictor: axis out of range");
      return positive_above ? (z[axis] >= cutoff ? 1 : 0) : (z[axis] <= cutoff ? 1 : 0);
    case Kind::logistic:
      if (weights.size() != z.size()) throw dimension_error("logistic predictor: dimension mismatch");
      return score(z) >= 0.0 ? 1 : 0;
    case Kind::constant:
      return constant_label;
  }
  return 0;
}

Hypothesis::Hypothesis(Representation rep, Predictor pred)
    : representation(std::move(rep)), predictor(std::move(pred)) {
  const std::size_t zdim = representation.output_dim();
  if (predictor.kind == Predictor::Kind::threshold && predictor.axis >= zdim)
    throw dimension_error("Hypothesis: threshold axis outside the representation output");
  if (predictor.kind == Predictor::Kind::logistic && predictor.weights.size() != zdim)
    throw dimension_error("Hypothesis: logistic weights do not match the representation output");
}

int Hypothesis::predict(std::span<const double> x) const {
  const auto z = representation.apply(x);
  return predictor.predict(z);
}

Loss Loss::zero_one() {
  Loss l;
  l.kind = Kind::zero_one;
  l.M = 1.0;
  return l;
}

Loss Loss::bounded_table(std::array<double, 4> values, double M) {
  if (!(M > 0.0)) throw std::invalid_argument("Loss: M must be > 0");
  for (double v : values)
    if (!(v >= 0.0 && v <= M)) throw std::invalid_argument("Loss: table value outside [0, M]");
  Loss l;
  l.kind = Kind::table;
  l.M = M;
  l.table = values;
  return l;
}

double Loss::operator()(int prediction, int label) const {
  if (kind == Kind::zero_one) return prediction != label ? 1.0 : 0.0;
  return table[static_cast<std::size_t>(prediction) * 2 + static_cast<std::size_t>(label)];
}

std::vector<Hypothesis> HypothesisClass::expand() const {
  std::vector<Hypothesis> all = members;
  for (const auto& spec : grids) {
    const std::size_t zdim = spec.representation.output_dim();
    if (spec.z_box.dim() != zdim) throw dimension_error("ThresholdGridSpec: z_box dimension mismatch");
    if (spec.cutoffs_per_axis < 2) throw std::invalid_argument("ThresholdGridSpec: need at least 2 cutoffs");
    for (std::size_t axis = 0; axis < zdim; ++axis) {
      const double lo = spec.z_box.lower[axis];
      const double hi = spec.z_box.upper[axis];
      for (std::size_t i = 0; i < spec.cutoffs_per_axis; ++i) {
        const double cut = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(spec.cutoffs_per_axis - 1);
        all.emplace_back(spec.representation, Predictor::threshold(axis, cut, true));
        if (spec.both_orientations) all.emplace_back(spec.representation, Predictor::threshold(axis, cut, false));
      }
    }
  }
  if (all.empty()) throw std::invalid_argument("HypothesisClass: empty after expansion");
  return all;
}

namespace {

// Cell-wise expectation of a per-point integrand against a grid or discrete
// density; KDE densities have no exact path. Normalized by the accumulated
// mass so the result stays inside the integrand's range despite the
// density's own normalization residue.
template <typename F>
double exact_expectation(const Density& density, F&& integrand) {
  if (const auto* grid = std::get_if<GridDensity>(&density)) {
    const std::size_t n = grid->layout.cell_count();
    const double vol = grid->layout.cell_volume();
    double acc = 0.0;
    double total = 0.0;
    for (std::size_t flat = 0; flat < n; ++flat) {
      const double mass = grid->cell_values[flat] * vol;
      if (mass == 0.0) continue;
      acc += mass * integrand(grid->layout.cell_center(flat));
      total += mass;
    }
    return acc / total;
  }
  if (const auto* disc = std::get_if<DiscreteDensity>(&density)) {
    double acc = 0.0;
    double total = 0.0;
    for (std::size_t s = 0; s < disc->states(); ++s) {
      if (disc->probabilities[s] == 0.0) continue;
      const double x = static_cast<double>(s);
      acc += disc->probabilities[s] * integrand(std::vector<double>{x});
      total += disc->probabilities[s];
    }
    return acc / total;
  }
  throw std::invalid_argument("exact evaluation is not available for KDE densities");
}

}  // namespace

double risk(const Hypothesis& h, const SyntheticProblem& problem, DomainTag which, const EvalMode& mode,
            const Loss& loss) {
  const Density& density = which == DomainTag::source ? problem.source_density : problem.target_density;
  if (mode.kind == EvalMode::Kind::exact) {
    return exact_expectation(density, [&](const std::vector<double>& x) {
      const int pred = h.predict(x);
      const double p1 = posterior_probability(problem.posterior, x);
      return p1 * loss(pred, 1) + (1.0 - p1) * loss(pred, 0);
    });
  }
  const SampleSet draws = sample(problem, which, mode.n, mode.seed);
  double acc = 0.0;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const auto x = draws.point(i);
    const int pred = h.predict(x);
    if (which == DomainTag::source) {
      acc += loss(pred, (*draws.labels)[i]);
    } else {
      // Target labels are unobserved in practice; Monte Carlo risk draws them
      // from the shared posterior.
      Rng rng = Rng::fork(mode.seed ^ (0x9e37u + i), 2);
      const double p1 = posterior_probability(problem.posterior, x);
      acc += loss(pred, rng.bernoulli(p1) ? 1 : 0);
    }
  }
  return acc / static_cast<double>(draws.size());
}

double disagreement(const Hypothesis& h, const Hypothesis& h2, const Density& density, const EvalMode& mode) {
  if (mode.kind == EvalMode::Kind::exact) {
    return exact_expectation(density, [&](const std::vector<double>& x) {
      return h.predict(x) != h2.predict(x) ? 1.0 : 0.0;
    });
  }
  const SampleSet draws = sample_density(density, mode.n, mode.seed);
  double acc = 0.0;
  for (std::size_t i = 0; i < draws.size(); ++i)
    acc += h.predict(draws.point(i)) != h2.predict(draws.point(i)) ? 1.0 : 0.0;
  return acc / static_cast<double>(draws.size());
}

double h_delta_h(const HypothesisClass& cls, const Density& p, const Density& q, const EvalMode& mode,
                 const PairEnumerationOptions& options) {
  const auto members = cls.expand();
  const std::size_t m = members.size();
  const std::size_t total_pairs = m * (m - 1) / 2;

  auto gap = [&](std::size_t i, std::size_t j) {
    const double dp = disagreement(members[i], members[j], p, mode);
    const double dq = disagreement(members[i], members[j], q, mode);
    return std::abs(dp - dq);
  };

  double best = 0.0;  // the identical pair always contributes 0
  if (total_pairs <= options.max_pairs) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j) best = std::max(best, gap(i, j));
  } else {
    Rng rng(options.seed);
    auto draw_index = [&] {
      const auto i = static_cast<std::size_t>(rng.uniform() * static_cast<double>(m));
      return i >= m ? m - 1 : i;
    };
    for (std::size_t k = 0; k < options.max_pairs; ++k) {
      const std::size_t i = draw_index();
      const std::size_t j = draw_index();
      if (i == j) continue;
      best = std::max(best, gap(std::min(i, j), std::max(i, j)));
    }
  }
  return options.scale * best;
}

double lambda_joint(const HypothesisClass& cls, const SyntheticProblem& problem, const EvalMode& mode,
                    const Loss& loss) {
  const auto members = cls.expand();
  double best = std::numeric_limits<double>::infinity();
  for (const auto& h : members) {
    const double joint = risk(h, problem, DomainTag::source, mode, loss) +
                         risk(h, problem, DomainTag::target, mode, loss);
    best = std::min(best, joint);
  }
  return best;
}

Theorem1Report theorem1_bound(const Hypothesis& h, const HypothesisClass& cls, const SyntheticProblem& problem,
                              const EvalMode& mode, const Loss& loss) {
  Theorem1Report report;
  report.source_risk = risk(h, problem, DomainTag::source, mode, loss);
  report.h_delta_h = h_delta_h(cls, problem.source_density, problem.target_density, mode);
  report.lambda = lambda_joint(cls, problem, mode, loss);
  report.total = report.source_risk + report.h_delta_h + report.lambda;
  if (mode.kind == EvalMode::Kind::exact) {
    const double target_risk = risk(h, problem, DomainTag::target, mode, loss);
    if (target_risk > report.total + 1e-9)
      throw numeric_error("theorem1_bound: bound below the exact target risk; is h in the class?");
  }
  return report;
}

}  // namespace shift_audit
