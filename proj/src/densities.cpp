#include "shift_audit/densities.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "shift_audit/errors.hpp"

namespace shift_audit {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

void SampleSet::append(std::span<const double> x, std::optional<int> label) {
  if (x.size() != dim) throw dimension_error("SampleSet::append: point dimension mismatch");
  data.insert(data.end(), x.begin(), x.end());
  if (label.has_value()) {
    if (!labels.has_value()) labels.emplace();
    labels->push_back(*label);
  }
}

void SampleSet::validate() const {
  if (dim == 0 && !data.empty()) throw std::invalid_argument("SampleSet: dim is 0 but data is not empty");
  if (dim != 0 && data.size() % dim != 0) throw std::invalid_argument("SampleSet: data size is not a multiple of dim");
  if (labels.has_value()) {
    if (labels->size() != size()) throw std::invalid_argument("SampleSet: label count differs from point count");
    for (int y : *labels)
      if (y != 0 && y != 1) throw std::invalid_argument("SampleSet: labels must be 0 or 1");
  }
}

DiscreteDensity::DiscreteDensity(std::vector<double> probs) : probabilities(std::move(probs)) {
  if (probabilities.empty()) throw std::invalid_argument("DiscreteDensity: empty state space");
  double sum = 0.0;
  for (double p : probabilities) {
    if (!(p >= 0.0)) throw std::invalid_argument("DiscreteDensity: negative probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("DiscreteDensity: probabilities sum to " + std::to_string(sum));
}

double Box::volume() const {
  double v = 1.0;
  for (std::size_t a = 0; a < dim(); ++a) v *= upper[a] - lower[a];
  return v;
}

void Box::validate() const {
  if (lower.size() != upper.size()) throw std::invalid_argument("Box: lower/upper dimension mismatch");
  if (lower.empty()) throw std::invalid_argument("Box: zero-dimensional box");
  for (std::size_t a = 0; a < dim(); ++a)
    if (!(lower[a] < upper[a])) throw std::invalid_argument("Box: lower must be strictly below upper on every axis");
}

std::size_t GridLayout::cell_count() const {
  std::size_t n = 1;
  for (std::size_t r : resolution) n *= r;
  return n;
}

double GridLayout::cell_volume() const {
  double v = 1.0;
  for (std::size_t a = 0; a < dim(); ++a) v *= cell_width(a);
  return v;
}

double GridLayout::cell_width(std::size_t axis) const {
  return (box.upper[axis] - box.lower[axis]) / static_cast<double>(resolution[axis]);
}

bool GridLayout::contains(std::span<const double> x) const {
  for (std::size_t a = 0; a < dim(); ++a)
    if (x[a] < box.lower[a] || x[a] > box.upper[a]) return false;
  return true;
}

std::size_t GridLayout::axis_index(std::size_t axis, double x) const {
  const double lo = box.lower[axis];
  const double w = cell_width(axis);
  if (x <= lo) return 0;
  double r = std::ceil((x - lo) / w) - 1.0;
  if (r < 0.0) r = 0.0;
  std::size_t j = static_cast<std::size_t>(r);
  if (j >= resolution[axis]) j = resolution[axis] - 1;
  return j;
}

std::size_t GridLayout::cell_index(std::span<const double> x) const {
  if (x.size() != dim()) throw dimension_error("GridLayout: point dimension mismatch");
  if (!contains(x)) throw std::invalid_argument("GridLayout: point outside the box");
  std::size_t flat = 0;
  for (std::size_t a = 0; a < dim(); ++a) flat = flat * resolution[a] + axis_index(a, x[a]);
  return flat;
}

std::vector<std::size_t> GridLayout::cell_coords(std::size_t flat) const {
  std::vector<std::size_t> coords(dim());
  for (std::size_t a = dim(); a-- > 0;) {
    coords[a] = flat % resolution[a];
    flat /= resolution[a];
  }
  return coords;
}

std::vector<double> GridLayout::cell_center(std::size_t flat) const {
  auto coords = cell_coords(flat);
  std::vector<double> center(dim());
  for (std::size_t a = 0; a < dim(); ++a)
    center[a] = box.lower[a] + (static_cast<double>(coords[a]) + 0.5) * cell_width(a);
  return center;
}

void GridLayout::validate() const {
  box.validate();
  if (resolution.size() != box.dim()) throw std::invalid_argument("GridLayout: resolution/box dimension mismatch");
  for (std::size_t r : resolution)
    if (r == 0) throw std::invalid_argument("GridLayout: zero cells on an axis");
}

GridDensity::GridDensity(GridLayout layout_, std::vector<double> values)
    : layout(std::move(layout_)), cell_values(std::move(values)) {
  layout.validate();
  if (cell_values.size() != layout.cell_count()) throw std::invalid_argument("GridDensity: cell value count mismatch");
  double integral = 0.0;
  for (double v : cell_values) {
    if (!(v >= 0.0)) throw std::invalid_argument("GridDensity: negative cell value");
    integral += v;
  }
  integral *= layout.cell_volume();
  if (std::abs(integral - 1.0) > 1e-9)
    throw std::invalid_argument("GridDensity: integral over the box is " + std::to_string(integral));
}

double GridDensity::value_at(std::span<const double> x) const {
  if (x.size() != dim()) throw dimension_error("GridDensity: point dimension mismatch");
  if (!layout.contains(x)) return 0.0;
  return cell_values[layout.cell_index(x)];
}

double KdeDensity::value_at(std::span<const double> x) const {
  if (x.size() != dim) throw dimension_error("KdeDensity: point dimension mismatch");
  double norm = 1.0;
  for (double h : bandwidth) norm *= h * std::sqrt(kTwoPi);
  const std::size_t n = size();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double e = 0.0;
    for (std::size_t a = 0; a < dim; ++a) {
      const double u = (x[a] - support_points[i * dim + a]) / bandwidth[a];
      e += u * u;
    }
    sum += std::exp(-0.5 * e);
  }
  return sum / (static_cast<double>(n) * norm);
}

std::size_t density_dim(const Density& density) {
  return std::visit(
      [](const auto& d) -> std::size_t {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, DiscreteDensity>)
          return 1;
        else if constexpr (std::is_same_v<T, GridDensity>)
          return d.dim();
        else
          return d.dim;
      },
      density);
}

double evaluate_density(const Density& density, std::span<const double> point) {
  return std::visit(
      [&](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, DiscreteDensity>) {
          if (point.size() != 1) throw dimension_error("DiscreteDensity: expected a 1-tuple state index");
          const double s = point[0];
          const auto idx = static_cast<long long>(std::llround(s));
          if (std::abs(s - static_cast<double>(idx)) > 1e-9 || idx < 0 ||
              idx >= static_cast<long long>(d.states()))
            throw std::invalid_argument("DiscreteDensity: point is not a valid state index");
          return d.probabilities[static_cast<std::size_t>(idx)];
        } else {
          return d.value_at(point);
        }
      },
      density);
}

double integrate(const GridDensity& density, const Box& region) {
  region.validate();
  if (region.dim() != density.dim()) throw dimension_error("integrate: region dimension mismatch");
  const auto& layout = density.layout;

  // Per-axis clipped extent; empty intersection violates the precondition.
  std::vector<double> lo(layout.dim()), hi(layout.dim());
  for (std::size_t a = 0; a < layout.dim(); ++a) {
    lo[a] = std::max(region.lower[a], layout.box.lower[a]);
    hi[a] = std::min(region.upper[a], layout.box.upper[a]);
    if (!(lo[a] < hi[a])) throw std::invalid_argument("integrate: region does not intersect the box");
  }

  // Overlap length of each cell with [lo, hi] per axis.
  std::vector<std::vector<double>> overlap(layout.dim());
  for (std::size_t a = 0; a < layout.dim(); ++a) {
    const double w = layout.cell_width(a);
    overlap[a].resize(layout.resolution[a]);
    for (std::size_t j = 0; j < layout.resolution[a]; ++j) {
      const double c_lo = layout.box.lower[a] + static_cast<double>(j) * w;
      const double c_hi = c_lo + w;
      overlap[a][j] = std::max(0.0, std::min(hi[a], c_hi) - std::max(lo[a], c_lo));
    }
  }

  double total = 0.0;
  const std::size_t n = layout.cell_count();
  for (std::size_t flat = 0; flat < n; ++flat) {
    double frac = density.cell_values[flat];
    if (frac == 0.0) continue;
    std::size_t rem = flat;
    for (std::size_t a = layout.dim(); a-- > 0;) {
      frac *= overlap[a][rem % layout.resolution[a]];
      rem /= layout.resolution[a];
    }
    total += frac;
  }
  return total;
}

KdeDensity fit_kde(const SampleSet& samples, const BandwidthRule& rule) {
  samples.validate();
  const std::size_t n = samples.size();
  if (n == 0) throw std::invalid_argument("fit_kde: empty sample set");

  KdeDensity kde;
  kde.dim = samples.dim;
  kde.support_points = samples.data;
  kde.bandwidth.resize(samples.dim);

  if (rule.kind == BandwidthRule::Kind::fixed) {
    if (!(rule.fixed_value > 0.0)) throw std::invalid_argument("fit_kde: fixed bandwidth must be > 0");
    std::fill(kde.bandwidth.begin(), kde.bandwidth.end(), rule.fixed_value);
    return kde;
  }

  if (n < 2) throw std::invalid_argument("fit_kde: Silverman rule needs at least 2 samples");
  const double n_pow = std::pow(static_cast<double>(n), -0.2);
  for (std::size_t a = 0; a < samples.dim; ++a) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += samples.data[i * samples.dim + a];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = samples.data[i * samples.dim + a] - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0))
      throw std::invalid_argument("fit_kde: zero sample variance on axis " + std::to_string(a) +
                                  " under the Silverman rule; use a fixed bandwidth");
    kde.bandwidth[a] = 1.06 * sd * n_pow;
  }
  return kde;
}

double density_quantile(const Density& density, const SampleSet& probe_points, double q) {
  probe_points.validate();
  const std::size_t n = probe_points.size();
  if (n == 0) throw std::invalid_argument("density_quantile: empty probe set");
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("density_quantile: q must be in (0,1)");
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = evaluate_density(density, probe_points.point(i));
  std::sort(values.begin(), values.end());
  std::size_t k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
  if (k < 1) k = 1;
  if (k > n) k = n;
  return values[k - 1];
}

GridDensity to_grid(const DiscreteDensity& density) {
  const std::size_t k = density.states();
  GridLayout layout{Box{{0.0}, {static_cast<double>(k)}}, {k}};
  return GridDensity(std::move(layout), density.probabilities);
}

}  // namespace shift_audit
