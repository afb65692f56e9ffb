#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace shift_audit {

enum class DomainTag { source, target };

// Labeled or unlabeled point cloud, row-major n x dim.
struct SampleSet {
  std::size_t dim = 0;
  std::vector<double> data;
  std::optional<std::vector<int>> labels;  // each in {0, 1} when present
  DomainTag domain = DomainTag::source;

  SampleSet() = default;
  SampleSet(std::size_t dim_, DomainTag tag) : dim(dim_), domain(tag) {}

  std::size_t size() const { return dim == 0 ? 0 : data.size() / dim; }
  std::span<const double> point(std::size_t i) const { return {data.data() + i * dim, dim}; }
  void append(std::span<const double> x, std::optional<int> label = std::nullopt);
  void validate() const;
};

// Probability masses over a finite state space. States are addressed by index;
// as a point in R^1 a state is its index.
struct DiscreteDensity {
  std::vector<double> probabilities;

  explicit DiscreteDensity(std::vector<double> probs);
  std::size_t states() const { return probabilities.size(); }
};

struct Box {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t dim() const { return lower.size(); }
  double volume() const;
  void validate() const;
};

// Axis-aligned cell geometry shared by grid densities and cell-wise posteriors.
// Cell j on an axis covers (lo + j*w, lo + (j+1)*w]; points exactly on a cell
// boundary belong to the lower-index cell, and the lowest cell includes lo.
struct GridLayout {
  Box box;
  std::vector<std::size_t> resolution;  // cells per axis

  std::size_t dim() const { return box.dim(); }
  std::size_t cell_count() const;
  double cell_volume() const;
  double cell_width(std::size_t axis) const;
  bool contains(std::span<const double> x) const;
  // Flat row-major cell index; throws if x is outside the box.
  std::size_t cell_index(std::span<const double> x) const;
  std::size_t axis_index(std::size_t axis, double x) const;
  std::vector<double> cell_center(std::size_t flat) const;
  std::vector<std::size_t> cell_coords(std::size_t flat) const;
  void validate() const;
};

// Piecewise-constant density over a grid; cell_values are in density units
// (mass per unit volume) and Riemann-integrate to 1 over the box.
struct GridDensity {
  GridLayout layout;
  std::vector<double> cell_values;

  GridDensity(GridLayout layout_, std::vector<double> values);
  std::size_t dim() const { return layout.dim(); }
  double value_at(std::span<const double> x) const;  // 0 outside the box
  double cell_mass(std::size_t flat) const { return cell_values[flat] * layout.cell_volume(); }
};

enum class KernelFamily { gaussian };

// Gaussian product-kernel density estimate with a per-axis bandwidth.
struct KdeDensity {
  std::size_t dim = 0;
  std::vector<double> support_points;  // row-major n x dim
  std::vector<double> bandwidth;       // per axis, > 0
  KernelFamily family = KernelFamily::gaussian;

  std::size_t size() const { return dim == 0 ? 0 : support_points.size() / dim; }
  double value_at(std::span<const double> x) const;
};

// KdeDensity first: the variant (and pybind's caster for it) must be
// default-constructible, and the other two alternatives validate on
// construction.
using Density = std::variant<KdeDensity, DiscreteDensity, GridDensity>;

// Ambient dimension of points the density is evaluated at (1 for discrete).
std::size_t density_dim(const Density& density);

double evaluate_density(const Density& density, std::span<const double> point);

// Integral of a grid density over an axis-aligned region; region edges that do
// not snap to cell boundaries are handled by partial-cell linear weighting.
double integrate(const GridDensity& density, const Box& region);

struct BandwidthRule {
  enum class Kind { fixed, silverman };
  Kind kind = Kind::silverman;
  double fixed_value = 0.0;  // used when kind == fixed; > 0

  static BandwidthRule fixed(double value) { return {Kind::fixed, value}; }
  static BandwidthRule silverman() { return {Kind::silverman, 0.0}; }
};

// Gaussian KDE fit. Silverman picks 1.06 * sd_a * n^(-1/5) per axis from the
// unbiased sample standard deviation; a zero-variance axis is an error there
// (callers fall back to a fixed bandwidth).
KdeDensity fit_kde(const SampleSet& samples, const BandwidthRule& rule);

// q-quantile of the density evaluated over the probe points: with the n values
// sorted ascending, returns the ceil(q*n)-th order statistic.
double density_quantile(const Density& density, const SampleSet& probe_points, double q);

// Discrete density reinterpreted as a grid of unit cells over [0, K]; state i
// becomes cell i, so probabilities double as density values.
GridDensity to_grid(const DiscreteDensity& density);

}  // namespace shift_audit
