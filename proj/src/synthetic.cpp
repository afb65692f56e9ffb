#include "shift_audit/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "shift_audit/errors.hpp"
#include "shift_audit/rng.hpp"

namespace shift_audit {

double posterior_probability(const Posterior& posterior, std::span<const double> x) {
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ThresholdPosterior>) {
          if (p.axis >= x.size()) throw dimension_error("posterior: axis out of range");
          return x[p.axis] > p.cutoff ? 1.0 : 0.0;
        } else if constexpr (std::is_same_v<T, CellPosterior>) {
          return p.values[p.layout.cell_index(x)];
        } else {
          if (x.size() != 1) throw dimension_error("posterior: expected a state index");
          const auto idx = static_cast<std::size_t>(std::llround(x[0]));
          if (idx >= p.values.size()) throw std::invalid_argument("posterior: state out of range");
          return p.values[idx];
        }
      },
      posterior);
}

SyntheticProblem make_example1(std::size_t resolution) {
  if (resolution == 0 || resolution % 2 != 0)
    throw std::invalid_argument("make_example1: resolution must be even and positive");

  GridLayout layout{Box{{-1.0, -1.0}, {1.0, 1.0}}, {resolution, resolution}};
  const std::size_t n = layout.cell_count();
  std::vector<double> target(n, 0.0), source(n, 0.0);
  for (std::size_t flat = 0; flat < n; ++flat) {
    const auto c = layout.cell_center(flat);
    const bool x0_pos = c[0] > 0.0;
    const bool x1_pos = c[1] > 0.0;
    if (x0_pos == x1_pos)
      target[flat] = 0.5;  // lower-left and upper-right quadrants
    else
      source[flat] = 0.5;  // upper-left and lower-right quadrants
  }

  SyntheticProblem problem{
      GridDensity(layout, std::move(source)),
      GridDensity(layout, std::move(target)),
      ThresholdPosterior{1, 0.0},
      ProblemDescriptor{"example1", {{"resolution", static_cast<double>(resolution)}}, {}, {}},
  };
  return problem;
}

namespace {

std::vector<double> piecewise_uniform_cells(const GridLayout& layout,
                                            const std::vector<std::pair<std::pair<double, double>, double>>& chunks) {
  // chunks: ((lo, hi), mass); intervals must snap to cell boundaries.
  std::vector<double> values(layout.cell_count(), 0.0);
  const double w = layout.cell_width(0);
  for (const auto& [interval, mass] : chunks) {
    const auto [lo, hi] = interval;
    const double first = (lo - layout.box.lower[0]) / w;
    const double last = (hi - layout.box.lower[0]) / w;
    const auto first_i = static_cast<std::size_t>(std::llround(first));
    const auto last_i = static_cast<std::size_t>(std::llround(last));
    if (std::abs(first - static_cast<double>(first_i)) > 1e-9 ||
        std::abs(last - static_cast<double>(last_i)) > 1e-9)
      throw std::invalid_argument("overlap pair: interval endpoints must snap to the grid");
    const double density = mass / (hi - lo);
    for (std::size_t i = first_i; i < last_i; ++i) values[i] = density;
  }
  // Renormalize away float residue so the GridDensity invariant holds exactly.
  double integral = std::accumulate(values.begin(), values.end(), 0.0) * w;
  for (double& v : values) v /= integral;
  return values;
}

}  // namespace

OverlapPair make_overlap_pair(const OverlapParams& params) {
  if (!(params.disjoint_fraction >= 0.0 && params.disjoint_fraction <= 1.0))
    throw std::invalid_argument("make_overlap_pair: disjoint fraction must be in [0, 1]");
  if (!(params.source_lo < params.source_hi && params.target_lo < params.target_hi &&
        params.disjoint_lo < params.disjoint_hi))
    throw std::invalid_argument("make_overlap_pair: empty interval");
  if (params.target_lo < params.source_lo || params.target_hi > params.source_hi)
    throw std::invalid_argument("make_overlap_pair: problem A target must sit inside the source support");
  if (params.disjoint_lo < params.source_hi)
    throw std::invalid_argument("make_overlap_pair: disjoint interval must lie beyond the source support");

  GridLayout layout{Box{{params.source_lo}, {params.disjoint_hi}}, {params.resolution}};

  auto source_cells = piecewise_uniform_cells(layout, {{{params.source_lo, params.source_hi}, 1.0}});
  auto target_a_cells = piecewise_uniform_cells(layout, {{{params.target_lo, params.target_hi}, 1.0}});
  auto target_b_cells = piecewise_uniform_cells(
      layout, {{{params.source_lo, params.source_hi}, 1.0 - params.disjoint_fraction},
               {{params.disjoint_lo, params.disjoint_hi}, params.disjoint_fraction}});

  // Label flips at the middle of the problem-A target interval; the default
  // 0.4 lands on a cell edge at the default resolution.
  const double label_cut = 0.5 * (params.target_lo + params.target_hi);

  ProblemDescriptor desc_a{"overlap-a",
                           {{"source_lo", params.source_lo},
                            {"source_hi", params.source_hi},
                            {"target_lo", params.target_lo},
                            {"target_hi", params.target_hi},
                            {"resolution", static_cast<double>(params.resolution)},
                            {"recorded_sigma", params.recorded_sigma},
                            {"recorded_eps", params.recorded_eps}},
                           {},
                           {}};
  ProblemDescriptor desc_b = desc_a;
  desc_b.kind = "overlap-b";
  desc_b.params["disjoint_lo"] = params.disjoint_lo;
  desc_b.params["disjoint_hi"] = params.disjoint_hi;
  desc_b.params["disjoint_fraction"] = params.disjoint_fraction;

  OverlapPair pair{
      SyntheticProblem{GridDensity(layout, source_cells), GridDensity(layout, std::move(target_a_cells)),
                       ThresholdPosterior{0, label_cut}, std::move(desc_a)},
      SyntheticProblem{GridDensity(layout, std::move(source_cells)), GridDensity(layout, std::move(target_b_cells)),
                       ThresholdPosterior{0, label_cut}, std::move(desc_b)},
      params,
  };
  return pair;
}

SyntheticProblem make_cluster_grid(const ClusterGridParams& params) {
  if (params.clusters == 0 || params.clusters != params.cols * params.rows)
    throw std::invalid_argument("make_cluster_grid: clusters must equal cols * rows");
  std::vector<int> labels = params.labels;
  if (labels.empty()) {
    labels.resize(params.clusters);
    for (std::size_t c = 0; c < params.clusters; ++c) labels[c] = static_cast<int>(c % 2);
  }
  if (labels.size() != params.clusters)
    throw std::invalid_argument("make_cluster_grid: labels size must equal cluster count");

  const std::size_t res_x = params.cols * params.cells_per_tile;
  const std::size_t res_y = params.rows * params.cells_per_tile;
  GridLayout layout{Box{{0.0, 0.0}, {static_cast<double>(params.cols), static_cast<double>(params.rows)}},
                    {res_x, res_y}};

  const std::size_t n = layout.cell_count();
  std::vector<double> cells(n, 0.0);
  std::vector<double> posterior(n, 0.0);
  const double weight = 1.0 / static_cast<double>(params.clusters);
  const double sd = params.spread;  // tile width is 1 by construction

  for (std::size_t c = 0; c < params.clusters; ++c) {
    const std::size_t col = c % params.cols;
    const std::size_t row = c / params.cols;
    const double cx = static_cast<double>(col) + 0.5;
    const double cy = static_cast<double>(row) + 0.5;

    // Unnormalized truncated Gaussian over the tile's cells.
    std::vector<std::size_t> tile_cells;
    std::vector<double> tile_values;
    for (std::size_t ix = col * params.cells_per_tile; ix < (col + 1) * params.cells_per_tile; ++ix)
      for (std::size_t iy = row * params.cells_per_tile; iy < (row + 1) * params.cells_per_tile; ++iy) {
        const std::size_t flat = ix * res_y + iy;
        const auto center = layout.cell_center(flat);
        const double dx = (center[0] - cx) / sd;
        const double dy = (center[1] - cy) / sd;
        tile_cells.push_back(flat);
        tile_values.push_back(std::exp(-0.5 * (dx * dx + dy * dy)));
      }
    const double tile_sum = std::accumulate(tile_values.begin(), tile_values.end(), 0.0) * layout.cell_volume();
    for (std::size_t i = 0; i < tile_cells.size(); ++i) {
      cells[tile_cells[i]] += weight * tile_values[i] / tile_sum;
      posterior[tile_cells[i]] = static_cast<double>(labels[c]);
    }
  }

  double integral = std::accumulate(cells.begin(), cells.end(), 0.0) * layout.cell_volume();
  for (double& v : cells) v /= integral;

  ProblemDescriptor desc{"cluster-grid",
                         {{"clusters", static_cast<double>(params.clusters)},
                          {"cols", static_cast<double>(params.cols)},
                          {"rows", static_cast<double>(params.rows)},
                          {"cells_per_tile", static_cast<double>(params.cells_per_tile)},
                          {"spread", params.spread}},
                         {},
                         labels};

  GridDensity density(layout, cells);
  return SyntheticProblem{density, GridDensity(layout, std::move(cells)),
                          CellPosterior{layout, std::move(posterior)}, std::move(desc)};
}

namespace {

SyntheticProblem reweight_cluster_target(const SyntheticProblem& base, const std::vector<double>& weights,
                                         std::vector<std::size_t> removed_for_descriptor) {
  if (base.descriptor.kind != "cluster-grid" && base.descriptor.kind != "label-shift")
    throw std::invalid_argument("make_label_shift: base must be a cluster-grid problem");
  const auto& grid = std::get<GridDensity>(base.source_density);
  const auto cols = static_cast<std::size_t>(base.descriptor.params.at("cols"));
  const auto rows = static_cast<std::size_t>(base.descriptor.params.at("rows"));
  const auto cells_per_tile = static_cast<std::size_t>(base.descriptor.params.at("cells_per_tile"));
  const std::size_t clusters = cols * rows;
  if (weights.size() != clusters) throw std::invalid_argument("make_label_shift: weight count mismatch");
  double total_weight = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("make_label_shift: negative cluster weight");
    total_weight += w;
  }
  if (!(total_weight > 0.0)) throw std::invalid_argument("make_label_shift: all clusters removed");

  ProblemDescriptor desc = base.descriptor;
  desc.kind = "label-shift";
  desc.removed_clusters = std::move(removed_for_descriptor);

  const bool identity = std::all_of(weights.begin(), weights.end(), [](double w) { return w == 1.0; });
  if (identity)
    return SyntheticProblem{base.source_density, base.target_density, base.posterior, std::move(desc)};

  const std::size_t res_y = grid.layout.resolution[1];
  std::vector<double> cells = grid.cell_values;
  for (std::size_t c = 0; c < clusters; ++c) {
    const std::size_t col = c % cols;
    const std::size_t row = c / cols;
    const double scale = weights[c];
    for (std::size_t ix = col * cells_per_tile; ix < (col + 1) * cells_per_tile; ++ix)
      for (std::size_t iy = row * cells_per_tile; iy < (row + 1) * cells_per_tile; ++iy)
        cells[ix * res_y + iy] *= scale;
  }
  double integral = std::accumulate(cells.begin(), cells.end(), 0.0) * grid.layout.cell_volume();
  for (double& v : cells) v /= integral;

  return SyntheticProblem{base.source_density, GridDensity(grid.layout, std::move(cells)), base.posterior,
                          std::move(desc)};
}

}  // namespace

SyntheticProblem make_label_shift(const SyntheticProblem& base, const std::vector<std::size_t>& removed_clusters) {
  const auto cols = static_cast<std::size_t>(base.descriptor.params.at("cols"));
  const auto rows = static_cast<std::size_t>(base.descriptor.params.at("rows"));
  std::vector<double> weights(cols * rows, 1.0);
  for (std::size_t c : removed_clusters) {
    if (c >= weights.size()) throw std::invalid_argument("make_label_shift: cluster index out of range");
    weights[c] = 0.0;
  }
  return reweight_cluster_target(base, weights, removed_clusters);
}

SyntheticProblem make_label_shift(const SyntheticProblem& base, const std::vector<double>& target_cluster_weights) {
  std::vector<std::size_t> removed;
  for (std::size_t c = 0; c < target_cluster_weights.size(); ++c)
    if (target_cluster_weights[c] == 0.0) removed.push_back(c);
  return reweight_cluster_target(base, target_cluster_weights, removed);
}

namespace {

std::vector<double> cumulative_cell_masses(const GridDensity& grid) {
  std::vector<double> cumulative(grid.cell_values.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < grid.cell_values.size(); ++i) {
    acc += grid.cell_values[i] * grid.layout.cell_volume();
    cumulative[i] = acc;
  }
  return cumulative;
}

std::vector<double> draw_point(const GridDensity& grid, const std::vector<double>& cumulative, Rng& rng) {
  const std::size_t flat = rng.categorical_from_cumulative(cumulative);
  const auto coords = grid.layout.cell_coords(flat);
  std::vector<double> x(grid.dim());
  for (std::size_t a = 0; a < grid.dim(); ++a) {
    const double w = grid.layout.cell_width(a);
    x[a] = grid.layout.box.lower[a] + (static_cast<double>(coords[a]) + rng.uniform()) * w;
  }
  return x;
}

}  // namespace

SampleSet sample_density(const Density& density, std::size_t n, std::uint64_t seed, DomainTag tag) {
  Rng rng(seed);
  return std::visit(
      [&](const auto& d) -> SampleSet {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, DiscreteDensity>) {
          std::vector<double> cumulative(d.states());
          double acc = 0.0;
          for (std::size_t i = 0; i < d.states(); ++i) {
            acc += d.probabilities[i];
            cumulative[i] = acc;
          }
          SampleSet out(1, tag);
          for (std::size_t i = 0; i < n; ++i) {
            const double state = static_cast<double>(rng.categorical_from_cumulative(cumulative));
            out.append(std::span<const double>(&state, 1));
          }
          return out;
        } else if constexpr (std::is_same_v<T, GridDensity>) {
          const auto cumulative = cumulative_cell_masses(d);
          SampleSet out(d.dim(), tag);
          for (std::size_t i = 0; i < n; ++i) out.append(draw_point(d, cumulative, rng));
          return out;
        } else {
          SampleSet out(d.dim, tag);
          std::vector<double> x(d.dim);
          for (std::size_t i = 0; i < n; ++i) {
            const std::size_t pick = static_cast<std::size_t>(rng.uniform() * static_cast<double>(d.size()));
            const std::size_t j = pick >= d.size() ? d.size() - 1 : pick;
            for (std::size_t a = 0; a < d.dim; ++a)
              x[a] = d.support_points[j * d.dim + a] + d.bandwidth[a] * rng.normal();
            out.append(x);
          }
          return out;
        }
      },
      density);
}

SampleSet sample(const SyntheticProblem& problem, DomainTag which, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample: n must be >= 1");
  const std::uint64_t stream = which == DomainTag::source ? 0 : 1;
  Rng rng = Rng::fork(seed, stream);
  const Density& density = which == DomainTag::source ? problem.source_density : problem.target_density;

  if (const auto* discrete = std::get_if<DiscreteDensity>(&density)) {
    std::vector<double> cumulative(discrete->states());
    double acc = 0.0;
    for (std::size_t s = 0; s < discrete->states(); ++s) {
      acc += discrete->probabilities[s];
      cumulative[s] = acc;
    }
    SampleSet out(1, which);
    for (std::size_t i = 0; i < n; ++i) {
      const double state = static_cast<double>(rng.categorical_from_cumulative(cumulative));
      const std::span<const double> x(&state, 1);
      if (which == DomainTag::source) {
        const double p1 = posterior_probability(problem.posterior, x);
        out.append(x, rng.bernoulli(p1) ? 1 : 0);
      } else {
        out.append(x);
      }
    }
    return out;
  }

  const auto* grid = std::get_if<GridDensity>(&density);
  if (!grid) throw std::invalid_argument("sample: problem densities must be grid or discrete");
  const auto cumulative = cumulative_cell_masses(*grid);

  SampleSet out(grid->dim(), which);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = draw_point(*grid, cumulative, rng);
    if (which == DomainTag::source) {
      const double p1 = posterior_probability(problem.posterior, x);
      out.append(x, rng.bernoulli(p1) ? 1 : 0);
    } else {
      out.append(x);
    }
  }
  return out;
}

}  // namespace shift_audit
