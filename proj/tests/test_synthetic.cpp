#include <doctest.h>

#include <cmath>
#include <map>

#include "shift_audit/divergence.hpp"
#include "shift_audit/synthetic.hpp"

using namespace shift_audit;

TEST_CASE("example1 densities and posterior match the construction") {
  const SyntheticProblem problem = make_example1(100);
  const std::vector<double> upper_right = {0.5, 0.5};
  const std::vector<double> lower_left = {-0.5, -0.5};
  const std::vector<double> upper_left = {-0.5, 0.5};

  CHECK(evaluate_density(problem.target_density, upper_right) == doctest::Approx(0.5));
  CHECK(evaluate_density(problem.target_density, lower_left) == doctest::Approx(0.5));
  CHECK(evaluate_density(problem.target_density, upper_left) == 0.0);
  CHECK(evaluate_density(problem.source_density, upper_right) == 0.0);
  CHECK(evaluate_density(problem.source_density, upper_left) == doctest::Approx(0.5));

  CHECK(posterior_probability(problem.posterior, std::vector<double>{0.3, -0.7}) == 0.0);
  CHECK(posterior_probability(problem.posterior, std::vector<double>{0.3, 0.7}) == 1.0);

  // both quadrant pairs integrate to one
  const auto& target = std::get<GridDensity>(problem.target_density);
  CHECK(integrate(target, Box{{0.0, 0.0}, {1.0, 1.0}}) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(integrate(target, Box{{-1.0, -1.0}, {1.0, 1.0}}) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS(make_example1(101));
}

TEST_CASE("overlap pair satisfies its recorded guarantees") {
  const OverlapPair pair = make_overlap_pair();
  const auto& source = std::get<GridDensity>(pair.problem_a.source_density);
  const auto& target_a = std::get<GridDensity>(pair.problem_a.target_density);
  const auto& target_b = std::get<GridDensity>(pair.problem_b.target_density);

  // problem A: source clears recorded_eps everywhere the target lives
  double min_source_on_target = 1e300;
  for (std::size_t c = 0; c < target_a.cell_values.size(); ++c)
    if (target_a.cell_values[c] > 0.0) min_source_on_target = std::min(min_source_on_target, source.cell_values[c]);
  CHECK(min_source_on_target >= pair.params.recorded_eps);

  // problem B: exactly the disjoint fraction sits outside the source support
  double outside_mass = 0.0;
  for (std::size_t c = 0; c < target_b.cell_values.size(); ++c)
    if (source.cell_values[c] == 0.0) outside_mass += target_b.cell_values[c] * target_b.layout.cell_volume();
  CHECK(outside_mass == doctest::Approx(pair.params.disjoint_fraction).epsilon(1e-9));

  CHECK_THROWS(make_overlap_pair(OverlapParams{.disjoint_fraction = 1.5}));
}

TEST_CASE("overlap pair reproduces the divergence-vs-mmd contrast") {
  const OverlapPair pair = make_overlap_pair();
  const Epsilon eps(pair.params.recorded_eps);
  const auto& source = std::get<GridDensity>(pair.problem_a.source_density);
  const auto& target_a = std::get<GridDensity>(pair.problem_a.target_density);
  const auto& target_b = std::get<GridDensity>(pair.problem_b.target_density);

  CHECK(support_divergence_exact(source, target_a, eps).value == 0.0);
  CHECK(support_divergence_exact(source, target_b, eps).value == doctest::Approx(1.0 / 3.0).epsilon(1e-9));

  // at the recorded bandwidth, the density-distance ordering is reversed
  const Kernel kernel = Kernel::gaussian(pair.params.recorded_sigma);
  const std::size_t n = 1000;
  const double mmd_a = mmd_squared(sample(pair.problem_a, DomainTag::source, n, 11),
                                   sample(pair.problem_a, DomainTag::target, n, 11), kernel)
                           .value;
  const double mmd_b = mmd_squared(sample(pair.problem_b, DomainTag::source, n, 11),
                                   sample(pair.problem_b, DomainTag::target, n, 11), kernel)
                           .value;
  CHECK(mmd_a > mmd_b);
  CHECK(mmd_b > 0.0);
}

TEST_CASE("cluster grid: tiles, labels and removal") {
  ClusterGridParams params;
  params.clusters = 2;
  params.cols = 2;
  params.rows = 1;
  params.labels = {0, 1};
  const SyntheticProblem base = make_cluster_grid(params);

  // removing cluster 0 empties the label-0 region of the target
  const SyntheticProblem shifted = make_label_shift(base, std::vector<std::size_t>{0});
  const auto& target = std::get<GridDensity>(shifted.target_density);
  double label0_mass = 0.0;
  for (std::size_t c = 0; c < target.cell_values.size(); ++c) {
    const auto center = target.layout.cell_center(c);
    const double mass = target.cell_values[c] * target.layout.cell_volume();
    if (posterior_probability(shifted.posterior, center) < 0.5) label0_mass += mass;
  }
  CHECK(label0_mass == 0.0);

  // source unchanged
  const auto& base_source = std::get<GridDensity>(base.source_density);
  const auto& shifted_source = std::get<GridDensity>(shifted.source_density);
  CHECK(base_source.cell_values == shifted_source.cell_values);

  // removing nothing is the identity perturbation
  const SyntheticProblem same = make_label_shift(base, std::vector<std::size_t>{});
  CHECK(std::get<GridDensity>(same.target_density).cell_values == std::get<GridDensity>(base.target_density).cell_values);

  CHECK_THROWS(make_label_shift(base, std::vector<std::size_t>{0, 1}));
  CHECK_THROWS(make_cluster_grid(ClusterGridParams{.clusters = 3, .cols = 2, .rows = 1}));
}

TEST_CASE("label shift keeps support inside the source while mmd grows") {
  ClusterGridParams params;  // 10 clusters, 5 x 2
  params.labels = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
  const SyntheticProblem base = make_cluster_grid(params);
  const SyntheticProblem shifted = make_label_shift(base, std::vector<std::size_t>{5, 6, 7});

  const auto& source = std::get<GridDensity>(shifted.source_density);
  const auto& target = std::get<GridDensity>(shifted.target_density);

  double min_source_on_target = 1e300;
  for (std::size_t c = 0; c < source.cell_values.size(); ++c)
    if (target.cell_values[c] > 0.0) min_source_on_target = std::min(min_source_on_target, source.cell_values[c]);
  CHECK(min_source_on_target > 0.0);

  // small eps: target support inside source support means zero divergence
  CHECK(support_divergence_exact(source, target, Epsilon(0.5 * min_source_on_target)).value == 0.0);

  const Kernel kernel = Kernel::gaussian(0.5);
  const double mmd = mmd_squared(sample(shifted, DomainTag::source, 500, 5),
                                 sample(shifted, DomainTag::target, 500, 5), kernel)
                         .value;
  CHECK(mmd > 0.01);
}

TEST_CASE("sampling is reproducible and respects supports") {
  const SyntheticProblem problem = make_example1(100);
  const SampleSet a = sample(problem, DomainTag::source, 500, 9);
  const SampleSet b = sample(problem, DomainTag::source, 500, 9);
  CHECK(a.data == b.data);
  CHECK(*a.labels == *b.labels);
  const SampleSet c = sample(problem, DomainTag::source, 500, 10);
  CHECK(a.data != c.data);

  // source draws live in the upper-left and lower-right quadrants only
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto x = a.point(i);
    CHECK(((x[0] <= 0.0 && x[1] >= 0.0) || (x[0] >= 0.0 && x[1] <= 0.0)));
    // labels follow the posterior deterministically here
    CHECK((*a.labels)[i] == (x[1] > 0.0 ? 1 : 0));
  }

  const SampleSet t = sample(problem, DomainTag::target, 100, 9);
  CHECK_FALSE(t.labels.has_value());
}

TEST_CASE("source label frequency matches the quadrant symmetry") {
  const SyntheticProblem problem = make_example1(100);
  const SampleSet draws = sample(problem, DomainTag::source, 10000, 17);
  double ones = 0.0;
  for (int y : *draws.labels) ones += y;
  CHECK(ones / 10000.0 == doctest::Approx(0.5).epsilon(0.04));
}

TEST_CASE("empirical cell masses match the generator in total variation") {
  const SyntheticProblem problem = make_example1(20);
  const auto& target = std::get<GridDensity>(problem.target_density);
  const SampleSet draws = sample(problem, DomainTag::target, 100000, 23);

  std::vector<double> counts(target.layout.cell_count(), 0.0);
  for (std::size_t i = 0; i < draws.size(); ++i) counts[target.layout.cell_index(draws.point(i))] += 1.0;
  double tv = 0.0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    const double expected = target.cell_values[c] * target.layout.cell_volume();
    tv += std::abs(counts[c] / 100000.0 - expected);
  }
  CHECK(tv / 2.0 <= 0.03);
}

TEST_CASE("sample requires n >= 1") { CHECK_THROWS(sample(make_example1(10), DomainTag::source, 0, 1)); }
