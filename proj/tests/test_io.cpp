#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "shift_audit/errors.hpp"
#include "shift_audit/io.hpp"

using namespace shift_audit;

TEST_CASE("sample csv round trip preserves points, labels and domain") {
  SampleSet samples(2, DomainTag::target);
  samples.labels.emplace();
  const double a[2] = {0.125, -3.5};
  const double b[2] = {1e-9, 42.0};
  samples.append(a, 1);
  samples.append(b, 0);

  const std::string text = sample_csv_text(samples);
  const SampleSet parsed = read_sample_csv_text(text, "mem");
  CHECK(parsed.dim == 2);
  CHECK(parsed.data == samples.data);
  CHECK(*parsed.labels == *samples.labels);
  CHECK(parsed.domain == DomainTag::target);
  CHECK(text.find("\r") == std::string::npos);
}

TEST_CASE("csv parse errors carry row and column positions") {
  CHECK_THROWS_AS(read_sample_csv_text("", "f"), parse_error);
  CHECK_THROWS_AS(read_sample_csv_text("a,b\n1,2\n", "f"), parse_error);

  try {
    read_sample_csv_text("x0,x1\n0.5,oops\n", "f");
    FAIL("expected parse_error");
  } catch (const parse_error& e) {
    CHECK(e.row() == 2);
    CHECK(e.column() == 2);
  }

  try {
    read_sample_csv_text("x0,y\n0.5,1\n0.25\n", "f");
    FAIL("expected parse_error");
  } catch (const parse_error& e) {
    CHECK(e.row() == 3);
  }

  CHECK_THROWS_AS(read_sample_csv_text("x0,y\n1.0,7\n", "f"), parse_error);
  CHECK_THROWS_AS(read_sample_csv_text("x0,domain\n1.0,source\n2.0,target\n", "f"), parse_error);
  CHECK_THROWS_AS(read_sample_csv_text("x0\n", "f"), parse_error);  // header only
}

TEST_CASE("hypothesis json round trip") {
  const Hypothesis h(Representation::variable_selection(2, {1}), Predictor::threshold(0, 0.25, false));
  const Hypothesis parsed = hypothesis_from_json(to_json(h));
  CHECK(parsed.representation.kind == Representation::Kind::variable_selection);
  CHECK(parsed.representation.indices == std::vector<std::size_t>{1});
  CHECK(parsed.predictor.cutoff == 0.25);
  CHECK_FALSE(parsed.predictor.positive_above);

  const Hypothesis logistic(Representation::linear_projection(2, 1, {0.5, -0.5}),
                            Predictor::logistic({2.0}, -1.0));
  const Hypothesis parsed2 = hypothesis_from_json(to_json(logistic));
  CHECK(parsed2.representation.matrix == std::vector<double>{0.5, -0.5});
  CHECK(parsed2.predictor.weights == std::vector<double>{2.0});
}

TEST_CASE("problem descriptors rebuild the generators") {
  const SyntheticProblem example1 = make_example1(50);
  const SyntheticProblem rebuilt = problem_from_json(to_json(example1.descriptor));
  CHECK(std::get<GridDensity>(rebuilt.source_density).cell_values ==
        std::get<GridDensity>(example1.source_density).cell_values);

  const OverlapPair pair = make_overlap_pair();
  const SyntheticProblem b = problem_from_json(to_json(pair.problem_b.descriptor));
  CHECK(std::get<GridDensity>(b.target_density).cell_values ==
        std::get<GridDensity>(pair.problem_b.target_density).cell_values);

  ClusterGridParams params;
  params.labels = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
  const SyntheticProblem shifted = make_label_shift(make_cluster_grid(params), std::vector<std::size_t>{5, 6});
  const SyntheticProblem shifted_rebuilt = problem_from_json(to_json(shifted.descriptor));
  CHECK(std::get<GridDensity>(shifted_rebuilt.target_density).cell_values ==
        std::get<GridDensity>(shifted.target_density).cell_values);
}

TEST_CASE("density json round trip") {
  const Density discrete = DiscreteDensity({0.25, 0.75});
  CHECK(std::get<DiscreteDensity>(density_from_json(to_json(discrete))).probabilities ==
        std::vector<double>{0.25, 0.75});

  GridLayout layout{Box{{0.0, -1.0}, {2.0, 1.0}}, {4, 2}};
  const Density grid = GridDensity(layout, std::vector<double>(8, 0.25));
  const auto grid_back = std::get<GridDensity>(density_from_json(to_json(grid)));
  CHECK(grid_back.cell_values == std::get<GridDensity>(grid).cell_values);
  CHECK(grid_back.layout.resolution == layout.resolution);

  KdeDensity kde;
  kde.dim = 1;
  kde.support_points = {0.0, 1.0};
  kde.bandwidth = {0.5};
  const auto kde_back = std::get<KdeDensity>(density_from_json(to_json(Density(kde))));
  CHECK(kde_back.support_points == kde.support_points);
  CHECK(kde_back.bandwidth == kde.bandwidth);
}

TEST_CASE("hypothesis class json round trip") {
  HypothesisClass cls;
  cls.members.push_back(Hypothesis(Representation::identity(1), Predictor::constant(1)));
  cls.grids.push_back({Representation::variable_selection(2, {0}), Box{{-1.0}, {1.0}}, 11, true});
  const HypothesisClass back = hypothesis_class_from_json(to_json(cls));
  CHECK(back.members.size() == 1);
  REQUIRE(back.grids.size() == 1);
  CHECK(back.grids[0].cutoffs_per_axis == 11);
  CHECK(back.grids[0].z_box.lower == std::vector<double>{-1.0});
  CHECK(back.expand().size() == cls.expand().size());
}

TEST_CASE("divergence estimate json carries the documented fields") {
  DivergenceEstimate estimate;
  estimate.value = 0.25;
  estimate.method = "support-sufficiency";
  estimate.epsilon = Epsilon(0.1);
  estimate.kernel = Kernel::gaussian(0.7);
  estimate.estimator_variant = EstimatorVariant::plug_in;
  estimate.sample_sizes = {100, 200};
  const auto j = to_json(estimate);
  CHECK(j.at("method") == "support-sufficiency");
  CHECK(j.at("value") == 0.25);
  CHECK(j.at("epsilon") == 0.1);
  CHECK(j.at("kernel").at("sigma") == 0.7);
  CHECK(j.at("variant") == "plug-in");
  CHECK(j.at("n_source") == 100);
  CHECK(j.at("n_target") == 200);
}

TEST_CASE("bound report json marks unobservable eta explicitly") {
  BoundReport report(Epsilon(0.1), 1.0);
  report.weighted_risk_term = 0.4;
  report.support_term = 0.2;
  report.observable_part = 0.6;
  const auto j = to_json(report, 2);
  CHECK(j.at("eta_term") == "unobservable");
  CHECK(j.at("total").is_string());
  CHECK(j.at("observable_part") == 0.6);

  report.eta_term = 0.1;
  report.total = 0.7;
  const auto j2 = to_json(report, 2);
  CHECK(j2.at("eta_term") == 0.1);
  CHECK(j2.at("total") == 0.7);
}

TEST_CASE("manifest digests change with content") {
  const std::string dir = std::filesystem::temp_directory_path() / "shift_audit_io_test";
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/digest.csv";
  atomic_write_text(path, "x0\n1.0\n");
  const auto d1 = fnv1a64_file(path);
  atomic_write_text(path, "x0\n2.0\n");
  const auto d2 = fnv1a64_file(path);
  CHECK(d1 != d2);
  CHECK(digest_hex(d1).size() == 16);
  CHECK_FALSE(std::filesystem::exists(path + ".tmp"));

  const auto manifest = make_run_manifest("diagnose", {{path, d2}}, {{"eps", 0.1}});
  CHECK(manifest.at("tool_version") == kToolVersion);
  CHECK(manifest.at("inputs").at(0).at("digest_fnv1a64") == digest_hex(d2));
  std::filesystem::remove_all(dir);
}

TEST_CASE("csv output uses dot decimals and lf endings") {
  SampleSet samples(1, DomainTag::source);
  const double x = 0.5;
  samples.append(std::span<const double>(&x, 1));
  const std::string text = sample_csv_text(samples);
  CHECK(text.find("0.5") != std::string::npos);
  CHECK(text.find(',') != std::string::npos);
  CHECK(text.back() == '\n');
}
