// shift-audit: distribution-shift diagnostics, target-risk bounds and the
// invariance-penalty trainer, over CSV samples and JSON problem descriptors.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "shift_audit/bounds.hpp"
#include "shift_audit/errors.hpp"
#include "shift_audit/io.hpp"
#include "shift_audit/trainer.hpp"

namespace sa = shift_audit;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitGeneric = 1;
constexpr int kExitParse = 2;
constexpr int kExitDimension = 3;
constexpr int kExitNumeric = 4;

struct CommonState {
  std::vector<sa::ManifestInput> inputs;
};

sa::SampleSet load_csv(CommonState& state, const std::string& path) {
  sa::SampleSet samples = sa::read_sample_csv(path);
  state.inputs.push_back({path, sa::fnv1a64_file(path)});
  return samples;
}

json load_json(CommonState& state, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw sa::parse_error(path + ": cannot open file");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw sa::parse_error(path + ": " + e.what());
  }
  state.inputs.push_back({path, sa::fnv1a64_file(path)});
  return j;
}

void write_report(const std::string& path, const json& report) {
  if (path.empty() || path == "-") {
    std::cout << report.dump(2) << "\n";
  } else {
    sa::atomic_write_text(path, report.dump(2) + "\n");
  }
}

double parse_number(const std::string& flag, const std::string& text) {
  try {
    std::size_t consumed = 0;
    const double value = std::stod(text, &consumed);
    if (consumed != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw sa::parse_error(flag + ": malformed number '" + text + "'");
  }
}

sa::EstimatorConfig estimator_config(const std::string& estimator, const std::string& bandwidth,
                                     std::size_t hist_resolution) {
  sa::EstimatorConfig config;
  config.kind = estimator == "hist" ? sa::EstimatorConfig::Kind::histogram : sa::EstimatorConfig::Kind::kde;
  config.histogram_resolution = hist_resolution;
  if (bandwidth == "silverman")
    config.bandwidth = sa::BandwidthRule::silverman();
  else
    config.bandwidth = sa::BandwidthRule::fixed(parse_number("--bandwidth", bandwidth));
  return config;
}

std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number("sweep list", item));
  return out;
}

// ---------------------------------------------------------------------------

int cmd_diagnose(CommonState& state, const std::string& source_path, const std::string& target_path,
                 double eps_flag, double eps_quantile, const std::string& kernel_sigma,
                 const std::string& estimator, const std::string& bandwidth, std::size_t hist_resolution,
                 const std::string& out_path) {
  const sa::SampleSet source = load_csv(state, source_path);
  const sa::SampleSet target = load_csv(state, target_path);
  if (source.dim != target.dim)
    throw sa::dimension_error("diagnose: source dimension " + std::to_string(source.dim) +
                              " != target dimension " + std::to_string(target.dim));

  const sa::EstimatorConfig config = estimator_config(estimator, bandwidth, hist_resolution);
  const sa::Density p_hat = sa::fit_plug_in_density(source, target, config);

  double eps_value = eps_flag;
  std::string eps_rule = "fixed";
  if (!(eps_flag > 0.0)) {
    sa::SampleSet pooled = source;
    pooled.labels.reset();
    for (std::size_t i = 0; i < target.size(); ++i) pooled.append(target.point(i));
    eps_value = sa::density_quantile(p_hat, pooled, eps_quantile);
    eps_rule = "quantile:" + std::to_string(eps_quantile);
    if (!(eps_value > 0.0)) eps_value = 1e-12;  // all-zero plug-in density corner
  }
  const sa::Epsilon eps(eps_value);

  double sigma = 0.0;
  std::string sigma_rule = "fixed";
  if (kernel_sigma == "median") {
    sigma = sa::median_heuristic_bandwidth(source, target);
    sigma_rule = "median";
  } else {
    sigma = parse_number("--kernel-sigma", kernel_sigma);
  }
  const sa::Kernel kernel = sa::Kernel::gaussian(sigma);

  json report;
  report["schema"] = "shift-audit/diagnose/1";
  report["epsilon"] = eps.value;
  report["epsilon_rule"] = eps_rule;
  report["kernel"] = {{"family", "gaussian"}, {"sigma", sigma}, {"rule", sigma_rule}};
  report["n_source"] = source.size();
  report["n_target"] = target.size();
  report["d_supp_plug_in"] = sa::to_json(sa::support_divergence_empirical(source, target, eps, config));
  report["kernel_support_divergence"] =
      sa::to_json(sa::kernel_support_divergence(source, target, p_hat, eps, kernel));
  report["mmd_squared_v"] = sa::to_json(sa::mmd_squared(source, target, kernel, sa::MmdVariant::v_statistic));
  report["mmd_squared_u"] = sa::to_json(sa::mmd_squared(source, target, kernel, sa::MmdVariant::u_statistic));

  // Hinge relaxation is defined over a shared density pair; use matching
  // histograms regardless of the chosen point estimator.
  sa::EstimatorConfig hist = config;
  hist.kind = sa::EstimatorConfig::Kind::histogram;
  const auto p_grid = std::get<sa::GridDensity>(sa::fit_plug_in_density(source, target, hist));
  const auto q_grid = std::get<sa::GridDensity>(sa::fit_plug_in_density(target, source, hist));
  report["hinge_support_divergence"] = sa::to_json(sa::hinge_support_divergence(p_grid, q_grid, eps));
  report["hinge_estimator"] = "histogram";

  json config_json = {{"eps", eps.value},          {"eps_rule", eps_rule},
                      {"kernel_sigma", sigma},     {"estimator", estimator},
                      {"bandwidth", bandwidth},    {"hist_resolution", hist_resolution}};
  report["manifest"] = sa::make_run_manifest("diagnose", state.inputs, config_json);
  write_report(out_path, report);
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_bound(CommonState& state, const std::string& source_path, const std::string& target_path,
              const std::string& model_path, int theorem, double eps_flag, const std::string& eta,
              const std::string& kernel_sigma, double lambda, const std::string& estimator,
              const std::string& bandwidth, std::size_t hist_resolution, const std::string& out_path,
              const std::string& weights_out) {
  const sa::Hypothesis model = sa::hypothesis_from_json(load_json(state, model_path));
  const sa::Loss loss = sa::Loss::zero_one();
  if (theorem < 1 || theorem > 3) throw sa::parse_error("bound: unknown theorem id " + std::to_string(theorem));

  json report;
  const bool exact_mode = eta != "unobservable";

  if (exact_mode) {
    const sa::SyntheticProblem problem = sa::problem_from_json(load_json(state, eta));
    const double eps_value = eps_flag > 0.0 ? eps_flag : 0.05;
    const sa::Epsilon eps(eps_value);
    if (theorem == 1) {
      const auto& grid = std::get<sa::GridDensity>(problem.source_density);
      const sa::GridDensity z_grid = sa::push_forward(grid, model.representation);
      sa::HypothesisClass cls;
      cls.grids.push_back({model.representation, z_grid.layout.box, 101, true});
      const sa::Theorem1Report t1 = sa::theorem1_bound(model, cls, problem);
      report["schema"] = "shift-audit/bound/1";
      report["theorem"] = 1;
      report["source_risk"] = t1.source_risk;
      report["h_delta_h"] = t1.h_delta_h;
      report["lambda"] = t1.lambda;
      report["total"] = t1.total;
    } else if (theorem == 2) {
      const sa::BoundReport b = sa::theorem2_bound(problem, model.representation, model.predictor, loss, eps,
                                                   sa::EtaSource::oracle);
      report = sa::to_json(b, 2);
      report["eta_detail"] = sa::to_json(sa::eta_excess_loss(problem, model.representation, model.predictor, loss));
    } else {
      const sa::BoundReport b = sa::theorem3_bound(problem, model.representation, model.predictor, loss, eps,
                                                   sa::EtaSource::oracle, lambda);
      report = sa::to_json(b, 3);
    }
  } else {
    if (source_path.empty() || target_path.empty())
      throw sa::parse_error("bound: sample mode needs source and target CSV files");
    const sa::SampleSet source = load_csv(state, source_path);
    const sa::SampleSet target = load_csv(state, target_path);
    if (source.dim != target.dim) throw sa::dimension_error("bound: sample dimension mismatch");
    if (!source.labels.has_value()) throw sa::parse_error("bound: source file must carry labels");
    const sa::EstimatorConfig config = estimator_config(estimator, bandwidth, hist_resolution);
    const double eps_value = eps_flag > 0.0 ? eps_flag : 0.05;
    const sa::Epsilon eps(eps_value);
    if (theorem == 1) throw sa::parse_error("bound: theorem 1 needs --eta <problem.json> (exact mode)");
    if (theorem == 2) {
      report = sa::to_json(
          sa::theorem2_bound(source, target, model.representation, model.predictor, loss, eps, config), 2);
    } else {
      const double sigma =
          kernel_sigma == "median" ? sa::median_heuristic_bandwidth(source, target)
                                   : parse_number("--kernel-sigma", kernel_sigma);
      report = sa::to_json(sa::theorem3_bound(source, target, model.representation, model.predictor, loss, eps,
                                              sa::Kernel::gaussian(sigma), lambda, config),
                           3);
    }
    if (!weights_out.empty()) {
      const sa::SampleSet z_source = sa::transform(source, model.representation);
      const sa::SampleSet z_target = sa::transform(target, model.representation);
      const sa::Density p_hat = sa::fit_plug_in_density(z_source, z_target, config);
      const sa::Density q_hat = sa::fit_plug_in_density(z_target, z_source, config);
      std::vector<double> weights(z_source.size());
      const sa::WeightConfig wc(eps, p_hat, q_hat);
      for (std::size_t i = 0; i < z_source.size(); ++i)
        weights[i] = sa::truncated_weight(wc, z_source.point(i));
      sa::atomic_write_text(weights_out, sa::weights_csv_text(source, weights));
    }
  }

  json config_json = {{"theorem", theorem}, {"eps", eps_flag},     {"eta", eta},
                      {"lambda", lambda},   {"estimator", estimator}, {"bandwidth", bandwidth}};
  report["manifest"] = sa::make_run_manifest("bound", state.inputs, config_json);
  write_report(out_path, report);
  return kExitOk;
}

// ---------------------------------------------------------------------------

sa::SyntheticProblem labelshift_base() {
  sa::ClusterGridParams params;
  params.clusters = 10;
  params.cols = 5;
  params.rows = 2;
  params.labels = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};  // label = tile row
  return sa::make_cluster_grid(params);
}

std::vector<std::size_t> top_row_removals(std::size_t count) {
  std::vector<std::size_t> removed;
  for (std::size_t i = 0; i < count; ++i) removed.push_back(5 + i);
  return removed;
}

int cmd_replicate(const std::string& scenario, const std::string& out_dir, std::uint64_t seed,
                  std::size_t samples, const std::string& alphas_csv, const std::string& removed_csv,
                  std::size_t iters, double sigma, double lr, double eps_value) {
  std::filesystem::create_directories(out_dir);
  const auto out = [&](const std::string& name) { return out_dir + "/" + name; };

  if (scenario == "example1") {
    const sa::SyntheticProblem problem = sa::make_example1(100);
    const auto rep1 = sa::Representation::variable_selection(2, {0});
    const auto rep2 = sa::Representation::variable_selection(2, {1});
    const sa::Hypothesis h1(rep1, sa::Predictor::threshold(0, 0.0, false));
    const sa::Hypothesis h2(rep2, sa::Predictor::threshold(0, 0.0, true));
    const sa::Box z_box{{-1.0}, {1.0}};
    std::vector<sa::HypothesisEntry> inventory;
    inventory.push_back({"phi1-threshold", h1, sa::HypothesisClass{{}, {{rep1, z_box, 101, true}}}});
    inventory.push_back({"phi2-threshold", h2, sa::HypothesisClass{{}, {{rep2, z_box, 101, true}}}});

    const std::vector<double> eps_sweep = {eps_value};
    const std::vector<double> sigma_sweep = {sigma};
    sa::BoundComparisonOptions options;
    options.mmd_samples = samples;
    options.mmd_seed = seed;
    const auto table = sa::compare_bounds(problem, inventory, eps_sweep, sigma_sweep, options);
    sa::atomic_write_text(out("compare_bounds.csv"), sa::comparison_table_csv(table));

    json summary;
    summary["schema"] = "shift-audit/replicate/1";
    summary["scenario"] = "example1";
    summary["rows"] = json::array();
    for (const auto& entry : inventory) {
      const sa::Loss loss = sa::Loss::zero_one();
      const auto eta = sa::eta_excess_loss(problem, entry.hypothesis.representation,
                                           entry.hypothesis.predictor, loss);
      json row;
      row["hypothesis"] = entry.id;
      row["source_risk"] = sa::risk(entry.hypothesis, problem, sa::DomainTag::source);
      row["target_risk"] = sa::risk(entry.hypothesis, problem, sa::DomainTag::target);
      row["eta"] = sa::to_json(eta);
      summary["rows"].push_back(row);
    }
    summary["manifest"] = sa::make_run_manifest(
        "replicate", {}, {{"scenario", scenario}, {"seed", seed}, {"samples", samples}, {"eps", eps_value}, {"sigma", sigma}});
    write_report(out("summary.json"), summary);
    return kExitOk;
  }

  if (scenario == "overlap") {
    const sa::OverlapPair pair = sa::make_overlap_pair();
    const sa::SampleSet src_a = sa::sample(pair.problem_a, sa::DomainTag::source, samples, seed);
    const sa::SampleSet tgt_a = sa::sample(pair.problem_a, sa::DomainTag::target, samples, seed);
    const sa::SampleSet src_b = sa::sample(pair.problem_b, sa::DomainTag::source, samples, seed);
    const sa::SampleSet tgt_b = sa::sample(pair.problem_b, sa::DomainTag::target, samples, seed);

    std::string csv = "sigma,mmd_sq_a,mmd_sq_b\n";
    const int count = 20;
    const double lo = std::log(0.02), hi = std::log(1.0);
    double recorded_a = 0.0, recorded_b = 0.0;
    for (int i = 0; i < count; ++i) {
      const double s = std::exp(lo + (hi - lo) * static_cast<double>(i) / (count - 1));
      const sa::Kernel kernel = sa::Kernel::gaussian(s);
      const double a = sa::mmd_squared(src_a, tgt_a, kernel).value;
      const double b = sa::mmd_squared(src_b, tgt_b, kernel).value;
      csv += std::to_string(s) + "," + std::to_string(a) + "," + std::to_string(b) + "\n";
    }
    {
      const sa::Kernel kernel = sa::Kernel::gaussian(pair.params.recorded_sigma);
      recorded_a = sa::mmd_squared(src_a, tgt_a, kernel).value;
      recorded_b = sa::mmd_squared(src_b, tgt_b, kernel).value;
    }
    sa::atomic_write_text(out("mmd_sweep.csv"), csv);

    const sa::Epsilon eps(pair.params.recorded_eps);
    const auto& grid_s = std::get<sa::GridDensity>(pair.problem_a.source_density);
    const auto& grid_ta = std::get<sa::GridDensity>(pair.problem_a.target_density);
    const auto& grid_tb = std::get<sa::GridDensity>(pair.problem_b.target_density);
    json summary;
    summary["schema"] = "shift-audit/replicate/1";
    summary["scenario"] = "overlap";
    summary["recorded_sigma"] = pair.params.recorded_sigma;
    summary["recorded_eps"] = pair.params.recorded_eps;
    summary["d_supp_exact_a"] = sa::support_divergence_exact(grid_s, grid_ta, eps).value;
    summary["d_supp_exact_b"] = sa::support_divergence_exact(grid_s, grid_tb, eps).value;
    summary["mmd_sq_a_at_recorded_sigma"] = recorded_a;
    summary["mmd_sq_b_at_recorded_sigma"] = recorded_b;
    summary["mmd_ordering_holds"] = recorded_a > recorded_b;
    summary["manifest"] =
        sa::make_run_manifest("replicate", {}, {{"scenario", scenario}, {"seed", seed}, {"samples", samples}});
    write_report(out("summary.json"), summary);
    return kExitOk;
  }

  if (scenario == "labelshift") {
    const sa::SyntheticProblem base = labelshift_base();
    const std::vector<double> alphas = alphas_csv.empty() ? std::vector<double>{0.0, 0.3, 0.5, 0.6}
                                                          : parse_list(alphas_csv);
    std::vector<double> removed_counts =
        removed_csv.empty() ? std::vector<double>{0, 1, 2, 3} : parse_list(removed_csv);

    std::string csv = "removed,alpha,objective_total,source_risk,target_risk,tuned_target_risk\n";
    for (double removed_d : removed_counts) {
      const auto removed = top_row_removals(static_cast<std::size_t>(removed_d));
      const sa::SyntheticProblem problem = removed.empty() ? base : sa::make_label_shift(base, removed);
      const sa::SampleSet source = sa::sample(problem, sa::DomainTag::source, samples, seed);
      const sa::SampleSet target = sa::sample(problem, sa::DomainTag::target, samples, seed);
      // Tuned comparator uses labeled target draws from a shifted stream.
      sa::SampleSet labeled_target = sa::sample(problem, sa::DomainTag::target, samples, seed + 1);
      labeled_target.labels.emplace();
      for (std::size_t i = 0; i < labeled_target.size(); ++i)
        labeled_target.labels->push_back(
            sa::posterior_probability(problem.posterior, labeled_target.point(i)) > 0.5 ? 1 : 0);

      for (double alpha : alphas) {
        sa::TrainConfig config;
        config.alpha = alpha;
        config.kernel = sa::Kernel::gaussian(sigma);
        config.learning_rate = lr;
        config.max_iters = iters;
        config.seed = seed;
        const sa::TrainedModel model = sa::train(source, target, config);
        const sa::TrainedModel tuned = sa::tune_predictor_on_target(model, labeled_target, config);
        const double target_risk = sa::risk(model.hypothesis(), problem, sa::DomainTag::target);
        const double source_risk = sa::risk(model.hypothesis(), problem, sa::DomainTag::source);
        const double tuned_risk = sa::risk(tuned.hypothesis(), problem, sa::DomainTag::target);
        csv += std::to_string(static_cast<int>(removed_d)) + "," + std::to_string(alpha) + "," +
               std::to_string(model.objective_trace.back().total) + "," + std::to_string(source_risk) + "," +
               std::to_string(target_risk) + "," + std::to_string(tuned_risk) + "\n";
      }
    }
    sa::atomic_write_text(out("alpha_sweep.csv"), csv);
    json summary;
    summary["schema"] = "shift-audit/replicate/1";
    summary["scenario"] = "labelshift";
    summary["manifest"] = sa::make_run_manifest(
        "replicate", {},
        {{"scenario", scenario}, {"seed", seed}, {"samples", samples}, {"iters", iters}, {"sigma", sigma}, {"lr", lr}});
    write_report(out("summary.json"), summary);
    return kExitOk;
  }

  throw sa::parse_error("replicate: unknown scenario '" + scenario + "'");
}

// ---------------------------------------------------------------------------

int cmd_train(CommonState& state, const std::string& source_path, const std::string& target_path,
              double alpha, const std::string& penalty, double sigma, double eps_value, double kde_bandwidth,
              double lr, std::size_t iters, std::size_t rep_dim, double init_scale, double tolerance,
              std::uint64_t seed, const std::string& model_out, const std::string& trace_out,
              const std::string& tune_csv, const std::string& tuned_model_out) {
  const sa::SampleSet source = load_csv(state, source_path);
  const sa::SampleSet target = load_csv(state, target_path);
  if (source.dim != target.dim) throw sa::dimension_error("train: sample dimension mismatch");

  sa::TrainConfig config;
  config.alpha = alpha;
  config.penalty = penalty == "hinge-support" ? sa::PenaltyKind::hinge_support : sa::PenaltyKind::mmd;
  config.kernel = sa::Kernel::gaussian(sigma);
  config.eps = eps_value;
  config.kde_bandwidth = kde_bandwidth;
  config.learning_rate = lr;
  config.max_iters = iters;
  config.representation_dim = rep_dim;
  config.init_scale = init_scale;
  config.tolerance = tolerance;
  config.seed = seed;

  const sa::TrainedModel model = sa::train(source, target, config);
  json model_json = sa::to_json(model);
  json config_json = {{"alpha", alpha}, {"penalty", penalty},   {"sigma", sigma},
                      {"eps", eps_value}, {"lr", lr},             {"iters", iters},
                      {"rep_dim", rep_dim}, {"seed", seed},        {"init_scale", init_scale},
                      {"tolerance", tolerance}};

  if (!tune_csv.empty()) {
    const sa::SampleSet labeled_target = load_csv(state, tune_csv);
    const sa::TrainedModel tuned = sa::tune_predictor_on_target(model, labeled_target, config);
    json tuned_json = sa::to_json(tuned);
    tuned_json["manifest"] = sa::make_run_manifest("train --tune-on-target", state.inputs, config_json);
    write_report(tuned_model_out.empty() ? "-" : tuned_model_out, tuned_json);
  }

  model_json["manifest"] = sa::make_run_manifest("train", state.inputs, config_json);
  write_report(model_out.empty() ? "-" : model_out, model_json);
  if (!trace_out.empty()) sa::atomic_write_text(trace_out, sa::training_trace_csv(model));
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_sample(const std::string& scenario, const std::string& domain, std::size_t n, std::uint64_t seed,
               std::size_t removed, const std::string& out_path) {
  sa::SyntheticProblem problem = [&]() -> sa::SyntheticProblem {
    if (scenario == "example1") return sa::make_example1(100);
    if (scenario == "overlap-a") return sa::make_overlap_pair().problem_a;
    if (scenario == "overlap-b") return sa::make_overlap_pair().problem_b;
    if (scenario == "cluster") return labelshift_base();
    if (scenario == "labelshift") return sa::make_label_shift(labelshift_base(), top_row_removals(removed));
    throw sa::parse_error("sample: unknown scenario '" + scenario + "'");
  }();
  const sa::DomainTag tag = domain == "target" ? sa::DomainTag::target : sa::DomainTag::source;
  const sa::SampleSet samples = sa::sample(problem, tag, n, seed);
  sa::write_sample_csv(out_path, samples);

  json manifest = sa::make_run_manifest(
      "sample", {{out_path, sa::fnv1a64_file(out_path)}},
      {{"scenario", scenario}, {"domain", domain}, {"n", n}, {"seed", seed}, {"removed", removed}});
  manifest["problem"] = sa::to_json(problem.descriptor);
  sa::atomic_write_text(out_path + ".manifest.json", manifest.dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"support-based distribution shift diagnostics"};
  app.require_subcommand(1);

  CommonState state;

  // diagnose
  std::string d_source, d_target, d_kernel_sigma = "median", d_estimator = "kde", d_bandwidth = "silverman";
  std::string d_out;
  double d_eps = 0.0, d_eps_quantile = 0.05;
  std::size_t d_hist_resolution = 200;
  auto* diagnose = app.add_subcommand("diagnose", "divergence report for a source/target sample pair");
  diagnose->add_option("source", d_source, "source CSV")->required();
  diagnose->add_option("target", d_target, "target CSV")->required();
  diagnose->add_option("--eps", d_eps, "support threshold (density units); overrides --eps-quantile");
  diagnose->add_option("--eps-quantile", d_eps_quantile, "quantile of the plug-in source density (default 0.05)");
  diagnose->add_option("--kernel-sigma", d_kernel_sigma, "RBF bandwidth or 'median'");
  diagnose->add_option("--estimator", d_estimator, "kde | hist")->check(CLI::IsMember({"kde", "hist"}));
  diagnose->add_option("--bandwidth", d_bandwidth, "KDE bandwidth value or 'silverman'");
  diagnose->add_option("--hist-resolution", d_hist_resolution, "histogram cells per axis");
  diagnose->add_option("--out", d_out, "report path (default stdout)");

  // bound
  std::string b_source, b_target, b_model, b_eta = "unobservable", b_kernel_sigma = "median";
  std::string b_estimator = "kde", b_bandwidth = "silverman", b_out, b_weights_out;
  int b_theorem = 2;
  double b_eps = 0.0, b_lambda = 1.0;
  std::size_t b_hist_resolution = 200;
  auto* bound = app.add_subcommand("bound", "itemized target-risk bound for a model");
  bound->add_option("source", b_source, "labeled source CSV (sample mode)");
  bound->add_option("target", b_target, "target CSV (sample mode)");
  bound->add_option("--model", b_model, "model JSON")->required();
  bound->add_option("--theorem", b_theorem, "1 | 2 | 3");
  bound->add_option("--eps", b_eps, "support threshold");
  bound->add_option("--eta", b_eta, "'unobservable' or a problem JSON for exact oracle evaluation");
  bound->add_option("--kernel-sigma", b_kernel_sigma, "RBF bandwidth or 'median' (theorem 3)");
  bound->add_option("--lambda", b_lambda, "RKHS norm bound for theorem 3");
  bound->add_option("--estimator", b_estimator, "kde | hist")->check(CLI::IsMember({"kde", "hist"}));
  bound->add_option("--bandwidth", b_bandwidth, "KDE bandwidth value or 'silverman'");
  bound->add_option("--hist-resolution", b_hist_resolution, "histogram cells per axis");
  bound->add_option("--out", b_out, "report path (default stdout)");
  bound->add_option("--weights-out", b_weights_out, "write truncated weights per source row (sample mode)");

  // replicate
  std::string r_scenario, r_out_dir, r_alphas, r_removed;
  std::uint64_t r_seed = 0;
  std::size_t r_samples = 500, r_iters = 300;
  double r_sigma = 0.5, r_lr = 1.0, r_eps = 0.05;
  auto* replicate = app.add_subcommand("replicate", "regenerate the worked scenarios");
  replicate->add_option("scenario", r_scenario, "example1 | overlap | labelshift")->required();
  replicate->add_option("--out", r_out_dir, "output directory")->required();
  replicate->add_option("--seed", r_seed, "sampling seed")->required();
  replicate->add_option("--samples", r_samples, "samples per domain");
  replicate->add_option("--alphas", r_alphas, "comma-separated alpha sweep (labelshift)");
  replicate->add_option("--removed", r_removed, "comma-separated removed-cluster counts (labelshift)");
  replicate->add_option("--iters", r_iters, "trainer iterations (labelshift)");
  replicate->add_option("--sigma", r_sigma, "kernel bandwidth");
  replicate->add_option("--lr", r_lr, "trainer learning rate (labelshift)");
  replicate->add_option("--eps", r_eps, "support threshold (example1)");

  // train
  std::string t_source, t_target, t_penalty = "mmd", t_model_out, t_trace_out, t_tune_csv, t_tuned_out;
  double t_alpha = 0.5, t_sigma = 0.5, t_eps = 0.05, t_kde_bw = 0.25, t_lr = 1.0, t_init = 0.1, t_tol = 1e-9;
  std::size_t t_iters = 300, t_rep_dim = 1;
  std::uint64_t t_seed = 0;
  auto* train_cmd = app.add_subcommand("train", "minimize the invariance-penalized objective");
  train_cmd->add_option("source", t_source, "labeled source CSV")->required();
  train_cmd->add_option("target", t_target, "target CSV")->required();
  train_cmd->add_option("--alpha", t_alpha, "penalty interpolation in [0,1]");
  train_cmd->add_option("--penalty", t_penalty, "mmd | hinge-support")
      ->check(CLI::IsMember({"mmd", "hinge-support"}));
  train_cmd->add_option("--sigma", t_sigma, "penalty kernel bandwidth");
  train_cmd->add_option("--eps", t_eps, "hinge penalty threshold");
  train_cmd->add_option("--kde-bandwidth", t_kde_bw, "plug-in bandwidth inside the hinge penalty");
  train_cmd->add_option("--lr", t_lr, "learning rate");
  train_cmd->add_option("--iters", t_iters, "max iterations");
  train_cmd->add_option("--rep-dim", t_rep_dim, "representation dimension k");
  train_cmd->add_option("--init-scale", t_init, "Gaussian init scale");
  train_cmd->add_option("--tolerance", t_tol, "stop when the objective moves less than this");
  train_cmd->add_option("--seed", t_seed, "init seed")->required();
  train_cmd->add_option("--model-out", t_model_out, "model JSON path (default stdout)");
  train_cmd->add_option("--trace-out", t_trace_out, "objective trace CSV path");
  train_cmd->add_option("--tune-on-target", t_tune_csv, "labeled target CSV for the tuned comparator");
  train_cmd->add_option("--tuned-model-out", t_tuned_out, "tuned model JSON path");

  // sample
  std::string s_scenario, s_domain = "source", s_out;
  std::size_t s_n = 1000, s_removed = 0;
  std::uint64_t s_seed = 0;
  auto* sample_cmd = app.add_subcommand("sample", "draw CSV samples from a built-in scenario");
  sample_cmd->add_option("scenario", s_scenario, "example1 | overlap-a | overlap-b | cluster | labelshift")
      ->required();
  sample_cmd->add_option("--domain", s_domain, "source | target")->check(CLI::IsMember({"source", "target"}));
  sample_cmd->add_option("-n,--n", s_n, "number of draws");
  sample_cmd->add_option("--seed", s_seed, "sampling seed")->required();
  sample_cmd->add_option("--removed", s_removed, "removed top-row clusters (labelshift)");
  sample_cmd->add_option("--out", s_out, "output CSV path")->required();

  try {
    app.parse(argc, argv);
    if (diagnose->parsed())
      return cmd_diagnose(state, d_source, d_target, d_eps, d_eps_quantile, d_kernel_sigma, d_estimator,
                          d_bandwidth, d_hist_resolution, d_out);
    if (bound->parsed())
      return cmd_bound(state, b_source, b_target, b_model, b_theorem, b_eps, b_eta, b_kernel_sigma, b_lambda,
                       b_estimator, b_bandwidth, b_hist_resolution, b_out, b_weights_out);
    if (replicate->parsed())
      return cmd_replicate(r_scenario, r_out_dir, r_seed, r_samples, r_alphas, r_removed, r_iters, r_sigma,
                           r_lr, r_eps);
    if (train_cmd->parsed())
      return cmd_train(state, t_source, t_target, t_alpha, t_penalty, t_sigma, t_eps, t_kde_bw, t_lr, t_iters,
                       t_rep_dim, t_init, t_tol, t_seed, t_model_out, t_trace_out, t_tune_csv, t_tuned_out);
    if (sample_cmd->parsed()) return cmd_sample(s_scenario, s_domain, s_n, s_seed, s_removed, s_out);
    return kExitGeneric;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitParse;
  } catch (const sa::parse_error& e) {
    std::cerr << "parse error";
    if (e.row() > 0) std::cerr << " (row " << e.row() << ", column " << e.column() << ")";
    std::cerr << ": " << e.what() << "\n";
    return kExitParse;
  } catch (const sa::dimension_error& e) {
    std::cerr << "dimension mismatch: " << e.what() << "\n";
    return kExitDimension;
  } catch (const sa::numeric_error& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitGeneric;
  }
}
