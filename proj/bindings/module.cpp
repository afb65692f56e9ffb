// Python bindings for the main operations: densities, divergences, weights,
// risks, bounds, synthetic problems and the trainer.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "shift_audit/bounds.hpp"
#include "shift_audit/io.hpp"
#include "shift_audit/trainer.hpp"
#include "shift_audit/weighting.hpp"

namespace py = pybind11;
using namespace shift_audit;

namespace {

SampleSet make_sample_set(const std::vector<std::vector<double>>& points,
                          const std::optional<std::vector<int>>& labels, const std::string& domain) {
  if (points.empty()) throw std::invalid_argument("points must be non-empty");
  SampleSet out(points.front().size(), domain == "target" ? DomainTag::target : DomainTag::source);
  for (const auto& p : points) out.append(p);
  if (labels.has_value()) out.labels = *labels;
  out.validate();
  return out;
}

std::vector<std::vector<double>> points_of(const SampleSet& samples) {
  std::vector<std::vector<double>> out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto p = samples.point(i);
    out[i].assign(p.begin(), p.end());
  }
  return out;
}

py::dict divergence_dict(const DivergenceEstimate& estimate) {
  py::dict d;
  d["value"] = estimate.value;
  d["method"] = estimate.method;
  if (estimate.epsilon.has_value()) d["epsilon"] = estimate.epsilon->value;
  if (estimate.kernel.has_value()) d["sigma"] = estimate.kernel->sigma;
  d["variant"] = estimate.estimator_variant == EstimatorVariant::exact ? "exact" : "plug-in";
  return d;
}

py::dict bound_dict(const BoundReport& report) {
  py::dict d;
  d["weighted_risk_term"] = report.weighted_risk_term;
  d["support_term"] = report.support_term;
  d["observable_part"] = report.observable_part;
  if (report.eta_term.has_value())
    d["eta_term"] = *report.eta_term;
  else
    d["eta_term"] = "unobservable";
  if (report.total.has_value())
    d["total"] = *report.total;
  else
    d["total"] = py::none();
  d["epsilon"] = report.epsilon.value;
  d["M"] = report.M;
  return d;
}

EstimatorConfig config_from_args(const std::string& estimator, double bandwidth) {
  EstimatorConfig config;
  config.kind = estimator == "hist" ? EstimatorConfig::Kind::histogram : EstimatorConfig::Kind::kde;
  config.bandwidth = bandwidth > 0.0 ? BandwidthRule::fixed(bandwidth) : BandwidthRule::silverman();
  return config;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "support-based distribution shift diagnostics";
  m.attr("__version__") = kToolVersion;

  py::class_<DiscreteDensity>(m, "DiscreteDensity")
      .def(py::init<std::vector<double>>(), py::arg("probabilities"))
      .def_readonly("probabilities", &DiscreteDensity::probabilities)
      .def("states", &DiscreteDensity::states);

  py::class_<GridDensity>(m, "GridDensity")
      .def(py::init([](const std::vector<double>& lower, const std::vector<double>& upper,
                       const std::vector<std::size_t>& resolution, const std::vector<double>& cell_values) {
             return GridDensity(GridLayout{Box{lower, upper}, resolution}, cell_values);
           }),
           py::arg("lower"), py::arg("upper"), py::arg("resolution"), py::arg("cell_values"))
      .def_property_readonly("cell_values", [](const GridDensity& g) { return g.cell_values; })
      .def_property_readonly("dim", &GridDensity::dim);

  py::class_<KdeDensity>(m, "KdeDensity")
      .def_property_readonly("bandwidth", [](const KdeDensity& k) { return k.bandwidth; })
      .def_property_readonly("dim", [](const KdeDensity& k) { return k.dim; });

  py::class_<SampleSet>(m, "SampleSet")
      .def(py::init(&make_sample_set), py::arg("points"), py::arg("labels") = std::nullopt,
           py::arg("domain") = "source")
      .def_property_readonly("points", &points_of)
      .def_property_readonly("labels", [](const SampleSet& s) { return s.labels; })
      .def("__len__", &SampleSet::size);

  m.def("evaluate_density",
        [](const Density& density, const std::vector<double>& x) { return evaluate_density(density, x); },
        py::arg("density"), py::arg("point"));
  m.def("fit_kde",
        [](const SampleSet& samples, double bandwidth) {
          return fit_kde(samples,
                         bandwidth > 0.0 ? BandwidthRule::fixed(bandwidth) : BandwidthRule::silverman());
        },
        py::arg("samples"), py::arg("bandwidth") = 0.0);
  m.def("density_quantile",
        [](const Density& density, const SampleSet& probes, double q) {
          return density_quantile(density, probes, q);
        },
        py::arg("density"), py::arg("probe_points"), py::arg("q"));

  m.def("delta_indicator",
        [](double p, double q, double eps) { return delta_indicator(p, q, Epsilon(eps)); }, py::arg("p_at_x"),
        py::arg("q_at_x"), py::arg("eps"));
  m.def("support_divergence_exact",
        [](const Density& p, const Density& q, double eps) {
          if (const auto* dp = std::get_if<DiscreteDensity>(&p))
            return divergence_dict(support_divergence_exact(*dp, std::get<DiscreteDensity>(q), Epsilon(eps)));
          return divergence_dict(
              support_divergence_exact(std::get<GridDensity>(p), std::get<GridDensity>(q), Epsilon(eps)));
        },
        py::arg("p"), py::arg("q"), py::arg("eps"));
  m.def("support_divergence_empirical",
        [](const SampleSet& source, const SampleSet& target, double eps, const std::string& estimator,
           double bandwidth) {
          return divergence_dict(
              support_divergence_empirical(source, target, Epsilon(eps), config_from_args(estimator, bandwidth)));
        },
        py::arg("source"), py::arg("target"), py::arg("eps"), py::arg("estimator") = "kde",
        py::arg("bandwidth") = 0.0);
  m.def("mmd_squared",
        [](const SampleSet& a, const SampleSet& b, double sigma, const std::string& variant) {
          return divergence_dict(mmd_squared(a, b, Kernel::gaussian(sigma),
                                             variant == "u" ? MmdVariant::u_statistic : MmdVariant::v_statistic));
        },
        py::arg("a"), py::arg("b"), py::arg("sigma"), py::arg("variant") = "v");
  m.def("kernel_support_divergence",
        [](const SampleSet& source, const SampleSet& target, const Density& plug_in_source, double eps,
           double sigma) {
          return divergence_dict(
              kernel_support_divergence(source, target, plug_in_source, Epsilon(eps), Kernel::gaussian(sigma)));
        },
        py::arg("source"), py::arg("target"), py::arg("plug_in_source_density"), py::arg("eps"),
        py::arg("sigma"));
  m.def("hinge_support_divergence",
        [](const Density& p, const Density& q, double eps) {
          if (const auto* dp = std::get_if<DiscreteDensity>(&p))
            return divergence_dict(hinge_support_divergence(*dp, std::get<DiscreteDensity>(q), Epsilon(eps)));
          return divergence_dict(
              hinge_support_divergence(std::get<GridDensity>(p), std::get<GridDensity>(q), Epsilon(eps)));
        },
        py::arg("p"), py::arg("q"), py::arg("eps"));
  m.def("ipm_support_divergence_oracle",
        [](const DiscreteDensity& p, const DiscreteDensity& q, double eps, double M) {
          return ipm_support_divergence_oracle(p, q, Epsilon(eps), M);
        },
        py::arg("p"), py::arg("q"), py::arg("eps"), py::arg("M") = 1.0);
  m.def("median_heuristic_bandwidth", &median_heuristic_bandwidth, py::arg("a"), py::arg("b"));

  m.def("truncated_weight",
        [](const Density& source, const Density& target, double eps, const std::vector<double>& x) {
          return truncated_weight(WeightConfig(Epsilon(eps), source, target), x);
        },
        py::arg("source_density"), py::arg("target_density"), py::arg("eps"), py::arg("point"));
  m.def("lemma1_bound",
        [](const DiscreteDensity& p, const DiscreteDensity& q, const std::vector<double>& loss_values,
           double M, double eps) {
          const auto report = lemma1_bound(p, q, loss_values, M, Epsilon(eps));
          py::dict d;
          d["lhs"] = report.lhs;
          d["weighted_term"] = report.weighted_term;
          d["support_term"] = report.support_term;
          d["rhs"] = report.rhs;
          return d;
        },
        py::arg("p"), py::arg("q"), py::arg("loss_values"), py::arg("M"), py::arg("eps"));
  m.def("weighted_risk",
        [](const SampleSet& samples, const std::vector<double>& weights, const Hypothesis& hypothesis) {
          const auto result = weighted_risk(samples, weights, hypothesis, Loss::zero_one());
          py::dict d;
          d["value"] = result.value;
          d["weight_second_moment"] = result.weight_second_moment;
          return d;
        },
        py::arg("samples"), py::arg("weights"), py::arg("hypothesis"));

  py::class_<Representation>(m, "Representation")
      .def_static("identity", &Representation::identity, py::arg("dim"))
      .def_static("variable_selection", &Representation::variable_selection, py::arg("input_dim"),
                  py::arg("indices"))
      .def_static("linear_projection", &Representation::linear_projection, py::arg("input_dim"),
                  py::arg("output_rows"), py::arg("matrix"))
      .def_property_readonly("invertible", &Representation::invertible)
      .def("apply", [](const Representation& rep, const std::vector<double>& x) { return rep.apply(x); });

  py::class_<Predictor>(m, "Predictor")
      .def_static("threshold", &Predictor::threshold, py::arg("axis"), py::arg("cutoff"),
                  py::arg("positive_above"))
      .def_static("logistic", &Predictor::logistic, py::arg("weights"), py::arg("bias"))
      .def_static("constant", &Predictor::constant, py::arg("label"));

  py::class_<Hypothesis>(m, "Hypothesis")
      .def(py::init<Representation, Predictor>(), py::arg("representation"), py::arg("predictor"))
      .def_readonly("representation", &Hypothesis::representation)
      .def_readonly("predictor", &Hypothesis::predictor)
      .def("predict", [](const Hypothesis& h, const std::vector<double>& x) { return h.predict(x); });

  py::class_<SyntheticProblem>(m, "SyntheticProblem")
      .def_property_readonly("source_density", [](const SyntheticProblem& p) { return p.source_density; })
      .def_property_readonly("target_density", [](const SyntheticProblem& p) { return p.target_density; })
      .def_property_readonly("kind", [](const SyntheticProblem& p) { return p.descriptor.kind; });

  m.def("posterior_probability",
        [](const SyntheticProblem& problem, const std::vector<double>& x) {
          return posterior_probability(problem.posterior, x);
        },
        py::arg("problem"), py::arg("point"));

  m.def("make_example1", &make_example1, py::arg("resolution") = 100);
  m.def("make_overlap_pair", [] {
    const OverlapPair pair = make_overlap_pair();
    py::dict d;
    d["problem_a"] = pair.problem_a;
    d["problem_b"] = pair.problem_b;
    d["recorded_sigma"] = pair.params.recorded_sigma;
    d["recorded_eps"] = pair.params.recorded_eps;
    d["disjoint_fraction"] = pair.params.disjoint_fraction;
    return d;
  });
  m.def("make_cluster_grid",
        [](std::size_t clusters, std::size_t cols, std::size_t rows, const std::vector<int>& labels) {
          ClusterGridParams params;
          params.clusters = clusters;
          params.cols = cols;
          params.rows = rows;
          params.labels = labels;
          return make_cluster_grid(params);
        },
        py::arg("clusters") = 10, py::arg("cols") = 5, py::arg("rows") = 2,
        py::arg("labels") = std::vector<int>{});
  m.def("make_label_shift",
        [](const SyntheticProblem& base, const std::vector<std::size_t>& removed) {
          return make_label_shift(base, removed);
        },
        py::arg("base"), py::arg("removed_clusters"));
  m.def("sample",
        [](const SyntheticProblem& problem, const std::string& domain, std::size_t n, std::uint64_t seed) {
          return sample(problem, domain == "target" ? DomainTag::target : DomainTag::source, n, seed);
        },
        py::arg("problem"), py::arg("domain"), py::arg("n"), py::arg("seed"));

  m.def("risk",
        [](const Hypothesis& h, const SyntheticProblem& problem, const std::string& domain) {
          return risk(h, problem, domain == "target" ? DomainTag::target : DomainTag::source);
        },
        py::arg("hypothesis"), py::arg("problem"), py::arg("domain"));
  m.def("push_forward",
        [](const GridDensity& density, const Representation& rep) { return push_forward(density, rep); },
        py::arg("density"), py::arg("representation"));
  m.def("transform",
        [](const SampleSet& samples, const Representation& rep) { return transform(samples, rep); },
        py::arg("samples"), py::arg("representation"));

  m.def("eta_excess_loss",
        [](const SyntheticProblem& problem, const Representation& rep, const Predictor& pred) {
          const auto report = eta_excess_loss(problem, rep, pred, Loss::zero_one());
          py::dict d;
          d["delta_target_mean"] = report.delta_target_mean;
          d["delta_source_mean"] = report.delta_source_mean;
          d["eta"] = report.eta;
          return d;
        },
        py::arg("problem"), py::arg("representation"), py::arg("predictor"));
  m.def("theorem2_bound",
        [](const SyntheticProblem& problem, const Representation& rep, const Predictor& pred, double eps,
           bool oracle_eta) {
          return bound_dict(theorem2_bound(problem, rep, pred, Loss::zero_one(), Epsilon(eps),
                                           oracle_eta ? EtaSource::oracle : EtaSource::unobservable));
        },
        py::arg("problem"), py::arg("representation"), py::arg("predictor"), py::arg("eps"),
        py::arg("oracle_eta") = true);
  m.def("theorem3_bound",
        [](const SyntheticProblem& problem, const Representation& rep, const Predictor& pred, double eps,
           bool oracle_eta, double rkhs_norm_bound) {
          return bound_dict(theorem3_bound(problem, rep, pred, Loss::zero_one(), Epsilon(eps),
                                           oracle_eta ? EtaSource::oracle : EtaSource::unobservable,
                                           rkhs_norm_bound));
        },
        py::arg("problem"), py::arg("representation"), py::arg("predictor"), py::arg("eps"),
        py::arg("oracle_eta") = true, py::arg("rkhs_norm_bound") = 1.0);

  py::class_<TrainedModel>(m, "TrainedModel")
      .def_property_readonly("representation", [](const TrainedModel& m_) { return m_.representation; })
      .def_property_readonly("predictor", [](const TrainedModel& m_) { return m_.predictor; })
      .def_property_readonly("objective_trace",
                             [](const TrainedModel& m_) {
                               std::vector<std::tuple<double, double, double>> out;
                               for (const auto& p : m_.objective_trace)
                                 out.emplace_back(p.risk_term, p.penalty_term, p.total);
                               return out;
                             })
      .def("hypothesis", &TrainedModel::hypothesis);

  m.def("train",
        [](const SampleSet& source, const SampleSet& target, double alpha, const std::string& penalty,
           double sigma, double eps, double learning_rate, std::size_t max_iters, std::uint64_t seed,
           std::size_t representation_dim) {
          TrainConfig config;
          config.alpha = alpha;
          config.penalty = penalty == "hinge-support" ? PenaltyKind::hinge_support : PenaltyKind::mmd;
          config.kernel = Kernel::gaussian(sigma);
          config.eps = eps;
          config.learning_rate = learning_rate;
          config.max_iters = max_iters;
          config.seed = seed;
          config.representation_dim = representation_dim;
          return train(source, target, config);
        },
        py::arg("source"), py::arg("target"), py::arg("alpha") = 0.5, py::arg("penalty") = "mmd",
        py::arg("sigma") = 0.5, py::arg("eps") = 0.05, py::arg("learning_rate") = 1.0,
        py::arg("max_iters") = 300, py::arg("seed") = 0, py::arg("representation_dim") = 1);
  m.def("gradient_check",
        [](const TrainedModel& model, const SampleSet& source, const SampleSet& target, double alpha,
           const std::string& penalty, double sigma, double tolerance) {
          TrainConfig config;
          config.alpha = alpha;
          config.penalty = penalty == "hinge-support" ? PenaltyKind::hinge_support : PenaltyKind::mmd;
          config.kernel = Kernel::gaussian(sigma);
          const auto result = gradient_check(model, source, target, config, tolerance);
          py::dict d;
          d["ok"] = result.ok;
          d["max_relative_error"] = result.max_relative_error;
          return d;
        },
        py::arg("model"), py::arg("source"), py::arg("target"), py::arg("alpha") = 0.5,
        py::arg("penalty") = "mmd", py::arg("sigma") = 0.5, py::arg("tolerance") = 1e-4);
}
