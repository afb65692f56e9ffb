#include "shift_audit/io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "shift_audit/errors.hpp"

namespace shift_audit {

namespace {

std::vector<std::string_view> split_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view field, std::size_t row, std::size_t column) {
  field = trim(field);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw parse_error("malformed number '" + std::string(field) + "'", row, column);
  return value;
}

std::string format_double(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

}  // namespace

SampleSet read_sample_csv_text(std::string_view text, const std::string& name) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      if (start < text.size()) lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  if (lines.empty()) throw parse_error(name + ": empty file", 1, 0);

  const auto header = split_line(lines[0]);
  std::size_t dim = 0;
  while (dim < header.size()) {
    const std::string expected = "x" + std::to_string(dim);
    if (trim(header[dim]) != expected) break;
    ++dim;
  }
  if (dim == 0) throw parse_error(name + ": header must start with column x0", 1, 1);
  bool has_y = false;
  bool has_domain = false;
  std::size_t col = dim;
  if (col < header.size() && trim(header[col]) == "y") {
    has_y = true;
    ++col;
  }
  if (col < header.size() && trim(header[col]) == "domain") {
    has_domain = true;
    ++col;
  }
  if (col != header.size())
    throw parse_error(name + ": unexpected header column '" + std::string(trim(header[col])) + "'", 1, col + 1);

  SampleSet samples(dim, DomainTag::source);
  if (has_y) samples.labels.emplace();
  bool domain_seen = false;

  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto line = lines[r];
    if (trim(line).empty()) continue;
    const auto fields = split_line(line);
    if (fields.size() != header.size())
      throw parse_error(name + ": expected " + std::to_string(header.size()) + " fields, found " +
                            std::to_string(fields.size()),
                        r + 1, fields.size());
    for (std::size_t a = 0; a < dim; ++a) samples.data.push_back(parse_double(fields[a], r + 1, a + 1));
    if (has_y) {
      const auto y = trim(fields[dim]);
      if (y == "0")
        samples.labels->push_back(0);
      else if (y == "1")
        samples.labels->push_back(1);
      else
        throw parse_error(name + ": label must be 0 or 1, found '" + std::string(y) + "'", r + 1, dim + 1);
    }
    if (has_domain) {
      const auto d = trim(fields[dim + (has_y ? 1 : 0)]);
      DomainTag tag;
      if (d == "source")
        tag = DomainTag::source;
      else if (d == "target")
        tag = DomainTag::target;
      else
        throw parse_error(name + ": domain must be source or target, found '" + std::string(d) + "'", r + 1,
                          dim + (has_y ? 1 : 0) + 1);
      if (domain_seen && tag != samples.domain)
        throw parse_error(name + ": mixed domain values in one file", r + 1, dim + (has_y ? 1 : 0) + 1);
      samples.domain = tag;
      domain_seen = true;
    }
  }
  if (samples.size() == 0) throw parse_error(name + ": no data rows", 2, 0);
  samples.validate();
  return samples;
}

SampleSet read_sample_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw parse_error(path + ": cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return read_sample_csv_text(buffer.str(), path);
}

std::string sample_csv_text(const SampleSet& samples) {
  std::string out;
  for (std::size_t a = 0; a < samples.dim; ++a) {
    if (a) out += ',';
    out += "x" + std::to_string(a);
  }
  if (samples.labels.has_value()) out += ",y";
  out += ",domain\n";
  const std::string domain = samples.domain == DomainTag::source ? "source" : "target";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t a = 0; a < samples.dim; ++a) {
      if (a) out += ',';
      out += format_double(samples.point(i)[a]);
    }
    if (samples.labels.has_value()) out += "," + std::to_string((*samples.labels)[i]);
    out += "," + domain + "\n";
  }
  return out;
}

void write_sample_csv(const std::string& path, const SampleSet& samples) {
  atomic_write_text(path, sample_csv_text(samples));
}

std::string weights_csv_text(const SampleSet& samples, std::span<const double> weights) {
  if (weights.size() != samples.size()) throw std::invalid_argument("weights_csv_text: weight count mismatch");
  std::string out;
  for (std::size_t a = 0; a < samples.dim; ++a) {
    if (a) out += ',';
    out += "x" + std::to_string(a);
  }
  if (samples.labels.has_value()) out += ",y";
  out += ",weight\n";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t a = 0; a < samples.dim; ++a) {
      if (a) out += ',';
      out += format_double(samples.point(i)[a]);
    }
    if (samples.labels.has_value()) out += "," + std::to_string((*samples.labels)[i]);
    out += "," + format_double(weights[i]) + "\n";
  }
  return out;
}

void atomic_write_text(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
    out << text;
    if (!out) throw std::runtime_error("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return fnv1a64(buffer.str());
}

std::string digest_hex(std::uint64_t digest) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(digest));
  return buf;
}

namespace {

const char* kernel_family_name(KernelFamily family) {
  switch (family) {
    case KernelFamily::gaussian:
      return "gaussian";
  }
  return "gaussian";
}

}  // namespace

nlohmann::json to_json(const DivergenceEstimate& estimate) {
  nlohmann::json j;
  j["method"] = estimate.method;
  j["value"] = estimate.value;
  j["epsilon"] = estimate.epsilon.has_value() ? nlohmann::json(estimate.epsilon->value) : nlohmann::json();
  if (estimate.kernel.has_value())
    j["kernel"] = {{"family", kernel_family_name(estimate.kernel->family)}, {"sigma", estimate.kernel->sigma}};
  else
    j["kernel"] = nullptr;
  j["variant"] = estimate.estimator_variant == EstimatorVariant::exact ? "exact" : "plug-in";
  if (estimate.sample_sizes.has_value()) {
    j["n_source"] = estimate.sample_sizes->first;
    j["n_target"] = estimate.sample_sizes->second;
  } else {
    j["n_source"] = nullptr;
    j["n_target"] = nullptr;
  }
  return j;
}

nlohmann::json to_json(const BoundReport& report, int theorem) {
  nlohmann::json j;
  j["schema"] = "shift-audit/bound/1";
  j["theorem"] = theorem;
  j["weighted_risk_term"] = report.weighted_risk_term;
  j["support_term"] = report.support_term;
  switch (report.support_term_kind) {
    case SupportTermKind::max_loss:
      j["support_term_kind"] = "max-loss";
      break;
    case SupportTermKind::ipm_kernel:
      j["support_term_kind"] = "ipm-kernel";
      break;
    case SupportTermKind::ipm_exact:
      j["support_term_kind"] = "ipm-exact";
      break;
  }
  j["observable_part"] = report.observable_part;
  if (report.eta_term.has_value()) {
    j["eta_term"] = *report.eta_term;
    j["total"] = *report.total;
  } else {
    j["eta_term"] = "unobservable";
    j["total"] = "partial: total >= observable_part";
  }
  j["epsilon"] = report.epsilon.value;
  j["M"] = report.M;
  return j;
}

nlohmann::json to_json(const EtaReport& report) {
  return {{"delta_target_mean", report.delta_target_mean},
          {"delta_source_mean", report.delta_source_mean},
          {"eta", report.eta}};
}

nlohmann::json to_json(const Density& density) {
  return std::visit(
      [](const auto& d) -> nlohmann::json {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, DiscreteDensity>) {
          return {{"kind", "discrete"}, {"probabilities", d.probabilities}};
        } else if constexpr (std::is_same_v<T, GridDensity>) {
          return {{"kind", "grid"},
                  {"lower", d.layout.box.lower},
                  {"upper", d.layout.box.upper},
                  {"resolution", d.layout.resolution},
                  {"cell_values", d.cell_values}};
        } else {
          return {{"kind", "kde"},
                  {"dim", d.dim},
                  {"bandwidth", d.bandwidth},
                  {"support_points", d.support_points}};
        }
      },
      density);
}

Density density_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "discrete") return DiscreteDensity(j.at("probabilities").get<std::vector<double>>());
  if (kind == "grid") {
    GridLayout layout{Box{j.at("lower").get<std::vector<double>>(), j.at("upper").get<std::vector<double>>()},
                      j.at("resolution").get<std::vector<std::size_t>>()};
    return GridDensity(std::move(layout), j.at("cell_values").get<std::vector<double>>());
  }
  if (kind == "kde") {
    KdeDensity kde;
    kde.dim = j.at("dim").get<std::size_t>();
    kde.bandwidth = j.at("bandwidth").get<std::vector<double>>();
    kde.support_points = j.at("support_points").get<std::vector<double>>();
    return kde;
  }
  throw parse_error("unknown density kind '" + kind + "'");
}

nlohmann::json to_json(const Representation& representation) {
  nlohmann::json j;
  j["input_dim"] = representation.input_dim;
  switch (representation.kind) {
    case Representation::Kind::identity:
      j["kind"] = "identity";
      break;
    case Representation::Kind::variable_selection:
      j["kind"] = "variable-selection";
      j["indices"] = representation.indices;
      break;
    case Representation::Kind::linear_projection:
      j["kind"] = "linear-projection";
      j["rows"] = representation.output_rows;
      j["matrix"] = representation.matrix;
      break;
  }
  return j;
}

Representation representation_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  const auto input_dim = j.at("input_dim").get<std::size_t>();
  if (kind == "identity") return Representation::identity(input_dim);
  if (kind == "variable-selection")
    return Representation::variable_selection(input_dim, j.at("indices").get<std::vector<std::size_t>>());
  if (kind == "linear-projection")
    return Representation::linear_projection(input_dim, j.at("rows").get<std::size_t>(),
                                             j.at("matrix").get<std::vector<double>>());
  throw parse_error("unknown representation kind '" + kind + "'");
}

nlohmann::json to_json(const Predictor& predictor) {
  nlohmann::json j;
  switch (predictor.kind) {
    case Predictor::Kind::threshold:
      j["kind"] = "threshold";
      j["axis"] = predictor.axis;
      j["cutoff"] = predictor.cutoff;
      j["positive_above"] = predictor.positive_above;
      break;
    case Predictor::Kind::logistic:
      j["kind"] = "logistic";
      j["weights"] = predictor.weights;
      j["bias"] = predictor.bias;
      break;
    case Predictor::Kind::constant:
      j["kind"] = "constant";
      j["label"] = predictor.constant_label;
      break;
  }
  return j;
}

Predictor predictor_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "threshold")
    return Predictor::threshold(j.at("axis").get<std::size_t>(), j.at("cutoff").get<double>(),
                                j.at("positive_above").get<bool>());
  if (kind == "logistic")
    return Predictor::logistic(j.at("weights").get<std::vector<double>>(), j.at("bias").get<double>());
  if (kind == "constant") return Predictor::constant(j.at("label").get<int>());
  throw parse_error("unknown predictor kind '" + kind + "'");
}

nlohmann::json to_json(const Hypothesis& hypothesis) {
  return {{"schema", "shift-audit/model/1"},
          {"representation", to_json(hypothesis.representation)},
          {"predictor", to_json(hypothesis.predictor)}};
}

Hypothesis hypothesis_from_json(const nlohmann::json& j) {
  return Hypothesis(representation_from_json(j.at("representation")), predictor_from_json(j.at("predictor")));
}

nlohmann::json to_json(const HypothesisClass& cls) {
  nlohmann::json j;
  j["members"] = nlohmann::json::array();
  for (const auto& h : cls.members) j["members"].push_back(to_json(h));
  j["grids"] = nlohmann::json::array();
  for (const auto& grid : cls.grids)
    j["grids"].push_back({{"representation", to_json(grid.representation)},
                          {"z_lower", grid.z_box.lower},
                          {"z_upper", grid.z_box.upper},
                          {"cutoffs_per_axis", grid.cutoffs_per_axis},
                          {"both_orientations", grid.both_orientations}});
  return j;
}

HypothesisClass hypothesis_class_from_json(const nlohmann::json& j) {
  HypothesisClass cls;
  if (j.contains("members"))
    for (const auto& h : j.at("members")) cls.members.push_back(hypothesis_from_json(h));
  if (j.contains("grids"))
    for (const auto& g : j.at("grids"))
      cls.grids.push_back({representation_from_json(g.at("representation")),
                           Box{g.at("z_lower").get<std::vector<double>>(),
                               g.at("z_upper").get<std::vector<double>>()},
                           g.at("cutoffs_per_axis").get<std::size_t>(),
                           g.at("both_orientations").get<bool>()});
  return cls;
}

nlohmann::json to_json(const ProblemDescriptor& descriptor) {
  nlohmann::json j;
  j["schema"] = "shift-audit/problem/1";
  j["kind"] = descriptor.kind;
  j["params"] = descriptor.params;
  if (!descriptor.removed_clusters.empty()) j["removed_clusters"] = descriptor.removed_clusters;
  if (!descriptor.cluster_labels.empty()) j["cluster_labels"] = descriptor.cluster_labels;
  return j;
}

namespace {

OverlapParams overlap_params_from_json(const nlohmann::json& params) {
  OverlapParams p;
  auto get = [&](const char* key, double fallback) {
    return params.contains(key) ? params.at(key).get<double>() : fallback;
  };
  p.source_lo = get("source_lo", p.source_lo);
  p.source_hi = get("source_hi", p.source_hi);
  p.target_lo = get("target_lo", p.target_lo);
  p.target_hi = get("target_hi", p.target_hi);
  p.disjoint_lo = get("disjoint_lo", p.disjoint_lo);
  p.disjoint_hi = get("disjoint_hi", p.disjoint_hi);
  p.disjoint_fraction = get("disjoint_fraction", p.disjoint_fraction);
  p.resolution = static_cast<std::size_t>(get("resolution", static_cast<double>(p.resolution)));
  p.recorded_sigma = get("recorded_sigma", p.recorded_sigma);
  p.recorded_eps = get("recorded_eps", p.recorded_eps);
  return p;
}

ClusterGridParams cluster_params_from_json(const nlohmann::json& j) {
  const auto& params = j.at("params");
  ClusterGridParams p;
  p.clusters = static_cast<std::size_t>(params.at("clusters").get<double>());
  p.cols = static_cast<std::size_t>(params.at("cols").get<double>());
  p.rows = static_cast<std::size_t>(params.at("rows").get<double>());
  p.cells_per_tile = static_cast<std::size_t>(params.at("cells_per_tile").get<double>());
  p.spread = params.at("spread").get<double>();
  if (j.contains("cluster_labels")) p.labels = j.at("cluster_labels").get<std::vector<int>>();
  return p;
}

}  // namespace

SyntheticProblem problem_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "example1") {
    std::size_t resolution = 100;
    if (j.contains("params") && j.at("params").contains("resolution"))
      resolution = static_cast<std::size_t>(j.at("params").at("resolution").get<double>());
    return make_example1(resolution);
  }
  if (kind == "overlap-a")
    return make_overlap_pair(overlap_params_from_json(j.at("params"))).problem_a;
  if (kind == "overlap-b")
    return make_overlap_pair(overlap_params_from_json(j.at("params"))).problem_b;
  if (kind == "cluster-grid") return make_cluster_grid(cluster_params_from_json(j));
  if (kind == "label-shift") {
    const SyntheticProblem base = make_cluster_grid(cluster_params_from_json(j));
    std::vector<std::size_t> removed;
    if (j.contains("removed_clusters")) removed = j.at("removed_clusters").get<std::vector<std::size_t>>();
    return make_label_shift(base, removed);
  }
  throw parse_error("unknown problem kind '" + kind + "'");
}

nlohmann::json to_json(const TrainedModel& model) {
  nlohmann::json j = to_json(Hypothesis(model.representation, model.predictor));
  if (!model.objective_trace.empty()) {
    const auto& last = model.objective_trace.back();
    j["final_objective"] = {{"risk_term", last.risk_term},
                            {"penalty_term", last.penalty_term},
                            {"total", last.total}};
    j["iterations"] = model.objective_trace.size() - 1;
  }
  return j;
}

std::string training_trace_csv(const TrainedModel& model) {
  std::string out = "iter,risk_term,penalty_term,total\n";
  for (std::size_t i = 0; i < model.objective_trace.size(); ++i) {
    const auto& p = model.objective_trace[i];
    out += std::to_string(i) + "," + format_double(p.risk_term) + "," + format_double(p.penalty_term) + "," +
           format_double(p.total) + "\n";
  }
  return out;
}

std::string comparison_table_csv(const BoundComparisonTable& table) {
  std::string out;
  const auto& cols = BoundComparisonTable::columns();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) out += ',';
    out += cols[i];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    out += row.hypothesis_id;
    out += ',' + format_double(row.eps);
    out += ',' + format_double(row.kernel_sigma);
    out += ',' + format_double(row.exact_target_risk);
    out += ',' + format_double(row.theorem1_total);
    out += ',' + format_double(row.theorem2_total);
    out += ',' + format_double(row.theorem3_total);
    out += ',' + format_double(row.mmd_squared);
    out += ',' + format_double(row.d_supp);
    out += '\n';
  }
  return out;
}

nlohmann::json make_run_manifest(const std::string& command, const std::vector<ManifestInput>& inputs,
                                 const nlohmann::json& config) {
  nlohmann::json j;
  j["schema"] = "shift-audit/manifest/1";
  j["command"] = command;
  j["tool_version"] = kToolVersion;
  j["inputs"] = nlohmann::json::array();
  for (const auto& input : inputs)
    j["inputs"].push_back({{"path", input.path}, {"digest_fnv1a64", digest_hex(input.digest)}});
  j["config"] = config;
  return j;
}

}  // namespace shift_audit
