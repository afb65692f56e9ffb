#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shift_audit/densities.hpp"
#include "shift_audit/synthetic.hpp"

namespace shift_audit {

// Feature map from X into the representation space Z.
struct Representation {
  enum class Kind { identity, variable_selection, linear_projection };

  Kind kind = Kind::identity;
  std::size_t input_dim = 0;
  std::vector<std::size_t> indices;  // variable_selection: distinct, in range
  std::vector<double> matrix;        // linear_projection: row-major k x input_dim
  std::size_t output_rows = 0;       // linear_projection: k

  static Representation identity(std::size_t dim);
  static Representation variable_selection(std::size_t input_dim, std::vector<std::size_t> indices);
  static Representation linear_projection(std::size_t input_dim, std::size_t output_rows,
                                          std::vector<double> matrix);

  std::size_t output_dim() const;
  bool invertible() const;
  std::vector<double> apply(std::span<const double> x) const;
};

// Exact push-forward of a grid density through an axis-aligned representation
// (identity or variable selection); marginalizes the dropped axes.
GridDensity push_forward(const GridDensity& density, const Representation& representation);

// Applies the representation row-wise; labels and domain tag carry over.
SampleSet transform(const SampleSet& samples, const Representation& representation);

struct Predictor {
  enum class Kind { threshold, logistic, constant };

  Kind kind = Kind::threshold;
  // threshold: predicts 1 on the positive side; a point exactly at the cutoff
  // is on the positive side.
  std::size_t axis = 0;
  double cutoff = 0.0;
  bool positive_above = true;
  // logistic: predicts 1 iff weights . z + bias >= 0
  std::vector<double> weights;
  double bias = 0.0;
  // constant
  int constant_label = 0;

  static Predictor threshold(std::size_t axis, double cutoff, bool positive_above);
  static Predictor logistic(std::vector<double> weights, double bias);
  static Predictor constant(int label);

  int predict(std::span<const double> z) const;
  double score(std::span<const double> z) const;  // logistic pre-sigmoid score
};

struct Hypothesis {
  Representation representation;
  Predictor predictor;

  Hypothesis(Representation rep, Predictor pred);
  int predict(std::span<const double> x) const;
};

struct Loss {
  enum class Kind { zero_one, table };

  Kind kind = Kind::zero_one;
  double M = 1.0;
  std::array<double, 4> table{};  // [prediction][label]

  static Loss zero_one();
  static Loss bounded_table(std::array<double, 4> values, double M);

  double operator()(int prediction, int label) const;
};

// Uniform threshold cutoffs over a z-box, both orientations by default.
struct ThresholdGridSpec {
  Representation representation;
  Box z_box;
  std::size_t cutoffs_per_axis = 101;
  bool both_orientations = true;
};

struct HypothesisClass {
  std::vector<Hypothesis> members;
  std::vector<ThresholdGridSpec> grids;

  std::vector<Hypothesis> expand() const;
};

struct EvalMode {
  enum class Kind { exact, monte_carlo };
  Kind kind = Kind::exact;
  std::size_t n = 10000;
  std::uint64_t seed = 0;

  static EvalMode exact() { return {Kind::exact, 0, 0}; }
  static EvalMode monte_carlo(std::size_t n, std::uint64_t seed) { return {Kind::monte_carlo, n, seed}; }
};

// Expected loss of h on one domain. Exact mode integrates cell by cell and is
// exact when densities, posterior and h are constant on each cell (generators
// align their breakpoints with the grid for this reason).
double risk(const Hypothesis& h, const SyntheticProblem& problem, DomainTag which,
            const EvalMode& mode = EvalMode::exact(), const Loss& loss = Loss::zero_one());

// Expected disagreement E_p[1[h(x) != h2(x)]].
double disagreement(const Hypothesis& h, const Hypothesis& h2, const Density& density,
                    const EvalMode& mode = EvalMode::exact());

struct PairEnumerationOptions {
  std::size_t max_pairs = 10000;  // above this, pairs are subsampled
  std::uint64_t seed = 0;
  // The distance is sometimes defined with a factor 2; the default is the
  // factor-free form.
  double scale = 1.0;
};

// Worst-case cross-domain disagreement gap over hypothesis pairs.
double h_delta_h(const HypothesisClass& cls, const Density& p, const Density& q,
                 const EvalMode& mode = EvalMode::exact(), const PairEnumerationOptions& options = {});

// Best-in-class joint risk inf_h [R_s(h) + R_t(h)].
double lambda_joint(const HypothesisClass& cls, const SyntheticProblem& problem,
                    const EvalMode& mode = EvalMode::exact(), const Loss& loss = Loss::zero_one());

struct Theorem1Report {
  double source_risk = 0.0;
  double h_delta_h = 0.0;
  double lambda = 0.0;
  double total = 0.0;
};

// Classical triangle-inequality adaptation bound for an enumerable class.
Theorem1Report theorem1_bound(const Hypothesis& h, const HypothesisClass& cls, const SyntheticProblem& problem,
                              const EvalMode& mode = EvalMode::exact(), const Loss& loss = Loss::zero_one());

}  // namespace shift_audit
