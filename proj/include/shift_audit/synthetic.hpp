#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "shift_audit/densities.hpp"

namespace shift_audit {

// Closed-form label posteriors p(Y=1|x). One posterior object is shared by
// both domains of a problem, so covariate shift holds by construction.
struct ThresholdPosterior {
  std::size_t axis = 0;
  double cutoff = 0.0;  // p(Y=1|x) = 1 iff x[axis] > cutoff
};

struct CellPosterior {
  GridLayout layout;
  std::vector<double> values;  // per cell, in [0, 1]
};

struct StatePosterior {
  std::vector<double> values;  // per discrete state, in [0, 1]
};

using Posterior = std::variant<ThresholdPosterior, CellPosterior, StatePosterior>;

double posterior_probability(const Posterior& posterior, std::span<const double> x);

// Generator identity and parameters, enough to rebuild the problem.
struct ProblemDescriptor {
  std::string kind;
  std::map<std::string, double> params;
  std::vector<std::size_t> removed_clusters;
  std::vector<int> cluster_labels;
};

struct SyntheticProblem {
  Density source_density;
  Density target_density;
  Posterior posterior;
  ProblemDescriptor descriptor;
};

// Quadrant problem on [-1,1]^2: target uniform on the lower-left and
// upper-right quadrants, source on the other two, label 1 iff x(2) > 0.
// Resolution must be even so the quadrant boundaries land on cell edges.
SyntheticProblem make_example1(std::size_t resolution = 100);

// 1D piecewise-uniform pair used for the density-distance-vs-support
// contrast. Problem A nests the target inside the source support; problem B
// moves `disjoint_fraction` of the target mass outside it.
struct OverlapParams {
  double source_lo = 0.0;
  double source_hi = 1.0;
  double target_lo = 0.3;  // problem A target support
  double target_hi = 0.5;
  double disjoint_lo = 1.0;  // problem B off-support interval
  double disjoint_hi = 1.2;
  double disjoint_fraction = 1.0 / 3.0;
  std::size_t resolution = 120;  // cells over [source_lo, disjoint_hi]
  // Defaults verified by the test suite: at this bandwidth the sampled MMD of
  // problem A exceeds problem B's, and the source density clears this epsilon
  // on the whole problem-A target support.
  double recorded_sigma = 0.1;
  double recorded_eps = 0.2;
};

struct OverlapPair {
  SyntheticProblem problem_a;
  SyntheticProblem problem_b;
  OverlapParams params;
};

OverlapPair make_overlap_pair(const OverlapParams& params = {});

// K truncated-Gaussian clusters on a cols x rows tile arrangement, each
// cluster confined to its own tile. Cluster c carries binary label labels[c];
// default is alternation by cluster index.
struct ClusterGridParams {
  std::size_t clusters = 10;
  std::size_t cols = 5;
  std::size_t rows = 2;
  std::size_t cells_per_tile = 10;  // per axis
  double spread = 0.22;             // cluster sd as a fraction of tile width
  std::vector<int> labels;          // size `clusters`; empty = index parity
};

SyntheticProblem make_cluster_grid(const ClusterGridParams& params = {});

// Label-marginal shift: drop (or reweight) clusters from the target mixture
// of a cluster-grid problem, keeping source and posterior fixed.
SyntheticProblem make_label_shift(const SyntheticProblem& base, const std::vector<std::size_t>& removed_clusters);
SyntheticProblem make_label_shift(const SyntheticProblem& base, const std::vector<double>& target_cluster_weights);

// i.i.d. draws from one domain; source draws carry labels sampled from the
// posterior, target draws are unlabeled. Streams are split per domain
// (stream 0 = source, 1 = target via Rng::fork), so source and target samples
// of one seed are independent and reproducible.
SampleSet sample(const SyntheticProblem& problem, DomainTag which, std::size_t n, std::uint64_t seed);

// Unlabeled draws from a bare density (grid, discrete or KDE).
SampleSet sample_density(const Density& density, std::size_t n, std::uint64_t seed,
                         DomainTag tag = DomainTag::source);

}  // namespace shift_audit
