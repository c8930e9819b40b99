#pragma once

// Objective constructors (DiCE, DiCE with baselines, surrogate loss, naive
// score function), Hessian-vector products and the Monte-Carlo harness.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dice/dists.hpp"
#include "dice/program.hpp"
#include "dice/scg.hpp"

namespace dice {

enum class EstimatorKind { Dice, DiceBaseline, SurrogateLoss, NaiveSf };
const char* estimator_name(EstimatorKind k);

struct EstimatorObjective {
  NodeId root;
  EstimatorKind kind = EstimatorKind::Dice;
  const Scg* scg = nullptr;
};

// Raised when a baseline expression is influenced by the node it serves.
class BaselineError : public std::invalid_argument {
 public:
  BaselineError(const std::string& what, StochId w) : std::invalid_argument(what), w_(w) {}
  StochId node() const { return w_; }

 private:
  StochId w_;
};

// exp(tau - stop_grad(tau)), tau = sum of log-probabilities in the given
// order; the empty set gives the constant 1.
NodeId magic_box(Scg& scg, std::span<const StochId> w);

// `group` restricts the costs to one objective (e.g. one agent); nullopt uses all.
EstimatorObjective dice_objective(Scg& scg, std::optional<int> group = std::nullopt);

using BaselineMap = std::vector<std::pair<StochId, NodeId>>;
void validate_baseline(const Scg& scg, StochId w, NodeId baseline);
EstimatorObjective dice_objective_with_baseline(Scg& scg, const BaselineMap& baselines,
                                                std::optional<int> group = std::nullopt);
// Only the baseline part: sum_w (1 - box({w})) b_w.
NodeId baseline_term(Scg& scg, const BaselineMap& baselines);

EstimatorObjective surrogate_loss(Scg& scg, std::optional<int> group = std::nullopt);
// Surrogate of an estimate treated as a sampled cost:
// sum_{w influencing e} log p(w) stop_grad(e) + e.
NodeId resurrogate(Scg& scg, NodeId estimate);
// Higher-order estimators of the SL approach, flattened like derivative_nodes
// but without mirroring (the SL estimator is not symmetric). Order 1
// differentiates `sl`; each further order differentiates the resurrogate of
// the previous estimate.
std::vector<NodeId> surrogate_derivatives(Scg& scg, NodeId sl, std::span<const Coord> coords,
                                          int order);

EstimatorObjective naive_sf_objective(Scg& scg, std::optional<int> group = std::nullopt);

// All coordinates of the given parameters, in order.
std::vector<Coord> coords_of(const GraphArena& arena, std::span<const ParamId> params);

// v^T H as gradient of v^T grad(root); v is constant in theta.
std::vector<NodeId> hvp(GraphArena& arena, NodeId root, std::span<const Coord> coords,
                        std::span<const double> v);

// Every n-th order partial of `root` over `coords`, flattened row-major
// (size coords^order). Mixed partials are built once for the non-decreasing
// index tuple and reused for its permutations.
std::vector<NodeId> derivative_nodes(GraphArena& arena, NodeId root, std::span<const Coord> coords,
                                     int order);

struct EstimateStats {
  double mean = 0.0;
  double std_err = 0.0;
  std::size_t n = 0;
};

// Welford accumulator with Chan's pairwise merge.
struct RunningStats {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  void merge(const RunningStats& o);
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  EstimateStats stats() const;
};

// Samples trajectories ancestrally and evaluates a fixed root set on each.
// Results are independent of the thread count: blocks are merged in index order.
class MonteCarlo {
 public:
  struct Block {
    std::size_t first = 0;
    std::size_t count = 0;
    const double* samples = nullptr;  // samples[s * kLanes + lane]
    const double* values = nullptr;   // values[r * kLanes + lane]
  };
  using Observer = std::function<void(const Block&)>;

  MonteCarlo(const Scg& scg, std::vector<NodeId> roots,
             const simd::Kernels& kernels = simd::active_kernels());

  // Observer calls happen on the calling thread in block order.
  std::vector<EstimateStats> run(const Binding& binding, std::size_t n_samples,
                                 std::uint64_t master_seed, const Observer& observer = {},
                                 unsigned threads = 1) const;

  std::size_t root_count() const { return roots_.size(); }
  const BatchProgram& program() const { return program_; }

 private:
  const Scg* scg_;
  std::vector<NodeId> roots_;
  AncestralSampler sampler_;
  BatchProgram program_;
};

// Mean and standard error of every `order`-th partial of `root` over `coords`.
std::vector<EstimateStats> estimate(Scg& scg, NodeId root, const Binding& binding,
                                    std::size_t n_samples, std::uint64_t master_seed, int order,
                                    std::span<const Coord> coords, unsigned threads = 1);

}  // namespace dice
