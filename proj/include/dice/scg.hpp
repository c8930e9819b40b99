#pragma once

// Stochastic computation graph view over an expression arena.
//
// Deterministic nodes are plain expression nodes. Stochastic nodes own a
// SampleLeaf and a log-probability expression; cost nodes are expressions
// whose sum is the objective. Influence (v precedes c) is reachability over
// expressions plus the parent edges between stochastic nodes.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dice/graph.hpp"

namespace dice {

struct CostId {
  std::uint32_t index = 0;
  friend bool operator==(CostId, CostId) = default;
  friend auto operator<=>(CostId, CostId) = default;
};

enum class DistKind { Bernoulli, SigmoidBernoulli };

struct StochasticNode {
  StochId id;
  NodeId leaf;
  NodeId log_prob;  // log p(w | parents; theta), contains `leaf`
  DistKind dist = DistKind::Bernoulli;
  NodeId dist_param;  // probability (Bernoulli) or logit (SigmoidBernoulli)
  NodeId prob;        // probability of outcome 1
  std::vector<StochId> parents;
};

struct CostNode {
  CostId id;
  NodeId expr;
  int group = 0;  // objective this cost belongs to (e.g. agent index)
};

class Scg {
 public:
  using LogProbBuilder = std::function<NodeId(GraphArena&, NodeId leaf)>;

  Scg() = default;
  Scg(Scg&&) noexcept = default;
  Scg& operator=(Scg&&) noexcept = default;

  GraphArena& arena() { return arena_; }
  const GraphArena& arena() const { return arena_; }

  // Registers a parameter; optimised parameters form the input set Theta.
  ParamId add_param(std::size_t dim, std::string name = {}, bool optimised = true);
  const std::vector<ParamId>& theta() const { return theta_; }
  bool is_theta(ParamId p) const;

  // Registers a stochastic node. `prob` gives P(w = 1 | parents) and drives
  // sampling and the enumeration oracle; `make_log_prob` receives the new leaf.
  StochId add_stochastic(DistKind dist, NodeId dist_param, NodeId prob,
                         const LogProbBuilder& make_log_prob);
  CostId add_cost(NodeId expr, int group = 0);

  std::size_t stochastic_count() const { return stochastic_.size(); }
  const StochasticNode& stochastic(StochId s) const;
  const std::vector<StochasticNode>& stochastic_nodes() const { return stochastic_; }
  std::size_t cost_count() const { return costs_.size(); }
  const CostNode& cost(CostId c) const;
  const std::vector<CostNode>& costs() const { return costs_; }
  std::vector<CostId> costs_in_group(int group) const;

  bool influences(StochId v, CostId c) const;
  // W_c: stochastic nodes that depend on Theta and influence c, ascending.
  std::vector<StochId> stochastic_ancestors(CostId c) const;
  // Same set for an arbitrary expression of this arena.
  std::vector<StochId> stochastic_ancestors_of(NodeId expr) const;
  std::vector<CostId> downstream_costs(StochId w) const;
  // Theta reaches w's log-probability, directly or through its parents.
  bool depends_on_theta(StochId w) const;
  // Every stochastic node that can influence `expr` (leaves plus their ancestors).
  std::vector<StochId> influencers_of(NodeId expr) const;
  // Stochastic nodes whose SampleLeaf appears in `expr`.
  std::vector<StochId> leaves_of(NodeId expr) const;
  // Stochastic nodes influenced by w (w excluded).
  std::vector<StochId> descendants(StochId w) const;

 private:
  std::vector<StochId> closure(const std::vector<StochId>& leaves) const;
  bool reaches_theta(NodeId expr) const;

  GraphArena arena_;
  std::vector<ParamId> theta_;
  std::vector<StochasticNode> stochastic_;
  std::vector<std::vector<StochId>> ancestors_;  // strict ancestors, ascending
  std::vector<bool> theta_dependent_;
  std::vector<CostNode> costs_;
  std::vector<std::vector<StochId>> cost_influencers_;
};

}  // namespace dice
