#include "dice/scg.hpp"

#include <algorithm>
#include <iterator>
#include <string>

namespace dice {

ParamId Scg::add_param(std::size_t dim, std::string name, bool optimised) {
  const ParamId p = arena_.register_param(dim, std::move(name));
  if (optimised) theta_.push_back(p);
  return p;
}

bool Scg::is_theta(ParamId p) const {
  return std::find(theta_.begin(), theta_.end(), p) != theta_.end();
}

const StochasticNode& Scg::stochastic(StochId s) const {
  if (s.index >= stochastic_.size())
    throw GraphError("unknown stochastic node " + std::to_string(s.index));
  return stochastic_[s.index];
}

const CostNode& Scg::cost(CostId c) const {
  if (c.index >= costs_.size()) throw GraphError("unknown cost node " + std::to_string(c.index));
  return costs_[c.index];
}

std::vector<CostId> Scg::costs_in_group(int group) const {
  std::vector<CostId> out;
  for (const CostNode& c : costs_)
    if (c.group == group) out.push_back(c.id);
  return out;
}

std::vector<StochId> Scg::leaves_of(NodeId expr) const {
  const NodeId roots[] = {expr};
  std::vector<StochId> out;
  for (std::uint32_t i : reachable(arena_, roots)) {
    const Node& n = arena_.at(i);
    if (n.op == Op::SampleLeaf) out.push_back(StochId{n.aux});
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool Scg::reaches_theta(NodeId expr) const {
  const NodeId roots[] = {expr};
  for (std::uint32_t i : reachable(arena_, roots)) {
    const Node& n = arena_.at(i);
    if (n.op == Op::Param && is_theta(ParamId{n.aux})) return true;
  }
  return false;
}

std::vector<StochId> Scg::closure(const std::vector<StochId>& leaves) const {
  std::vector<StochId> acc;
  for (StochId s : leaves) {
    if (s.index >= stochastic_.size())
      throw GraphError("expression refers to unregistered stochastic node " +
                       std::to_string(s.index));
    std::vector<StochId> merged;
    std::vector<StochId> with_self = ancestors_[s.index];
    with_self.insert(std::upper_bound(with_self.begin(), with_self.end(), s), s);
    std::set_union(acc.begin(), acc.end(), with_self.begin(), with_self.end(),
                   std::back_inserter(merged));
    acc = std::move(merged);
  }
  return acc;
}

StochId Scg::add_stochastic(DistKind dist, NodeId dist_param, NodeId prob,
                            const LogProbBuilder& make_log_prob) {
  arena_.check(dist_param);
  arena_.check(prob);
  const StochId id{static_cast<std::uint32_t>(stochastic_.size())};
  StochasticNode node;
  node.id = id;
  node.dist = dist;
  node.dist_param = dist_param;
  node.prob = prob;
  node.parents = leaves_of(prob);
  for (StochId p : node.parents) {
    if (p.index >= stochastic_.size())
      throw GraphError("stochastic node parameters refer to an unregistered node");
  }
  node.leaf = arena_.leaf(id);
  node.log_prob = make_log_prob(arena_, node.leaf);

  const std::vector<StochId> lp_leaves = leaves_of(node.log_prob);
  for (StochId s : lp_leaves) {
    if (s != id && !std::binary_search(node.parents.begin(), node.parents.end(), s))
      throw GraphError("log_prob of stochastic node " + std::to_string(id.index) +
                       " refers to a non-parent sample");
  }

  std::vector<StochId> anc = closure(node.parents);
  bool dep = reaches_theta(node.log_prob);
  for (StochId p : node.parents) dep = dep || theta_dependent_[p.index];

  stochastic_.push_back(std::move(node));
  ancestors_.push_back(std::move(anc));
  theta_dependent_.push_back(dep);
  return id;
}

CostId Scg::add_cost(NodeId expr, int group) {
  arena_.check(expr);
  const CostId id{static_cast<std::uint32_t>(costs_.size())};
  costs_.push_back(CostNode{id, expr, group});
  cost_influencers_.push_back(closure(leaves_of(expr)));
  return id;
}

bool Scg::influences(StochId v, CostId c) const {
  stochastic(v);
  const auto& inf = cost_influencers_.at(cost(c).id.index);
  return std::binary_search(inf.begin(), inf.end(), v);
}

bool Scg::depends_on_theta(StochId w) const {
  stochastic(w);
  return theta_dependent_[w.index];
}

std::vector<StochId> Scg::influencers_of(NodeId expr) const {
  arena_.check(expr);
  return closure(leaves_of(expr));
}

std::vector<StochId> Scg::stochastic_ancestors_of(NodeId expr) const {
  std::vector<StochId> out;
  for (StochId s : influencers_of(expr))
    if (theta_dependent_[s.index]) out.push_back(s);
  return out;
}

std::vector<StochId> Scg::stochastic_ancestors(CostId c) const {
  std::vector<StochId> out;
  for (StochId s : cost_influencers_.at(cost(c).id.index))
    if (theta_dependent_[s.index]) out.push_back(s);
  return out;
}

std::vector<CostId> Scg::downstream_costs(StochId w) const {
  stochastic(w);
  std::vector<CostId> out;
  for (const CostNode& c : costs_) {
    const auto& inf = cost_influencers_[c.id.index];
    if (std::binary_search(inf.begin(), inf.end(), w)) out.push_back(c.id);
  }
  return out;
}

std::vector<StochId> Scg::descendants(StochId w) const {
  stochastic(w);
  std::vector<StochId> out;
  for (std::uint32_t i = w.index + 1; i < stochastic_.size(); ++i) {
    const auto& anc = ancestors_[i];
    if (std::binary_search(anc.begin(), anc.end(), w)) out.push_back(StochId{i});
  }
  return out;
}

}  // namespace dice
