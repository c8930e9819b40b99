#include "dice/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

namespace dice {

const char* estimator_name(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::Dice:
      return "dice";
    case EstimatorKind::DiceBaseline:
      return "dice_baseline";
    case EstimatorKind::SurrogateLoss:
      return "surrogate_loss";
    case EstimatorKind::NaiveSf:
      return "naive_sf";
  }
  return "?";
}

NodeId magic_box(Scg& scg, std::span<const StochId> w) {
  if (w.empty()) return scg.arena().one();
  GraphArena& g = scg.arena();
  std::vector<NodeId> logs;
  logs.reserve(w.size());
  for (StochId s : w) logs.push_back(scg.stochastic(s).log_prob);
  const NodeId tau = g.sum(logs);
  return g.exp(g.sub(tau, g.stop_grad(tau)));
}

namespace {

std::vector<CostId> selected_costs(const Scg& scg, std::optional<int> group) {
  if (!group) {
    std::vector<CostId> all;
    for (const CostNode& c : scg.costs()) all.push_back(c.id);
    return all;
  }
  return scg.costs_in_group(*group);
}

void require_costs(const std::vector<CostId>& costs) {
  if (costs.empty()) throw GraphError("objective needs at least one cost node");
}

}  // namespace

EstimatorObjective dice_objective(Scg& scg, std::optional<int> group) {
  const auto costs = selected_costs(scg, group);
  require_costs(costs);
  GraphArena& g = scg.arena();
  std::vector<NodeId> terms;
  terms.reserve(costs.size());
  for (CostId c : costs) {
    const auto w = scg.stochastic_ancestors(c);
    terms.push_back(g.mul(magic_box(scg, w), scg.cost(c).expr));
  }
  return {g.sum(terms), EstimatorKind::Dice, &scg};
}

void validate_baseline(const Scg& scg, StochId w, NodeId baseline) {
  const auto inf = scg.influencers_of(baseline);
  if (std::binary_search(inf.begin(), inf.end(), w))
    throw BaselineError("baseline for stochastic node " + std::to_string(w.index) +
                            " depends on that node or its descendants",
                        w);
}

NodeId baseline_term(Scg& scg, const BaselineMap& baselines) {
  GraphArena& g = scg.arena();
  std::vector<NodeId> terms;
  for (const auto& [w, b] : baselines) {
    validate_baseline(scg, w, b);
    const StochId one[] = {w};
    terms.push_back(g.mul(g.sub(g.one(), magic_box(scg, one)), b));
  }
  return g.sum(terms);
}

EstimatorObjective dice_objective_with_baseline(Scg& scg, const BaselineMap& baselines,
                                                std::optional<int> group) {
  const NodeId base = baseline_term(scg, baselines);
  const EstimatorObjective plain = dice_objective(scg, group);
  return {scg.arena().add(plain.root, base), EstimatorKind::DiceBaseline, &scg};
}

EstimatorObjective surrogate_loss(Scg& scg, std::optional<int> group) {
  const auto costs = selected_costs(scg, group);
  require_costs(costs);
  GraphArena& g = scg.arena();
  std::vector<NodeId> terms;
  for (const StochasticNode& w : scg.stochastic_nodes()) {
    std::vector<NodeId> q;
    for (CostId c : costs)
      if (scg.influences(w.id, c)) q.push_back(scg.cost(c).expr);
    if (q.empty()) continue;
    terms.push_back(g.mul(w.log_prob, g.stop_grad(g.sum(q))));
  }
  for (CostId c : costs) terms.push_back(scg.cost(c).expr);
  return {g.sum(terms), EstimatorKind::SurrogateLoss, &scg};
}

NodeId resurrogate(Scg& scg, NodeId estimate) {
  GraphArena& g = scg.arena();
  const NodeId fixed = g.stop_grad(estimate);
  std::vector<NodeId> terms;
  for (StochId w : scg.influencers_of(estimate))
    terms.push_back(g.mul(scg.stochastic(w).log_prob, fixed));
  terms.push_back(estimate);
  return g.sum(terms);
}

std::vector<NodeId> surrogate_derivatives(Scg& scg, NodeId sl, std::span<const Coord> coords,
                                          int order) {
  if (order < 0) throw std::invalid_argument("derivative order must be non-negative");
  std::vector<NodeId> level{sl};
  for (int k = 0; k < order; ++k) {
    std::vector<NodeId> next;
    next.reserve(level.size() * coords.size());
    for (NodeId e : level) {
      const NodeId obj = k == 0 ? e : resurrogate(scg, e);
      for (const Coord& c : coords) next.push_back(scg.arena().differentiate(obj, c));
    }
    level = std::move(next);
  }
  return level;
}

EstimatorObjective naive_sf_objective(Scg& scg, std::optional<int> group) {
  const auto costs = selected_costs(scg, group);
  require_costs(costs);
  std::vector<StochId> w;
  for (const StochasticNode& s : scg.stochastic_nodes())
    if (scg.depends_on_theta(s.id)) w.push_back(s.id);
  GraphArena& g = scg.arena();
  std::vector<NodeId> c;
  for (CostId id : costs) c.push_back(scg.cost(id).expr);
  return {g.mul(magic_box(scg, w), g.sum(c)), EstimatorKind::NaiveSf, &scg};
}

std::vector<Coord> coords_of(const GraphArena& arena, std::span<const ParamId> params) {
  std::vector<Coord> out;
  for (ParamId p : params)
    for (std::uint32_t i = 0; i < arena.param_dim(p); ++i) out.push_back(Coord{p, i});
  return out;
}

std::vector<NodeId> hvp(GraphArena& arena, NodeId root, std::span<const Coord> coords,
                        std::span<const double> v) {
  if (v.size() != coords.size())
    throw std::invalid_argument("hvp: vector has " + std::to_string(v.size()) +
                                " entries for " + std::to_string(coords.size()) + " coordinates");
  std::vector<NodeId> terms;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (v[i] == 0.0) continue;
    terms.push_back(arena.scale(arena.differentiate(root, coords[i]), v[i]));
  }
  const NodeId s = arena.sum(terms);
  std::vector<NodeId> out;
  out.reserve(coords.size());
  for (const Coord& c : coords) out.push_back(arena.differentiate(s, c));
  return out;
}

std::vector<NodeId> derivative_nodes(GraphArena& arena, NodeId root, std::span<const Coord> coords,
                                     int order) {
  if (order < 0) throw std::invalid_argument("derivative order must be non-negative");
  const std::size_t d = coords.size();
  std::size_t total = 1;
  for (int k = 0; k < order; ++k) total *= d;
  std::vector<NodeId> out(total);
  std::vector<std::size_t> idx(static_cast<std::size_t>(order), 0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (int k = order - 1; k >= 0; --k) {
      idx[static_cast<std::size_t>(k)] = rem % d;
      rem /= d;
    }
    std::vector<std::size_t> sorted = idx;
    std::sort(sorted.begin(), sorted.end());
    if (sorted != idx) {
      std::size_t canon = 0;
      for (std::size_t i : sorted) canon = canon * d + i;
      out[flat] = out[canon];  // canon < flat: sorted tuples come first lexicographically
      continue;
    }
    NodeId n = root;
    for (std::size_t i : idx) n = arena.differentiate(n, coords[i]);
    out[flat] = n;
  }
  return out;
}

void RunningStats::merge(const RunningStats& o) {
  if (o.n == 0) return;
  if (n == 0) {
    *this = o;
    return;
  }
  const double na = static_cast<double>(n);
  const double nb = static_cast<double>(o.n);
  const double nt = na + nb;
  const double d = o.mean - mean;
  mean += d * nb / nt;
  m2 += o.m2 + d * d * na * nb / nt;
  n += o.n;
}

EstimateStats RunningStats::stats() const {
  EstimateStats s;
  s.n = n;
  s.mean = mean;
  s.std_err = n > 1 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
  return s;
}

MonteCarlo::MonteCarlo(const Scg& scg, std::vector<NodeId> roots, const simd::Kernels& kernels)
    : scg_(&scg),
      roots_(std::move(roots)),
      sampler_(scg, kernels),
      program_(scg.arena(), roots_, kernels) {}

std::vector<EstimateStats> MonteCarlo::run(const Binding& binding, std::size_t n_samples,
                                           std::uint64_t master_seed, const Observer& observer,
                                           unsigned threads) const {
  if (n_samples == 0) throw std::invalid_argument("Monte-Carlo run needs at least one sample");
  binding.validate(scg_->arena());
  const std::size_t r = roots_.size();
  const std::size_t s = sampler_.stochastic_count();
  const std::size_t blocks = (n_samples + kLanes - 1) / kLanes;
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(blocks)));

  struct Worker {
    AncestralSampler::Workspace sws;
    BatchProgram::Workspace pws;
    std::vector<double> samples;
    std::vector<double> values;
    std::vector<RunningStats> stats;
  };
  std::vector<Worker> workers(threads);
  for (Worker& w : workers) {
    w.sws = sampler_.make_workspace();
    sampler_.prepare(binding, w.sws);
    w.pws = program_.make_workspace();
    program_.prepare(binding, w.pws);
    w.samples.assign(std::max<std::size_t>(s, 1) * kLanes, 0.0);
    w.values.assign(std::max<std::size_t>(r, 1) * kLanes, 0.0);
  }

  auto process = [&](Worker& w, std::size_t b) {
    const std::size_t first = b * kLanes;
    const std::size_t count = std::min(kLanes, n_samples - first);
    sampler_.sample(master_seed, first, count, w.sws, w.samples);
    program_.run(SampleBlock{w.samples.data(), kLanes, count, first}, w.pws, w.values);
    w.stats.assign(r, RunningStats{});
    for (std::size_t k = 0; k < r; ++k) {
      const double* v = w.values.data() + k * kLanes;
      for (std::size_t l = 0; l < count; ++l) w.stats[k].add(v[l]);
    }
  };

  std::vector<RunningStats> total(r);
  for (std::size_t wave = 0; wave < blocks; wave += threads) {
    const std::size_t width = std::min<std::size_t>(threads, blocks - wave);
    if (width == 1) {
      process(workers[0], wave);
    } else {
      std::vector<std::thread> pool;
      for (std::size_t t = 1; t < width; ++t)
        pool.emplace_back([&, t] { process(workers[t], wave + t); });
      process(workers[0], wave);
      for (auto& th : pool) th.join();
    }
    for (std::size_t t = 0; t < width; ++t) {
      Worker& w = workers[t];
      for (std::size_t k = 0; k < r; ++k) total[k].merge(w.stats[k]);
      if (observer) {
        const std::size_t first = (wave + t) * kLanes;
        observer(Block{first, std::min(kLanes, n_samples - first), w.samples.data(),
                       w.values.data()});
      }
    }
  }

  std::vector<EstimateStats> out;
  out.reserve(r);
  for (const RunningStats& t : total) out.push_back(t.stats());
  return out;
}

std::vector<EstimateStats> estimate(Scg& scg, NodeId root, const Binding& binding,
                                    std::size_t n_samples, std::uint64_t master_seed, int order,
                                    std::span<const Coord> coords, unsigned threads) {
  std::vector<NodeId> roots = derivative_nodes(scg.arena(), root, coords, order);
  const MonteCarlo mc(scg, std::move(roots));
  return mc.run(binding, n_samples, master_seed, {}, threads);
}

}  // namespace dice
