#include "dice/ipd.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "dice/dists.hpp"
#include "dice/oracle.hpp"

namespace dice::ipd {

BaselineMode parse_baseline_mode(const std::string& s) {
  if (s == "none") return BaselineMode::None;
  if (s == "constant") return BaselineMode::Constant;
  if (s == "tabular") return BaselineMode::Tabular;
  throw std::invalid_argument("unknown baseline mode '" + s + "' (none|constant|tabular)");
}

const char* baseline_mode_name(BaselineMode m) {
  switch (m) {
    case BaselineMode::None:
      return "none";
    case BaselineMode::Constant:
      return "constant";
    case BaselineMode::Tabular:
      return "tabular";
  }
  return "?";
}

void validate(const IpdConfig& cfg) {
  if (cfg.horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0)) throw std::invalid_argument("gamma must be in (0,1)");
  if (cfg.batch < 1) throw std::invalid_argument("batch must be >= 1");
  if (!(cfg.baseline_decay >= 0.0 && cfg.baseline_decay < 1.0))
    throw std::invalid_argument("baseline decay must be in [0,1)");
}

std::vector<Coord> IpdScg::coords() const {
  const ParamId ps[] = {theta1, theta2};
  return coords_of(scg.arena(), ps);
}

IpdScg build_ipd_scg(const IpdConfig& cfg, const Payoffs& pay) {
  validate(cfg);
  IpdScg out;
  out.horizon = cfg.horizon;
  out.gamma = cfg.gamma;
  Scg& scg = out.scg;
  out.theta1 = scg.add_param(kPolicyDim, "theta1");
  out.theta2 = scg.add_param(kPolicyDim, "theta2");
  out.value1 = scg.add_param(kPolicyDim, "value1", false);
  out.value2 = scg.add_param(kPolicyDim, "value2", false);
  GraphArena& g = scg.arena();
  const std::vector<NodeId> th1 = g.param_vector(out.theta1);
  const std::vector<NodeId> th2 = g.param_vector(out.theta2);

  auto outcomes = [&](NodeId x1, NodeId x2) {
    const NodeId d1 = g.sub(g.one(), x1);
    const NodeId d2 = g.sub(g.one(), x2);
    return std::array<NodeId, kOutcomes>{g.mul(x1, x2), g.mul(x1, d2), g.mul(d1, x2),
                                         g.mul(d1, d2)};
  };
  auto dot = [&](const std::array<NodeId, kPolicyDim>& ind, const std::vector<NodeId>& th) {
    std::vector<NodeId> terms;
    for (std::size_t s = 0; s < kPolicyDim; ++s)
      if (!g.is_constant(ind[s], 0.0)) terms.push_back(g.mul(ind[s], th[s]));
    return g.sum(terms);
  };
  auto payoff = [&](const std::array<NodeId, kOutcomes>& o, const std::array<double, kOutcomes>& r) {
    std::vector<NodeId> terms;
    for (std::size_t k = 0; k < kOutcomes; ++k)
      if (r[k] != 0.0) terms.push_back(g.scale(o[k], r[k]));
    return g.sum(terms);
  };

  std::array<NodeId, kPolicyDim> s1{g.one(), g.zero(), g.zero(), g.zero(), g.zero()};
  std::array<NodeId, kPolicyDim> s2 = s1;
  double disc = 1.0;
  for (int t = 0; t < cfg.horizon; ++t) {
    out.state[0].push_back(s1);
    out.state[1].push_back(s2);
    const StochId a1 = sigmoid_bernoulli(scg, dot(s1, th1));
    const StochId a2 = sigmoid_bernoulli(scg, dot(s2, th2));
    out.a1.push_back(a1);
    out.a2.push_back(a2);
    const auto o = outcomes(scg.stochastic(a1).leaf, scg.stochastic(a2).leaf);
    out.r1.push_back(scg.add_cost(g.scale(payoff(o, pay.r1), disc), 0));
    out.r2.push_back(scg.add_cost(g.scale(payoff(o, pay.r2), disc), 1));
    s1 = {g.zero(), o[0], o[1], o[2], o[3]};
    s2 = {g.zero(), o[0], o[2], o[1], o[3]};
    disc *= cfg.gamma;
  }
  return out;
}

BaselineMap tabular_baselines(IpdScg& ig, int agent) {
  GraphArena& g = ig.scg.arena();
  const std::vector<NodeId> v = g.param_vector(ig.value(agent));
  BaselineMap out;
  for (int t = 0; t < ig.horizon; ++t) {
    double weight = 0.0;
    for (int k = ig.horizon - 1; k >= t; --k) weight = weight * ig.gamma + 1.0;
    weight *= std::pow(ig.gamma, t);
    std::vector<NodeId> terms;
    const auto& ind = ig.state[static_cast<std::size_t>(agent)][static_cast<std::size_t>(t)];
    for (std::size_t s = 0; s < kPolicyDim; ++s)
      if (!g.is_constant(ind[s], 0.0)) terms.push_back(g.mul(ind[s], v[s]));
    const NodeId b = g.scale(g.sum(terms), weight);
    out.emplace_back(ig.a1[static_cast<std::size_t>(t)], b);
    out.emplace_back(ig.a2[static_cast<std::size_t>(t)], b);
  }
  return out;
}

EstimatorObjective agent_objective(IpdScg& ig, int agent, bool with_baseline) {
  if (!with_baseline) return dice_objective(ig.scg, agent);
  return dice_objective_with_baseline(ig.scg, tabular_baselines(ig, agent), agent);
}

Binding make_binding(const IpdScg& ig, const Policy& t1, const Policy& t2, const Policy& v1,
                     const Policy& v2) {
  Binding b(ig.scg.arena());
  b.set(ig.theta1, {t1.begin(), t1.end()});
  b.set(ig.theta2, {t2.begin(), t2.end()});
  b.set(ig.value1, {v1.begin(), v1.end()});
  b.set(ig.value2, {v2.begin(), v2.end()});
  return b;
}

Chain transition(const Policy& t1, const Policy& t2) {
  auto joint = [](double p1, double p2) {
    return std::array<double, kOutcomes>{p1 * p2, p1 * (1.0 - p2), (1.0 - p1) * p2,
                                         (1.0 - p1) * (1.0 - p2)};
  };
  Chain c;
  c.p0 = joint(stable_sigmoid(t1[0]), stable_sigmoid(t2[0]));
  for (std::size_t s = 0; s < kOutcomes; ++s)
    c.P[s] = joint(stable_sigmoid(t1[1 + s]), stable_sigmoid(t2[1 + mirror_outcome(s)]));
  return c;
}

Values exact_value(const Policy& t1, const Policy& t2, double gamma, int horizon,
                   const Payoffs& pay) {
  const Chain c = transition(t1, t2);
  std::array<double, kOutcomes> d = c.p0;
  Values v;
  double disc = 1.0;
  for (int t = 0; t < horizon; ++t) {
    for (std::size_t o = 0; o < kOutcomes; ++o) {
      v.v1 += disc * d[o] * pay.r1[o];
      v.v2 += disc * d[o] * pay.r2[o];
    }
    std::array<double, kOutcomes> next{};
    for (std::size_t s = 0; s < kOutcomes; ++s)
      for (std::size_t o = 0; o < kOutcomes; ++o) next[o] += d[s] * c.P[s][o];
    d = next;
    disc *= gamma;
  }
  return v;
}

Values exact_value_infinite(const Policy& t1, const Policy& t2, double gamma, const Payoffs& pay) {
  const Chain c = transition(t1, t2);
  // Discounted occupancy x solves (I - gamma P^T) x = p0.
  Eigen::Matrix4d a;
  Eigen::Vector4d p0;
  for (std::size_t i = 0; i < kOutcomes; ++i) {
    for (std::size_t j = 0; j < kOutcomes; ++j) a(i, j) = (i == j ? 1.0 : 0.0) - gamma * c.P[j][i];
    p0(i) = c.p0[i];
  }
  const Eigen::Vector4d x = a.partialPivLu().solve(p0);
  if (!x.allFinite()) throw std::runtime_error("singular IPD value system");
  Values v;
  for (std::size_t o = 0; o < kOutcomes; ++o) {
    v.v1 += x[o] * pay.r1[o];
    v.v2 += x[o] * pay.r2[o];
  }
  return v;
}

namespace {

std::pair<Policy, Policy> split(std::span<const double> x) {
  if (x.size() != 2 * kPolicyDim) throw std::invalid_argument("expected 10 policy logits");
  Policy a{}, b{};
  for (std::size_t i = 0; i < kPolicyDim; ++i) {
    a[i] = x[i];
    b[i] = x[kPolicyDim + i];
  }
  return {a, b};
}

}  // namespace

GradHessian exact_grad_hessian(std::span<const double> x10, double gamma, int horizon, int agent,
                               const Payoffs& pay) {
  split(x10);
  const ScalarFn f = [&](std::span<const double> x) {
    const auto [a, b] = split(x);
    const Values v = exact_value(a, b, gamma, horizon, pay);
    return agent == 0 ? v.v1 : v.v2;
  };
  return {fd_gradient(f, x10), fd_hessian(f, x10)};
}

double per_step(double value, double gamma, int horizon) {
  return value * (1.0 - gamma) / (1.0 - std::pow(gamma, horizon));
}

bool RolloutView::cooperate(int agent, int t, std::size_t lane) const {
  const auto& a = agent == 0 ? g->a1 : g->a2;
  return samples[a[static_cast<std::size_t>(t)].index * kLanes + lane] != 0.0;
}

std::size_t RolloutView::outcome(int t, std::size_t lane) const {
  const bool c1 = cooperate(0, t, lane);
  const bool c2 = cooperate(1, t, lane);
  return c1 ? (c2 ? 0 : 1) : (c2 ? 2 : 3);
}

void TabularBaseline::begin_batch() {
  sum_ = {};
  count_ = {};
}

void TabularBaseline::observe(const RolloutView& view, std::size_t lanes, const Payoffs& pay) {
  const int T = view.g->horizon;
  const double gamma = view.g->gamma;
  std::vector<std::size_t> outcome(static_cast<std::size_t>(T));
  for (std::size_t l = 0; l < lanes; ++l) {
    for (int t = 0; t < T; ++t) outcome[static_cast<std::size_t>(t)] = view.outcome(t, l);
    // Backward pass: return from t on, discounted relative to t, and its weight.
    double g1 = 0.0, g2 = 0.0, w = 0.0;
    for (int t = T - 1; t >= 0; --t) {
      const std::size_t o = outcome[static_cast<std::size_t>(t)];
      g1 = pay.r1[o] + gamma * g1;
      g2 = pay.r2[o] + gamma * g2;
      w = 1.0 + gamma * w;
      const std::size_t prev = t == 0 ? 0 : outcome[static_cast<std::size_t>(t - 1)];
      const std::size_t s1 = t == 0 ? 0 : 1 + prev;
      const std::size_t s2 = t == 0 ? 0 : 1 + mirror_outcome(prev);
      sum_[0][s1] += g1 / w;
      sum_[1][s2] += g2 / w;
      count_[0][s1] += 1.0;
      count_[1][s2] += 1.0;
    }
  }
}

void TabularBaseline::end_batch() {
  if (mode_ == BaselineMode::None) return;
  for (int a = 0; a < 2; ++a) {
    Policy target = v_[a];
    std::array<bool, kPolicyDim> seen{};
    if (mode_ == BaselineMode::Constant) {
      double n = 0.0, tot = 0.0;
      for (std::size_t s = 0; s < kPolicyDim; ++s) {
        n += count_[a][s];
        tot += sum_[a][s];
      }
      if (n == 0.0) continue;
      target.fill(tot / n);
      seen.fill(true);
    } else {
      for (std::size_t s = 0; s < kPolicyDim; ++s) {
        if (count_[a][s] == 0.0) continue;
        target[s] = sum_[a][s] / count_[a][s];
        seen[s] = true;
      }
    }
    for (std::size_t s = 0; s < kPolicyDim; ++s) {
      if (!seen[s]) continue;
      v_[a][s] = seeded_ ? decay_ * v_[a][s] + (1.0 - decay_) * target[s] : target[s];
    }
  }
  seeded_ = true;
}

}  // namespace dice::ipd
