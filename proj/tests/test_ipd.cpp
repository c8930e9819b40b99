#include <cmath>
#include <random>

#include "doctest.h"
#include "dice/estimators.hpp"
#include "dice/experiments.hpp"
#include "dice/ipd.hpp"
#include "dice/oracle.hpp"

using namespace dice;
using ipd::Policy;

namespace {

Policy constant_policy(double logit) {
  Policy p;
  p.fill(logit);
  return p;
}

// Cooperate first, then copy the opponent's last move (own-perspective states).
const Policy kTitForTat{20.0, 20.0, -20.0, 20.0, -20.0};

}  // namespace

TEST_CASE("graph structure") {
  ipd::IpdConfig cfg;
  cfg.horizon = 1;
  ipd::IpdScg one = ipd::build_ipd_scg(cfg);
  CHECK(one.scg.stochastic_count() == 2);
  CHECK(one.scg.costs_in_group(0).size() == 1);
  CHECK(one.scg.costs_in_group(1).size() == 1);

  cfg.horizon = 4;
  ipd::IpdScg g4 = ipd::build_ipd_scg(cfg);
  CHECK(g4.scg.stochastic_ancestors(g4.r1[2]).size() == 6);
  CHECK(g4.scg.stochastic_ancestors(g4.r2[3]).size() == 8);
  for (std::size_t o = 0; o < 4; ++o) CHECK(ipd::mirror_outcome(ipd::mirror_outcome(o)) == o);
  CHECK(ipd::mirror_outcome(1) == 2);
}

TEST_CASE("always cooperate: every sampled reward is -1") {
  ipd::IpdConfig cfg;
  cfg.horizon = 20;
  ipd::IpdScg ig = ipd::build_ipd_scg(cfg);
  const Binding b = ipd::make_binding(ig, constant_policy(20.0), constant_policy(20.0));
  std::mt19937_64 rng(1);
  for (int k = 0; k < 20; ++k) {
    const SampleRecord s = sample_trajectory(ig.scg, b, rng);
    for (int t = 0; t < cfg.horizon; ++t) {
      const double r = evaluate(ig.scg.arena(), ig.scg.cost(ig.r1[static_cast<std::size_t>(t)]).expr, b, s);
      CHECK(r / std::pow(cfg.gamma, t) == doctest::Approx(-1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("closed-form values") {
  const double gamma = 0.96;
  const int T = 150;
  const auto d = ipd::exact_value(constant_policy(-20.0), constant_policy(-20.0), gamma, T);
  const double dd = -2.0 * (1.0 - std::pow(gamma, T)) / (1.0 - gamma);
  CHECK(d.v1 == doctest::Approx(dd).epsilon(1e-6));
  CHECK(d.v2 == doctest::Approx(dd).epsilon(1e-6));
  const auto c = ipd::exact_value_infinite(constant_policy(20.0), constant_policy(20.0), gamma);
  CHECK((1.0 - gamma) * c.v1 == doctest::Approx(-1.0).epsilon(1e-6));
  const auto cf = ipd::exact_value(constant_policy(20.0), constant_policy(20.0), gamma, T);
  CHECK(ipd::per_step(cf.v1, gamma, T) == doctest::Approx(-1.0).epsilon(1e-6));
  // Long horizons converge to the infinite-horizon solve.
  const auto p = experiments::random_policies(4);
  const auto fin = ipd::exact_value(p.t1, p.t2, gamma, 2000);
  const auto inf = ipd::exact_value_infinite(p.t1, p.t2, gamma);
  CHECK(fin.v1 == doctest::Approx(inf.v1).epsilon(1e-10));
  CHECK(fin.v2 == doctest::Approx(inf.v2).epsilon(1e-10));
}

TEST_CASE("transition matrix is row-stochastic") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto p = experiments::random_policies(s, 3.0);
    const ipd::Chain c = ipd::transition(p.t1, p.t2);
    double z = 0.0;
    for (double v : c.p0) z += v;
    CHECK(std::abs(z - 1.0) <= 1e-12);
    for (const auto& row : c.P) {
      double r = 0.0;
      for (double v : row) r += v;
      CHECK(std::abs(r - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("enumerated objective equals the closed form for short horizons") {
  for (int T = 1; T <= 6; ++T) {
    ipd::IpdConfig cfg;
    cfg.horizon = T;
    ipd::IpdScg ig = ipd::build_ipd_scg(cfg);
    const auto p = experiments::random_policies(100 + static_cast<std::uint64_t>(T));
    const Binding b = ipd::make_binding(ig, p.t1, p.t2);
    const NodeId roots[] = {ipd::agent_objective(ig, 0, false).root,
                            ipd::agent_objective(ig, 1, false).root};
    const auto e = enumerate_many(ig.scg, roots, b);
    const auto v = ipd::exact_value(p.t1, p.t2, cfg.gamma, T);
    CHECK(std::abs(e[0].expectation - v.v1) <= 1e-9);
    CHECK(std::abs(e[1].expectation - v.v2) <= 1e-9);
  }
}

TEST_CASE("tit-for-tat vs always defect: rollouts agree with the closed form") {
  ipd::IpdConfig cfg;
  ipd::IpdScg ig = ipd::build_ipd_scg(cfg);
  // Softened logits so the rollouts are genuinely random.
  Policy soft_tft, soft_alld;
  for (std::size_t s = 0; s < 5; ++s) soft_tft[s] = kTitForTat[s] * 0.15;
  soft_alld.fill(-3.0);
  const Binding b = ipd::make_binding(ig, soft_tft, soft_alld);
  const NodeId root = ipd::agent_objective(ig, 0, false).root;
  const auto st = estimate(ig.scg, root, b, 100000, 8, 0, std::span<const Coord>{});
  const auto sv = ipd::exact_value(soft_tft, soft_alld, cfg.gamma, cfg.horizon);
  CHECK(st[0].std_err > 0.0);
  CHECK(std::abs(st[0].mean - sv.v1) <= 3.0 * st[0].std_err);
  // TFT loses the first round then defects: -3 + sum_{t>=1} gamma^t (-2).
  const auto v = ipd::exact_value(kTitForTat, constant_policy(-20.0), cfg.gamma, cfg.horizon);
  const double expect = -3.0 - 2.0 * (cfg.gamma - std::pow(cfg.gamma, cfg.horizon)) / (1.0 - cfg.gamma);
  CHECK(v.v1 == doctest::Approx(expect).epsilon(1e-6));
}

TEST_CASE("exact gradient and Hessian: cross terms, symmetry") {
  const double gamma = 0.96;
  const int T = 40;
  const auto p = experiments::random_policies(5);
  std::vector<double> x(p.t1.begin(), p.t1.end());
  x.insert(x.end(), p.t2.begin(), p.t2.end());
  const auto gh = ipd::exact_grad_hessian(x, gamma, T, 0);
  double cross = 0.0;
  for (std::size_t i = 5; i < 10; ++i) cross += std::abs(gh.grad[i]);
  CHECK(cross > 1e-3);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = 0; j < 10; ++j) CHECK(std::abs(gh.hessian[i * 10 + j] - gh.hessian[j * 10 + i]) <= 1e-8);

  // Same policy for both agents: each agent's own-gradient is the same vector.
  std::vector<double> sym(p.t1.begin(), p.t1.end());
  sym.insert(sym.end(), p.t1.begin(), p.t1.end());
  const auto g1 = ipd::exact_grad_hessian(sym, gamma, T, 0);
  const auto g2 = ipd::exact_grad_hessian(sym, gamma, T, 1);
  for (std::size_t s = 0; s < 5; ++s) CHECK(g1.grad[s] == doctest::Approx(g2.grad[5 + s]).epsilon(1e-6));
}

TEST_CASE("tabular baseline: zero table changes nothing, self-reference rejected") {
  ipd::IpdConfig cfg;
  cfg.horizon = 4;
  ipd::IpdScg ig = ipd::build_ipd_scg(cfg);
  GraphArena& g = ig.scg.arena();
  const auto p = experiments::random_policies(6);
  const Binding b = ipd::make_binding(ig, p.t1, p.t2);
  const auto coords = ig.coords();
  const NodeId plain = ipd::agent_objective(ig, 0, false).root;
  const NodeId based = ipd::agent_objective(ig, 0, true).root;
  for (int order = 1; order <= 2; ++order) {
    const auto a = enumerate_many(ig.scg, derivative_nodes(g, plain, coords, order), b);
    const auto z = enumerate_many(ig.scg, derivative_nodes(g, based, coords, order), b);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i].expectation - z[i].expectation) <= 1e-10);
  }
  // With a nonzero table the expectation is still unchanged.
  const Binding bv = ipd::make_binding(ig, p.t1, p.t2, Policy{-1, -2, -1.5, -0.5, -2}, Policy{-1, -1, -1, -1, -1});
  const auto a = enumerate_many(ig.scg, derivative_nodes(g, plain, coords, 1), bv);
  const auto z = enumerate_many(ig.scg, derivative_nodes(g, based, coords, 1), bv);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i].expectation - z[i].expectation) <= 1e-10);

  for (const auto& [w, expr] : ipd::tabular_baselines(ig, 0)) CHECK_NOTHROW(validate_baseline(ig.scg, w, expr));
  const NodeId self = g.mul(g.param(ig.value1, 1), ig.scg.stochastic(ig.a1[2]).leaf);
  CHECK_THROWS_AS(validate_baseline(ig.scg, ig.a1[2], self), BaselineError);
}

TEST_CASE("tabular baseline learns per-step values of a fixed game") {
  ipd::IpdConfig cfg;
  cfg.horizon = 30;
  ipd::IpdScg ig = ipd::build_ipd_scg(cfg);
  MonteCarlo roll(ig.scg, {});
  const Binding b = ipd::make_binding(ig, constant_policy(-20.0), constant_policy(20.0));
  ipd::TabularBaseline tb(ipd::BaselineMode::Tabular, 0.5);
  for (int k = 0; k < 3; ++k) {
    tb.begin_batch();
    roll.run(b, 256, static_cast<std::uint64_t>(k), [&](const MonteCarlo::Block& bl) {
      tb.observe(ipd::RolloutView{&ig, bl.samples}, bl.count);
    });
    tb.end_batch();
  }
  // Agent 1 always defects against a cooperator: outcome DC, reward 0 / -3.
  CHECK(tb.table(0)[0] == doctest::Approx(0.0));
  CHECK(tb.table(0)[3] == doctest::Approx(0.0));
  CHECK(tb.table(1)[0] == doctest::Approx(-3.0));
  CHECK(tb.table(1)[2] == doctest::Approx(-3.0));  // agent 2 sees CD
  CHECK(tb.table(0)[1] == 0.0);  // never visited

  ipd::TabularBaseline none(ipd::BaselineMode::None, 0.5);
  none.begin_batch();
  roll.run(b, 64, 0, [&](const MonteCarlo::Block& bl) { none.observe(ipd::RolloutView{&ig, bl.samples}, bl.count); });
  none.end_batch();
  for (double v : none.table(0)) CHECK(v == 0.0);
  CHECK(ipd::parse_baseline_mode("constant") == ipd::BaselineMode::Constant);
  CHECK_THROWS(ipd::parse_baseline_mode("bogus"));
}

TEST_CASE("config validation") {
  ipd::IpdConfig cfg;
  cfg.horizon = 0;
  CHECK_THROWS(ipd::validate(cfg));
  cfg.horizon = 5;
  cfg.gamma = 1.5;
  CHECK_THROWS(ipd::validate(cfg));
}
