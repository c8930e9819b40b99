#include <algorithm>
#include <random>

#include "doctest.h"
#include "dice/dists.hpp"
#include "dice/estimators.hpp"
#include "dice/ipd.hpp"
#include "dice/oracle.hpp"
#include "random_scg.hpp"

using namespace dice;

namespace {

bool contains(const std::vector<StochId>& v, StochId s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}
bool contains(const std::vector<CostId>& v, CostId c) {
  return std::find(v.begin(), v.end(), c) != v.end();
}

}  // namespace

TEST_CASE("single chain: theta -> x -> f") {
  Scg scg;
  const ParamId p = scg.add_param(1);
  GraphArena& g = scg.arena();
  const StochId x = bernoulli(scg, g.param(p, 0));
  const CostId f = scg.add_cost(g.mul(scg.stochastic(x).leaf, g.param(p, 0)));
  CHECK(scg.influences(x, f));
  CHECK(scg.stochastic_ancestors(f) == std::vector<StochId>{x});
  CHECK(scg.downstream_costs(x) == std::vector<CostId>{f});
  CHECK(scg.depends_on_theta(x));
}

TEST_CASE("independent nodes do not influence each other's costs") {
  Scg scg;
  const ParamId p = scg.add_param(1);
  GraphArena& g = scg.arena();
  const StochId x = bernoulli(scg, g.param(p, 0));
  const StochId y = bernoulli(scg, g.param(p, 0));
  const CostId f = scg.add_cost(scg.stochastic(x).leaf);
  CHECK_FALSE(scg.influences(y, f));
  CHECK(scg.downstream_costs(y).empty());
  const CostId k = scg.add_cost(g.constant(3.0));
  CHECK(scg.stochastic_ancestors(k).empty());
}

TEST_CASE("theta-independent node is excluded from W_c and changes no expectation") {
  Scg scg;
  const ParamId p = scg.add_param(1);
  GraphArena& g = scg.arena();
  const StochId x = bernoulli(scg, g.param(p, 0));
  const StochId z = bernoulli(scg, g.constant(0.5));
  const NodeId cost = g.mul(scg.stochastic(x).leaf, scg.stochastic(z).leaf);
  const CostId c = scg.add_cost(cost);
  CHECK(scg.stochastic_ancestors(c) == std::vector<StochId>{x});
  CHECK_FALSE(scg.depends_on_theta(z));

  const Coord th{p, 0};
  const NodeId with_z = g.mul(magic_box(scg, std::vector<StochId>{x, z}), cost);
  const NodeId dice = dice_objective(scg).root;
  Binding b(g);
  b.set(p, {0.3});
  const NodeId roots[] = {g.differentiate(dice, th), g.differentiate(with_z, th),
                          g.differentiate(g.differentiate(dice, th), th),
                          g.differentiate(g.differentiate(with_z, th), th)};
  const auto e = enumerate_many(scg, roots, b);
  CHECK(e[0].expectation == doctest::Approx(e[1].expectation).epsilon(1e-12));
  CHECK(e[2].expectation == doctest::Approx(e[3].expectation).epsilon(1e-12));
  CHECK(e[0].expectation == doctest::Approx(0.5));
}

TEST_CASE("RL chain: earlier actions influence later rewards") {
  ipd::IpdConfig cfg;
  cfg.horizon = 3;
  ipd::IpdScg ig = ipd::build_ipd_scg(cfg);
  const Scg& scg = ig.scg;
  CHECK(scg.influences(ig.a1[0], ig.r1[2]));
  CHECK_FALSE(scg.influences(ig.a1[2], ig.r1[1]));
  CHECK(scg.stochastic_ancestors(ig.r1[2]).size() == 6);
  const auto down = scg.downstream_costs(ig.a1[0]);
  for (int t = 0; t < 3; ++t) {
    CHECK(contains(down, ig.r1[static_cast<std::size_t>(t)]));
    CHECK(contains(down, ig.r2[static_cast<std::size_t>(t)]));
  }
}

TEST_CASE("log_prob may only see its own leaf and its parents") {
  Scg scg;
  const ParamId p = scg.add_param(1);
  GraphArena& g = scg.arena();
  const StochId x = bernoulli(scg, g.param(p, 0));
  const NodeId xl = scg.stochastic(x).leaf;
  CHECK_THROWS_AS(scg.add_stochastic(DistKind::Bernoulli, g.constant(0.5), g.constant(0.5),
                                     [&](GraphArena& a, NodeId leaf) { return a.mul(leaf, xl); }),
                  GraphError);
}

TEST_CASE("random SCGs: ancestor/downstream duality and W stable under differentiation") {
  std::mt19937_64 rng(21);
  for (int k = 0; k < 100; ++k) {
    auto r = dice::testing::make_random_scg(rng);
    Scg& scg = r.scg;
    for (StochId w : r.nodes) {
      const auto down = scg.downstream_costs(w);
      for (CostId c : r.costs) {
        const auto anc = scg.stochastic_ancestors(c);
        if (scg.depends_on_theta(w)) CHECK(contains(down, c) == contains(anc, w));
        CHECK(scg.influences(w, c) == contains(down, c));
      }
      for (StochId d : scg.descendants(w)) CHECK(d.index > w.index);
    }
    GraphArena& g = scg.arena();
    for (CostId c : r.costs) {
      const auto w = scg.stochastic_ancestors(c);
      const NodeId term = g.mul(magic_box(scg, w), scg.cost(c).expr);
      NodeId d = term;
      for (int n = 0; n < 2; ++n) {
        d = g.differentiate(d, Coord{r.theta, 0});
        const auto wd = scg.stochastic_ancestors_of(d);
        // Derivatives can only drop nodes (a term may vanish), never add them.
        for (StochId s : wd) CHECK(contains(w, s));
      }
      CHECK(scg.stochastic_ancestors_of(term) == w);
    }
  }
}
