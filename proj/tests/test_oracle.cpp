#include <cmath>
#include <random>

#include "doctest.h"
#include "dice/estimators.hpp"
#include "dice/experiments.hpp"
#include "dice/oracle.hpp"
#include "random_scg.hpp"

using namespace dice;

TEST_CASE("enumeration of the toy") {
  auto toy = experiments::make_toy();
  GraphArena& g = toy.scg.arena();
  const NodeId root = dice_objective(toy.scg).root;
  const Coord c{toy.theta, 0};
  const NodeId d2 = g.differentiate(g.differentiate(root, c), c);
  Binding b(g);
  b.set(toy.theta, {0.5});
  const auto e = enumerate_expectation(toy.scg, root, b);
  CHECK(e.expectation == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(e.n_outcomes == 2);
  for (double th : {0.2, 0.5, 0.8}) {
    b.set(toy.theta, {th});
    CHECK(enumerate_expectation(toy.scg, d2, b).expectation == doctest::Approx(-4.0).epsilon(1e-12));
  }
  const auto k = enumerate_expectation(toy.scg, g.constant(2.5), b);
  CHECK(k.expectation == 2.5);
  CHECK(k.total_weight == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("finite differences") {
  const ScalarFn sq = [](std::span<const double> x) { return x[0] * x[0] + x[1] * x[1]; };
  const double x[] = {1.0, 2.0};
  const auto gsq = fd_gradient(sq, x);
  CHECK(std::abs(gsq[0] - 2.0) <= 1e-6);
  CHECK(std::abs(gsq[1] - 4.0) <= 1e-6);
  const ScalarFn lin = [](std::span<const double> v) { return 3.0 * v[0] - 2.0 * v[1] + 1.0; };
  for (double h : fd_hessian(lin, x)) CHECK(std::abs(h) <= 1e-6);

  const ScalarFn mixed = [](std::span<const double> v) { return std::sin(v[0]) * std::exp(v[1]); };
  const auto h = fd_hessian(mixed, x);
  CHECK(h[1] == h[2]);

  auto toy = experiments::make_toy();
  GraphArena& g = toy.scg.arena();
  std::vector<NodeId> costs{toy.scg.cost(toy.f).expr};
  const NodeId f = g.sum(costs);
  const ScalarFn ef = [&](std::span<const double> t) {
    Binding b(g);
    b.set(toy.theta, {t[0]});
    return enumerate_expectation(toy.scg, f, b).expectation;
  };
  const double t0[] = {0.4};
  CHECK(std::abs(fd_hessian(ef, t0)[0] + 4.0) <= 1e-5);
}

TEST_CASE("enumeration is linear and weights sum to one") {
  std::mt19937_64 rng(51);
  for (int k = 0; k < 40; ++k) {
    auto r = dice::testing::make_random_scg(rng, 10);
    Scg& scg = r.scg;
    GraphArena& g = scg.arena();
    const Binding b = dice::testing::bind_theta(g, r.theta, r.x);
    const NodeId e1 = scg.cost(r.costs.front()).expr;
    const NodeId e2 = dice_objective(scg).root;
    const double a = dice::testing::unif(rng, -3, 3);
    const NodeId lin = g.add(g.scale(e1, a), e2);
    const NodeId roots[] = {e1, e2, lin};
    const auto res = enumerate_many(scg, roots, b);
    CHECK(std::abs(res[2].expectation - (a * res[0].expectation + res[1].expectation)) <=
          1e-12 * (1.0 + std::abs(res[2].expectation)));
    CHECK(std::abs(res[0].total_weight - 1.0) <= 1e-12);
    CHECK(res[0].n_outcomes == (std::size_t{1} << scg.stochastic_count()));
  }
}

TEST_CASE("enumeration refuses graphs beyond the cap") {
  Scg scg;
  GraphArena& g = scg.arena();
  for (std::size_t i = 0; i <= kMaxEnumerated; ++i) bernoulli(scg, g.constant(0.5));
  Binding b(g);
  CHECK_THROWS(enumerate_expectation(scg, g.one(), b));
}

TEST_CASE("assign_coords and flatten are inverse") {
  GraphArena g;
  const ParamId a = g.register_param(2), c = g.register_param(3);
  Binding b(g);
  const std::vector<ParamId> ps{a, c};
  const std::vector<double> x{1, 2, 3, 4, 5};
  assign_coords(b, g, ps, x);
  CHECK(flatten(b, g, ps) == x);
}
