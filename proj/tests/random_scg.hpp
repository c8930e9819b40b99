#pragma once

// Random corpora shared by the unit tests and the acceptance runner:
// deterministic expressions over a small parameter vector, and SCGs of
// Bernoulli nodes with polynomial costs.

#include <cmath>
#include <random>
#include <vector>

#include "dice/dists.hpp"
#include "dice/graph.hpp"
#include "dice/scg.hpp"

namespace dice::testing {

inline double unif(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}
inline int pick(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

// ---- deterministic expressions -------------------------------------------

struct RandomExpr {
  GraphArena arena;
  ParamId p;
  NodeId root;
  std::vector<double> x;
};

// Every op stays inside its domain for any real input: log and div only see
// 1 + u^2, pow bases are in (1, 2).
inline NodeId random_expr(GraphArena& g, ParamId p, std::size_t dim, std::mt19937_64& rng,
                          int depth) {
  if (depth == 0 || pick(rng, 0, 4) == 0) {
    if (pick(rng, 0, 3) == 0) return g.constant(std::round(unif(rng, -2, 2) * 4) / 4);
    return g.param(p, static_cast<std::uint32_t>(pick(rng, 0, static_cast<int>(dim) - 1)));
  }
  auto sub = [&] { return random_expr(g, p, dim, rng, depth - 1); };
  const int op = pick(rng, 0, 10);
  if (op <= 3) {
    const NodeId a = sub();
    const NodeId b = sub();
    switch (op) {
      case 0: return g.add(a, b);
      case 1: return g.sub(a, b);
      case 2: return g.mul(a, b);
      default: return g.div(a, g.add(g.one(), g.mul(b, b)));
    }
  }
  switch (op) {
    case 4: return g.neg(sub());
    case 5: return g.exp(g.sigmoid(sub()));
    case 6: {
      const NodeId u = sub();
      return g.log(g.add(g.one(), g.mul(u, u)));
    }
    case 7: return g.sigmoid(sub());
    case 8: {
      static constexpr double ks[] = {2.0, 3.0, 0.5, -1.0, 1.5};
      return g.pow(g.add(g.one(), g.sigmoid(sub())), ks[pick(rng, 0, 4)]);
    }
    case 9: return g.scale(sub(), std::round(unif(rng, -3, 3) * 2) / 2);
    default: {
      const NodeId a = sub();
      return g.mul(a, g.sigmoid(a));
    }
  }
}

inline RandomExpr make_random_expr(std::mt19937_64& rng, int depth = 6, std::size_t dim = 3) {
  RandomExpr e;
  e.p = e.arena.register_param(dim, "x");
  e.root = random_expr(e.arena, e.p, dim, rng, depth);
  for (std::size_t i = 0; i < dim; ++i) e.x.push_back(unif(rng, -1.5, 1.5));
  return e;
}

// ---- stochastic computation graphs --------------------------------------

struct RandomScg {
  Scg scg;
  ParamId theta;
  std::vector<double> x;
  std::vector<StochId> nodes;
  std::vector<CostId> costs;
};

inline RandomScg make_random_scg(std::mt19937_64& rng, int max_nodes = 12, std::size_t dim = 2) {
  RandomScg r;
  r.theta = r.scg.add_param(dim, "theta");
  GraphArena& g = r.scg.arena();
  auto th = [&](int j) { return g.param(r.theta, static_cast<std::uint32_t>(j)); };
  const int d = static_cast<int>(dim);
  const int n = pick(rng, 1, max_nodes);
  std::vector<NodeId> leaves;
  for (int i = 0; i < n; ++i) {
    std::vector<NodeId> terms{g.constant(std::round(unif(rng, -1, 1) * 8) / 8)};
    if (pick(rng, 0, 4) != 0) {
      const NodeId t = th(pick(rng, 0, d - 1));
      terms.push_back(g.scale(t, unif(rng, -1.5, 1.5)));
    }
    for (int k = 0; k < i && terms.size() < 4; ++k)
      if (pick(rng, 0, 3) == 0) terms.push_back(g.scale(leaves[k], unif(rng, -1, 1)));
    const NodeId logit = g.sum(terms);
    StochId s;
    if (pick(rng, 0, 1) == 0) {
      s = sigmoid_bernoulli(r.scg, logit);
    } else {
      s = bernoulli(r.scg, g.add(g.constant(0.15), g.scale(g.sigmoid(logit), 0.7)));
    }
    r.nodes.push_back(s);
    leaves.push_back(r.scg.stochastic(s).leaf);
  }
  const int m = pick(rng, 1, 4);
  for (int c = 0; c < m; ++c) {
    std::vector<NodeId> terms;
    const int nt = pick(rng, 1, 4);
    for (int t = 0; t < nt; ++t) {
      NodeId mono = g.constant(std::round(unif(rng, -2, 2) * 4) / 4);
      for (int k = pick(rng, 0, 2); k > 0; --k) mono = g.mul(mono, leaves[pick(rng, 0, n - 1)]);
      switch (pick(rng, 0, 3)) {
        case 0: mono = g.mul(mono, th(pick(rng, 0, d - 1))); break;
        case 1: mono = g.mul(mono, g.pow(th(pick(rng, 0, d - 1)), 2.0)); break;
        default: break;
      }
      terms.push_back(mono);
    }
    r.costs.push_back(r.scg.add_cost(g.sum(terms)));
  }
  for (std::size_t i = 0; i < dim; ++i) r.x.push_back(unif(rng, -1, 1));
  return r;
}

inline Binding bind_theta(const GraphArena& g, ParamId p, const std::vector<double>& x) {
  Binding b(g);
  b.set(p, x);
  return b;
}

// Ancestral sample with a plain rng (no batching).
inline SampleRecord random_samples(const Scg& scg, const Binding& b, std::mt19937_64& rng) {
  return sample_trajectory(scg, b, rng);
}

}  // namespace dice::testing
