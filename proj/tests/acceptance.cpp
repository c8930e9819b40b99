// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any fails.
//   acceptance [--fast] [--only N]
// --fast runs the fast IPD fidelity check (T=32, 20k samples) and the reduced
// training setup (T=50, batch 32) instead of the full-size runs.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "dice/estimators.hpp"
#include "dice/experiments.hpp"
#include "dice/ipd.hpp"
#include "dice/lola.hpp"
#include "dice/oracle.hpp"
#include "random_scg.hpp"

using namespace dice;
namespace ex = dice::experiments;
using dice::testing::bind_theta;
using dice::testing::make_random_scg;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

unsigned threads() {
  if (const char* e = std::getenv("DICE_THREADS")) return static_cast<unsigned>(std::max(1, std::atoi(e)));
  return std::max(1u, std::thread::hardware_concurrency());
}

Outcome toy_exactness() {
  double worst = 0.0, sl = 0.0;
  for (double theta : {0.2, 0.5, 0.8}) {
    const auto t = ex::verify_toy(theta);
    for (int k = 1; k <= 3; ++k) worst = std::max(worst, std::abs(t.dice[k] - t.truth[k]));
    sl = std::max(sl, std::abs(t.sl[1] + 2.0));
  }
  return {worst <= 1e-8 && sl <= 1e-8, fmt("max |dice - truth| = %.2e, max |sl2 + 2| = %.2e", worst, sl)};
}

Outcome magic_box_identities() {
  std::mt19937_64 rng(2001);
  const int n_scg = 250;
  int ones = 0, checks = 0;
  double worst = 0.0;
  for (int k = 0; k < n_scg; ++k) {
    auto r = make_random_scg(rng, 12);
    Scg& scg = r.scg;
    GraphArena& g = scg.arena();
    const Binding b = bind_theta(g, r.theta, r.x);
    std::vector<StochId> w;
    for (StochId s : r.nodes)
      if (dice::testing::pick(rng, 0, 1)) w.push_back(s);
    const NodeId box = magic_box(scg, w);
    const Coord c{r.theta, 0};
    std::vector<NodeId> scores;
    for (StochId s : w) scores.push_back(g.differentiate(scg.stochastic(s).log_prob, c));
    const NodeId lhs = g.differentiate(box, c);
    const NodeId rhs = g.mul(box, g.sum(scores));
    const NodeId objective = dice_objective(scg).root;
    for (int s = 0; s < 4; ++s) {
      std::mt19937_64 srng(static_cast<std::uint64_t>(k * 4 + s));
      const SampleRecord smp = sample_trajectory(scg, b, srng);
      double costs = 0.0;
      for (CostId id : r.costs) costs += evaluate(g, scg.cost(id).expr, b, smp);
      ones += evaluate(g, box, b, smp) == 1.0 ? 1 : 0;
      worst = std::max(worst, std::abs(evaluate(g, objective, b, smp) - costs) / (1.0 + std::abs(costs)));
      const double a = evaluate(g, lhs, b, smp), e = evaluate(g, rhs, b, smp);
      worst = std::max(worst, std::abs(a - e) / (1.0 + std::abs(e)));
      ++checks;
    }
  }
  return {ones == checks && worst <= 1e-12,
          fmt("%d SCGs, %d/%d boxes exactly 1, max rel gap (derivative rule, objective value) %.2e", n_scg, ones, checks, worst)};
}

Outcome unbiasedness() {
  std::mt19937_64 rng(3001);
  const int n_scg = 200;
  double worst1 = 0.0, worst2 = 0.0;
  for (int k = 0; k < n_scg; ++k) {
    auto r = make_random_scg(rng, 12);
    Scg& scg = r.scg;
    GraphArena& g = scg.arena();
    std::vector<NodeId> costs;
    for (CostId c : r.costs) costs.push_back(scg.cost(c).expr);
    const NodeId total = g.sum(costs);
    const ScalarFn f = [&](std::span<const double> x) {
      return enumerate_expectation(scg, total, bind_theta(g, r.theta, std::vector<double>(x.begin(), x.end())))
          .expectation;
    };
    const auto coords = coords_of(g, std::vector<ParamId>{r.theta});
    const NodeId root = dice_objective(scg).root;
    auto roots = derivative_nodes(g, root, coords, 1);
    const auto h = derivative_nodes(g, root, coords, 2);
    roots.insert(roots.end(), h.begin(), h.end());
    const auto e = enumerate_many(scg, roots, bind_theta(g, r.theta, r.x));
    const auto fd1 = fd_gradient(f, r.x);
    const auto fd2 = fd_hessian(f, r.x);
    const std::size_t d = fd1.size();
    for (std::size_t i = 0; i < d; ++i)
      worst1 = std::max(worst1, std::abs(e[i].expectation - fd1[i]) / (1.0 + std::abs(fd1[i])));
    for (std::size_t i = 0; i < fd2.size(); ++i)
      worst2 = std::max(worst2, std::abs(e[d + i].expectation - fd2[i]) / (1.0 + std::abs(fd2[i])));
  }
  return {worst1 <= 1e-4 && worst2 <= 1e-4,
          fmt("%d SCGs, max rel error order 1 %.2e, order 2 %.2e", n_scg, worst1, worst2)};
}

Outcome autodiff_soundness() {
  std::mt19937_64 rng(4001);
  int checked = 0;
  double worst1 = 0.0, worst2 = 0.0;
  for (int k = 0; k < 300; ++k) {
    auto e = dice::testing::make_random_expr(rng);
    GraphArena& g = e.arena;
    const auto eval = [&](NodeId n, std::span<const double> x) {
      Binding b(g);
      b.set(e.p, std::vector<double>(x.begin(), x.end()));
      return evaluate(g, n, b, SampleRecord{});
    };
    const double v = eval(e.root, e.x);
    if (!std::isfinite(v) || std::abs(v) > 100.0) continue;
    const ScalarFn f = [&](std::span<const double> x) { return eval(e.root, x); };
    const auto fd1 = fd_gradient(f, e.x, 1e-5);
    const auto fd2 = fd_hessian(f, e.x);
    const auto grad = g.gradient_vector(e.root, e.p);
    for (std::size_t i = 0; i < grad.size(); ++i) {
      worst1 = std::max(worst1, std::abs(eval(grad[i], e.x) - fd1[i]) / (1.0 + std::abs(fd1[i])));
      const auto row = g.gradient_vector(grad[i], e.p);
      for (std::size_t j = 0; j < row.size(); ++j) {
        const double ref = fd2[i * row.size() + j];
        worst2 = std::max(worst2, std::abs(eval(row[j], e.x) - ref) / (1.0 + std::abs(ref)));
      }
    }
    ++checked;
  }
  return {checked >= 200 && worst1 <= 1e-5 && worst2 <= 1e-4,
          fmt("%d expressions, max rel error gradient %.2e, Hessian %.2e", checked, worst1, worst2)};
}

Outcome ipd_fidelity(bool fast) {
  ipd::IpdConfig cfg;
  cfg.baseline = ipd::BaselineMode::Tabular;
  const std::size_t samples = fast ? 20000 : 100000;
  if (fast) cfg.horizon = 32;
  const double tg = fast ? 0.97 : 0.99, th = fast ? 0.8 : 0.9;
  ex::IpdFidelity bench(cfg, true);
  const auto p = ex::random_policies(3);
  const auto tables = bench.warm_up(p, cfg.baseline, 10, 4096, cfg.seed, threads());
  const auto f = bench.run(p, tables, samples, cfg.seed, threads());
  return {f.grad_corr >= tg && f.hess_corr >= th,
          fmt("T=%d, %zu samples: gradient corr %.4f (>= %.2f), Hessian corr %.4f (>= %.2f)", cfg.horizon,
              samples, f.grad_corr, tg, f.hess_corr, th)};
}

Outcome baseline_effect() {
  ex::SweepOptions so;
  so.sizes = {128};
  so.seeds = 5;
  so.threads = threads();
  const auto cells = ex::sweep_baseline(so);
  double none = 0.0, tab = 0.0;
  for (const auto& c : cells) (c.mode == ipd::BaselineMode::None ? none : tab) = c.mean;
  return {tab > none, fmt("batch 128, 5 seeds: mean corr tabular %.4f vs none %.4f", tab, none)};
}

Outcome hvp_check() {
  double worst = 0.0;
  std::mt19937_64 rng(7001);
  // Toy, one coordinate.
  for (double theta : {0.2, 0.5, 0.8}) {
    auto toy = ex::make_toy();
    GraphArena& g = toy.scg.arena();
    Binding b(g);
    b.set(toy.theta, {theta});
    const NodeId root = dice_objective(toy.scg).root;
    const auto coords = coords_of(g, std::vector<ParamId>{toy.theta});
    const double v[] = {dice::testing::unif(rng, -2, 2)};
    const NodeId hv = hvp(g, root, coords, v).at(0);
    const NodeId h = derivative_nodes(g, root, coords, 2).at(0);
    const auto e = enumerate_many(toy.scg, std::vector<NodeId>{hv, h}, b);
    worst = std::max(worst, std::abs(e[0].expectation - e[1].expectation * v[0]));
  }
  // Two-step IPD over both agents' parameters.
  ipd::IpdConfig cfg;
  cfg.horizon = 2;
  for (int agent = 0; agent < 2; ++agent) {
    ipd::IpdScg ig = ipd::build_ipd_scg(cfg);
    GraphArena& g = ig.scg.arena();
    const auto coords = ig.coords();
    const std::size_t d = coords.size();
    const auto p = ex::random_policies(70 + static_cast<std::uint64_t>(agent));
    const Binding b = ipd::make_binding(ig, p.t1, p.t2);
    const NodeId root = ipd::agent_objective(ig, agent, false).root;
    std::vector<double> v(d);
    for (auto& x : v) x = dice::testing::unif(rng, -1, 1);
    auto roots = hvp(g, root, coords, v);
    const auto h = derivative_nodes(g, root, coords, 2);
    roots.insert(roots.end(), h.begin(), h.end());
    const auto e = enumerate_many(ig.scg, roots, b);
    for (std::size_t i = 0; i < d; ++i) {
      double hv = 0.0;
      for (std::size_t j = 0; j < d; ++j) hv += e[d + i * d + j].expectation * v[j];
      worst = std::max(worst, std::abs(e[i].expectation - hv));
    }
  }
  return {worst <= 1e-8, fmt("max |Hv - H*v| = %.2e (toy, IPD T=2)", worst)};
}

Outcome lola_behavior(bool reduced) {
  lola::LolaConfig cfg;
  if (reduced) {
    cfg.ipd.horizon = 50;
    cfg.ipd.batch = 32;
  }
  const double naive_bound = reduced ? -1.7 : -1.8;
  const auto naive = ex::train_seeds(lola::Method::Naive, cfg, 0, 5, threads());
  const auto ld = ex::train_seeds(lola::Method::LolaDice, cfg, 0, 5, threads());
  int hits = 0;
  std::string finals;
  for (double f : ld.finals) {
    hits += f >= -1.5 ? 1 : 0;
    finals += fmt("%s%.3f", finals.empty() ? "" : " ", f);
  }
  return {naive.mean <= naive_bound && hits >= 3,
          fmt("T=%d batch %zu: naive mean %.3f (<= %.1f); LOLA-DiCE >= -1.5 on %d/5 seeds [%s]",
              cfg.ipd.horizon, cfg.ipd.batch, naive.mean, naive_bound, hits, finals.c_str())};
}

Outcome bias_demo() {
  ipd::IpdConfig cfg;
  const ex::PolicyPair p{};  // theta = 0: every action at probability one half
  const auto b = ex::lookahead_bias(cfg, p, 16384, 9);
  return {b.max_ratio > 10.0, fmt("batch 16384: max |dice - sl| / pooled std_err = %.1f (> 10)", b.max_ratio)};
}

}  // namespace

int main(int argc, char** argv) {
  bool fast = false;
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--fast") == 0) {
      fast = true;
    } else if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: acceptance [--fast] [--only N]\n");
      return 2;
    }
  }
  struct Criterion {
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all{
      {"toy exactness", 1, toy_exactness},
      {"magic box identities", 30, magic_box_identities},
      {"enumerated derivatives vs finite differences", 120, unbiasedness},
      {"autodiff vs finite differences", 30, autodiff_soundness},
      {fast ? "IPD fidelity (fast)" : "IPD fidelity", fast ? 120.0 : 1200.0, [&] { return ipd_fidelity(fast); }},
      {"baseline effect", 120, baseline_effect},
      {"Hessian-vector products", 10, hvp_check},
      {fast ? "LOLA-DiCE behavior (reduced)" : "LOLA-DiCE behavior", fast ? 300.0 : 1800.0,
       [&] { return lola_behavior(fast); }},
      {"lookahead bias", 120, bias_demo},
  };
  int failed = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (only != 0 && only != static_cast<int>(i + 1)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = all[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= all[i].budget_s;
    const bool ok = o.pass && in_time;
    failed += ok ? 0 : 1;
    std::printf("%s %zu. %s: %s [%.1fs / %.0fs budget%s]\n", ok ? "PASS" : "FAIL", i + 1, all[i].name,
                o.detail.c_str(), secs, all[i].budget_s, in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
