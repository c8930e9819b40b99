#include "dice/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>

#include "dice/dists.hpp"
#include "dice/oracle.hpp"

namespace dice::experiments {

namespace {

constexpr std::uint64_t kTagWarmup = 11;
constexpr std::uint64_t kTagSweep = 12;

RunningStats summarize(std::span<const double> xs) {
  RunningStats s;
  for (double x : xs) s.add(x);
  return s;
}

}  // namespace

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("pearson: length mismatch");
  if (a.empty()) return 0.0;
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

Toy make_toy() {
  Toy toy;
  toy.theta = toy.scg.add_param(1, "theta");
  GraphArena& g = toy.scg.arena();
  const NodeId th = g.param(toy.theta, 0);
  toy.x = bernoulli(toy.scg, th);
  const NodeId x = toy.scg.stochastic(toy.x).leaf;
  const NodeId f = g.add(g.mul(x, g.sub(g.one(), th)), g.mul(g.sub(g.one(), x), g.add(g.one(), th)));
  toy.f = toy.scg.add_cost(f);
  return toy;
}

ToyResult verify_toy(double theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("theta must lie in (0, 1)");
  Toy toy = make_toy();
  GraphArena& g = toy.scg.arena();
  const Coord c{toy.theta, 0};
  const Coord cs[] = {c};

  std::vector<NodeId> roots;
  NodeId d = dice_objective(toy.scg).root;
  roots.push_back(d);
  for (int k = 1; k <= 3; ++k) roots.push_back(d = g.differentiate(d, c));
  const NodeId sl = surrogate_loss(toy.scg).root;
  for (int k = 1; k <= 3; ++k) roots.push_back(surrogate_derivatives(toy.scg, sl, cs, k).at(0));

  Binding b(g);
  b.set(toy.theta, std::vector<double>{theta});
  const auto e = enumerate_many(toy.scg, roots, b);

  ToyResult r;
  r.theta = theta;
  for (int k = 0; k < 4; ++k) r.dice[k] = e[k].expectation;
  for (int k = 0; k < 3; ++k) r.sl[k] = e[4 + k].expectation;
  r.truth = {1.0 + theta - 2.0 * theta * theta, 1.0 - 4.0 * theta, -4.0, 0.0};
  r.sl_truth = {1.0 - 4.0 * theta, -2.0};
  return r;
}

PolicyPair random_policies(std::uint64_t seed, double std) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, std);
  PolicyPair p;
  for (double& x : p.t1) x = nd(rng);
  for (double& x : p.t2) x = nd(rng);
  return p;
}

// ---- IPD fidelity -----------------------------------------------------

IpdFidelity::IpdFidelity(const ipd::IpdConfig& cfg, bool hessian) : cfg_(cfg), hessian_(hessian) {
  ipd::validate(cfg_);
  graph_ = std::make_unique<ipd::IpdScg>(ipd::build_ipd_scg(cfg_));
  GraphArena& g = graph_->scg.arena();
  const NodeId root = ipd::agent_objective(*graph_, 0, true).root;
  const std::vector<Coord> coords = graph_->coords();
  std::vector<NodeId> roots = derivative_nodes(g, root, coords, 1);
  if (hessian_) {
    const auto h = derivative_nodes(g, root, coords, 2);
    roots.insert(roots.end(), h.begin(), h.end());
  }
  mc_ = std::make_unique<MonteCarlo>(graph_->scg, std::move(roots));
  rollouts_ = std::make_unique<MonteCarlo>(graph_->scg, std::vector<NodeId>{});
}

IpdFidelity::~IpdFidelity() = default;

std::array<ipd::Policy, 2> IpdFidelity::warm_up(const PolicyPair& p, ipd::BaselineMode mode,
                                                int batches, std::size_t batch_size,
                                                std::uint64_t seed, unsigned threads) const {
  ipd::TabularBaseline tb(mode, cfg_.baseline_decay);
  if (mode == ipd::BaselineMode::None) return {tb.table(0), tb.table(1)};
  const Binding b = ipd::make_binding(*graph_, p.t1, p.t2);
  for (int k = 0; k < batches; ++k) {
    tb.begin_batch();
    rollouts_->run(b, batch_size, lola::step_seed(seed, static_cast<std::uint64_t>(k), kTagWarmup),
                   [&](const MonteCarlo::Block& bl) {
                     tb.observe(ipd::RolloutView{graph_.get(), bl.samples}, bl.count);
                   },
                   threads);
    tb.end_batch();
  }
  return {tb.table(0), tb.table(1)};
}

void IpdFidelity::exact(const PolicyPair& p, FidelityResult& out) const {
  std::vector<double> x(p.t1.begin(), p.t1.end());
  x.insert(x.end(), p.t2.begin(), p.t2.end());
  ipd::GradHessian gh = ipd::exact_grad_hessian(x, cfg_.gamma, cfg_.horizon, 0);
  out.exact_grad = std::move(gh.grad);
  if (hessian_) out.exact_hess = std::move(gh.hessian);
}

FidelityResult IpdFidelity::run(const PolicyPair& p, const std::array<ipd::Policy, 2>& tables,
                                std::size_t samples, std::uint64_t seed, unsigned threads,
                                const FidelityResult* exact_cache) const {
  FidelityResult r;
  if (exact_cache) {
    r.exact_grad = exact_cache->exact_grad;
    r.exact_hess = exact_cache->exact_hess;
  } else {
    exact(p, r);
  }
  const Binding b = ipd::make_binding(*graph_, p.t1, p.t2, tables[0], tables[1]);
  const auto st = mc_->run(b, samples, seed, {}, threads);
  const std::size_t n = ipd::kPolicyDim * 2;
  for (std::size_t i = 0; i < st.size(); ++i) {
    auto& mean = i < n ? r.mc_grad : r.mc_hess;
    auto& se = i < n ? r.mc_grad_se : r.mc_hess_se;
    mean.push_back(st[i].mean);
    se.push_back(st[i].std_err);
  }
  r.grad_corr = pearson(r.mc_grad, r.exact_grad);
  if (hessian_) r.hess_corr = pearson(r.mc_hess, r.exact_hess);
  return r;
}

// ---- baseline sweep ---------------------------------------------------

std::vector<SweepCell> sweep_baseline(const SweepOptions& opt) {
  IpdFidelity bench(opt.ipd, false);
  const PolicyPair p = random_policies(opt.policy_seed);
  FidelityResult ex;
  bench.exact(p, ex);

  std::vector<std::array<ipd::Policy, 2>> tables;
  for (ipd::BaselineMode m : opt.modes)
    tables.push_back(bench.warm_up(p, m, opt.warmup_batches, opt.warmup_size, opt.seed, opt.threads));

  std::vector<SweepCell> out;
  for (std::size_t mi = 0; mi < opt.modes.size(); ++mi) {
    for (std::size_t size : opt.sizes) {
      SweepCell cell;
      cell.mode = opt.modes[mi];
      cell.size = size;
      for (int s = 0; s < opt.seeds; ++s) {
        const std::uint64_t seed =
            lola::step_seed(opt.seed, size, kTagSweep, static_cast<std::uint64_t>(s));
        cell.corr.push_back(bench.run(p, tables[mi], size, seed, opt.threads, &ex).grad_corr);
      }
      const RunningStats rs = summarize(cell.corr);
      cell.mean = rs.mean;
      cell.sd = std::sqrt(rs.variance());
      out.push_back(std::move(cell));
    }
  }
  return out;
}

// ---- training ---------------------------------------------------------

TrainSummary train_seeds(lola::Method method, const lola::LolaConfig& cfg, std::uint64_t seed0,
                         int n, unsigned threads) {
  TrainSummary s;
  s.traces.resize(static_cast<std::size_t>(std::max(n, 0)));
  auto one = [&](std::size_t i) {
    lola::LolaConfig c = cfg;
    c.ipd.seed = seed0 + i;
    s.traces[i] = lola::train(method, c);
  };
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(s.traces.size(), 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < s.traces.size(); ++i) one(i);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < s.traces.size(); i += workers) one(i);
      });
  }
  for (const auto& t : s.traces) {
    if (t.epochs.empty()) {
      const ipd::Values v = ipd::exact_value(t.theta1, t.theta2, cfg.ipd.gamma, cfg.ipd.horizon);
      s.finals.push_back(ipd::per_step(0.5 * (v.v1 + v.v2), cfg.ipd.gamma, cfg.ipd.horizon));
    } else {
      s.finals.push_back(t.epochs.back().joint_return);
    }
  }
  const RunningStats rs = summarize(s.finals);
  s.mean = rs.mean;
  s.ci95 = rs.n > 1 ? 1.96 * std::sqrt(rs.variance() / static_cast<double>(rs.n)) : 0.0;
  return s;
}

// ---- lookahead bias ---------------------------------------------------

BiasResult lookahead_bias(const ipd::IpdConfig& cfg, const PolicyPair& p, std::size_t batch,
                          std::uint64_t seed, int warmup_batches, std::size_t warmup_size) {
  lola::Workbench wb(cfg);
  const ipd::IpdScg& g = wb.graph();
  for (int k = 0; k < warmup_batches; ++k) {
    wb.baseline().begin_batch();
    wb.outer_gradient(0, p.t1, p.t2, 0, 1.0, lola::InnerVariant::Dice,
                      lola::step_seed(seed, static_cast<std::uint64_t>(k), kTagWarmup), warmup_size,
                      [&](const MonteCarlo::Block& b) {
                        wb.baseline().observe(ipd::RolloutView{&g, b.samples}, b.count);
                      });
    wb.baseline().end_batch();
  }
  const auto d = wb.outer_gradient(0, p.t1, p.t2, 1, 1.0, lola::InnerVariant::Dice, seed, batch);
  const auto s = wb.outer_gradient(0, p.t1, p.t2, 1, 1.0, lola::InnerVariant::Surrogate, seed, batch);
  BiasResult r;
  r.dice = d.mean;
  r.dice_se = d.std_err;
  r.sl = s.mean;
  r.sl_se = s.std_err;
  for (std::size_t i = 0; i < ipd::kPolicyDim; ++i) {
    const double pooled = std::hypot(d.std_err[i], s.std_err[i]);
    const double diff = std::abs(d.mean[i] - s.mean[i]);
    r.ratio[i] = pooled > 0.0 ? diff / pooled : (diff > 0.0 ? INFINITY : 0.0);
    r.max_ratio = std::max(r.max_ratio, r.ratio[i]);
  }
  return r;
}

}  // namespace dice::experiments
