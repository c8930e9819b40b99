#include "dice/lola.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace dice::lola {

namespace {

constexpr std::size_t kDim = ipd::kPolicyDim;
constexpr std::size_t kCoords = 2 * kDim;
constexpr std::uint64_t kTagOuter = 1;
constexpr std::uint64_t kTagInner = 2;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

void require_finite(const Vec5& v, const char* what, int agent) {
  for (double x : v) {
    if (std::isfinite(x)) continue;
    std::ostringstream os;
    os << "non-finite " << what << " for agent " << agent + 1 << ":";
    for (double y : v) os << ' ' << y;
    throw std::runtime_error(os.str());
  }
}

}  // namespace

Method parse_method(const std::string& s) {
  if (s == "naive") return Method::Naive;
  if (s == "lola-dice" || s == "lola") return Method::LolaDice;
  throw std::invalid_argument("unknown method '" + s + "' (naive|lola-dice)");
}

const char* method_name(Method m) { return m == Method::Naive ? "naive" : "lola-dice"; }

void validate(const LolaConfig& cfg) {
  ipd::validate(cfg.ipd);
  if (cfg.lookahead < 0) throw std::invalid_argument("lookahead must be >= 0");
  if (cfg.alpha_inner < 0.0 || cfg.alpha_outer < 0.0)
    throw std::invalid_argument("learning rates must be non-negative");
  if (cfg.epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (cfg.clip < 0.0) throw std::invalid_argument("clip must be >= 0");
}

std::uint64_t step_seed(std::uint64_t seed, std::uint64_t epoch, std::uint64_t tag,
                        std::uint64_t k, std::uint64_t agent) {
  std::uint64_t h = splitmix(seed);
  for (std::uint64_t v : {epoch, tag, k, agent}) h = splitmix(h ^ v);
  return h;
}

Vec5 clip_linf(Vec5 v, double bound) {
  if (bound <= 0.0) return v;
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  if (m > bound)
    for (double& x : v) x *= bound / m;
  return v;
}

Workbench::Workbench(const ipd::IpdConfig& cfg)
    : cfg_(cfg),
      graph_(std::make_unique<ipd::IpdScg>(ipd::build_ipd_scg(cfg))),
      baseline_(cfg.baseline, cfg.baseline_decay) {
  ipd::IpdScg& g = *graph_;
  Scg& scg = g.scg;
  const bool with_baseline = cfg.baseline != ipd::BaselineMode::None;
  const std::vector<Coord> coords = g.coords();

  NodeId dice[2], sl[2];
  for (int a = 0; a < 2; ++a) {
    dice[a] = ipd::agent_objective(g, a, with_baseline).root;
    sl[a] = surrogate_loss(scg, a).root;
    if (with_baseline)
      sl[a] = scg.arena().add(sl[a], baseline_term(scg, ipd::tabular_baselines(g, a)));
  }

  std::vector<NodeId> grads;
  for (int a = 0; a < 2; ++a) {
    auto d = derivative_nodes(scg.arena(), dice[a], coords, 1);
    grads.insert(grads.end(), d.begin(), d.end());
  }
  grads_ = std::make_unique<MonteCarlo>(scg, std::move(grads));

  const NodeId* roots[2] = {dice, sl};
  for (int v = 0; v < 2; ++v) {
    for (int a = 0; a < 2; ++a) {
      std::vector<NodeId> r = derivative_nodes(scg.arena(), roots[v][a], coords, 1);
      auto h = derivative_nodes(scg.arena(), roots[v][a], coords, 2);
      r.insert(r.end(), h.begin(), h.end());
      second_[v][a] = std::make_unique<MonteCarlo>(scg, std::move(r));
    }
  }
}

Workbench::~Workbench() = default;

Binding Workbench::binding(const ipd::Policy& t1, const ipd::Policy& t2) const {
  return ipd::make_binding(*graph_, t1, t2, baseline_.table(0), baseline_.table(1));
}

double Workbench::batch_return(const MonteCarlo::Block& block) const {
  const ipd::IpdScg& g = *graph_;
  const ipd::Payoffs pay;
  const ipd::RolloutView view{&g, block.samples};
  double total = 0.0;
  for (std::size_t l = 0; l < block.count; ++l) {
    double disc = 1.0;
    for (int t = 0; t < g.horizon; ++t) {
      const std::size_t o = view.outcome(t, l);
      total += disc * 0.5 * (pay.r1[o] + pay.r2[o]);
      disc *= g.gamma;
    }
  }
  return ipd::per_step(total / static_cast<double>(block.count), g.gamma, g.horizon);
}

Workbench::Inner Workbench::inner_step(int agent, const ipd::Policy& t1, const ipd::Policy& t2,
                                       InnerVariant variant, std::uint64_t seed,
                                       std::size_t batch) const {
  const int opp = 1 - agent;
  const MonteCarlo& mc = *second_[variant == InnerVariant::Dice ? 0 : 1][opp];
  const auto st = mc.run(binding(t1, t2), batch, seed);
  const std::size_t o = kDim * static_cast<std::size_t>(agent);
  const std::size_t q = kDim * static_cast<std::size_t>(opp);
  auto hess = [&](std::size_t i, std::size_t j) { return st[kCoords + i * kCoords + j].mean; };
  Inner in;
  for (std::size_t a = 0; a < kDim; ++a) {
    in.g[a] = st[q + a].mean;
    for (std::size_t b = 0; b < kDim; ++b) {
      in.m[a][b] = hess(q + a, o + b);
      in.h[a][b] = hess(q + a, q + b);
    }
  }
  return in;
}

OuterGradient Workbench::outer_gradient(int agent, const ipd::Policy& t1, const ipd::Policy& t2,
                                        int lookahead, double alpha_inner, InnerVariant variant,
                                        std::uint64_t seed, std::size_t batch,
                                        const MonteCarlo::Observer& observer) const {
  OuterGradient out;
  if (alpha_inner == 0.0) lookahead = 0;  // the lookahead is the identity map
  ipd::Policy opp = agent == 0 ? t2 : t1;
  const ipd::Policy& own = agent == 0 ? t1 : t2;
  auto pair = [&](const ipd::Policy& o) {
    return agent == 0 ? std::pair{own, o} : std::pair{o, own};
  };

  bool first_run = true;
  for (int k = 0; k < lookahead; ++k) {
    const auto [p1, p2] = pair(opp);
    const std::uint64_t s = step_seed(seed, 0, kTagInner, static_cast<std::uint64_t>(k));
    if (first_run && observer) {
      // The first inner batch is drawn under the caller's policies.
      grads_->run(binding(p1, p2), batch, s, observer);
    }
    first_run = false;
    const Inner in = inner_step(agent, p1, p2, variant, s, batch);
    Mat5 next = out.jacobian;
    for (std::size_t a = 0; a < kDim; ++a) {
      for (std::size_t b = 0; b < kDim; ++b) {
        double hj = 0.0;
        for (std::size_t c = 0; c < kDim; ++c) hj += in.h[a][c] * out.jacobian[c][b];
        next[a][b] += alpha_inner * (in.m[a][b] + hj);
      }
    }
    out.jacobian = next;
    for (std::size_t a = 0; a < kDim; ++a) opp[a] += alpha_inner * in.g[a];
  }
  out.opponent = opp;

  const std::size_t base = kCoords * static_cast<std::size_t>(agent);
  const std::size_t o = kDim * static_cast<std::size_t>(agent);
  const std::size_t q = kDim * static_cast<std::size_t>(1 - agent);
  std::array<RunningStats, kDim> total{};
  const Mat5& j = out.jacobian;
  auto combine = [&](const MonteCarlo::Block& b) {
    std::array<RunningStats, kDim> local{};
    for (std::size_t l = 0; l < b.count; ++l) {
      for (std::size_t k = 0; k < kDim; ++k) {
        double v = b.values[(base + o + k) * kLanes + l];
        if (lookahead > 0)
          for (std::size_t a = 0; a < kDim; ++a) v += j[a][k] * b.values[(base + q + a) * kLanes + l];
        local[k].add(v);
      }
    }
    for (std::size_t k = 0; k < kDim; ++k) total[k].merge(local[k]);
    if (first_run && observer) observer(b);
  };
  const auto [p1, p2] = pair(opp);
  grads_->run(binding(p1, p2), batch, seed, combine);
  for (std::size_t k = 0; k < kDim; ++k) {
    const EstimateStats s = total[k].stats();
    out.mean[k] = s.mean;
    out.std_err[k] = s.std_err;
  }
  return out;
}

namespace {

StepResult step(Workbench& wb, const ipd::Policy& t1, const ipd::Policy& t2, const LolaConfig& cfg,
                int epoch, int lookahead) {
  const std::uint64_t seed = step_seed(cfg.ipd.seed, static_cast<std::uint64_t>(epoch), kTagOuter);
  StepResult r;
  double ret_sum = 0.0;
  std::size_t ret_n = 0;
  wb.baseline().begin_batch();
  const ipd::IpdScg& g = wb.graph();
  auto observe = [&](const MonteCarlo::Block& b) {
    wb.baseline().observe(ipd::RolloutView{&g, b.samples}, b.count);
    ret_sum += wb.batch_return(b) * static_cast<double>(b.count);
    ret_n += b.count;
  };
  OuterGradient grad[2];
  for (int a = 0; a < 2; ++a) {
    grad[a] = wb.outer_gradient(a, t1, t2, lookahead, cfg.alpha_inner, InnerVariant::Dice, seed,
                                cfg.ipd.batch, a == 0 ? MonteCarlo::Observer(observe)
                                                      : MonteCarlo::Observer{});
    require_finite(grad[a].mean, "outer gradient", a);
  }
  wb.baseline().end_batch();
  const Vec5 d1 = clip_linf(grad[0].mean, cfg.clip);
  const Vec5 d2 = clip_linf(grad[1].mean, cfg.clip);
  r.theta1 = t1;
  r.theta2 = t2;
  for (std::size_t k = 0; k < kDim; ++k) {
    r.theta1[k] += cfg.alpha_outer * d1[k];
    r.theta2[k] += cfg.alpha_outer * d2[k];
  }
  r.batch_return = ret_n ? ret_sum / static_cast<double>(ret_n) : 0.0;
  return r;
}

}  // namespace

StepResult naive_pg_step(Workbench& wb, const ipd::Policy& t1, const ipd::Policy& t2,
                         const LolaConfig& cfg, int epoch) {
  return step(wb, t1, t2, cfg, epoch, 0);
}

StepResult lola_dice_step(Workbench& wb, const ipd::Policy& t1, const ipd::Policy& t2,
                          const LolaConfig& cfg, int epoch) {
  return step(wb, t1, t2, cfg, epoch, cfg.lookahead);
}

TrainTrace train(Method method, const LolaConfig& cfg) {
  validate(cfg);
  TrainTrace trace;
  if (cfg.init_std > 0.0) {
    std::mt19937_64 rng(step_seed(cfg.ipd.seed, 0, 0));
    std::normal_distribution<double> nd(0.0, cfg.init_std);
    for (double& x : trace.theta1) x = nd(rng);
    for (double& x : trace.theta2) x = nd(rng);
  }
  if (cfg.epochs == 0) return trace;
  Workbench wb(cfg.ipd);
  for (int e = 0; e < cfg.epochs; ++e) {
    const StepResult r = method == Method::Naive
                             ? naive_pg_step(wb, trace.theta1, trace.theta2, cfg, e)
                             : lola_dice_step(wb, trace.theta1, trace.theta2, cfg, e);
    trace.theta1 = r.theta1;
    trace.theta2 = r.theta2;
    const ipd::Values v = ipd::exact_value(r.theta1, r.theta2, cfg.ipd.gamma, cfg.ipd.horizon);
    EpochRecord rec;
    rec.epoch = e;
    rec.joint_return = ipd::per_step(0.5 * (v.v1 + v.v2), cfg.ipd.gamma, cfg.ipd.horizon);
    rec.batch_return = r.batch_return;
    rec.theta1 = r.theta1;
    rec.theta2 = r.theta2;
    trace.epochs.push_back(rec);
  }
  return trace;
}

}  // namespace dice::lola
