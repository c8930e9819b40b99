// dice: reproduces the toy, IPD and LOLA experiments as JSON/CSV reports.
// Exit status 0 iff every threshold echoed in the report holds.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dice/experiments.hpp"
#include "dice/report.hpp"

using namespace dice;
namespace ex = dice::experiments;
using nlohmann::json;

namespace {

struct Global {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out_dir;
  unsigned threads = 1;
};

unsigned resolve_threads(unsigned flag) {
  if (const char* env = std::getenv("DICE_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(flag, 1u);
}

lola::LolaConfig base_config(const Global& g) {
  lola::LolaConfig cfg;
  if (!g.config.empty()) apply_settings(read_settings(g.config), cfg);
  if (g.seed) cfg.ipd.seed = *g.seed;
  return cfg;
}

int finish(const Report& r, const Global& g, const std::string& stem) {
  if (g.out_dir.empty()) {
    std::cout << serialize(r);
  } else {
    write_report(r, g.out_dir, stem);
    std::cout << r.command << ": " << (r.passed ? "PASS" : "FAIL") << " (" << g.out_dir << "/"
              << stem << ".json)\n";
  }
  for (const Threshold& t : r.thresholds)
    if (!t.passed)
      std::cerr << "threshold failed: " << t.metric << " = " << r.metrics.at(t.metric) << ", want "
                << t.op << " " << t.bound << "\n";
  return r.passed ? 0 : 1;
}

// ---- verify-toy -------------------------------------------------------

int cmd_verify_toy(const Global& g, double theta) {
  const ex::ToyResult t = ex::verify_toy(theta);
  Report r;
  r.command = "verify-toy";
  r.config = json{{"theta", theta}};
  Table dice{{"order", "estimate", "truth"}, {}};
  for (int k = 0; k < 4; ++k) {
    dice.rows.push_back({double(k), t.dice[k], t.truth[k]});
    r.metrics["dice.d" + std::to_string(k)] = t.dice[k];
    r.check("dice.err" + std::to_string(k), std::abs(t.dice[k] - t.truth[k]), "<=", 1e-8);
  }
  Table sl{{"order", "estimate", "reported"}, {}};
  for (int k = 1; k <= 3; ++k) {
    const double rep = k <= 2 ? t.sl_truth[k - 1] : std::numeric_limits<double>::quiet_NaN();
    sl.rows.push_back({double(k), t.sl[k - 1], rep});
    r.metrics["sl.d" + std::to_string(k)] = t.sl[k - 1];
  }
  // The SL second-order estimate must reproduce the known wrong value.
  r.check("sl.err2", std::abs(t.sl[1] - t.sl_truth[1]), "<=", 1e-8);
  r.tables["dice"] = std::move(dice);
  r.tables["sl"] = std::move(sl);
  return finish(r, g, "verify_toy");
}

// ---- verify-ipd -------------------------------------------------------

struct IpdOpts {
  std::size_t samples = 100000;
  std::string baseline = "tabular";
  std::optional<int> horizon;
  std::optional<double> gamma;
  std::uint64_t policy_seed = 3;
  int warmup_batches = 10;
  std::size_t warmup_size = 4096;
  double grad_threshold = 0.99;
  double hess_threshold = 0.9;
};

int cmd_verify_ipd(const Global& g, const IpdOpts& o) {
  if (o.samples < 1) throw CLI::ValidationError("--samples", "must be >= 1");
  lola::LolaConfig cfg = base_config(g);
  if (o.horizon) cfg.ipd.horizon = *o.horizon;
  if (o.gamma) cfg.ipd.gamma = *o.gamma;
  cfg.ipd.baseline = ipd::parse_baseline_mode(o.baseline);
  const unsigned threads = resolve_threads(g.threads);

  ex::IpdFidelity bench(cfg.ipd, true);
  const ex::PolicyPair p = ex::random_policies(o.policy_seed);
  const auto tables =
      bench.warm_up(p, cfg.ipd.baseline, o.warmup_batches, o.warmup_size, cfg.ipd.seed, threads);
  const ex::FidelityResult f = bench.run(p, tables, o.samples, cfg.ipd.seed, threads);

  Report r;
  r.command = "verify-ipd";
  r.config = config_json(cfg);
  r.config["samples"] = o.samples;
  r.config["policy_seed"] = o.policy_seed;
  r.config["warmup_batches"] = o.warmup_batches;
  r.config["warmup_size"] = o.warmup_size;
  r.config["theta1"] = p.t1;
  r.config["theta2"] = p.t2;
  r.config["value1"] = tables[0];
  r.config["value2"] = tables[1];
  r.check("grad_corr", f.grad_corr, ">=", o.grad_threshold);
  r.check("hess_corr", f.hess_corr, ">=", o.hess_threshold);
  double se_g = 0.0, se_h = 0.0;
  for (double s : f.mc_grad_se) se_g = std::max(se_g, s);
  for (double s : f.mc_hess_se) se_h = std::max(se_h, s);
  r.metrics["grad_max_std_err"] = se_g;
  r.metrics["hess_max_std_err"] = se_h;
  Table grad{{"index", "exact", "mc", "std_err"}, {}};
  for (std::size_t i = 0; i < f.exact_grad.size(); ++i)
    grad.rows.push_back({double(i), f.exact_grad[i], f.mc_grad[i], f.mc_grad_se[i]});
  Table hess{{"row", "col", "exact", "mc", "std_err"}, {}};
  for (std::size_t i = 0; i < f.exact_hess.size(); ++i)
    hess.rows.push_back({double(i / 10), double(i % 10), f.exact_hess[i], f.mc_hess[i], f.mc_hess_se[i]});
  r.tables["gradient"] = std::move(grad);
  r.tables["hessian"] = std::move(hess);
  return finish(r, g, "verify_ipd");
}

// ---- sweep-baseline ---------------------------------------------------

struct SweepOpts {
  std::vector<std::size_t> sizes{128, 1024, 8192, 65536};
  int seeds = 5;
  std::vector<std::string> modes{"none", "tabular"};
  std::optional<int> horizon;
  std::uint64_t policy_seed = 3;
};

int cmd_sweep_baseline(const Global& g, const SweepOpts& o) {
  if (o.seeds < 1) throw CLI::ValidationError("--seeds", "must be >= 1");
  lola::LolaConfig cfg = base_config(g);
  if (o.horizon) cfg.ipd.horizon = *o.horizon;
  ex::SweepOptions so;
  so.ipd = cfg.ipd;
  so.sizes = o.sizes;
  std::sort(so.sizes.begin(), so.sizes.end());
  so.sizes.erase(std::unique(so.sizes.begin(), so.sizes.end()), so.sizes.end());
  so.seeds = o.seeds;
  so.seed = cfg.ipd.seed;
  so.policy_seed = o.policy_seed;
  so.modes.clear();
  for (const auto& m : o.modes) so.modes.push_back(ipd::parse_baseline_mode(m));
  so.threads = resolve_threads(g.threads);
  const auto cells = ex::sweep_baseline(so);

  Report r;
  r.command = "sweep-baseline";
  r.config = config_json(cfg);
  r.config["sizes"] = so.sizes;
  r.config["seeds"] = so.seeds;
  r.config["modes"] = o.modes;
  r.config["policy_seed"] = o.policy_seed;

  std::vector<std::string> cols{"mode", "size", "mean_corr", "sd_corr"};
  for (int s = 0; s < so.seeds; ++s) cols.push_back("seed_" + std::to_string(s));
  Table t{cols, {}};
  for (const auto& c : cells) {
    std::vector<double> row{double(static_cast<int>(c.mode)), double(c.size), c.mean, c.sd};
    row.insert(row.end(), c.corr.begin(), c.corr.end());
    t.rows.push_back(std::move(row));
    const std::string key = std::string(ipd::baseline_mode_name(c.mode)) + "." + std::to_string(c.size);
    r.metrics["corr." + key] = c.mean;
    r.metrics["sd." + key] = c.sd;
  }
  r.tables["sweep"] = std::move(t);

  double nonfinite = 0.0;
  for (const auto& c : cells)
    for (double x : c.corr) nonfinite += std::isfinite(x) ? 0.0 : 1.0;
  r.check("nonfinite_corr", nonfinite, "<=", 0.0);

  // Per mode: adjacent decreases in mean correlation; at most one, within 1 sd.
  const std::size_t ns = so.sizes.size();
  for (std::size_t m = 0; m < so.modes.size(); ++m) {
    double inversions = 0.0, large = 0.0;
    for (std::size_t i = 0; i + 1 < ns; ++i) {
      const auto& a = cells[m * ns + i];
      const auto& b = cells[m * ns + i + 1];
      if (b.mean < a.mean) {
        inversions += 1.0;
        if (a.mean - b.mean > std::max(a.sd, b.sd)) large += 1.0;
      }
    }
    const std::string name = ipd::baseline_mode_name(so.modes[m]);
    r.check("inversions." + name, inversions, "<=", 1.0);
    r.check("large_inversions." + name, large, "<=", 0.0);
  }
  // Tabular at least as good as none at every size, within 1 sd.
  const auto find = [&](ipd::BaselineMode mode) -> std::optional<std::size_t> {
    for (std::size_t m = 0; m < so.modes.size(); ++m)
      if (so.modes[m] == mode) return m;
    return std::nullopt;
  };
  const auto mn = find(ipd::BaselineMode::None), mt = find(ipd::BaselineMode::Tabular);
  if (mn && mt) {
    for (std::size_t i = 0; i < ns; ++i) {
      const auto& a = cells[*mn * ns + i];
      const auto& b = cells[*mt * ns + i];
      r.check("tabular_minus_none." + std::to_string(so.sizes[i]), b.mean - a.mean, ">=",
              -std::max(a.sd, b.sd));
    }
  }
  return finish(r, g, "sweep_baseline");
}

// ---- train ------------------------------------------------------------

struct TrainOpts {
  std::string method = "lola-dice";
  std::optional<int> lookahead;
  int seeds = 5;
  std::optional<int> epochs;
  std::optional<std::size_t> batch;
  std::optional<int> horizon;
  std::optional<double> threshold;
};

int cmd_train(const Global& g, const TrainOpts& o) {
  if (o.seeds < 1) throw CLI::ValidationError("--seeds", "must be >= 1");
  lola::LolaConfig cfg = base_config(g);
  const lola::Method method = lola::parse_method(o.method);
  if (o.lookahead) cfg.lookahead = *o.lookahead;
  if (o.epochs) cfg.epochs = *o.epochs;
  if (o.batch) cfg.ipd.batch = *o.batch;
  if (o.horizon) cfg.ipd.horizon = *o.horizon;
  lola::validate(cfg);
  const ex::TrainSummary s =
      ex::train_seeds(method, cfg, cfg.ipd.seed, o.seeds, resolve_threads(g.threads));

  Report r;
  r.command = "train";
  r.config = config_json(cfg);
  r.config["method"] = lola::method_name(method);
  r.config["seeds"] = o.seeds;

  std::vector<std::string> cols{"epoch"};
  for (int i = 0; i < o.seeds; ++i) cols.push_back("seed_" + std::to_string(cfg.ipd.seed + i));
  cols.push_back("mean");
  cols.push_back("ci95");
  Table curves{cols, {}};
  Table batch{cols, {}};
  for (int e = 0; e < cfg.epochs; ++e) {
    std::vector<double> row{double(e)}, brow{double(e)};
    RunningStats rs, bs;
    for (const auto& t : s.traces) {
      const auto& rec = t.epochs[static_cast<std::size_t>(e)];
      row.push_back(rec.joint_return);
      brow.push_back(rec.batch_return);
      rs.add(rec.joint_return);
      bs.add(rec.batch_return);
    }
    auto band = [](const RunningStats& x) {
      return x.n > 1 ? 1.96 * std::sqrt(x.variance() / double(x.n)) : 0.0;
    };
    row.push_back(rs.mean);
    row.push_back(band(rs));
    brow.push_back(bs.mean);
    brow.push_back(band(bs));
    curves.rows.push_back(std::move(row));
    batch.rows.push_back(std::move(brow));
  }
  Table finals{{"seed", "final", "t1_s0", "t1_cc", "t1_cd", "t1_dc", "t1_dd", "t2_s0", "t2_cc",
                "t2_cd", "t2_dc", "t2_dd"},
               {}};
  for (std::size_t i = 0; i < s.traces.size(); ++i) {
    std::vector<double> row{double(cfg.ipd.seed + i), s.finals[i]};
    row.insert(row.end(), s.traces[i].theta1.begin(), s.traces[i].theta1.end());
    row.insert(row.end(), s.traces[i].theta2.begin(), s.traces[i].theta2.end());
    finals.rows.push_back(std::move(row));
  }
  r.tables["curves"] = std::move(curves);
  r.tables["batch_curves"] = std::move(batch);
  r.tables["finals"] = std::move(finals);
  r.metrics["final_ci95"] = s.ci95;

  if (method == lola::Method::Naive) {
    r.check("final_mean", s.mean, "<=", o.threshold.value_or(-1.8));
  } else {
    const double bound = o.threshold.value_or(-1.5);
    double hits = 0.0;
    for (double f : s.finals) hits += f >= bound ? 1.0 : 0.0;
    r.metrics["final_mean"] = s.mean;
    r.metrics["success_bound"] = bound;
    r.check("success_seeds", hits, ">=",
            std::floor(o.seeds / 2.0) + 1.0);
  }
  return finish(r, g, "train_" + std::string(lola::method_name(method)));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DiCE estimators, oracles and IPD/LOLA experiments"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  Global g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "master seed");
  app.add_option("--config", g.config, "key=value config file ([lola] section allowed)")
      ->check(CLI::ExistingFile);
  app.add_option("--out-dir", g.out_dir, "write <command>.json and CSV tables here");
  app.add_option("--threads", g.threads, "worker threads (DICE_THREADS overrides)")
      ->check(CLI::PositiveNumber);

  double theta = 0.5;
  auto* toy = app.add_subcommand("verify-toy", "toy Bernoulli derivatives by enumeration");
  toy->add_option("--theta", theta, "success probability")->check(CLI::Range(0.0, 1.0));

  IpdOpts io;
  auto* vi = app.add_subcommand("verify-ipd", "MC gradient/Hessian vs closed-form IPD value");
  vi->add_option("--samples", io.samples);
  vi->add_option("--baseline", io.baseline)->check(CLI::IsMember({"none", "constant", "tabular"}));
  vi->add_option("--horizon", io.horizon);
  vi->add_option("--gamma", io.gamma);
  vi->add_option("--policy-seed", io.policy_seed, "seed of the N(0,1) policy logits");
  vi->add_option("--warmup-batches", io.warmup_batches);
  vi->add_option("--warmup-size", io.warmup_size);
  vi->add_option("--grad-threshold", io.grad_threshold);
  vi->add_option("--hess-threshold", io.hess_threshold);

  SweepOpts so;
  auto* sw = app.add_subcommand("sweep-baseline", "gradient correlation vs batch size per baseline");
  sw->add_option("--sizes", so.sizes, "comma separated batch sizes")->delimiter(',');
  sw->add_option("--seeds", so.seeds);
  sw->add_option("--modes", so.modes, "comma separated: none, constant, tabular")
      ->delimiter(',')
      ->check(CLI::IsMember({"none", "constant", "tabular"}));
  sw->add_option("--horizon", so.horizon);
  sw->add_option("--policy-seed", so.policy_seed);

  TrainOpts to;
  auto* tr = app.add_subcommand("train", "naive or LOLA-DiCE training over several seeds");
  tr->add_option("--method", to.method)->check(CLI::IsMember({"naive", "lola-dice"}));
  tr->add_option("--lookahead", to.lookahead);
  tr->add_option("--seeds", to.seeds);
  tr->add_option("--epochs", to.epochs);
  tr->add_option("--batch", to.batch);
  tr->add_option("--horizon", to.horizon);
  tr->add_option("--threshold", to.threshold, "final-return bound (naive: <=, lola-dice: >=)");

  CLI11_PARSE(app, argc, argv);
  if (seed_opt->count()) g.seed = seed;

  try {
    if (*toy) return cmd_verify_toy(g, theta);
    if (*vi) return cmd_verify_ipd(g, io);
    if (*sw) return cmd_sweep_baseline(g, so);
    if (*tr) return cmd_train(g, to);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
