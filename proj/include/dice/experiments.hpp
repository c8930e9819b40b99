#pragma once

// Experiment drivers shared by the CLI and the acceptance runner: toy
// derivatives by enumeration, IPD estimator fidelity against the closed-form
// oracle, the baseline sweep, multi-seed training and the lookahead bias check.

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "dice/estimators.hpp"
#include "dice/ipd.hpp"
#include "dice/lola.hpp"

namespace dice::experiments {

// Pearson correlation; 0 when either side has no spread.
double pearson(std::span<const double> a, std::span<const double> b);

// x ~ Ber(theta), f = x (1 - theta) + (1 - x)(1 + theta).
struct Toy {
  Scg scg;
  ParamId theta;
  StochId x;
  CostId f;
};
Toy make_toy();

struct ToyResult {
  double theta = 0.0;
  std::array<double, 4> dice{};   // E[d^k L_box], k = 0..3
  std::array<double, 4> truth{};  // 1 + theta - 2 theta^2 and its derivatives
  std::array<double, 3> sl{};     // SL estimators of orders 1..3
  std::array<double, 2> sl_truth{};  // what SL reports at orders 1, 2
};
ToyResult verify_toy(double theta);

struct PolicyPair {
  ipd::Policy t1{};
  ipd::Policy t2{};
};
PolicyPair random_policies(std::uint64_t seed, double std = 1.0);

struct FidelityResult {
  std::vector<double> exact_grad, exact_hess;
  std::vector<double> mc_grad, mc_grad_se;
  std::vector<double> mc_hess, mc_hess_se;
  double grad_corr = 0.0;
  double hess_corr = 0.0;
};

// Agent-1 DiCE (+ baseline term) gradient and optionally Hessian over
// theta1 ++ theta2, compiled once and reused across policies and batches.
class IpdFidelity {
 public:
  IpdFidelity(const ipd::IpdConfig& cfg, bool hessian);
  ~IpdFidelity();

  // Tables after `batches` EMA updates under fixed policies; zeros for mode None.
  std::array<ipd::Policy, 2> warm_up(const PolicyPair& p, ipd::BaselineMode mode, int batches,
                                     std::size_t batch_size, std::uint64_t seed,
                                     unsigned threads = 1) const;
  // Closed-form gradient/Hessian (Hessian left empty when not compiled).
  void exact(const PolicyPair& p, FidelityResult& out) const;
  FidelityResult run(const PolicyPair& p, const std::array<ipd::Policy, 2>& tables,
                     std::size_t samples, std::uint64_t seed, unsigned threads = 1,
                     const FidelityResult* exact_cache = nullptr) const;

  const ipd::IpdConfig& config() const { return cfg_; }

 private:
  ipd::IpdConfig cfg_;
  bool hessian_;
  std::unique_ptr<ipd::IpdScg> graph_;
  std::unique_ptr<MonteCarlo> mc_;
  std::unique_ptr<MonteCarlo> rollouts_;
};

struct SweepCell {
  ipd::BaselineMode mode = ipd::BaselineMode::None;
  std::size_t size = 0;
  std::vector<double> corr;  // one per seed
  double mean = 0.0;
  double sd = 0.0;
};

struct SweepOptions {
  ipd::IpdConfig ipd;
  std::vector<std::size_t> sizes;
  int seeds = 5;
  std::uint64_t seed = 0;
  std::uint64_t policy_seed = 3;
  std::vector<ipd::BaselineMode> modes{ipd::BaselineMode::None, ipd::BaselineMode::Tabular};
  int warmup_batches = 10;
  std::size_t warmup_size = 4096;
  unsigned threads = 1;
};
// Gradient correlation per (mode, size) over seeds. Modes share the MC
// stream of each (size, seed) pair.
std::vector<SweepCell> sweep_baseline(const SweepOptions& opt);

struct TrainSummary {
  std::vector<lola::TrainTrace> traces;  // per seed
  std::vector<double> finals;            // final exact joint per-step return
  double mean = 0.0;
  double ci95 = 0.0;  // half width, normal approximation over seeds
};
// Seeds seed0 .. seed0 + n - 1, run on up to `threads` threads.
TrainSummary train_seeds(lola::Method method, const lola::LolaConfig& cfg, std::uint64_t seed0,
                         int n, unsigned threads = 1);

struct BiasResult {
  lola::Vec5 dice{}, dice_se{};
  lola::Vec5 sl{}, sl_se{};
  lola::Vec5 ratio{};  // |dice - sl| / sqrt(se_dice^2 + se_sl^2)
  double max_ratio = 0.0;
};
// Agent-1 outer gradient with a DiCE vs surrogate-loss inner step on shared batches.
BiasResult lookahead_bias(const ipd::IpdConfig& cfg, const PolicyPair& p, std::size_t batch,
                          std::uint64_t seed, int warmup_batches = 5,
                          std::size_t warmup_size = 4096);

}  // namespace dice::experiments
