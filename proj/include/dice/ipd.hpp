#pragma once

// Iterated prisoner's dilemma with memory-1 sigmoid policies.
//
// Outcomes are indexed (CC, CD, DC, DD) from agent 1's point of view, first
// letter = agent 1's action. Policy logits are the cooperate-logits in states
// (s0, CC, CD, DC, DD); agent 2 reads the previous outcome mirrored (CD <-> DC).
// Sampled action value 1 means cooperate.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dice/estimators.hpp"
#include "dice/scg.hpp"

namespace dice::ipd {

inline constexpr std::size_t kPolicyDim = 5;
inline constexpr std::size_t kOutcomes = 4;
using Policy = std::array<double, kPolicyDim>;
using Matrix4 = std::array<std::array<double, kOutcomes>, kOutcomes>;

struct Payoffs {
  std::array<double, kOutcomes> r1{-1.0, -3.0, 0.0, -2.0};
  std::array<double, kOutcomes> r2{-1.0, 0.0, -3.0, -2.0};
};

enum class BaselineMode { None, Constant, Tabular };
BaselineMode parse_baseline_mode(const std::string& s);
const char* baseline_mode_name(BaselineMode m);

struct IpdConfig {
  int horizon = 150;
  double gamma = 0.96;
  std::size_t batch = 64;
  std::uint64_t seed = 0;
  BaselineMode baseline = BaselineMode::Tabular;
  double baseline_decay = 0.5;  // weight kept on the old table entry per update
};
void validate(const IpdConfig& cfg);

// CD <-> DC relabeling of an outcome / state index (state 0 is s0).
inline std::size_t mirror_outcome(std::size_t o) { return o == 1 ? 2 : o == 2 ? 1 : o; }

struct IpdScg {
  Scg scg;
  ParamId theta1, theta2;
  ParamId value1, value2;  // baseline tables, not part of Theta
  std::vector<StochId> a1, a2;
  std::vector<CostId> r1, r2;  // gamma^t r_t, groups 0 and 1
  // state[agent][t][s]: indicator that agent sees state s before acting at t.
  std::array<std::vector<std::array<NodeId, kPolicyDim>>, 2> state;
  int horizon = 0;
  double gamma = 0.0;

  ParamId theta(int agent) const { return agent == 0 ? theta1 : theta2; }
  ParamId value(int agent) const { return agent == 0 ? value1 : value2; }
  std::vector<Coord> coords() const;  // theta1 then theta2
};

IpdScg build_ipd_scg(const IpdConfig& cfg, const Payoffs& pay = {});

// Baseline for every action at step t in agent `agent`'s objective:
// (sum_{t' = t}^{T-1} gamma^t') * V_agent[state_t], with V a bound parameter
// holding a per-step average return.
BaselineMap tabular_baselines(IpdScg& g, int agent);
// Objective of one agent, with or without the tabular baseline term.
EstimatorObjective agent_objective(IpdScg& g, int agent, bool with_baseline);

Binding make_binding(const IpdScg& g, const Policy& t1, const Policy& t2,
                     const Policy& v1 = {}, const Policy& v2 = {});

// ---- closed form -------------------------------------------------------

struct Chain {
  std::array<double, kOutcomes> p0{};
  Matrix4 P{};  // P[s][o] = Pr(outcome o | previous outcome s)
};
Chain transition(const Policy& t1, const Policy& t2);

struct Values {
  double v1 = 0.0;
  double v2 = 0.0;
};
// sum_{t < T} gamma^t E[r_t].
Values exact_value(const Policy& t1, const Policy& t2, double gamma, int horizon,
                   const Payoffs& pay = {});
// sum_{t >= 0} gamma^t E[r_t] via (I - gamma P^T) x = p0.
Values exact_value_infinite(const Policy& t1, const Policy& t2, double gamma,
                            const Payoffs& pay = {});

struct GradHessian {
  std::vector<double> grad;     // 10
  std::vector<double> hessian;  // 10 x 10 row-major
};
// Finite differences of one agent's exact value over theta1 ++ theta2.
GradHessian exact_grad_hessian(std::span<const double> x10, double gamma, int horizon, int agent,
                               const Payoffs& pay = {});

// Per-step average of the discounted finite-horizon value: V (1 - gamma) / (1 - gamma^T).
double per_step(double value, double gamma, int horizon);

// ---- rollouts ----------------------------------------------------------

// Reads sampled actions of a MonteCarlo block.
struct RolloutView {
  const IpdScg* g;
  const double* samples;  // samples[s * kLanes + lane]
  bool cooperate(int agent, int t, std::size_t lane) const;
  std::size_t outcome(int t, std::size_t lane) const;  // agent 1's view
};

// Exponential-moving-average regression of V[state] onto the normalized
// discounted cost-to-go observed in rollouts.
class TabularBaseline {
 public:
  TabularBaseline(BaselineMode mode, double decay) : mode_(mode), decay_(decay) {}

  void begin_batch();
  void observe(const RolloutView& view, std::size_t lanes, const Payoffs& pay = {});
  void end_batch();

  const Policy& table(int agent) const { return v_[agent]; }
  BaselineMode mode() const { return mode_; }

 private:
  BaselineMode mode_;
  double decay_;
  bool seeded_ = false;
  std::array<Policy, 2> v_{};
  std::array<Policy, 2> sum_{};
  std::array<Policy, 2> count_{};
};

}  // namespace dice::ipd
