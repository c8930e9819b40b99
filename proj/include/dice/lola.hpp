#pragma once

// Naive policy-gradient learners and LOLA-DiCE on the IPD.
//
// Each agent looks ahead K opponent steps. The opponent's lookahead
// parameters are a function of the learner's parameters; the outer gradient
// follows that dependence with the chain rule, using the DiCE mixed second
// derivatives of the opponent objective evaluated on the inner rollouts:
//   J <- J + alpha (M + H J),  theta_opp' <- theta_opp' + alpha g
// with g = grad_opp L_opp, M = d g / d theta_own, H = d g / d theta_opp and
// J = d theta_opp' / d theta_own. This is the derivative of the unrolled
// inner updates evaluated at the sampled trajectories.

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dice/estimators.hpp"
#include "dice/ipd.hpp"

namespace dice::lola {

enum class Method { Naive, LolaDice };
Method parse_method(const std::string& s);
const char* method_name(Method m);

// Objective the inner lookahead differentiates.
enum class InnerVariant { Dice, Surrogate };

struct LolaConfig {
  ipd::IpdConfig ipd;
  int lookahead = 1;
  double alpha_inner = 1.0;
  double alpha_outer = 0.3;
  int epochs = 200;
  double clip = 10.0;       // L-infinity bound on each update direction; 0 disables
  double init_std = 0.0;    // initial logits ~ N(0, init_std^2); 0 means zeros
};
void validate(const LolaConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  double joint_return = 0.0;  // exact per-step average of (V1 + V2) / 2 after the update
  double batch_return = 0.0;  // same quantity from the sampled batch before the update
  ipd::Policy theta1{};
  ipd::Policy theta2{};
};

struct TrainTrace {
  std::vector<EpochRecord> epochs;
  ipd::Policy theta1{};
  ipd::Policy theta2{};
};

using Vec5 = std::array<double, ipd::kPolicyDim>;
using Mat5 = std::array<Vec5, ipd::kPolicyDim>;

struct OuterGradient {
  Vec5 mean{};
  Vec5 std_err{};
  Mat5 jacobian{};        // d theta_opp' / d theta_own
  ipd::Policy opponent{};  // theta_opp after the lookahead
};

// Compiled IPD graph and programs shared by every step of a run.
class Workbench {
 public:
  explicit Workbench(const ipd::IpdConfig& cfg);
  ~Workbench();
  Workbench(const Workbench&) = delete;
  Workbench& operator=(const Workbench&) = delete;

  const ipd::IpdScg& graph() const { return *graph_; }
  ipd::TabularBaseline& baseline() { return baseline_; }
  const ipd::IpdConfig& config() const { return cfg_; }

  // Outer gradient of `agent`'s objective after `lookahead` opponent steps.
  // With lookahead 0 this is the plain DiCE policy gradient.
  OuterGradient outer_gradient(int agent, const ipd::Policy& t1, const ipd::Policy& t2,
                               int lookahead, double alpha_inner, InnerVariant variant,
                               std::uint64_t seed, std::size_t batch,
                               const MonteCarlo::Observer& observer = {}) const;

  // Mean per-step joint return of a sampled batch (sampled actions only).
  double batch_return(const MonteCarlo::Block& block) const;

  Binding binding(const ipd::Policy& t1, const ipd::Policy& t2) const;

 private:
  struct Inner {
    Vec5 g{};
    Mat5 m{};
    Mat5 h{};
  };
  Inner inner_step(int agent, const ipd::Policy& t1, const ipd::Policy& t2, InnerVariant variant,
                   std::uint64_t seed, std::size_t batch) const;

  ipd::IpdConfig cfg_;
  std::unique_ptr<ipd::IpdScg> graph_;
  ipd::TabularBaseline baseline_;
  // grads_: gradient of L1 then L2 over theta1 ++ theta2.
  std::unique_ptr<MonteCarlo> grads_;
  // second_[variant][agent]: gradient (10) and Hessian (100) of that agent's objective.
  std::unique_ptr<MonteCarlo> second_[2][2];
};

// Deterministic stream derivation for per-step batches.
std::uint64_t step_seed(std::uint64_t seed, std::uint64_t epoch, std::uint64_t tag,
                        std::uint64_t k = 0, std::uint64_t agent = 0);

struct StepResult {
  ipd::Policy theta1{};
  ipd::Policy theta2{};
  double batch_return = 0.0;
};

// Both agents updated simultaneously from batches drawn with `epoch`'s seeds.
StepResult naive_pg_step(Workbench& wb, const ipd::Policy& t1, const ipd::Policy& t2,
                         const LolaConfig& cfg, int epoch = 0);
StepResult lola_dice_step(Workbench& wb, const ipd::Policy& t1, const ipd::Policy& t2,
                          const LolaConfig& cfg, int epoch = 0);

TrainTrace train(Method method, const LolaConfig& cfg);

// Scales v so that max |v_i| <= bound (bound 0 leaves v unchanged).
Vec5 clip_linf(Vec5 v, double bound);

}  // namespace dice::lola
