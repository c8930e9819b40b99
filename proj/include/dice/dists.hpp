#pragma once

// Bernoulli stochastic nodes and ancestral sampling.
//
// Every trajectory owns one mt19937_64 stream seeded with
// master_seed ^ trajectory_index, so a trajectory's samples do not depend on
// how trajectories are grouped into blocks or threads.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "dice/program.hpp"
#include "dice/scg.hpp"

namespace dice {

inline constexpr double kProbFloor = 1e-7;
inline constexpr double kProbCeil = 1.0 - 1e-7;

// log_prob = x log p + (1 - x) log(1 - p) with p clamped to [1e-7, 1 - 1e-7].
StochId bernoulli(Scg& scg, NodeId prob_expr);
// p = sigmoid(z); log_prob = log sigmoid((2x - 1) z), whose derivative is
// built in the stable form (1 - sigmoid(.)) d(.).
StochId sigmoid_bernoulli(Scg& scg, NodeId logit_expr);

inline std::uint64_t trajectory_seed(std::uint64_t master, std::uint64_t index) {
  return master ^ index;
}

// Uniform in [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// 1 with probability p.
inline double draw(double p, std::mt19937_64& rng) { return uniform01(rng) < p ? 1.0 : 0.0; }

// Draws node `s` given the parent values already in `samples`.
double draw(const Scg& scg, StochId s, const Binding& binding, const SampleRecord& samples,
            std::mt19937_64& rng);

// Draws every stochastic node in ancestral (id) order.
SampleRecord sample_trajectory(const Scg& scg, const Binding& binding, std::mt19937_64& rng);

// Batched ancestral sampler over kLanes trajectories at a time.
class AncestralSampler {
 public:
  explicit AncestralSampler(const Scg& scg, const simd::Kernels& kernels = simd::active_kernels());

  struct Workspace {
    std::vector<BatchProgram::Workspace> programs;
    std::vector<std::mt19937_64> rngs;
    std::vector<double> probs;
  };
  Workspace make_workspace() const;
  void prepare(const Binding& binding, Workspace& ws) const;
  // Fills out[s * kLanes + lane] for trajectories first .. first + count - 1.
  void sample(std::uint64_t master_seed, std::size_t first, std::size_t count, Workspace& ws,
              std::span<double> out) const;
  std::size_t stochastic_count() const { return programs_.size(); }

 private:
  std::vector<BatchProgram> programs_;
};

}  // namespace dice
