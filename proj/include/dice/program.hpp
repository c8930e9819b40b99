#pragma once

// Batched evaluation of a fixed set of roots over many trajectories.
//
// A BatchProgram linearizes the reachable subgraph once. Nodes that do not
// depend on any sample ("uniform" nodes: constants, parameters and anything
// built only from them) are evaluated once per binding; the remaining nodes
// become a tape of element-wise instructions evaluated over kLanes
// trajectories at a time with the active SIMD kernel table. Tape slots are
// reused once a value is dead, so memory tracks the live set rather than the
// graph size.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dice/graph.hpp"
#include "dice/kernels.hpp"

namespace dice {

inline constexpr std::size_t kLanes = 64;

// Sample values for a block of lanes: value(s, lane) = data[s * stride + lane].
struct SampleBlock {
  const double* data = nullptr;
  std::size_t stride = kLanes;
  std::size_t count = 0;
  std::size_t first_index = 0;  // global trajectory index of lane 0

  double value(StochId s, std::size_t lane) const { return data[s.index * stride + lane]; }
};

class BatchProgram {
 public:
  struct Workspace {
    std::vector<double> uniform;
    std::vector<double> slots;
    bool prepared = false;
  };

  BatchProgram(const GraphArena& arena, std::span<const NodeId> roots,
               const simd::Kernels& kernels = simd::active_kernels());

  Workspace make_workspace() const;
  // Evaluates the sample-independent part for this binding and broadcasts it
  // into the workspace. Must precede run() whenever the binding changes.
  void prepare(const Binding& binding, Workspace& ws) const;
  // Writes root r, lane l to out[r * kLanes + l] for l < block.count.
  void run(const SampleBlock& block, Workspace& ws, std::span<double> out) const;

  std::size_t root_count() const { return roots_.size(); }
  std::size_t instruction_count() const { return tape_.size(); }
  std::size_t uniform_count() const { return uniform_nodes_.size(); }
  std::size_t slot_count() const { return slot_count_; }
  std::uint32_t max_stoch_index() const { return max_stoch_; }
  const simd::Kernels& kernels() const { return *kernels_; }

 private:
  struct Instr {
    Op op;
    std::uint32_t node;
    std::uint32_t dst;
    std::uint32_t a;
    std::uint32_t b;
    std::uint32_t stoch;
    double k;
    double hi;
  };
  struct RootRef {
    bool uniform;
    std::uint32_t index;  // uniform position or slot
  };
  struct Broadcast {
    std::uint32_t uniform;  // position in uniform values
    std::uint32_t slot;
  };

  const GraphArena* arena_;
  const simd::Kernels* kernels_;
  std::vector<NodeId> roots_;
  std::vector<std::uint32_t> uniform_nodes_;
  std::vector<Broadcast> broadcasts_;
  std::vector<Instr> tape_;
  std::vector<RootRef> root_refs_;
  std::size_t slot_count_ = 0;
  std::uint32_t max_stoch_ = 0;
};

}  // namespace dice
