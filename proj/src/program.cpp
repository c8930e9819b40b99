#include "dice/program.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace dice {

namespace {

constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

}  // namespace

BatchProgram::BatchProgram(const GraphArena& arena, std::span<const NodeId> roots,
                           const simd::Kernels& kernels)
    : arena_(&arena), kernels_(&kernels), roots_(roots.begin(), roots.end()) {
  const std::vector<std::uint32_t> order = reachable(arena, roots);

  // Position of each node: uniform index or varying instruction index.
  std::vector<std::uint32_t> pos(arena.size(), kNone);
  std::vector<std::uint32_t> varying;
  for (std::uint32_t i : order) {
    const Node& n = arena.at(i);
    if (n.has_leaf) {
      pos[i] = static_cast<std::uint32_t>(varying.size());
      varying.push_back(i);
      if (n.op == Op::SampleLeaf) max_stoch_ = std::max(max_stoch_, n.aux);
    } else {
      pos[i] = static_cast<std::uint32_t>(uniform_nodes_.size());
      uniform_nodes_.push_back(i);
    }
  }

  // Uniform operands of varying instructions get a dedicated broadcast slot.
  std::vector<std::uint32_t> broadcast_slot(uniform_nodes_.size(), kNone);
  auto operand_slot_for_uniform = [&](std::uint32_t child) {
    const std::uint32_t u = pos[child];
    if (broadcast_slot[u] == kNone) {
      broadcast_slot[u] = static_cast<std::uint32_t>(broadcasts_.size());
      broadcasts_.push_back(Broadcast{u, broadcast_slot[u]});
    }
    return broadcast_slot[u];
  };
  for (std::uint32_t i : varying) {
    const Node& n = arena.at(i);
    const int arity = op_arity(n.op);
    if (arity >= 1 && !arena.at(n.a).has_leaf) operand_slot_for_uniform(n.a);
    if (arity >= 2 && !arena.at(n.b).has_leaf) operand_slot_for_uniform(n.b);
  }
  const auto first_dynamic = static_cast<std::uint32_t>(broadcasts_.size());

  // Liveness over the varying tape.
  std::vector<std::uint32_t> last_use(varying.size(), 0);
  for (std::uint32_t p = 0; p < varying.size(); ++p) {
    const Node& n = arena.at(varying[p]);
    const int arity = op_arity(n.op);
    if (arity >= 1 && arena.at(n.a).has_leaf) last_use[pos[n.a]] = p;
    if (arity >= 2 && arena.at(n.b).has_leaf) last_use[pos[n.b]] = p;
  }
  for (NodeId r : roots_) {
    if (arena.at(r.index).has_leaf) last_use[pos[r.index]] = kNone;
  }

  std::vector<std::uint32_t> slot_of(varying.size(), kNone);
  std::vector<std::uint32_t> free_slots;
  std::uint32_t next_slot = first_dynamic;
  tape_.reserve(varying.size());
  for (std::uint32_t p = 0; p < varying.size(); ++p) {
    const std::uint32_t i = varying[p];
    const Node& n = arena.at(i);
    const int arity = op_arity(n.op);
    Instr ins{n.op, i, 0, 0, 0, 0, n.value, n.upper};
    auto resolve = [&](std::uint32_t child) {
      if (!arena.at(child).has_leaf) return broadcast_slot[pos[child]];
      return slot_of[pos[child]];
    };
    if (arity >= 1) ins.a = resolve(n.a);
    if (arity >= 2) ins.b = resolve(n.b);
    if (n.op == Op::SampleLeaf) ins.stoch = n.aux;

    if (!free_slots.empty()) {
      ins.dst = free_slots.back();
      free_slots.pop_back();
    } else {
      ins.dst = next_slot++;
    }
    slot_of[p] = ins.dst;
    tape_.push_back(ins);

    // Release operands whose last reader is this instruction.
    auto release = [&](std::uint32_t child) {
      if (!arena.at(child).has_leaf) return;
      const std::uint32_t cp = pos[child];
      if (last_use[cp] == p) {
        free_slots.push_back(slot_of[cp]);
        last_use[cp] = kNone - 1;  // released once even if both operands alias
      }
    };
    if (arity >= 1) release(n.a);
    if (arity >= 2 && n.b != n.a) release(n.b);
  }
  slot_count_ = next_slot;

  for (NodeId r : roots_) {
    if (arena.at(r.index).has_leaf)
      root_refs_.push_back(RootRef{false, slot_of[pos[r.index]]});
    else
      root_refs_.push_back(RootRef{true, pos[r.index]});
  }
}

BatchProgram::Workspace BatchProgram::make_workspace() const {
  Workspace ws;
  ws.uniform.assign(uniform_nodes_.size(), 0.0);
  ws.slots.assign(slot_count_ * kLanes, 0.0);
  return ws;
}

void BatchProgram::prepare(const Binding& binding, Workspace& ws) const {
  if (ws.uniform.size() != uniform_nodes_.size() || ws.slots.size() != slot_count_ * kLanes)
    ws = make_workspace();
  // Uniform nodes only have uniform children, which precede them in the list.
  std::vector<double> scratch;
  const GraphArena& arena = *arena_;
  std::size_t u = 0;
  for (std::uint32_t i : uniform_nodes_) {
    const Node& n = arena.at(i);
    double v = 0.0;
    auto child = [&](std::uint32_t c) {
      const auto it = std::lower_bound(uniform_nodes_.begin(), uniform_nodes_.begin() + u, c);
      return ws.uniform[static_cast<std::size_t>(it - uniform_nodes_.begin())];
    };
    switch (n.op) {
      case Op::Constant:
        v = n.value;
        break;
      case Op::Param:
        v = binding.value(ParamId{n.aux}, n.component);
        break;
      case Op::Add:
      case Op::Sub:
      case Op::Mul:
        v = apply_binary(n.op, child(n.a), child(n.b));
        break;
      case Op::Div: {
        const double b = child(n.b);
        if (b == 0.0) throw DomainError("division by zero at node " + std::to_string(i), i);
        v = child(n.a) / b;
        break;
      }
      case Op::Log: {
        const double a = child(n.a);
        if (!(a > 0.0))
          throw DomainError("log of non-positive value at node " + std::to_string(i), i);
        v = std::log(a);
        break;
      }
      case Op::Pow: {
        const double a = child(n.a);
        v = std::pow(a, n.value);
        if (std::isnan(v) && !std::isnan(a))
          throw DomainError("pow outside its domain at node " + std::to_string(i), i);
        break;
      }
      default:
        v = apply_unary(n.op, child(n.a), n);
        break;
    }
    ws.uniform[u++] = v;
  }
  for (const Broadcast& b : broadcasts_) {
    std::fill_n(ws.slots.begin() + static_cast<std::ptrdiff_t>(b.slot * kLanes), kLanes,
                ws.uniform[b.uniform]);
  }
  ws.prepared = true;
}

void BatchProgram::run(const SampleBlock& block, Workspace& ws, std::span<double> out) const {
  if (!ws.prepared) throw GraphError("BatchProgram::run before prepare");
  if (block.count > kLanes) throw GraphError("sample block wider than kLanes");
  if (out.size() < roots_.size() * kLanes) throw GraphError("output span too small");
  const std::size_t n = block.count;
  const simd::Kernels& k = *kernels_;
  double* slots = ws.slots.data();
  auto at = [slots](std::uint32_t s) { return slots + static_cast<std::size_t>(s) * kLanes; };

  auto fail = [&](const Instr& ins, const char* what, auto&& bad_lane) {
    std::size_t lane = 0;
    for (; lane < n; ++lane)
      if (bad_lane(lane)) break;
    throw DomainError(std::string(what) + " at node " + std::to_string(ins.node) +
                          " (trajectory " + std::to_string(block.first_index + lane) + ")",
                      ins.node, block.first_index + lane);
  };

  for (const Instr& ins : tape_) {
    double* d = at(ins.dst);
    switch (ins.op) {
      case Op::SampleLeaf: {
        const double* src = block.data + static_cast<std::size_t>(ins.stoch) * block.stride;
        std::copy_n(src, n, d);
        break;
      }
      case Op::Add:
        k.add(at(ins.a), at(ins.b), d, n);
        break;
      case Op::Sub:
        k.sub(at(ins.a), at(ins.b), d, n);
        break;
      case Op::Mul:
        k.mul(at(ins.a), at(ins.b), d, n);
        break;
      case Op::Div:
        if (!k.div(at(ins.a), at(ins.b), d, n)) {
          const double* b = at(ins.b);
          fail(ins, "division by zero", [b](std::size_t l) { return b[l] == 0.0; });
        }
        break;
      case Op::Neg:
        k.neg(at(ins.a), d, n);
        break;
      case Op::Exp:
        k.exp(at(ins.a), d, n);
        break;
      case Op::Log:
        if (!k.log(at(ins.a), d, n)) {
          const double* a = at(ins.a);
          fail(ins, "log of non-positive value", [a](std::size_t l) { return !(a[l] > 0.0); });
        }
        break;
      case Op::Pow:
        if (!k.pow(at(ins.a), ins.k, d, n)) {
          const double* a = at(ins.a);
          const double e = ins.k;
          fail(ins, "pow outside its domain", [a, e](std::size_t l) {
            return std::isnan(std::pow(a[l], e)) && !std::isnan(a[l]);
          });
        }
        break;
      case Op::Sigmoid:
        k.sigmoid(at(ins.a), d, n);
        break;
      case Op::StopGrad:
        std::copy_n(at(ins.a), n, d);
        break;
      case Op::Clamp:
        k.clamp(at(ins.a), ins.k, ins.hi, d, n);
        break;
      case Op::Constant:
      case Op::Param:
        throw GraphError("uniform node on the varying tape");
    }
  }

  for (std::size_t r = 0; r < root_refs_.size(); ++r) {
    double* o = out.data() + r * kLanes;
    if (root_refs_[r].uniform)
      std::fill_n(o, n, ws.uniform[root_refs_[r].index]);
    else
      std::copy_n(at(root_refs_[r].index), n, o);
  }
}

}  // namespace dice
