#pragma once

// Immutable scalar expression DAG with symbolic, repeatable differentiation.
//
// Nodes are appended to a GraphArena and never change afterwards. Children
// always carry smaller indices than their parents, so ascending index order is
// a valid topological order for every subgraph. Derivatives are new nodes in
// the same arena, which makes them differentiable again.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace dice {

struct ParamId {
  std::uint32_t index = 0;
  friend bool operator==(ParamId, ParamId) = default;
  friend auto operator<=>(ParamId, ParamId) = default;
};

struct StochId {
  std::uint32_t index = 0;
  friend bool operator==(StochId, StochId) = default;
  friend auto operator<=>(StochId, StochId) = default;
};

// Handle into exactly one arena; `arena` is the issuing arena's tag.
struct NodeId {
  std::uint32_t index = 0;
  std::uint32_t arena = 0;
  friend bool operator==(NodeId, NodeId) = default;
};

// One coordinate of a registered parameter vector.
struct Coord {
  ParamId param;
  std::uint32_t component = 0;
  friend bool operator==(Coord, Coord) = default;
};

enum class Op : std::uint8_t {
  Constant,
  Param,
  SampleLeaf,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Exp,
  Log,
  Pow,
  Sigmoid,
  StopGrad,
  Clamp,
};

const char* op_name(Op op);
int op_arity(Op op);

// Construction request for a node. `value` is the constant, the Pow exponent
// or the Clamp lower bound; `upper` is the Clamp upper bound.
struct NodeKind {
  Op op = Op::Constant;
  NodeId a{};
  NodeId b{};
  double value = 0.0;
  double upper = 0.0;
  ParamId param{};
  std::uint32_t component = 0;
  StochId stoch{};

  static NodeKind constant(double v);
  static NodeKind parameter(ParamId p, std::uint32_t component);
  static NodeKind sample_leaf(StochId s);
  static NodeKind binary(Op op, NodeId a, NodeId b);
  static NodeKind unary(Op op, NodeId a);
  static NodeKind pow(NodeId a, double exponent);
  static NodeKind clamp(NodeId a, double lo, double hi);
};

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by evaluation when an operation leaves its domain (log of a
// non-positive value, division by zero, missing sample). Carries the offending
// node so estimator-construction bugs can be traced back to a subgraph.
class DomainError : public std::runtime_error {
 public:
  DomainError(const std::string& what, std::uint32_t node, std::size_t lane = 0)
      : std::runtime_error(what), node_(node), lane_(lane) {}
  std::uint32_t node() const { return node_; }
  // Trajectory or outcome index when raised by a batched evaluation.
  std::size_t lane() const { return lane_; }

 private:
  std::uint32_t node_;
  std::size_t lane_;
};

// Compact stored form of a node. Child indices are arena-local.
struct Node {
  Op op = Op::Constant;
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  double value = 0.0;
  double upper = 0.0;
  std::uint32_t aux = 0;        // ParamId / StochId index
  std::uint32_t component = 0;  // Param component
  std::uint64_t param_mask = 0;  // params reachable without crossing StopGrad
  bool has_leaf = false;         // a SampleLeaf is reachable (through anything)
};

class GraphArena {
 public:
  GraphArena();
  GraphArena(const GraphArena&) = delete;
  GraphArena& operator=(const GraphArena&) = delete;
  GraphArena(GraphArena&&) noexcept = default;
  GraphArena& operator=(GraphArena&&) noexcept = default;

  ParamId register_param(std::size_t dim, std::string name = {});
  std::size_t param_dim(ParamId p) const;
  std::size_t param_count() const { return param_dims_.size(); }
  const std::string& param_name(ParamId p) const;

  // Appends (or finds, via hash-consing) a node. Applies the trivial local
  // rewrites x+0, x*1, x*0, constant folding and StopGrad(const).
  NodeId build(const NodeKind& kind);

  NodeId constant(double v) { return build(NodeKind::constant(v)); }
  NodeId zero() const { return zero_; }
  NodeId one() const { return one_; }
  NodeId param(ParamId p, std::uint32_t component) {
    return build(NodeKind::parameter(p, component));
  }
  std::vector<NodeId> param_vector(ParamId p);
  NodeId leaf(StochId s) { return build(NodeKind::sample_leaf(s)); }
  NodeId add(NodeId a, NodeId b) { return build(NodeKind::binary(Op::Add, a, b)); }
  NodeId sub(NodeId a, NodeId b) { return build(NodeKind::binary(Op::Sub, a, b)); }
  NodeId mul(NodeId a, NodeId b) { return build(NodeKind::binary(Op::Mul, a, b)); }
  NodeId div(NodeId a, NodeId b) { return build(NodeKind::binary(Op::Div, a, b)); }
  NodeId neg(NodeId a) { return build(NodeKind::unary(Op::Neg, a)); }
  NodeId exp(NodeId a) { return build(NodeKind::unary(Op::Exp, a)); }
  NodeId log(NodeId a) { return build(NodeKind::unary(Op::Log, a)); }
  NodeId sigmoid(NodeId a) { return build(NodeKind::unary(Op::Sigmoid, a)); }
  NodeId stop_grad(NodeId a) { return build(NodeKind::unary(Op::StopGrad, a)); }
  NodeId pow(NodeId a, double k) { return build(NodeKind::pow(a, k)); }
  NodeId clamp(NodeId a, double lo, double hi) { return build(NodeKind::clamp(a, lo, hi)); }
  NodeId scale(NodeId a, double k) { return mul(constant(k), a); }
  // Left fold in the given order; empty input yields the constant 0.
  NodeId sum(std::span<const NodeId> terms);

  // d root / d coord, built from sum/product/chain rules. Memoized per
  // (node, coordinate), so repeated requests return the same node.
  NodeId differentiate(NodeId root, Coord wrt);
  std::vector<NodeId> gradient_vector(NodeId root, ParamId param);

  const Node& node(NodeId id) const;
  const Node& at(std::uint32_t index) const { return nodes_[index]; }
  NodeKind kind(NodeId id) const;
  NodeId id_at(std::uint32_t index) const;
  std::size_t size() const { return nodes_.size(); }
  std::uint32_t tag() const { return tag_; }
  bool owns(NodeId id) const { return id.arena == tag_ && id.index < nodes_.size(); }
  void check(NodeId id) const;

  bool is_constant(NodeId id, double v) const;
  // True when `root` may depend on `p` through a path free of StopGrad.
  bool depends_on(NodeId root, ParamId p) const;

 private:
  struct Key {
    Op op;
    std::uint32_t a, b, aux, component;
    std::uint64_t value_bits, upper_bits;
    friend bool operator==(const Key&, const Key&) = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept;
  };

  NodeId append(const Node& n);
  NodeId simplify(const NodeKind& kind, bool& done);
  NodeId derivative_rule(std::uint32_t index, Coord wrt, std::size_t flat);
  std::size_t flat_coord(Coord c) const;

  std::uint32_t tag_;
  std::vector<Node> nodes_;
  std::unordered_map<Key, std::uint32_t, KeyHash> interned_;
  std::unordered_map<std::uint64_t, std::uint32_t> derivatives_;
  std::vector<std::size_t> param_dims_;
  std::vector<std::size_t> param_offsets_;
  std::vector<std::string> param_names_;
  std::size_t coord_count_ = 0;
  NodeId zero_{};
  NodeId one_{};
};

// Parameter values for one evaluation. Every registered parameter must be set
// with its registered dimension before evaluation.
class Binding {
 public:
  Binding() = default;
  explicit Binding(const GraphArena& arena);

  void set(ParamId p, std::vector<double> values);
  std::span<const double> get(ParamId p) const;
  double value(ParamId p, std::uint32_t component) const;
  bool has(ParamId p) const;
  void validate(const GraphArena& arena) const;

 private:
  std::vector<std::vector<double>> values_;
  std::vector<bool> present_;
};

// Realized values of stochastic nodes for one trajectory / outcome.
class SampleRecord {
 public:
  SampleRecord() = default;
  explicit SampleRecord(std::size_t n) : values_(n, 0.0), present_(n, false) {}

  void set(StochId s, double v);
  std::optional<double> get(StochId s) const;
  bool has(StochId s) const { return s.index < present_.size() && present_[s.index]; }
  std::size_t size() const { return values_.size(); }

 private:
  std::vector<double> values_;
  std::vector<bool> present_;
};

// Forward semantics of one operation on plain doubles. Shared by the scalar
// evaluator and the scalar batch kernels so both agree bit for bit.
double apply_unary(Op op, double a, const Node& n);
double apply_binary(Op op, double a, double b);
double stable_sigmoid(double x);

// Caller-owned memo storage for evaluate(); lets concurrent evaluations share
// one immutable arena.
struct EvalScratch {
  std::vector<double> values;
  std::vector<std::uint32_t> order;
  std::vector<std::uint8_t> mark;
};

// Nodes reachable from `roots`, ascending (hence topological).
std::vector<std::uint32_t> reachable(const GraphArena& arena, std::span<const NodeId> roots);

// Reachable node list computed once, re-run for many bindings / samples.
// The arena must outlive the program and must not be mutated concurrently.
class ScalarProgram {
 public:
  ScalarProgram(const GraphArena& arena, std::span<const NodeId> roots);

  // Fills `values` (indexed by node index) for every reachable node.
  void run(const Binding& binding, const SampleRecord& samples, std::vector<double>& values) const;
  std::vector<double> evaluate(const Binding& binding, const SampleRecord& samples,
                               std::vector<double>& values) const;
  std::span<const NodeId> roots() const { return roots_; }

 private:
  const GraphArena* arena_;
  std::vector<NodeId> roots_;
  std::vector<std::uint32_t> order_;
};

double evaluate(const GraphArena& arena, NodeId root, const Binding& binding,
                const SampleRecord& samples);
double evaluate(const GraphArena& arena, NodeId root, const Binding& binding,
                const SampleRecord& samples, EvalScratch& scratch);
// Evaluates several roots in one memoized pass.
std::vector<double> evaluate_many(const GraphArena& arena, std::span<const NodeId> roots,
                                  const Binding& binding, const SampleRecord& samples,
                                  EvalScratch& scratch);
// Plain recursive evaluation without sharing; exponential on DAGs, reference only.
double evaluate_unmemoized(const GraphArena& arena, NodeId root, const Binding& binding,
                           const SampleRecord& samples);

// Text dump, one node per line: "<id> <kind> <children...>".
std::string dump(const GraphArena& arena);
std::string dump(const GraphArena& arena, std::span<const NodeId> roots);

}  // namespace dice
