#include "dice/graph.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <limits>
#include <cmath>
#include <sstream>

namespace dice {

namespace {

std::atomic<std::uint32_t> g_next_arena_tag{1};

constexpr std::uint64_t kCoordBits = 24;

std::uint64_t param_bit(std::uint32_t index) {
  return std::uint64_t{1} << std::min<std::uint32_t>(index, 63);
}

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::Constant: return "Const";
    case Op::Param: return "Param";
    case Op::SampleLeaf: return "Leaf";
    case Op::Add: return "Add";
    case Op::Sub: return "Sub";
    case Op::Mul: return "Mul";
    case Op::Div: return "Div";
    case Op::Neg: return "Neg";
    case Op::Exp: return "Exp";
    case Op::Log: return "Log";
    case Op::Pow: return "Pow";
    case Op::Sigmoid: return "Sigmoid";
    case Op::StopGrad: return "StopGrad";
    case Op::Clamp: return "Clamp";
  }
  return "?";
}

int op_arity(Op op) {
  switch (op) {
    case Op::Constant:
    case Op::Param:
    case Op::SampleLeaf:
      return 0;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
      return 2;
    default:
      return 1;
  }
}

NodeKind NodeKind::constant(double v) {
  NodeKind k;
  k.op = Op::Constant;
  k.value = v;
  return k;
}

NodeKind NodeKind::parameter(ParamId p, std::uint32_t component) {
  NodeKind k;
  k.op = Op::Param;
  k.param = p;
  k.component = component;
  return k;
}

NodeKind NodeKind::sample_leaf(StochId s) {
  NodeKind k;
  k.op = Op::SampleLeaf;
  k.stoch = s;
  return k;
}

NodeKind NodeKind::binary(Op op, NodeId a, NodeId b) {
  if (op_arity(op) != 2) throw GraphError(std::string("not a binary op: ") + op_name(op));
  NodeKind k;
  k.op = op;
  k.a = a;
  k.b = b;
  return k;
}

NodeKind NodeKind::unary(Op op, NodeId a) {
  if (op_arity(op) != 1 || op == Op::Pow || op == Op::Clamp)
    throw GraphError(std::string("not a plain unary op: ") + op_name(op));
  NodeKind k;
  k.op = op;
  k.a = a;
  return k;
}

NodeKind NodeKind::pow(NodeId a, double exponent) {
  NodeKind k;
  k.op = Op::Pow;
  k.a = a;
  k.value = exponent;
  return k;
}

NodeKind NodeKind::clamp(NodeId a, double lo, double hi) {
  if (!(lo <= hi)) throw GraphError("clamp bounds out of order");
  NodeKind k;
  k.op = Op::Clamp;
  k.a = a;
  k.value = lo;
  k.upper = hi;
  return k;
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double apply_unary(Op op, double a, const Node& n) {
  switch (op) {
    case Op::Neg: return -a;
    case Op::Exp: return std::exp(a);
    case Op::Log: return std::log(a);
    case Op::Pow: return std::pow(a, n.value);
    case Op::Sigmoid: return stable_sigmoid(a);
    case Op::StopGrad: return a;
    case Op::Clamp: return std::clamp(a, n.value, n.upper);
    default: break;
  }
  throw GraphError(std::string("apply_unary: unexpected op ") + op_name(op));
}

double apply_binary(Op op, double a, double b) {
  switch (op) {
    case Op::Add: return a + b;
    case Op::Sub: return a - b;
    case Op::Mul: return a * b;
    case Op::Div: return a / b;
    default: break;
  }
  throw GraphError(std::string("apply_binary: unexpected op ") + op_name(op));
}

// ---------------------------------------------------------------------------
// GraphArena

std::size_t GraphArena::KeyHash::operator()(const Key& k) const noexcept {
  std::uint64_t h = static_cast<std::uint64_t>(k.op) * 0x9E3779B97F4A7C15ull;
  auto mix = [&h](std::uint64_t v) {
    h ^= v + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
  };
  mix(k.a);
  mix(k.b);
  mix(k.aux);
  mix(k.component);
  mix(k.value_bits);
  mix(k.upper_bits);
  return static_cast<std::size_t>(h);
}

GraphArena::GraphArena() : tag_(g_next_arena_tag.fetch_add(1)) {
  nodes_.reserve(64);
  zero_ = constant(0.0);
  one_ = constant(1.0);
}

ParamId GraphArena::register_param(std::size_t dim, std::string name) {
  if (dim == 0) throw GraphError("parameter dimension must be positive");
  if (coord_count_ + dim >= (std::size_t{1} << kCoordBits))
    throw GraphError("too many parameter coordinates");
  ParamId id{static_cast<std::uint32_t>(param_dims_.size())};
  param_dims_.push_back(dim);
  param_offsets_.push_back(coord_count_);
  if (name.empty()) name = "theta" + std::to_string(id.index);
  param_names_.push_back(std::move(name));
  coord_count_ += dim;
  return id;
}

std::size_t GraphArena::param_dim(ParamId p) const {
  if (p.index >= param_dims_.size())
    throw GraphError("unregistered parameter " + std::to_string(p.index));
  return param_dims_[p.index];
}

const std::string& GraphArena::param_name(ParamId p) const {
  param_dim(p);
  return param_names_[p.index];
}

std::vector<NodeId> GraphArena::param_vector(ParamId p) {
  const std::size_t dim = param_dim(p);
  std::vector<NodeId> out;
  out.reserve(dim);
  for (std::uint32_t i = 0; i < dim; ++i) out.push_back(param(p, i));
  return out;
}

std::size_t GraphArena::flat_coord(Coord c) const {
  const std::size_t dim = param_dim(c.param);
  if (c.component >= dim)
    throw GraphError("component " + std::to_string(c.component) + " out of range for " +
                     param_names_[c.param.index]);
  return param_offsets_[c.param.index] + c.component;
}

const Node& GraphArena::node(NodeId id) const {
  check(id);
  return nodes_[id.index];
}

NodeId GraphArena::id_at(std::uint32_t index) const {
  if (index >= nodes_.size()) throw GraphError("node index out of range");
  return NodeId{index, tag_};
}

void GraphArena::check(NodeId id) const {
  if (id.arena != tag_) throw GraphError("node id belongs to a different arena");
  if (id.index >= nodes_.size()) throw GraphError("node id out of range");
}

NodeKind GraphArena::kind(NodeId id) const {
  const Node& n = node(id);
  NodeKind k;
  k.op = n.op;
  k.value = n.value;
  k.upper = n.upper;
  const int arity = op_arity(n.op);
  if (arity >= 1) k.a = NodeId{n.a, tag_};
  if (arity >= 2) k.b = NodeId{n.b, tag_};
  if (n.op == Op::Param) {
    k.param = ParamId{n.aux};
    k.component = n.component;
  }
  if (n.op == Op::SampleLeaf) k.stoch = StochId{n.aux};
  return k;
}

bool GraphArena::is_constant(NodeId id, double v) const {
  const Node& n = node(id);
  return n.op == Op::Constant && n.value == v;
}

bool GraphArena::depends_on(NodeId root, ParamId p) const {
  return (node(root).param_mask & param_bit(p.index)) != 0;
}

NodeId GraphArena::sum(std::span<const NodeId> terms) {
  if (terms.empty()) return zero_;
  NodeId acc = terms[0];
  check(acc);
  for (std::size_t i = 1; i < terms.size(); ++i) acc = add(acc, terms[i]);
  return acc;
}

NodeId GraphArena::append(const Node& n) {
  Key key{n.op,
          n.a,
          n.b,
          n.aux,
          n.component,
          std::bit_cast<std::uint64_t>(n.value),
          std::bit_cast<std::uint64_t>(n.upper)};
  auto it = interned_.find(key);
  if (it != interned_.end()) return NodeId{it->second, tag_};
  if (nodes_.size() >= std::numeric_limits<std::uint32_t>::max())
    throw GraphError("arena full");
  const auto index = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back(n);
  interned_.emplace(key, index);
  return NodeId{index, tag_};
}

NodeId GraphArena::simplify(const NodeKind& k, bool& done) {
  done = true;
  auto is_c = [this](NodeId id) { return nodes_[id.index].op == Op::Constant; };
  auto cv = [this](NodeId id) { return nodes_[id.index].value; };
  switch (k.op) {
    case Op::Add:
      if (is_c(k.a) && cv(k.a) == 0.0) return k.b;
      if (is_c(k.b) && cv(k.b) == 0.0) return k.a;
      if (is_c(k.a) && is_c(k.b)) return constant(cv(k.a) + cv(k.b));
      break;
    case Op::Sub:
      if (is_c(k.b) && cv(k.b) == 0.0) return k.a;
      if (is_c(k.a) && cv(k.a) == 0.0) return neg(k.b);
      if (is_c(k.a) && is_c(k.b)) return constant(cv(k.a) - cv(k.b));
      break;
    case Op::Mul:
      if ((is_c(k.a) && cv(k.a) == 0.0) || (is_c(k.b) && cv(k.b) == 0.0)) return zero_;
      if (is_c(k.a) && cv(k.a) == 1.0) return k.b;
      if (is_c(k.b) && cv(k.b) == 1.0) return k.a;
      if (is_c(k.a) && is_c(k.b)) return constant(cv(k.a) * cv(k.b));
      break;
    case Op::Div:
      if (is_c(k.b) && cv(k.b) == 1.0) return k.a;
      if (is_c(k.b) && cv(k.b) == 0.0) break;  // keep: evaluation raises the domain error
      if (is_c(k.a) && cv(k.a) == 0.0) return zero_;
      if (is_c(k.a) && is_c(k.b)) return constant(cv(k.a) / cv(k.b));
      break;
    case Op::Neg:
      if (is_c(k.a)) return constant(-cv(k.a));
      if (nodes_[k.a.index].op == Op::Neg) return NodeId{nodes_[k.a.index].a, tag_};
      break;
    case Op::Exp:
    case Op::Sigmoid:
      if (is_c(k.a)) return constant(apply_unary(k.op, cv(k.a), Node{}));
      break;
    case Op::Log:
      if (is_c(k.a) && cv(k.a) > 0.0) return constant(std::log(cv(k.a)));
      break;
    case Op::Pow: {
      if (k.value == 1.0) return k.a;
      if (k.value == 0.0) return one_;
      if (is_c(k.a)) {
        const double r = std::pow(cv(k.a), k.value);
        if (std::isfinite(r)) return constant(r);
      }
      break;
    }
    case Op::StopGrad:
      if (is_c(k.a)) return k.a;
      if (nodes_[k.a.index].op == Op::StopGrad) return k.a;
      break;
    case Op::Clamp:
      if (is_c(k.a)) return constant(std::clamp(cv(k.a), k.value, k.upper));
      break;
    default:
      break;
  }
  done = false;
  return {};
}

NodeId GraphArena::build(const NodeKind& kind) {
  NodeKind k = kind;
  const int arity = op_arity(k.op);
  if (arity >= 1) check(k.a);
  if (arity >= 2) check(k.b);
  if (k.op == Op::Param) flat_coord(Coord{k.param, k.component});

  // Commutative operands in canonical order so hash-consing catches both forms.
  if ((k.op == Op::Add || k.op == Op::Mul) && k.b.index < k.a.index) std::swap(k.a, k.b);

  if (arity > 0) {
    bool done = false;
    NodeId simplified = simplify(k, done);
    if (done) return simplified;
  }

  Node n;
  n.op = k.op;
  switch (k.op) {
    case Op::Constant:
      n.value = k.value;
      break;
    case Op::Param:
      n.aux = k.param.index;
      n.component = k.component;
      n.param_mask = param_bit(k.param.index);
      break;
    case Op::SampleLeaf:
      n.aux = k.stoch.index;
      n.has_leaf = true;
      break;
    default: {
      n.a = k.a.index;
      n.value = k.value;
      n.upper = k.upper;
      const Node& ca = nodes_[k.a.index];
      n.param_mask = ca.param_mask;
      n.has_leaf = ca.has_leaf;
      if (arity == 2) {
        n.b = k.b.index;
        const Node& cb = nodes_[k.b.index];
        n.param_mask |= cb.param_mask;
        n.has_leaf = n.has_leaf || cb.has_leaf;
      }
      if (k.op == Op::StopGrad) n.param_mask = 0;
      break;
    }
  }
  return append(n);
}

NodeId GraphArena::differentiate(NodeId root, Coord wrt) {
  check(root);
  const std::size_t flat = flat_coord(wrt);
  const std::uint64_t bit = param_bit(wrt.param.index);
  auto key = [flat](std::uint32_t index) {
    return (static_cast<std::uint64_t>(index) << kCoordBits) | flat;
  };
  auto trivial = [&](std::uint32_t index) {
    const Node& n = nodes_[index];
    return (n.param_mask & bit) == 0 || n.op == Op::Param;
  };

  if (trivial(root.index)) {
    const Node& n = nodes_[root.index];
    const bool hit = n.op == Op::Param && n.aux == wrt.param.index && n.component == wrt.component;
    return hit ? one_ : zero_;
  }
  if (auto it = derivatives_.find(key(root.index)); it != derivatives_.end())
    return NodeId{it->second, tag_};

  // Collect every node below root whose derivative is still unknown.
  std::vector<std::uint32_t> pending;
  std::vector<std::uint32_t> stack{root.index};
  std::unordered_map<std::uint32_t, bool> seen;
  seen[root.index] = true;
  while (!stack.empty()) {
    const std::uint32_t i = stack.back();
    stack.pop_back();
    pending.push_back(i);
    const Node& n = nodes_[i];
    const int arity = op_arity(n.op);
    for (int c = 0; c < arity; ++c) {
      const std::uint32_t child = c == 0 ? n.a : n.b;
      if (trivial(child) || derivatives_.contains(key(child))) continue;
      if (seen.emplace(child, true).second) stack.push_back(child);
    }
  }
  std::sort(pending.begin(), pending.end());
  for (std::uint32_t i : pending) {
    const NodeId d = derivative_rule(i, wrt, flat);
    derivatives_[key(i)] = d.index;
  }
  return NodeId{derivatives_.at(key(root.index)), tag_};
}

NodeId GraphArena::derivative_rule(std::uint32_t index, Coord wrt, std::size_t flat) {
  const std::uint64_t bit = param_bit(wrt.param.index);
  auto d = [&](std::uint32_t child) -> NodeId {
    const Node& c = nodes_[child];
    if (c.op == Op::Param)
      return (c.aux == wrt.param.index && c.component == wrt.component) ? one_ : zero_;
    if ((c.param_mask & bit) == 0) return zero_;
    return NodeId{derivatives_.at((static_cast<std::uint64_t>(child) << kCoordBits) | flat), tag_};
  };
  // Copy: building nodes below may reallocate nodes_.
  const Node n = nodes_[index];
  const NodeId self{index, tag_};
  const NodeId a{n.a, tag_};
  const NodeId b{n.b, tag_};
  switch (n.op) {
    case Op::Constant:
    case Op::SampleLeaf:
    case Op::StopGrad:
      return zero_;
    case Op::Param:
      return (n.aux == wrt.param.index && n.component == wrt.component) ? one_ : zero_;
    case Op::Add:
      return add(d(n.a), d(n.b));
    case Op::Sub:
      return sub(d(n.a), d(n.b));
    case Op::Mul:
      return add(mul(d(n.a), b), mul(a, d(n.b)));
    case Op::Div:
      // (da - (a/b) db) / b
      return div(sub(d(n.a), mul(self, d(n.b))), b);
    case Op::Neg:
      return neg(d(n.a));
    case Op::Exp:
      return mul(self, d(n.a));
    case Op::Log: {
      const Node& inner = nodes_[n.a];
      if (inner.op == Op::Sigmoid) {
        // d log(sigmoid(u)) = (1 - sigmoid(u)) du, exact and stable for saturated u.
        const NodeId du = d(inner.a);
        return mul(sub(one_, a), du);
      }
      return div(d(n.a), a);
    }
    case Op::Pow: {
      const NodeId lowered = pow(a, n.value - 1.0);
      return mul(mul(constant(n.value), lowered), d(n.a));
    }
    case Op::Sigmoid:
      return mul(mul(self, sub(one_, self)), d(n.a));
    case Op::Clamp:
      // Straight-through: identity derivative inside and outside the bounds.
      return d(n.a);
  }
  throw GraphError("differentiate: unknown op");
}

std::vector<NodeId> GraphArena::gradient_vector(NodeId root, ParamId param) {
  const std::size_t dim = param_dim(param);
  std::vector<NodeId> out;
  out.reserve(dim);
  for (std::uint32_t i = 0; i < dim; ++i) out.push_back(differentiate(root, Coord{param, i}));
  return out;
}

// ---------------------------------------------------------------------------
// Binding / SampleRecord

Binding::Binding(const GraphArena& arena)
    : values_(arena.param_count()), present_(arena.param_count(), false) {}

void Binding::set(ParamId p, std::vector<double> values) {
  if (p.index >= values_.size()) {
    values_.resize(p.index + 1);
    present_.resize(p.index + 1, false);
  }
  values_[p.index] = std::move(values);
  present_[p.index] = true;
}

bool Binding::has(ParamId p) const { return p.index < present_.size() && present_[p.index]; }

std::span<const double> Binding::get(ParamId p) const {
  if (!has(p)) throw GraphError("binding has no value for parameter " + std::to_string(p.index));
  return values_[p.index];
}

double Binding::value(ParamId p, std::uint32_t component) const {
  auto v = get(p);
  if (component >= v.size()) throw GraphError("binding component out of range");
  return v[component];
}

void Binding::validate(const GraphArena& arena) const {
  for (std::uint32_t i = 0; i < arena.param_count(); ++i) {
    const ParamId p{i};
    if (!has(p)) throw GraphError("binding misses parameter " + arena.param_name(p));
    if (values_[i].size() != arena.param_dim(p))
      throw GraphError("binding dimension mismatch for " + arena.param_name(p));
  }
}

void SampleRecord::set(StochId s, double v) {
  if (s.index >= values_.size()) {
    values_.resize(s.index + 1, 0.0);
    present_.resize(s.index + 1, false);
  }
  values_[s.index] = v;
  present_[s.index] = true;
}

std::optional<double> SampleRecord::get(StochId s) const {
  if (!has(s)) return std::nullopt;
  return values_[s.index];
}

// ---------------------------------------------------------------------------
// Evaluation

std::vector<std::uint32_t> reachable(const GraphArena& arena, std::span<const NodeId> roots) {
  std::vector<std::uint8_t> mark(arena.size(), 0);
  std::vector<std::uint32_t> stack;
  std::vector<std::uint32_t> out;
  for (NodeId r : roots) {
    arena.check(r);
    if (!mark[r.index]) {
      mark[r.index] = 1;
      stack.push_back(r.index);
    }
  }
  while (!stack.empty()) {
    const std::uint32_t i = stack.back();
    stack.pop_back();
    out.push_back(i);
    const Node& n = arena.at(i);
    const int arity = op_arity(n.op);
    if (arity >= 1 && !mark[n.a]) {
      mark[n.a] = 1;
      stack.push_back(n.a);
    }
    if (arity >= 2 && !mark[n.b]) {
      mark[n.b] = 1;
      stack.push_back(n.b);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

double eval_node(std::uint32_t i, const Node& n, double a, double b, const Binding& binding,
                 const SampleRecord& samples) {
  switch (n.op) {
    case Op::Constant:
      return n.value;
    case Op::Param:
      return binding.value(ParamId{n.aux}, n.component);
    case Op::SampleLeaf: {
      auto v = samples.get(StochId{n.aux});
      if (!v) throw DomainError("missing sample for stochastic node " + std::to_string(n.aux), i);
      return *v;
    }
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
      return apply_binary(n.op, a, b);
    case Op::Div:
      if (b == 0.0) throw DomainError("division by zero at node " + std::to_string(i), i);
      return a / b;
    case Op::Log:
      if (!(a > 0.0))
        throw DomainError("log of non-positive value at node " + std::to_string(i), i);
      return std::log(a);
    case Op::Pow: {
      const double r = std::pow(a, n.value);
      if (std::isnan(r) && !std::isnan(a))
        throw DomainError("pow outside its domain at node " + std::to_string(i), i);
      return r;
    }
    default:
      return apply_unary(n.op, a, n);
  }
}

void run_order(const GraphArena& arena, const std::vector<std::uint32_t>& order,
               const Binding& binding, const SampleRecord& samples, std::vector<double>& values) {
  if (values.size() < arena.size()) values.resize(arena.size());
  for (std::uint32_t i : order) {
    const Node& n = arena.at(i);
    const int arity = op_arity(n.op);
    const double a = arity >= 1 ? values[n.a] : 0.0;
    const double b = arity >= 2 ? values[n.b] : 0.0;
    values[i] = eval_node(i, n, a, b, binding, samples);
  }
}

}  // namespace

ScalarProgram::ScalarProgram(const GraphArena& arena, std::span<const NodeId> roots)
    : arena_(&arena), roots_(roots.begin(), roots.end()), order_(reachable(arena, roots)) {}

void ScalarProgram::run(const Binding& binding, const SampleRecord& samples,
                        std::vector<double>& values) const {
  run_order(*arena_, order_, binding, samples, values);
}

std::vector<double> ScalarProgram::evaluate(const Binding& binding, const SampleRecord& samples,
                                            std::vector<double>& values) const {
  run(binding, samples, values);
  std::vector<double> out;
  out.reserve(roots_.size());
  for (NodeId r : roots_) out.push_back(values[r.index]);
  return out;
}

double evaluate(const GraphArena& arena, NodeId root, const Binding& binding,
                const SampleRecord& samples, EvalScratch& scratch) {
  const NodeId roots[] = {root};
  return evaluate_many(arena, roots, binding, samples, scratch)[0];
}

double evaluate(const GraphArena& arena, NodeId root, const Binding& binding,
                const SampleRecord& samples) {
  EvalScratch scratch;
  return evaluate(arena, root, binding, samples, scratch);
}

std::vector<double> evaluate_many(const GraphArena& arena, std::span<const NodeId> roots,
                                  const Binding& binding, const SampleRecord& samples,
                                  EvalScratch& scratch) {
  scratch.order = reachable(arena, roots);
  run_order(arena, scratch.order, binding, samples, scratch.values);
  std::vector<double> out;
  out.reserve(roots.size());
  for (NodeId r : roots) out.push_back(scratch.values[r.index]);
  return out;
}

double evaluate_unmemoized(const GraphArena& arena, NodeId root, const Binding& binding,
                           const SampleRecord& samples) {
  const Node& n = arena.node(root);
  const int arity = op_arity(n.op);
  const double a = arity >= 1 ? evaluate_unmemoized(arena, NodeId{n.a, root.arena}, binding, samples) : 0.0;
  const double b = arity >= 2 ? evaluate_unmemoized(arena, NodeId{n.b, root.arena}, binding, samples) : 0.0;
  return eval_node(root.index, n, a, b, binding, samples);
}

// ---------------------------------------------------------------------------
// Dump

namespace {

void dump_node(std::ostringstream& os, const GraphArena& arena, std::uint32_t i) {
  const Node& n = arena.at(i);
  os << i << ' ' << op_name(n.op);
  switch (n.op) {
    case Op::Constant:
      os << ' ' << n.value;
      break;
    case Op::Param:
      os << ' ' << arena.param_name(ParamId{n.aux}) << '[' << n.component << ']';
      break;
    case Op::SampleLeaf:
      os << " s" << n.aux;
      break;
    case Op::Pow:
      os << ' ' << n.a << " ^" << n.value;
      break;
    case Op::Clamp:
      os << ' ' << n.a << " [" << n.value << ',' << n.upper << ']';
      break;
    default:
      os << ' ' << n.a;
      if (op_arity(n.op) == 2) os << ' ' << n.b;
      break;
  }
  os << '\n';
}

}  // namespace

std::string dump(const GraphArena& arena) {
  std::ostringstream os;
  os.precision(17);
  for (std::uint32_t i = 0; i < arena.size(); ++i) dump_node(os, arena, i);
  return os.str();
}

std::string dump(const GraphArena& arena, std::span<const NodeId> roots) {
  std::ostringstream os;
  os.precision(17);
  for (std::uint32_t i : reachable(arena, roots)) dump_node(os, arena, i);
  return os.str();
}

}  // namespace dice
