#include "dice/oracle.hpp"

#include <stdexcept>
#include <string>

namespace dice {

std::vector<EnumerationResult> enumerate_many(const Scg& scg, std::span<const NodeId> roots,
                                              const Binding& binding) {
  const std::size_t s = scg.stochastic_count();
  if (s > kMaxEnumerated)
    throw std::invalid_argument("enumeration limited to " + std::to_string(kMaxEnumerated) +
                                " stochastic nodes, got " + std::to_string(s));
  binding.validate(scg.arena());

  std::vector<NodeId> all;
  for (const StochasticNode& n : scg.stochastic_nodes()) all.push_back(n.prob);
  all.insert(all.end(), roots.begin(), roots.end());
  const ScalarProgram program(scg.arena(), all);

  std::vector<double> acc(roots.size(), 0.0);
  double total = 0.0;
  std::vector<double> memo;
  SampleRecord rec(s);
  const std::size_t outcomes = std::size_t{1} << s;
  for (std::size_t o = 0; o < outcomes; ++o) {
    for (std::size_t i = 0; i < s; ++i)
      rec.set(StochId{static_cast<std::uint32_t>(i)}, static_cast<double>((o >> i) & 1u));
    const std::vector<double> v = program.evaluate(binding, rec, memo);
    double w = 1.0;
    for (std::size_t i = 0; i < s; ++i) w *= ((o >> i) & 1u) ? v[i] : 1.0 - v[i];
    total += w;
    for (std::size_t r = 0; r < roots.size(); ++r) acc[r] += w * v[s + r];
  }

  std::vector<EnumerationResult> out(roots.size());
  for (std::size_t r = 0; r < roots.size(); ++r) out[r] = {acc[r], outcomes, total};
  return out;
}

EnumerationResult enumerate_expectation(const Scg& scg, NodeId root, const Binding& binding) {
  const NodeId roots[] = {root};
  return enumerate_many(scg, roots, binding).front();
}

std::vector<double> fd_gradient(const ScalarFn& f, std::span<const double> x, double h) {
  std::vector<double> p(x.begin(), x.end());
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    p[i] = x[i] + h;
    const double up = f(p);
    p[i] = x[i] - h;
    const double down = f(p);
    p[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

std::vector<double> fd_hessian(const ScalarFn& f, std::span<const double> x, double h) {
  const std::size_t n = x.size();
  std::vector<double> p(x.begin(), x.end());
  std::vector<double> hm(n * n);
  auto at = [&](std::size_t i, double si, std::size_t j, double sj) {
    p[i] += si * h;
    p[j] += sj * h;
    const double v = f(p);
    p[i] = x[i];
    p[j] = x[j];
    return v;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double v = at(i, 1, j, 1) - at(i, 1, j, -1) - at(i, -1, j, 1) + at(i, -1, j, -1);
      hm[i * n + j] = v / (4.0 * h * h);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = 0.5 * (hm[i * n + j] + hm[j * n + i]);
      hm[i * n + j] = s;
      hm[j * n + i] = s;
    }
  }
  return hm;
}

void assign_coords(Binding& binding, const GraphArena& arena, std::span<const ParamId> params,
                   std::span<const double> x) {
  std::size_t k = 0;
  for (ParamId p : params) {
    const std::size_t d = arena.param_dim(p);
    if (k + d > x.size()) throw std::invalid_argument("coordinate vector too short");
    binding.set(p, std::vector<double>(x.begin() + static_cast<std::ptrdiff_t>(k),
                                       x.begin() + static_cast<std::ptrdiff_t>(k + d)));
    k += d;
  }
  if (k != x.size()) throw std::invalid_argument("coordinate vector too long");
}

std::vector<double> flatten(const Binding& binding, const GraphArena& arena,
                            std::span<const ParamId> params) {
  std::vector<double> out;
  for (ParamId p : params) {
    const auto v = binding.get(p);
    if (v.size() != arena.param_dim(p)) throw std::invalid_argument("binding dimension mismatch");
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

}  // namespace dice
