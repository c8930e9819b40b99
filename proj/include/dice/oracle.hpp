#pragma once

// Ground truth independent of the Monte-Carlo path: exhaustive enumeration
// of discrete SCGs (scalar evaluator, no SIMD tape) and central finite
// differences of arbitrary scalar maps.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "dice/scg.hpp"

namespace dice {

inline constexpr std::size_t kMaxEnumerated = 24;

struct EnumerationResult {
  double expectation = 0.0;
  std::size_t n_outcomes = 0;
  double total_weight = 0.0;
};

// E[root] over every joint outcome; weight = prod p(w | parents).
EnumerationResult enumerate_expectation(const Scg& scg, NodeId root, const Binding& binding);
// Several roots in one pass over the outcomes.
std::vector<EnumerationResult> enumerate_many(const Scg& scg, std::span<const NodeId> roots,
                                              const Binding& binding);

using ScalarFn = std::function<double(std::span<const double>)>;

inline constexpr double kFdStep1 = 1e-4;
inline constexpr double kFdStep2 = 1e-3;

std::vector<double> fd_gradient(const ScalarFn& f, std::span<const double> x, double h = kFdStep1);
// Row-major, symmetrized.
std::vector<double> fd_hessian(const ScalarFn& f, std::span<const double> x, double h = kFdStep2);

// Writes a flat coordinate vector into a binding (parameters in order).
void assign_coords(Binding& binding, const GraphArena& arena, std::span<const ParamId> params,
                   std::span<const double> x);
std::vector<double> flatten(const Binding& binding, const GraphArena& arena,
                            std::span<const ParamId> params);

}  // namespace dice
