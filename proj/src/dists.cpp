#include "dice/dists.hpp"

namespace dice {

StochId bernoulli(Scg& scg, NodeId prob_expr) {
  GraphArena& g = scg.arena();
  const NodeId p = g.clamp(prob_expr, kProbFloor, kProbCeil);
  return scg.add_stochastic(DistKind::Bernoulli, prob_expr, prob_expr,
                            [p](GraphArena& a, NodeId x) {
                              const NodeId on = a.mul(x, a.log(p));
                              const NodeId off = a.mul(a.sub(a.one(), x), a.log(a.sub(a.one(), p)));
                              return a.add(on, off);
                            });
}

StochId sigmoid_bernoulli(Scg& scg, NodeId logit_expr) {
  GraphArena& g = scg.arena();
  const NodeId prob = g.sigmoid(logit_expr);
  return scg.add_stochastic(DistKind::SigmoidBernoulli, logit_expr, prob,
                            [logit_expr](GraphArena& a, NodeId x) {
                              const NodeId sign = a.sub(a.scale(x, 2.0), a.one());
                              return a.log(a.sigmoid(a.mul(sign, logit_expr)));
                            });
}

double draw(const Scg& scg, StochId s, const Binding& binding, const SampleRecord& samples,
            std::mt19937_64& rng) {
  const double p = evaluate(scg.arena(), scg.stochastic(s).prob, binding, samples);
  return draw(p, rng);
}

SampleRecord sample_trajectory(const Scg& scg, const Binding& binding, std::mt19937_64& rng) {
  SampleRecord rec(scg.stochastic_count());
  EvalScratch scratch;
  for (const StochasticNode& n : scg.stochastic_nodes()) {
    const double p = evaluate(scg.arena(), n.prob, binding, rec, scratch);
    rec.set(n.id, draw(p, rng));
  }
  return rec;
}

AncestralSampler::AncestralSampler(const Scg& scg, const simd::Kernels& kernels) {
  programs_.reserve(scg.stochastic_count());
  for (const StochasticNode& n : scg.stochastic_nodes()) {
    const NodeId roots[] = {n.prob};
    programs_.emplace_back(scg.arena(), roots, kernels);
  }
}

AncestralSampler::Workspace AncestralSampler::make_workspace() const {
  Workspace ws;
  for (const BatchProgram& p : programs_) ws.programs.push_back(p.make_workspace());
  ws.rngs.resize(kLanes);
  ws.probs.resize(kLanes);
  return ws;
}

void AncestralSampler::prepare(const Binding& binding, Workspace& ws) const {
  if (ws.programs.size() != programs_.size()) ws = make_workspace();
  for (std::size_t i = 0; i < programs_.size(); ++i) programs_[i].prepare(binding, ws.programs[i]);
}

void AncestralSampler::sample(std::uint64_t master_seed, std::size_t first, std::size_t count,
                              Workspace& ws, std::span<double> out) const {
  if (count > kLanes) throw GraphError("sample block wider than kLanes");
  if (out.size() < programs_.size() * kLanes) throw GraphError("sample buffer too small");
  for (std::size_t l = 0; l < count; ++l) ws.rngs[l].seed(trajectory_seed(master_seed, first + l));
  const SampleBlock block{out.data(), kLanes, count, first};
  for (std::size_t s = 0; s < programs_.size(); ++s) {
    programs_[s].run(block, ws.programs[s], ws.probs);
    double* dst = out.data() + s * kLanes;
    for (std::size_t l = 0; l < count; ++l) dst[l] = draw(ws.probs[l], ws.rngs[l]);
  }
}

}  // namespace dice
