#pragma once

// Guided-local-search penalties.
//
// The search minimizes an augmented objective
//     h(s) = L(s) + lambda * sum_i p_i * I_i(s)
// where the features i are undirected edges, p_i is an integer penalty
// counter and I_i(s) indicates whether edge i is traversed by s. Penalties
// only ever increase; escaping a local minimum happens by penalizing the
// currently most "useful" edges, which changes the augmented landscape
// instead of perturbing the solution.

#include <cstdint>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "l2gls/instance.hpp"
#include "l2gls/solution.hpp"

namespace l2gls {

// An undirected edge feature together with its cost in the current instance.
struct Feature {
  NodeId a = -1;
  NodeId b = -1;
  double cost = 0.0;
};

inline std::uint64_t edge_key(NodeId a, NodeId b) {
  const std::uint64_t lo = static_cast<std::uint32_t>(a < b ? a : b);
  const std::uint64_t hi = static_cast<std::uint32_t>(a < b ? b : a);
  return (lo << 32) | hi;
}

class PenaltyState {
 public:
  explicit PenaltyState(double lambda) : lambda_(lambda) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("PenaltyState: lambda must be >= 0");
  }

  double lambda() const { return lambda_; }
  bool empty() const { return p_.empty(); }
  int num_penalized_features() const { return static_cast<int>(p_.size()); }

  int penalty(NodeId a, NodeId b) const {
    const auto it = p_.find(edge_key(a, b));
    return it == p_.end() ? 0 : it->second;
  }

  void increment(NodeId a, NodeId b) { ++p_[edge_key(a, b)]; }

  // Deterministically ordered copy of all nonzero counters.
  std::vector<std::tuple<NodeId, NodeId, int>> snapshot() const {
    std::vector<std::tuple<NodeId, NodeId, int>> out;
    out.reserve(p_.size());
    for (const auto& [key, count] : p_)
      out.emplace_back(static_cast<NodeId>(key >> 32), static_cast<NodeId>(key & 0xffffffffu),
                       count);
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::unordered_map<std::uint64_t, int> p_;
  double lambda_;
};

// I_i(s): 1 when the solution traverses edge (a, b) in either direction.
inline int indicator(const Solution& sol, NodeId a, NodeId b) {
  const std::uint64_t key = edge_key(a, b);
  int found = 0;
  for_each_leg(sol, [&](NodeId u, NodeId v) {
    if (edge_key(u, v) == key) found = 1;
  });
  return found;
}

// Distinct edges of the solution in traversal order, each with its cost.
// A single-customer CVRP route traverses (depot, c) twice but contributes
// the feature once.
inline std::vector<Feature> solution_features(const RoutingInstance& inst, const Solution& sol) {
  std::vector<Feature> out;
  std::unordered_set<std::uint64_t> seen;
  for_each_leg(sol, [&](NodeId u, NodeId v) {
    if (seen.insert(edge_key(u, v)).second) out.push_back(Feature{u, v, inst.dist(u, v)});
  });
  return out;
}

// h(s) = L(s) + lambda * sum of penalties over distinct traversed edges.
inline double augmented_cost(const Solution& sol, const PenaltyState& ps) {
  double pen = 0.0;
  std::unordered_set<std::uint64_t> seen;
  for_each_leg(sol, [&](NodeId u, NodeId v) {
    if (seen.insert(edge_key(u, v)).second) pen += ps.penalty(u, v);
  });
  return sol.cached_cost() + ps.lambda() * pen;
}

// Utility of a feature at a local minimum: cost / (1 + current penalty),
// zero when the feature is absent from the solution.
inline double feature_utility(const Solution& local_min, const PenaltyState& ps,
                              const Feature& f) {
  if (indicator(local_min, f.a, f.b) == 0) return 0.0;
  return f.cost / (1.0 + ps.penalty(f.a, f.b));
}

// Increments the penalty of every maximum-utility edge of the local minimum
// (all of them on exact ties) and returns the penalized features.
inline std::vector<Feature> penalize(const RoutingInstance& inst, const Solution& local_min,
                                     PenaltyState& ps) {
  const std::vector<Feature> features = solution_features(inst, local_min);
  if (features.empty()) return {};
  double best = -1.0;
  for (const Feature& f : features) {
    const double u = f.cost / (1.0 + ps.penalty(f.a, f.b));
    if (u > best) best = u;
  }
  std::vector<Feature> penalized;
  for (const Feature& f : features) {
    const double u = f.cost / (1.0 + ps.penalty(f.a, f.b));
    if (u == best) penalized.push_back(f);
  }
  for (const Feature& f : penalized) ps.increment(f.a, f.b);
  return penalized;
}

}  // namespace l2gls
