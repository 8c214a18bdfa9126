#pragma once

// Solution representations and their invariants.
//
// A TSP solution is a cyclic permutation stored as a linear order; a CVRP
// solution is a set of depot-anchored routes that never store the depot
// itself. Both keep reverse indexes (node -> position) and a cached true
// cost so operators can evaluate and apply moves in O(affected segment).

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "l2gls/errors.hpp"
#include "l2gls/instance.hpp"

namespace l2gls {

constexpr NodeId kDepot = 0;

struct Tour {
  std::vector<NodeId> order;
  std::vector<int> pos;  // pos[node] = index in order
  double cached_cost = 0.0;
};

struct RouteSet {
  std::vector<std::vector<NodeId>> routes;  // customers only, depot implied at both ends
  std::vector<int> route_load;
  std::vector<int> node_route;  // node -> route index (-1 for depot)
  std::vector<int> node_pos;    // node -> position within its route (-1 for depot)
  std::vector<int> demands;     // copy of instance demands, for O(1) load updates
  int capacity = 0;
  double cached_cost = 0.0;
};

struct Solution {
  Kind kind = Kind::TSP;
  std::variant<Tour, RouteSet> repr;
  // Bumped by every applied move; moves carry the generation they were
  // evaluated against so stale applications are rejected.
  std::uint64_t generation = 0;

  Tour& tour() { return std::get<Tour>(repr); }
  const Tour& tour() const { return std::get<Tour>(repr); }
  RouteSet& routes() { return std::get<RouteSet>(repr); }
  const RouteSet& routes() const { return std::get<RouteSet>(repr); }

  double cached_cost() const {
    return kind == Kind::TSP ? tour().cached_cost : routes().cached_cost;
  }
};

// ---------------------------------------------------------------------------
// Validation

struct Violation {
  enum class Code {
    BadLength,
    OutOfRange,
    DuplicateNode,
    MissingNode,
    DepotInRoute,
    CapacityExceeded,
  };
  Code code;
  int node = -1;
  int route = -1;
  std::string message;
};

namespace detail {

inline void push_violation(std::vector<Violation>& out, Violation::Code code, int node, int route,
                           std::string msg) {
  out.push_back(Violation{code, node, route, std::move(msg)});
}

}  // namespace detail

inline std::vector<Violation> validate(const RoutingInstance& inst, const Solution& sol) {
  std::vector<Violation> out;
  const int n = inst.size();
  if (sol.kind != inst.kind) {
    detail::push_violation(out, Violation::Code::BadLength, -1, -1,
                           "solution kind does not match instance kind");
    return out;
  }
  if (inst.kind == Kind::TSP) {
    const Tour& t = sol.tour();
    if (static_cast<int>(t.order.size()) != n) {
      detail::push_violation(out, Violation::Code::BadLength, -1, -1,
                             "tour visits " + std::to_string(t.order.size()) + " of " +
                                 std::to_string(n) + " nodes");
      return out;
    }
    std::vector<int> seen(n, 0);
    for (NodeId v : t.order) {
      if (v < 0 || v >= n) {
        detail::push_violation(out, Violation::Code::OutOfRange, v, -1,
                               "node id " + std::to_string(v) + " out of range");
        return out;
      }
      if (++seen[v] == 2)
        detail::push_violation(out, Violation::Code::DuplicateNode, v, -1,
                               "node " + std::to_string(v) + " visited more than once");
    }
    for (int v = 0; v < n; ++v) {
      if (seen[v] == 0)
        detail::push_violation(out, Violation::Code::MissingNode, v, -1,
                               "node " + std::to_string(v) + " not visited");
    }
    return out;
  }

  const RouteSet& rs = sol.routes();
  std::vector<int> seen(n, 0);
  for (int r = 0; r < static_cast<int>(rs.routes.size()); ++r) {
    long load = 0;
    for (NodeId v : rs.routes[r]) {
      if (v < 0 || v >= n) {
        detail::push_violation(out, Violation::Code::OutOfRange, v, r,
                               "node id " + std::to_string(v) + " out of range");
        return out;
      }
      if (v == kDepot) {
        detail::push_violation(out, Violation::Code::DepotInRoute, v, r,
                               "depot appears inside route " + std::to_string(r));
        continue;
      }
      if (++seen[v] == 2)
        detail::push_violation(out, Violation::Code::DuplicateNode, v, r,
                               "customer " + std::to_string(v) + " visited more than once");
      load += inst.demands[v];
    }
    if (load > inst.capacity)
      detail::push_violation(out, Violation::Code::CapacityExceeded, -1, r,
                             "route " + std::to_string(r) + " load " + std::to_string(load) +
                                 " exceeds capacity " + std::to_string(inst.capacity));
  }
  for (int v = 1; v < n; ++v) {
    if (seen[v] == 0)
      detail::push_violation(out, Violation::Code::MissingNode, v, -1,
                             "customer " + std::to_string(v) + " not visited");
  }
  return out;
}

namespace detail {

inline std::string violations_to_string(const std::vector<Violation>& vs) {
  std::string s;
  for (const Violation& v : vs) {
    if (!s.empty()) s += "; ";
    s += v.message;
  }
  return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Costs

// Applies f(u, v) to every traversed leg, with multiplicity. A route with a
// single customer c contributes (depot, c) twice.
template <typename F>
inline void for_each_leg(const Solution& sol, F&& f) {
  if (sol.kind == Kind::TSP) {
    const auto& order = sol.tour().order;
    const int n = static_cast<int>(order.size());
    for (int i = 0; i < n; ++i) f(order[i], order[(i + 1) % n]);
  } else {
    for (const auto& route : sol.routes().routes) {
      if (route.empty()) continue;
      NodeId prev = kDepot;
      for (NodeId v : route) {
        f(prev, v);
        prev = v;
      }
      f(prev, kDepot);
    }
  }
}

inline double recompute_cost(const RoutingInstance& inst, const Solution& sol) {
  double total = 0.0;
  for_each_leg(sol, [&](NodeId u, NodeId v) { total += inst.dist(u, v); });
  return total;
}

inline double tsp_cost(const RoutingInstance& inst, const Solution& sol) {
  if (sol.kind != Kind::TSP) throw ValidationError("tsp_cost: not a TSP solution");
  auto violations = validate(inst, sol);
  if (!violations.empty())
    throw ValidationError("tsp_cost: invalid tour: " + detail::violations_to_string(violations));
  return recompute_cost(inst, sol);
}

inline double cvrp_cost(const RoutingInstance& inst, const Solution& sol) {
  if (sol.kind != Kind::CVRP) throw ValidationError("cvrp_cost: not a CVRP solution");
  auto violations = validate(inst, sol);
  if (!violations.empty())
    throw ValidationError("cvrp_cost: invalid solution: " +
                          detail::violations_to_string(violations));
  return recompute_cost(inst, sol);
}

inline double solution_cost(const RoutingInstance& inst, const Solution& sol) {
  return sol.kind == Kind::TSP ? tsp_cost(inst, sol) : cvrp_cost(inst, sol);
}

// Remaining capacity of the route containing node i (the vehicle's own
// capacity for the depot).
inline int free_capacity(const RoutingInstance& inst, const Solution& sol, NodeId i) {
  if (sol.kind != Kind::CVRP) throw ValidationError("free_capacity: not a CVRP solution");
  if (i < 0 || i >= inst.size()) throw std::out_of_range("free_capacity: node out of range");
  const RouteSet& rs = sol.routes();
  if (i == kDepot) return rs.capacity;
  return rs.capacity - rs.route_load[rs.node_route[i]];
}

// ---------------------------------------------------------------------------
// Index maintenance

inline void rebuild_indexes(const RoutingInstance& inst, Solution& sol) {
  if (sol.kind == Kind::TSP) {
    Tour& t = sol.tour();
    t.pos.assign(inst.size(), -1);
    for (int i = 0; i < static_cast<int>(t.order.size()); ++i) t.pos[t.order[i]] = i;
    t.cached_cost = recompute_cost(inst, sol);
  } else {
    RouteSet& rs = sol.routes();
    rs.capacity = inst.capacity;
    rs.demands = inst.demands;
    rs.node_route.assign(inst.size(), -1);
    rs.node_pos.assign(inst.size(), -1);
    rs.route_load.assign(rs.routes.size(), 0);
    for (int r = 0; r < static_cast<int>(rs.routes.size()); ++r) {
      for (int p = 0; p < static_cast<int>(rs.routes[r].size()); ++p) {
        const NodeId v = rs.routes[r][p];
        rs.node_route[v] = r;
        rs.node_pos[v] = p;
        rs.route_load[r] += inst.demands[v];
      }
    }
    rs.cached_cost = recompute_cost(inst, sol);
  }
}

// Drops empty routes (relocate can empty one out).
inline void compact_routes(const RoutingInstance& inst, Solution& sol) {
  if (sol.kind != Kind::CVRP) return;
  RouteSet& rs = sol.routes();
  rs.routes.erase(std::remove_if(rs.routes.begin(), rs.routes.end(),
                                 [](const std::vector<NodeId>& r) { return r.empty(); }),
                  rs.routes.end());
  rebuild_indexes(inst, sol);
}

// ---------------------------------------------------------------------------
// Construction

inline Solution make_tour(const RoutingInstance& inst, std::vector<NodeId> order) {
  Solution sol;
  sol.kind = Kind::TSP;
  sol.repr = Tour{std::move(order), {}, 0.0};
  auto violations = validate(inst, sol);
  if (!violations.empty())
    throw ValidationError("make_tour: " + detail::violations_to_string(violations));
  rebuild_indexes(inst, sol);
  return sol;
}

inline Solution make_routes(const RoutingInstance& inst, std::vector<std::vector<NodeId>> routes) {
  Solution sol;
  sol.kind = Kind::CVRP;
  RouteSet rs;
  rs.routes = std::move(routes);
  rs.capacity = inst.capacity;
  sol.repr = std::move(rs);
  auto violations = validate(inst, sol);
  if (!violations.empty())
    throw ValidationError("make_routes: " + detail::violations_to_string(violations));
  rebuild_indexes(inst, sol);
  return sol;
}

// Random starting point: a shuffled tour for TSP; for CVRP the same shuffled
// customer sequence split greedily into routes, opening a new route whenever
// the next customer no longer fits.
inline Solution initial_solution(const RoutingInstance& inst, std::uint64_t seed) {
  check_instance(inst);
  SplitMix64 rng(seed);
  if (inst.kind == Kind::TSP) {
    std::vector<NodeId> order(inst.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    return make_tour(inst, std::move(order));
  }
  std::vector<NodeId> customers(inst.size() - 1);
  std::iota(customers.begin(), customers.end(), 1);
  rng.shuffle(customers);
  std::vector<std::vector<NodeId>> routes;
  routes.emplace_back();
  int load = 0;
  for (NodeId c : customers) {
    if (load + inst.demands[c] > inst.capacity) {
      routes.emplace_back();
      load = 0;
    }
    routes.back().push_back(c);
    load += inst.demands[c];
  }
  return make_routes(inst, std::move(routes));
}

// ---------------------------------------------------------------------------
// JSON serialization

inline void to_json(nlohmann::json& j, const Solution& sol) {
  j = nlohmann::json{{"cost", sol.cached_cost()}};
  if (sol.kind == Kind::TSP) {
    j["tour"] = sol.tour().order;
  } else {
    nlohmann::json routes = nlohmann::json::array();
    for (const auto& r : sol.routes().routes) {
      if (!r.empty()) routes.push_back(r);
    }
    j["routes"] = std::move(routes);
  }
}

}  // namespace l2gls
