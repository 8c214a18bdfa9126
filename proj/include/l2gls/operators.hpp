#pragma once

// Local-search operators: 2-opt, relocate, swap, and 3-node permutation.
//
// Each *_best function scans its neighborhood (restricted by candidate
// lists where the neighborhood is quadratic), evaluates every move
// incrementally against both the true cost and the augmented cost, and
// returns the best strictly improving move under the augmented cost, if any.
// apply_move performs the corresponding solution surgery in time
// proportional to the affected segment and keeps all caches consistent.
//
// Penalties are defined on the set of distinct edges, so CVRP moves that
// create or destroy single-customer routes need care: the two traversals of
// (depot, c) in a route [c] are one feature. The guards below keep the
// incremental penalty delta equal to the set-based recomputation.

#include <cstdint>
#include <optional>
#include <vector>

#include "l2gls/candidate_lists.hpp"
#include "l2gls/errors.hpp"
#include "l2gls/gls.hpp"
#include "l2gls/instance.hpp"
#include "l2gls/solution.hpp"

namespace l2gls {

enum class MoveKind { TwoOpt, Relocate, Swap, ThreePerm };

inline const char* move_kind_name(MoveKind k) {
  switch (k) {
    case MoveKind::TwoOpt: return "TWO_OPT";
    case MoveKind::Relocate: return "RELOCATE";
    case MoveKind::Swap: return "SWAP";
    case MoveKind::ThreePerm: return "THREE_PERM";
  }
  return "?";
}

// Move encoding by kind (route indexes are -1 for TSP):
//   TwoOpt:    route_a == route_b, cut positions a < b; reverses (a..b].
//              For CVRP a may be -1, cutting the leading depot leg.
//   Relocate:  node at (route_a, a) moves to slot b of route_b, where slot
//              b means "insert before the customer currently at index b"
//              in the target route's pre-move indexing.
//   Swap:      nodes at (route_a, a) and (route_b, b) exchange places.
//   ThreePerm: window of three starting at (route_a, a) is rewritten with
//              permutation code c in [0, 5).
struct Move {
  MoveKind op = MoveKind::TwoOpt;
  int route_a = -1;
  int route_b = -1;
  int a = 0;
  int b = 0;
  int c = 0;
  double delta_true = 0.0;
  double delta_aug = 0.0;
  std::uint64_t generation = 0;
};

// The five non-identity permutations of three elements, lexicographic.
inline constexpr int kPerm3[5][3] = {
    {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};

struct EvalContext {
  const RoutingInstance* inst = nullptr;
  const PenaltyState* penalties = nullptr;
  const CandidateLists* cand = nullptr;
};

constexpr double kImprovementThreshold = -1e-9;

namespace detail {

struct MoveAccumulator {
  std::optional<Move> best;
  void offer(const Move& m) {
    if (m.delta_aug >= kImprovementThreshold) return;
    if (!best || m.delta_aug < best->delta_aug) best = m;
  }
};

// Penalty lookups dominate evaluation when many edges are penalized; skip
// them entirely while the penalty map is empty.
struct PenaltyView {
  const PenaltyState* ps;
  bool active;
  double lambda;
  explicit PenaltyView(const PenaltyState* p)
      : ps(p), active(p != nullptr && !p->empty()), lambda(p != nullptr ? p->lambda() : 0.0) {}
  double operator()(NodeId a, NodeId b) const { return active ? ps->penalty(a, b) : 0.0; }
};

inline void check_context(const Solution& sol, const EvalContext& ctx) {
  if (ctx.inst == nullptr || ctx.cand == nullptr)
    throw std::invalid_argument("operator evaluation: incomplete context");
  if (ctx.inst->kind != sol.kind)
    throw ValidationError("operator evaluation: instance/solution kind mismatch");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// 2-opt

inline std::optional<Move> two_opt_best(const Solution& sol, const EvalContext& ctx) {
  detail::check_context(sol, ctx);
  const RoutingInstance& inst = *ctx.inst;
  const detail::PenaltyView pen(ctx.penalties);
  detail::MoveAccumulator acc;

  if (sol.kind == Kind::TSP) {
    const Tour& t = sol.tour();
    const int n = static_cast<int>(t.order.size());
    for (int pa = 0; pa < n; ++pa) {
      const NodeId u = t.order[pa];
      for (NodeId v : ctx.cand->neighbors[u]) {
        const int pb = t.pos[v];
        if (pb == pa) continue;
        const int lo = pa < pb ? pa : pb;
        const int hi = pa < pb ? pb : pa;
        const NodeId x = t.order[lo], sx = t.order[lo + 1];
        const NodeId y = t.order[hi], sy = t.order[(hi + 1) % n];
        const double delta =
            inst.dist(x, y) + inst.dist(sx, sy) - inst.dist(x, sx) - inst.dist(y, sy);
        double delta_aug = delta;
        if (pen.active)
          delta_aug += pen.lambda * (pen(x, y) + pen(sx, sy) - pen(x, sx) - pen(y, sy));
        acc.offer(Move{MoveKind::TwoOpt, -1, -1, lo, hi, 0, delta, delta_aug, sol.generation});
      }
    }
    return acc.best;
  }

  const RouteSet& rs = sol.routes();
  for (int r = 0; r < static_cast<int>(rs.routes.size()); ++r) {
    const auto& route = rs.routes[r];
    const int m = static_cast<int>(route.size());
    if (m < 2) continue;
    auto at = [&](int p) -> NodeId { return (p < 0 || p >= m) ? kDepot : route[p]; };
    for (int pa = -1; pa <= m - 2; ++pa) {
      const NodeId u = at(pa);
      for (NodeId v : ctx.cand->neighbors[u]) {
        if (v == kDepot || rs.node_route[v] != r) continue;
        const int pb = rs.node_pos[v];
        if (pb == pa) continue;
        const int lo = pa < pb ? pa : pb;
        const int hi = pa < pb ? pb : pa;
        const NodeId x = at(lo), sx = at(lo + 1);
        const NodeId y = at(hi), sy = at(hi + 1);
        const double delta = inst.dist(x, y) + inst.dist(sx, sy) - inst.dist(x, sx) -
                             inst.dist(y, sy);
        double delta_aug = delta;
        if (pen.active)
          delta_aug += pen.lambda * (pen(x, y) + pen(sx, sy) - pen(x, sx) - pen(y, sy));
        acc.offer(Move{MoveKind::TwoOpt, r, r, lo, hi, 0, delta, delta_aug, sol.generation});
      }
    }
  }
  return acc.best;
}

// ---------------------------------------------------------------------------
// Relocate

namespace detail {

struct RelocateRemoval {
  double true_gain;  // cost removed minus the joint edge added
  double pen_gain;   // penalty analog, set semantics
};

inline RelocateRemoval relocate_removal(const RoutingInstance& inst, const PenaltyView& pen,
                                        NodeId p, NodeId u, NodeId s, int source_size) {
  RelocateRemoval out;
  out.true_gain = inst.dist(p, u) + inst.dist(u, s) - inst.dist(p, s);
  if (!pen.active) {
    out.pen_gain = 0.0;
    return out;
  }
  if (source_size == 1) {
    // Route [u]: the single feature (depot, u) disappears.
    out.pen_gain = pen(p, u);
  } else if (source_size == 2) {
    // The joint edge (p, s) is a depot leg of the remaining customer and is
    // already traversed, so it is not a new feature.
    out.pen_gain = pen(p, u) + pen(u, s);
  } else {
    out.pen_gain = pen(p, u) + pen(u, s) - pen(p, s);
  }
  return out;
}

struct RelocateInsertion {
  double true_cost;
  double pen_cost;
};

// effective_size: customers in the target route once u has been removed from
// its own route (relevant when source == target).
inline RelocateInsertion relocate_insertion(const RoutingInstance& inst, const PenaltyView& pen,
                                            NodeId left, NodeId u, NodeId right,
                                            int effective_size) {
  RelocateInsertion out;
  out.true_cost = inst.dist(left, u) + inst.dist(u, right) - inst.dist(left, right);
  if (!pen.active) {
    out.pen_cost = 0.0;
    return out;
  }
  if (effective_size == 1) {
    // Inserting next to the only customer c of a route: the crossing edge is
    // a depot leg of c that remains traversed on its other side.
    out.pen_cost = pen(left, u) + pen(u, right);
  } else {
    out.pen_cost = pen(left, u) + pen(u, right) - pen(left, right);
  }
  return out;
}

}  // namespace detail

inline std::optional<Move> relocate_best(const Solution& sol, const EvalContext& ctx) {
  detail::check_context(sol, ctx);
  const RoutingInstance& inst = *ctx.inst;
  const detail::PenaltyView pen(ctx.penalties);
  detail::MoveAccumulator acc;

  if (sol.kind == Kind::TSP) {
    const Tour& t = sol.tour();
    const int n = static_cast<int>(t.order.size());
    if (n < 4) return std::nullopt;
    for (int pa = 0; pa < n; ++pa) {
      const NodeId u = t.order[pa];
      const NodeId p = t.order[(pa + n - 1) % n];
      const NodeId s = t.order[(pa + 1) % n];
      const auto rem = detail::relocate_removal(inst, pen, p, u, s, n);
      for (NodeId v : ctx.cand->neighbors[u]) {
        if (v == u) continue;
        const int pb = t.pos[v];
        if (v != p) {  // insert right after v
          const NodeId right = t.order[(pb + 1) % n];
          const auto add = detail::relocate_insertion(inst, pen, v, u, right, n);
          const double delta = add.true_cost - rem.true_gain;
          const double delta_aug =
              delta + (pen.active ? pen.lambda * (add.pen_cost - rem.pen_gain) : 0.0);
          acc.offer(Move{MoveKind::Relocate, -1, -1, pa, pb + 1, 0, delta, delta_aug,
                         sol.generation});
        }
        if (v != s) {  // insert right before v
          const NodeId left = t.order[(pb + n - 1) % n];
          const auto add = detail::relocate_insertion(inst, pen, left, u, v, n);
          const double delta = add.true_cost - rem.true_gain;
          const double delta_aug =
              delta + (pen.active ? pen.lambda * (add.pen_cost - rem.pen_gain) : 0.0);
          acc.offer(
              Move{MoveKind::Relocate, -1, -1, pa, pb, 0, delta, delta_aug, sol.generation});
        }
      }
    }
    return acc.best;
  }

  const RouteSet& rs = sol.routes();
  const int n = inst.size();
  for (NodeId u = 1; u < n; ++u) {
    const int ra = rs.node_route[u];
    const int pa = rs.node_pos[u];
    const auto& src = rs.routes[ra];
    const int msz = static_cast<int>(src.size());
    const NodeId p = pa > 0 ? src[pa - 1] : kDepot;
    const NodeId s = pa + 1 < msz ? src[pa + 1] : kDepot;
    const auto rem = detail::relocate_removal(inst, pen, p, u, s, msz);
    const int g = inst.demands[u];
    for (NodeId v : ctx.cand->neighbors[u]) {
      if (v == kDepot || v == u) continue;
      const int rb = rs.node_route[v];
      if (rb != ra && rs.route_load[rb] + g > rs.capacity) continue;
      const auto& dst = rs.routes[rb];
      const int dsz = static_cast<int>(dst.size());
      const int eff = rb == ra ? msz - 1 : dsz;
      const int pb = rs.node_pos[v];
      if (!(rb == ra && v == p)) {  // insert right after v
        const NodeId right = pb + 1 < dsz ? dst[pb + 1] : kDepot;
        const auto add = detail::relocate_insertion(inst, pen, v, u, right, eff);
        const double delta = add.true_cost - rem.true_gain;
        const double delta_aug =
            delta + (pen.active ? pen.lambda * (add.pen_cost - rem.pen_gain) : 0.0);
        acc.offer(
            Move{MoveKind::Relocate, ra, rb, pa, pb + 1, 0, delta, delta_aug, sol.generation});
      }
      if (!(rb == ra && v == s)) {  // insert right before v
        const NodeId left = pb > 0 ? dst[pb - 1] : kDepot;
        const auto add = detail::relocate_insertion(inst, pen, left, u, v, eff);
        const double delta = add.true_cost - rem.true_gain;
        const double delta_aug =
            delta + (pen.active ? pen.lambda * (add.pen_cost - rem.pen_gain) : 0.0);
        acc.offer(Move{MoveKind::Relocate, ra, rb, pa, pb, 0, delta, delta_aug, sol.generation});
      }
    }
  }
  return acc.best;
}

// ---------------------------------------------------------------------------
// Swap

inline std::optional<Move> swap_best(const Solution& sol, const EvalContext& ctx) {
  detail::check_context(sol, ctx);
  const RoutingInstance& inst = *ctx.inst;
  const detail::PenaltyView pen(ctx.penalties);
  detail::MoveAccumulator acc;

  if (sol.kind == Kind::TSP) {
    const Tour& t = sol.tour();
    const int n = static_cast<int>(t.order.size());
    for (int pa = 0; pa < n; ++pa) {
      const NodeId u = t.order[pa];
      for (NodeId v : ctx.cand->neighbors[u]) {
        const int pb = t.pos[v];
        // Adjacent cases: normalize to "x immediately precedes y".
        if ((pa + 1) % n == pb || (pb + 1) % n == pa) {
          const bool u_first = (pa + 1) % n == pb;
          const int px = u_first ? pa : pb;
          const NodeId x = t.order[px], y = t.order[(px + 1) % n];
          const NodeId px_node = t.order[(px + n - 1) % n];
          const NodeId sy_node = t.order[(px + 2) % n];
          if (px_node == y) continue;  // n == 3: swap is a relabeling
          const double delta = inst.dist(px_node, y) + inst.dist(x, sy_node) -
                               inst.dist(px_node, x) - inst.dist(y, sy_node);
          double delta_aug = delta;
          if (pen.active)
            delta_aug += pen.lambda * (pen(px_node, y) + pen(x, sy_node) - pen(px_node, x) -
                                       pen(y, sy_node));
          acc.offer(Move{MoveKind::Swap, -1, -1, pa, pb, 0, delta, delta_aug, sol.generation});
          continue;
        }
        const NodeId pu = t.order[(pa + n - 1) % n], su = t.order[(pa + 1) % n];
        const NodeId pv = t.order[(pb + n - 1) % n], sv = t.order[(pb + 1) % n];
        const double delta = inst.dist(pu, v) + inst.dist(v, su) + inst.dist(pv, u) +
                             inst.dist(u, sv) - inst.dist(pu, u) - inst.dist(u, su) -
                             inst.dist(pv, v) - inst.dist(v, sv);
        double delta_aug = delta;
        if (pen.active)
          delta_aug += pen.lambda * (pen(pu, v) + pen(v, su) + pen(pv, u) + pen(u, sv) -
                                     pen(pu, u) - pen(u, su) - pen(pv, v) - pen(v, sv));
        acc.offer(Move{MoveKind::Swap, -1, -1, pa, pb, 0, delta, delta_aug, sol.generation});
      }
    }
    return acc.best;
  }

  const RouteSet& rs = sol.routes();
  const int n = inst.size();
  for (NodeId u = 1; u < n; ++u) {
    const int ra = rs.node_route[u];
    const int pa = rs.node_pos[u];
    const auto& ru = rs.routes[ra];
    const int ma = static_cast<int>(ru.size());
    for (NodeId v : ctx.cand->neighbors[u]) {
      if (v == kDepot || v == u) continue;
      const int rb = rs.node_route[v];
      const int pb = rs.node_pos[v];
      const auto& rv = rs.routes[rb];
      const int mb = static_cast<int>(rv.size());
      if (rb != ra) {
        const int gu = inst.demands[u], gv = inst.demands[v];
        if (rs.route_load[ra] - gu + gv > rs.capacity) continue;
        if (rs.route_load[rb] - gv + gu > rs.capacity) continue;
      }
      if (ra == rb && (pb == pa + 1 || pa == pb + 1)) {
        // Adjacent within one route.
        const int px = pa < pb ? pa : pb;
        const NodeId x = ru[px], y = ru[px + 1];
        const NodeId left = px > 0 ? ru[px - 1] : kDepot;
        const NodeId right = px + 2 < ma ? ru[px + 2] : kDepot;
        const double delta = inst.dist(left, y) + inst.dist(x, right) - inst.dist(left, x) -
                             inst.dist(y, right);
        double delta_aug = delta;
        if (pen.active)
          delta_aug +=
              pen.lambda * (pen(left, y) + pen(x, right) - pen(left, x) - pen(y, right));
        acc.offer(Move{MoveKind::Swap, ra, rb, pa, pb, 0, delta, delta_aug, sol.generation});
        continue;
      }
      const NodeId pu = pa > 0 ? ru[pa - 1] : kDepot;
      const NodeId su = pa + 1 < ma ? ru[pa + 1] : kDepot;
      const NodeId pv = pb > 0 ? rv[pb - 1] : kDepot;
      const NodeId sv = pb + 1 < mb ? rv[pb + 1] : kDepot;
      const double delta = inst.dist(pu, v) + inst.dist(v, su) + inst.dist(pv, u) +
                           inst.dist(u, sv) - inst.dist(pu, u) - inst.dist(u, su) -
                           inst.dist(pv, v) - inst.dist(v, sv);
      double delta_aug = delta;
      if (pen.active) {
        // Per-side penalty deltas; a singleton route keeps one depot-leg
        // feature through the exchange instead of two legs.
        double dp = 0.0;
        if (ma == 1) {
          dp += pen(kDepot, v) - pen(kDepot, u);
        } else {
          dp += pen(pu, v) + pen(v, su) - pen(pu, u) - pen(u, su);
        }
        if (mb == 1) {
          dp += pen(kDepot, u) - pen(kDepot, v);
        } else {
          dp += pen(pv, u) + pen(u, sv) - pen(pv, v) - pen(v, sv);
        }
        delta_aug += pen.lambda * dp;
      }
      acc.offer(Move{MoveKind::Swap, ra, rb, pa, pb, 0, delta, delta_aug, sol.generation});
    }
  }
  return acc.best;
}

// ---------------------------------------------------------------------------
// Three-node permutation

namespace detail {

template <typename AtFn, typename OfferFn>
inline void eval_three_perm_window(const RoutingInstance& inst, const PenaltyView& pen,
                                   const AtFn& at, int w, const OfferFn& offer) {
  const NodeId a = at(w - 1);
  const NodeId x = at(w), y = at(w + 1), z = at(w + 2);
  const NodeId b = at(w + 3);
  const NodeId win[3] = {x, y, z};
  const double base_true = inst.dist(a, x) + inst.dist(x, y) + inst.dist(y, z) + inst.dist(z, b);
  const double base_pen =
      pen.active ? pen(a, x) + pen(x, y) + pen(y, z) + pen(z, b) : 0.0;
  for (int code = 0; code < 5; ++code) {
    const NodeId q0 = win[kPerm3[code][0]];
    const NodeId q1 = win[kPerm3[code][1]];
    const NodeId q2 = win[kPerm3[code][2]];
    const double delta = inst.dist(a, q0) + inst.dist(q0, q1) + inst.dist(q1, q2) +
                         inst.dist(q2, b) - base_true;
    double delta_aug = delta;
    if (pen.active)
      delta_aug += pen.lambda *
                   (pen(a, q0) + pen(q0, q1) + pen(q1, q2) + pen(q2, b) - base_pen);
    offer(w, code, delta, delta_aug);
  }
}

}  // namespace detail

inline std::optional<Move> three_perm_best(const Solution& sol, const EvalContext& ctx) {
  detail::check_context(sol, ctx);
  const RoutingInstance& inst = *ctx.inst;
  const detail::PenaltyView pen(ctx.penalties);
  detail::MoveAccumulator acc;

  if (sol.kind == Kind::TSP) {
    const Tour& t = sol.tour();
    const int n = static_cast<int>(t.order.size());
    if (n < 4) return std::nullopt;
    auto at = [&](int p) -> NodeId { return t.order[((p % n) + n) % n]; };
    for (int w = 0; w < n; ++w) {
      detail::eval_three_perm_window(inst, pen, at, w,
                                     [&](int ww, int code, double delta, double delta_aug) {
                                       acc.offer(Move{MoveKind::ThreePerm, -1, -1, ww, 0, code,
                                                      delta, delta_aug, sol.generation});
                                     });
    }
    return acc.best;
  }

  const RouteSet& rs = sol.routes();
  for (int r = 0; r < static_cast<int>(rs.routes.size()); ++r) {
    const auto& route = rs.routes[r];
    const int m = static_cast<int>(route.size());
    if (m < 3) continue;
    auto at = [&](int p) -> NodeId { return (p < 0 || p >= m) ? kDepot : route[p]; };
    for (int w = 0; w + 2 < m; ++w) {
      detail::eval_three_perm_window(inst, pen, at, w,
                                     [&](int ww, int code, double delta, double delta_aug) {
                                       acc.offer(Move{MoveKind::ThreePerm, r, r, ww, 0, code,
                                                      delta, delta_aug, sol.generation});
                                     });
    }
  }
  return acc.best;
}

// ---------------------------------------------------------------------------
// Application

namespace detail {

inline void tour_refresh_positions(Tour& t, int lo, int hi) {
  for (int i = lo; i <= hi; ++i) t.pos[t.order[i]] = i;
}

inline void apply_two_opt_tsp(Tour& t, int a, int b) {
  const int n = static_cast<int>(t.order.size());
  const int seg = b - a;
  if (2 * seg <= n) {
    std::reverse(t.order.begin() + a + 1, t.order.begin() + b + 1);
    tour_refresh_positions(t, a + 1, b);
  } else {
    // Reverse the complementary arc; same cyclic tour, fewer swaps.
    int lo = b + 1, hi = a + n;
    while (lo < hi) {
      std::swap(t.order[lo % n], t.order[hi % n]);
      t.pos[t.order[lo % n]] = lo % n;
      t.pos[t.order[hi % n]] = hi % n;
      ++lo;
      --hi;
    }
    if (lo == hi) t.pos[t.order[lo % n]] = lo % n;
  }
}

inline void route_refresh_positions(RouteSet& rs, int r, int from) {
  auto& route = rs.routes[r];
  for (int i = from; i < static_cast<int>(route.size()); ++i) {
    rs.node_route[route[i]] = r;
    rs.node_pos[route[i]] = i;
  }
}

}  // namespace detail

inline void apply_move(Solution& sol, const Move& m) {
  if (m.generation != sol.generation)
    throw StaleMove("apply_move: move generation " + std::to_string(m.generation) +
                    " does not match solution generation " + std::to_string(sol.generation));

  if (sol.kind == Kind::TSP) {
    Tour& t = sol.tour();
    const int n = static_cast<int>(t.order.size());
    switch (m.op) {
      case MoveKind::TwoOpt:
        detail::apply_two_opt_tsp(t, m.a, m.b);
        break;
      case MoveKind::Relocate: {
        const NodeId u = t.order[m.a];
        t.order.erase(t.order.begin() + m.a);
        const int slot = m.b - (m.b > m.a ? 1 : 0);
        t.order.insert(t.order.begin() + slot, u);
        detail::tour_refresh_positions(t, std::min(m.a, slot), std::max(m.a, slot));
        break;
      }
      case MoveKind::Swap: {
        std::swap(t.order[m.a], t.order[m.b]);
        t.pos[t.order[m.a]] = m.a;
        t.pos[t.order[m.b]] = m.b;
        break;
      }
      case MoveKind::ThreePerm: {
        const NodeId x = t.order[m.a % n];
        const NodeId y = t.order[(m.a + 1) % n];
        const NodeId z = t.order[(m.a + 2) % n];
        const NodeId win[3] = {x, y, z};
        for (int i = 0; i < 3; ++i) {
          const int p = (m.a + i) % n;
          t.order[p] = win[kPerm3[m.c][i]];
          t.pos[t.order[p]] = p;
        }
        break;
      }
    }
    t.cached_cost += m.delta_true;
    ++sol.generation;
    return;
  }

  RouteSet& rs = sol.routes();
  switch (m.op) {
    case MoveKind::TwoOpt: {
      auto& route = rs.routes[m.route_a];
      std::reverse(route.begin() + m.a + 1, route.begin() + m.b + 1);
      for (int i = m.a + 1; i <= m.b; ++i) rs.node_pos[route[i]] = i;
      break;
    }
    case MoveKind::Relocate: {
      auto& src = rs.routes[m.route_a];
      const NodeId u = src[m.a];
      src.erase(src.begin() + m.a);
      const int slot = (m.route_a == m.route_b && m.b > m.a) ? m.b - 1 : m.b;
      auto& dst = rs.routes[m.route_b];
      dst.insert(dst.begin() + slot, u);
      if (m.route_a == m.route_b) {
        detail::route_refresh_positions(rs, m.route_a, std::min(m.a, slot));
      } else {
        detail::route_refresh_positions(rs, m.route_a, m.a);
        detail::route_refresh_positions(rs, m.route_b, slot);
        rs.route_load[m.route_a] -= rs.demands[u];
        rs.route_load[m.route_b] += rs.demands[u];
      }
      break;
    }
    case MoveKind::Swap: {
      auto& ru = rs.routes[m.route_a];
      auto& rv = rs.routes[m.route_b];
      std::swap(ru[m.a], rv[m.b]);
      rs.node_route[ru[m.a]] = m.route_a;
      rs.node_pos[ru[m.a]] = m.a;
      rs.node_route[rv[m.b]] = m.route_b;
      rs.node_pos[rv[m.b]] = m.b;
      if (m.route_a != m.route_b) {
        const int shift = rs.demands[ru[m.a]] - rs.demands[rv[m.b]];
        rs.route_load[m.route_a] += shift;
        rs.route_load[m.route_b] -= shift;
      }
      break;
    }
    case MoveKind::ThreePerm: {
      auto& route = rs.routes[m.route_a];
      const NodeId win[3] = {route[m.a], route[m.a + 1], route[m.a + 2]};
      for (int i = 0; i < 3; ++i) {
        route[m.a + i] = win[kPerm3[m.c][i]];
        rs.node_pos[route[m.a + i]] = m.a + i;
      }
      break;
    }
  }
  rs.cached_cost += m.delta_true;
  ++sol.generation;
}

}  // namespace l2gls
