#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <optional>
#include <vector>

#include "l2gls/l2gls.hpp"
#include "oracles.hpp"

using namespace l2gls;

namespace {

constexpr MoveKind kAllOps[4] = {MoveKind::TwoOpt, MoveKind::Relocate, MoveKind::Swap,
                                 MoveKind::ThreePerm};

std::optional<Move> best_move(MoveKind kind, const Solution& sol, const EvalContext& ctx) {
  switch (kind) {
    case MoveKind::TwoOpt: return two_opt_best(sol, ctx);
    case MoveKind::Relocate: return relocate_best(sol, ctx);
    case MoveKind::Swap: return swap_best(sol, ctx);
    case MoveKind::ThreePerm: return three_perm_best(sol, ctx);
  }
  return std::nullopt;
}

// Sprinkles random penalties over node pairs, depot legs included.
void random_penalties(const RoutingInstance& inst, PenaltyState& ps, SplitMix64& rng,
                      int count) {
  for (int i = 0; i < count; ++i) {
    const NodeId a = static_cast<NodeId>(rng.next_int(0, inst.size() - 1));
    NodeId b = static_cast<NodeId>(rng.next_int(0, inst.size() - 1));
    if (a == b) b = (b + 1) % inst.size();
    ps.increment(a, b);
  }
}

void check_indexes(const RoutingInstance& inst, const Solution& sol) {
  if (sol.kind == Kind::TSP) {
    const Tour& t = sol.tour();
    for (int i = 0; i < static_cast<int>(t.order.size()); ++i) {
      REQUIRE(t.pos[t.order[i]] == i);
    }
    return;
  }
  const RouteSet& rs = sol.routes();
  for (int r = 0; r < static_cast<int>(rs.routes.size()); ++r) {
    int load = 0;
    for (int p = 0; p < static_cast<int>(rs.routes[r].size()); ++p) {
      const NodeId v = rs.routes[r][p];
      REQUIRE(rs.node_route[v] == r);
      REQUIRE(rs.node_pos[v] == p);
      load += inst.demands[v];
    }
    REQUIRE(rs.route_load[r] == load);
  }
}

RoutingInstance random_instance(SplitMix64& rng, bool cvrp) {
  if (!cvrp) return generate_uniform_tsp(rng.next_int(5, 30), rng.next_u64());
  CvrpGenSpec spec;
  spec.num_customers = rng.next_int(5, 25);
  // Tight capacity so short and singleton routes appear regularly.
  spec.capacity = rng.next_int(10, 30);
  spec.demand_lo = 1;
  spec.demand_hi = 9;
  spec.seed = rng.next_u64();
  return generate_cvrp(spec);
}

}  // namespace

TEST_CASE("applied moves match full recomputation under fuzz") {
  SplitMix64 rng(20260816);
  int applied = 0;
  for (int iter = 0; applied < 2000 && iter < 12000; ++iter) {
    const bool cvrp = rng.next_int(0, 1) == 1;
    const RoutingInstance inst = random_instance(rng, cvrp);
    Solution sol = initial_solution(inst, rng.next_u64());
    PenaltyState ps(0.3);
    if (rng.next_int(0, 2) > 0) random_penalties(inst, ps, rng, rng.next_int(1, 40));
    const int k = rng.next_int(1, inst.size() - 1);
    const CandidateLists cand = build_candidate_lists(inst, k);
    const EvalContext ctx{&inst, &ps, &cand};

    // Walk a few moves deep so moves hit non-initial structures too.
    for (int depth = 0; depth < 4 && applied < 2000; ++depth) {
      const MoveKind kind = kAllOps[rng.next_int(0, 3)];
      const auto move = best_move(kind, sol, ctx);
      if (!move) continue;

      REQUIRE(move->delta_aug < kImprovementThreshold);
      const double cost_before = recompute_cost(inst, sol);
      const double aug_before = oracle::augmented_cost(inst, sol, ps);
      apply_move(sol, *move);
      ++applied;

      const double cost_after = recompute_cost(inst, sol);
      const double aug_after = oracle::augmented_cost(inst, sol, ps);
      REQUIRE(std::abs((cost_after - cost_before) - move->delta_true) < 1e-9);
      REQUIRE(std::abs((aug_after - aug_before) - move->delta_aug) < 1e-9);
      REQUIRE(std::abs(sol.cached_cost() - cost_after) < 1e-9);
      REQUIRE(validate(inst, sol).empty());
      check_indexes(inst, sol);
    }
  }
  // The loop must have actually exercised the operators.
  REQUIRE(applied == 2000);
}

TEST_CASE("best move equals the exhaustive neighborhood optimum") {
  SplitMix64 rng(77);
  for (int iter = 0; iter < 60; ++iter) {
    const bool cvrp = iter % 2 == 1;
    RoutingInstance inst;
    if (cvrp) {
      CvrpGenSpec spec;
      spec.num_customers = rng.next_int(4, 9);
      spec.capacity = rng.next_int(10, 16);
      spec.seed = rng.next_u64();
      inst = generate_cvrp(spec);
    } else {
      inst = generate_uniform_tsp(rng.next_int(4, 9), rng.next_u64());
    }
    Solution sol = initial_solution(inst, rng.next_u64());
    PenaltyState ps(0.4);
    if (iter % 3 != 0) random_penalties(inst, ps, rng, rng.next_int(1, 15));
    const CandidateLists cand = build_candidate_lists(inst, inst.size() - 1);
    const EvalContext ctx{&inst, &ps, &cand};

    for (MoveKind kind : kAllOps) {
      const auto move = best_move(kind, sol, ctx);
      const double oracle_best = oracle::best_neighbor_delta(kind, inst, sol, ps);
      if (move) {
        INFO("op " << move_kind_name(kind) << " iter " << iter);
        CHECK(std::abs(move->delta_aug - oracle_best) < 1e-9);
      } else {
        INFO("op " << move_kind_name(kind) << " iter " << iter << " found nothing");
        CHECK(oracle_best >= -1.001e-9);
      }
    }
  }
}

TEST_CASE("two-opt untangles a collinear crossing by exactly 2") {
  // Four points on a line; visiting them as 0,2,1,3 walks the middle segment
  // twice extra. The 2-opt fix saves exactly 2.
  RoutingInstance inst;
  inst.kind = Kind::TSP;
  inst.coords = {{0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}, {3.0, 0.0}};
  const Solution sol = make_tour(inst, {0, 2, 1, 3});
  REQUIRE(sol.cached_cost() == 8.0);
  PenaltyState ps(0.3);
  const CandidateLists cand = build_candidate_lists(inst, 3);
  const auto move = two_opt_best(sol, EvalContext{&inst, &ps, &cand});
  REQUIRE(move.has_value());
  CHECK(move->delta_true == Catch::Approx(-2.0));
  Solution next = sol;
  apply_move(next, *move);
  CHECK(next.cached_cost() == Catch::Approx(6.0));
}

TEST_CASE("two-opt reverses the complementary arc when shorter") {
  // A long tour whose improving cut spans nearly the whole order: apply_move
  // must leave exactly the cyclic tour the evaluator priced.
  const RoutingInstance inst = generate_uniform_tsp(30, 555);
  Solution sol = initial_solution(inst, 3);
  Move m;
  m.op = MoveKind::TwoOpt;
  m.a = 1;
  m.b = 28;  // segment of 27 > n/2, complement arc is shorter
  m.generation = sol.generation;
  const auto& order = sol.tour().order;
  const NodeId x = order[1], sx = order[2], y = order[28], sy = order[29];
  m.delta_true = inst.dist(x, y) + inst.dist(sx, sy) - inst.dist(x, sx) - inst.dist(y, sy);
  m.delta_aug = m.delta_true;

  std::vector<NodeId> expect = order;
  std::reverse(expect.begin() + 2, expect.begin() + 29);
  apply_move(sol, m);
  REQUIRE(validate(inst, sol).empty());
  check_indexes(inst, sol);
  CHECK(std::abs(sol.cached_cost() - recompute_cost(inst, sol)) < 1e-9);

  // Same cyclic sequence (up to rotation/reflection already fixed by cost):
  // compare edge sets.
  const Solution ref = make_tour(inst, expect);
  CHECK(oracle::edge_set(sol) == oracle::edge_set(ref));
}

TEST_CASE("stale moves are rejected") {
  const RoutingInstance inst = generate_uniform_tsp(12, 9);
  Solution sol = initial_solution(inst, 1);
  PenaltyState ps(0.3);
  const CandidateLists cand = build_candidate_lists(inst, 11);
  const EvalContext ctx{&inst, &ps, &cand};
  const auto move = two_opt_best(sol, ctx);
  REQUIRE(move.has_value());
  apply_move(sol, *move);
  CHECK_THROWS_AS(apply_move(sol, *move), StaleMove);
}

TEST_CASE("operator scans are deterministic") {
  const RoutingInstance inst = generate_uniform_tsp(25, 14);
  const Solution sol = initial_solution(inst, 2);
  PenaltyState ps(0.3);
  SplitMix64 rng(5);
  random_penalties(inst, ps, rng, 10);
  const CandidateLists cand = build_candidate_lists(inst, 10);
  const EvalContext ctx{&inst, &ps, &cand};
  for (MoveKind kind : kAllOps) {
    const auto a = best_move(kind, sol, ctx);
    const auto b = best_move(kind, sol, ctx);
    REQUIRE(a.has_value() == b.has_value());
    if (a) {
      CHECK(a->a == b->a);
      CHECK(a->b == b->b);
      CHECK(a->c == b->c);
      CHECK(a->route_a == b->route_a);
      CHECK(a->route_b == b->route_b);
      CHECK(a->delta_aug == b->delta_aug);
    }
  }
}

TEST_CASE("tiny instances behave at the degenerate sizes") {
  const RoutingInstance inst = generate_uniform_tsp(3, 4);
  const Solution sol = initial_solution(inst, 1);
  PenaltyState ps(0.3);
  const CandidateLists cand = build_candidate_lists(inst, 2);
  const EvalContext ctx{&inst, &ps, &cand};
  // Any 3-node tour is optimal; relocate and 3-perm need n >= 4.
  CHECK_FALSE(relocate_best(sol, ctx).has_value());
  CHECK_FALSE(three_perm_best(sol, ctx).has_value());
  const auto two = two_opt_best(sol, ctx);
  if (two) CHECK(two->delta_aug < kImprovementThreshold);
  const auto sw = swap_best(sol, ctx);
  CHECK_FALSE(sw.has_value());  // every 3-cycle swap is a relabeling
}

TEST_CASE("candidate restriction never invents moves") {
  // With a small k the returned move must still be a genuine member of the
  // full neighborhood (checked by recomputation in the fuzz test); here we
  // verify the restricted best is never better than the unrestricted best.
  SplitMix64 rng(404);
  for (int iter = 0; iter < 20; ++iter) {
    const RoutingInstance inst = generate_uniform_tsp(15, rng.next_u64());
    const Solution sol = initial_solution(inst, rng.next_u64());
    PenaltyState ps(0.3);
    const CandidateLists small = build_candidate_lists(inst, 4);
    const CandidateLists full = build_candidate_lists(inst, 14);
    for (MoveKind kind : kAllOps) {
      const auto restricted = best_move(kind, sol, EvalContext{&inst, &ps, &small});
      const auto unrestricted = best_move(kind, sol, EvalContext{&inst, &ps, &full});
      if (restricted) {
        REQUIRE(unrestricted.has_value());
        CHECK(unrestricted->delta_aug <= restricted->delta_aug + 1e-12);
      }
    }
  }
}

TEST_CASE("evaluation context is validated") {
  const RoutingInstance inst = generate_uniform_tsp(6, 1);
  const Solution sol = initial_solution(inst, 1);
  PenaltyState ps(0.3);
  const CandidateLists cand = build_candidate_lists(inst, 5);
  CHECK_THROWS_AS(two_opt_best(sol, EvalContext{nullptr, &ps, &cand}), std::invalid_argument);
  CHECK_THROWS_AS(two_opt_best(sol, EvalContext{&inst, &ps, nullptr}), std::invalid_argument);

  CvrpGenSpec spec;
  spec.num_customers = 5;
  spec.capacity = 10;
  const RoutingInstance cv = generate_cvrp(spec);
  CHECK_THROWS_AS(two_opt_best(sol, EvalContext{&cv, &ps, &cand}), ValidationError);
}
