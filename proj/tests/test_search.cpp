#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>

#include "l2gls/l2gls.hpp"
#include "oracles.hpp"

using namespace l2gls;

namespace {

SearchConfig small_config(int steps) {
  SearchConfig cfg;
  cfg.max_steps = steps;
  cfg.early_exit_phases = 0;  // run the full budget unless a test says otherwise
  return cfg;
}

}  // namespace

TEST_CASE("variant catalogs expose the advertised operators") {
  const auto full = action_catalog(Variant::L2GLS);
  REQUIRE(full.size() == 4);
  CHECK(full[0] == MoveKind::TwoOpt);
  CHECK(full[1] == MoveKind::Relocate);
  CHECK(full[2] == MoveKind::Swap);
  CHECK(full[3] == MoveKind::ThreePerm);
  CHECK(action_catalog(Variant::NoPenalty) == full);

  const auto no_three = action_catalog(Variant::L2GLS2);
  REQUIRE(no_three.size() == 3);
  CHECK(std::find(no_three.begin(), no_three.end(), MoveKind::ThreePerm) == no_three.end());

  const auto no_reloc = action_catalog(Variant::L2GLS3);
  REQUIRE(no_reloc.size() == 3);
  CHECK(std::find(no_reloc.begin(), no_reloc.end(), MoveKind::Relocate) == no_reloc.end());

  CHECK(std::string(variant_name(Variant::L2GLS)) == "L2GLS");
  CHECK(std::string(variant_name(Variant::L2GLS2)) == "L2GLS2");
  CHECK(std::string(variant_name(Variant::L2GLS3)) == "L2GLS3");
  CHECK(std::string(variant_name(Variant::NoPenalty)) == "NO_PENALTY");
}

TEST_CASE("config validation rejects bad values") {
  SearchConfig cfg;
  CHECK_NOTHROW(cfg.check());
  cfg.max_steps = 0;
  CHECK_THROWS_AS(cfg.check(), std::invalid_argument);
  cfg = SearchConfig{};
  cfg.stall_threshold = 0;
  CHECK_THROWS_AS(cfg.check(), std::invalid_argument);
  cfg = SearchConfig{};
  cfg.epsilon = 1.5;
  CHECK_THROWS_AS(cfg.check(), std::invalid_argument);
  cfg = SearchConfig{};
  cfg.lambda = -0.1;
  CHECK_THROWS_AS(cfg.check(), std::invalid_argument);
  cfg = SearchConfig{};
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(cfg.check(), std::invalid_argument);
  cfg = SearchConfig{};
  cfg.candidate_k = -2;
  CHECK_THROWS_AS(cfg.check(), std::invalid_argument);
  cfg = SearchConfig{};
  cfg.early_exit_phases = -1;
  CHECK_THROWS_AS(cfg.check(), std::invalid_argument);
  cfg = SearchConfig{};
  cfg.time_limit_seconds = 0.0;
  CHECK_THROWS_AS(cfg.check(), std::invalid_argument);
}

TEST_CASE("detect_local_min compares the stall counter to the threshold") {
  CHECK_FALSE(detect_local_min(0, 6));
  CHECK_FALSE(detect_local_min(5, 6));
  CHECK(detect_local_min(6, 6));
  CHECK(detect_local_min(7, 6));
}

TEST_CASE("search improves a TSP instance and reports consistently") {
  const RoutingInstance inst = generate_uniform_tsp(30, 71);
  SearchConfig cfg = small_config(2000);
  SplitMix64 rng(1);
  const SearchResult r = solve(inst, cfg, nullptr, rng);

  CHECK(r.best_cost < r.initial_cost);
  CHECK(r.steps == 2000);
  CHECK(r.penalty_count > 0);
  CHECK_FALSE(r.early_exit);
  CHECK_FALSE(r.hit_time_limit);
  CHECK(validate(inst, r.best).empty());
  CHECK(r.best_cost == Catch::Approx(recompute_cost(inst, r.best)));
  // Penalty events are recorded even without trace collection.
  long penalty_events = 0;
  for (const auto& ev : r.events)
    if (ev.type == SearchEvent::Type::Penalty) ++penalty_events;
  CHECK(penalty_events == r.penalty_count);
  for (const auto& ev : r.events) {
    if (ev.type == SearchEvent::Type::Penalty) CHECK_FALSE(ev.penalized.empty());
  }
}

TEST_CASE("search improves a CVRP instance") {
  CvrpGenSpec spec;
  spec.num_customers = 20;
  spec.capacity = 20;
  spec.seed = 5;
  const RoutingInstance inst = generate_cvrp(spec);
  SearchConfig cfg = small_config(2000);
  SplitMix64 rng(2);
  const SearchResult r = solve(inst, cfg, nullptr, rng);
  CHECK(r.best_cost < r.initial_cost);
  CHECK(validate(inst, r.best).empty());
  // Search compacts away any routes relocation emptied.
  for (const auto& route : r.best.routes().routes) CHECK_FALSE(route.empty());
  CHECK(r.best_cost == Catch::Approx(recompute_cost(inst, r.best)));
}

TEST_CASE("identical seeds give identical runs") {
  const RoutingInstance inst = generate_uniform_tsp(25, 4);
  SearchConfig cfg = small_config(1500);
  cfg.collect_trace = true;

  SplitMix64 r1(9), r2(9), r3(10);
  const SearchResult a = solve(inst, cfg, nullptr, r1);
  const SearchResult b = solve(inst, cfg, nullptr, r2);
  const SearchResult c = solve(inst, cfg, nullptr, r3);

  CHECK(a.best_cost == b.best_cost);
  CHECK(a.trace == b.trace);
  CHECK(a.best.tour().order == b.best.tour().order);
  CHECK(a.penalty_count == b.penalty_count);
  // A different stream should explore differently.
  CHECK((a.best_cost != c.best_cost || a.trace != c.trace));
}

TEST_CASE("the best-cost trace never increases") {
  const RoutingInstance inst = generate_uniform_tsp(35, 13);
  SearchConfig cfg = small_config(3000);
  cfg.collect_trace = true;
  cfg.trace_stride = 10;
  SplitMix64 rng(3);
  const SearchResult r = solve(inst, cfg, nullptr, rng);
  REQUIRE_FALSE(r.trace.empty());
  double prev_best = std::numeric_limits<double>::infinity();
  for (const auto& [step, cur, best] : r.trace) {
    CHECK(best <= prev_best + 1e-12);
    CHECK(cur >= best - 1e-9);
    prev_best = best;
  }
  // Final trace best matches the reported best.
  CHECK(std::get<2>(r.trace.back()) == Catch::Approx(r.best_cost));
}

TEST_CASE("NoPenalty never penalizes") {
  const RoutingInstance inst = generate_uniform_tsp(20, 8);
  SearchConfig cfg = small_config(1500);
  cfg.variant = Variant::NoPenalty;
  SplitMix64 rng(4);
  const SearchResult r = solve(inst, cfg, nullptr, rng);
  CHECK(r.penalty_count == 0);
  CHECK(r.events.empty());
  CHECK(r.best_cost < r.initial_cost);
}

TEST_CASE("reduced variants never touch their dropped operator") {
  const RoutingInstance inst = generate_uniform_tsp(20, 12);
  SearchConfig cfg = small_config(1200);
  cfg.collect_trace = true;

  cfg.variant = Variant::L2GLS2;
  SplitMix64 r1(6);
  const SearchResult no_three = solve(inst, cfg, nullptr, r1);
  for (const auto& ev : no_three.events) {
    if (ev.type == SearchEvent::Type::Action) CHECK(ev.op != MoveKind::ThreePerm);
  }

  cfg.variant = Variant::L2GLS3;
  SplitMix64 r2(6);
  const SearchResult no_reloc = solve(inst, cfg, nullptr, r2);
  for (const auto& ev : no_reloc.events) {
    if (ev.type == SearchEvent::Type::Action) CHECK(ev.op != MoveKind::Relocate);
  }
}

TEST_CASE("early exit stops stagnant runs and can be disabled") {
  const RoutingInstance inst = generate_uniform_tsp(12, 3);
  SearchConfig cfg;
  cfg.max_steps = 50000;
  cfg.early_exit_phases = 3;
  SplitMix64 rng(7);
  const SearchResult r = solve(inst, cfg, nullptr, rng);
  // A 12-node instance is solved long before 50000 steps; three stagnant
  // phases then cut the run short.
  CHECK(r.early_exit);
  CHECK(r.steps < 50000);

  SearchConfig full = small_config(3000);
  SplitMix64 rng2(7);
  const SearchResult f = solve(inst, full, nullptr, rng2);
  CHECK_FALSE(f.early_exit);
  CHECK(f.steps == 3000);
}

TEST_CASE("time limits cut runs short") {
  const RoutingInstance inst = generate_uniform_tsp(60, 19);
  SearchConfig cfg = small_config(50'000'000);
  cfg.time_limit_seconds = 0.05;
  SplitMix64 rng(8);
  const SearchResult r = solve(inst, cfg, nullptr, rng);
  CHECK(r.hit_time_limit);
  CHECK(r.steps < 50'000'000);
  CHECK(r.wall_seconds < 5.0);
  CHECK(validate(inst, r.best).empty());
}

TEST_CASE("instances outside the unit square are normalized transparently") {
  // The same geometry at two scales must explore identically and report
  // costs on the original scale.
  const RoutingInstance unit = generate_uniform_tsp(18, 33);
  RoutingInstance big = unit;
  big.name = "scaled";
  for (Point& p : big.coords) {
    p.x = p.x * 1000.0 + 500.0;
    p.y = p.y * 1000.0 + 500.0;
  }
  REQUIRE(needs_normalization(big));

  SearchConfig cfg = small_config(1500);
  SplitMix64 r1(5), r2(5);
  const SearchResult small = solve(unit, cfg, nullptr, r1);
  const SearchResult scaled = solve(big, cfg, nullptr, r2);

  CHECK(validate(big, scaled.best).empty());
  CHECK(scaled.best_cost == Catch::Approx(recompute_cost(big, scaled.best)));
  // Same geometry modulo the 1000x stretch: a correct scale mapping puts the
  // ratio at 1000, a broken one lands near 1 or near 10^6.
  const double ratio = scaled.best_cost / small.best_cost;
  CHECK(ratio == Catch::Approx(1000.0).epsilon(0.02));
}

TEST_CASE("rounded-distance instances report exact integer costs") {
  RoutingInstance inst;
  inst.kind = Kind::TSP;
  inst.name = "grid";
  inst.distance_mode = DistanceMode::EuclidRounded;
  SplitMix64 coord_rng(77);
  inst.coords.resize(25);
  for (Point& p : inst.coords) {
    p.x = coord_rng.next_int(0, 1000);
    p.y = coord_rng.next_int(0, 1000);
  }
  REQUIRE(needs_normalization(inst));

  SearchConfig cfg = small_config(2500);
  SplitMix64 rng(6);
  const SearchResult r = solve(inst, cfg, nullptr, rng);
  CHECK(validate(inst, r.best).empty());
  // The search worked on real-valued normalized distances, but the reported
  // best cost is recomputed under the instance's own rounded metric.
  CHECK(r.best_cost == std::floor(r.best_cost));
  CHECK(r.best_cost == Catch::Approx(recompute_cost(inst, r.best)));
}

TEST_CASE("a policy can drive the search end to end") {
  const RoutingInstance inst = generate_uniform_tsp(15, 21);
  Policy policy(default_policy_dims(Kind::TSP, 4), 3);
  SearchConfig cfg = small_config(600);
  SplitMix64 rng(10);
  const SearchResult r = solve(inst, cfg, &policy, rng);
  CHECK(r.best_cost < r.initial_cost);
  CHECK(validate(inst, r.best).empty());

  SplitMix64 rng2(10);
  const SearchResult again = solve(inst, cfg, &policy, rng2);
  CHECK(again.best_cost == r.best_cost);
}

TEST_CASE("mismatched policies are rejected up front") {
  const RoutingInstance inst = generate_uniform_tsp(12, 2);
  SearchConfig cfg = small_config(100);
  SplitMix64 rng(1);

  Policy wrong_actions(default_policy_dims(Kind::TSP, 3), 1);
  CHECK_THROWS_AS(solve(inst, cfg, &wrong_actions, rng), std::invalid_argument);

  Policy wrong_kind(default_policy_dims(Kind::CVRP, 4), 1);
  CHECK_THROWS_AS(solve(inst, cfg, &wrong_kind, rng), std::invalid_argument);

  cfg.variant = Variant::L2GLS2;
  Policy three_actions(default_policy_dims(Kind::TSP, 3), 1);
  CHECK_NOTHROW(solve(inst, cfg, &three_actions, rng));
}

TEST_CASE("run_variant overrides the configured variant") {
  const RoutingInstance inst = generate_uniform_tsp(15, 44);
  SearchConfig cfg = small_config(800);
  cfg.variant = Variant::L2GLS;
  SplitMix64 rng(2);
  const SearchResult r = run_variant(Variant::NoPenalty, inst, cfg, nullptr, rng);
  CHECK(r.penalty_count == 0);
}

TEST_CASE("training runs episodes and returns a usable policy") {
  SearchConfig cfg = small_config(300);
  std::vector<double> costs;
  const Policy policy = train(Kind::TSP, 10, cfg, 3, 12345, &costs);
  REQUIRE(costs.size() == 3);
  for (double c : costs) CHECK(c > 0.0);
  CHECK(policy.dims().input_dim == 9);
  CHECK(policy.adam_step() > 0);  // at least one phase update happened

  // The trained policy drives a fresh search without complaint.
  const RoutingInstance inst = generate_uniform_tsp(10, 999);
  SplitMix64 rng(5);
  const SearchResult r = solve(inst, cfg, &policy, rng);
  CHECK(validate(inst, r.best).empty());

  // Training is reproducible from the master seed.
  std::vector<double> costs2;
  const Policy policy2 = train(Kind::TSP, 10, cfg, 3, 12345, &costs2);
  CHECK(costs == costs2);
  CHECK(policy.params() == policy2.params());

  CHECK_THROWS_AS(train(Kind::TSP, 10, cfg, 0, 1), std::invalid_argument);
}

TEST_CASE("training works on CVRP too") {
  SearchConfig cfg = small_config(250);
  cfg.reward = RewardKind::Binary;
  std::vector<double> costs;
  const Policy policy = train(Kind::CVRP, 8, cfg, 2, 777, &costs);
  CHECK(costs.size() == 2);
  CHECK(policy.dims().input_dim == 11);
}
