#pragma once

// The guided local search driver.
//
// Each step selects one operator (by the policy when one is given, uniformly
// at random otherwise), applies that operator's best augmented-cost
// improving move if one exists, and tracks a stall counter on the true
// cost. Once the counter reaches the stall threshold the current solution
// is declared a local minimum of the augmented objective: the maximum
// utility edges get penalized (except in the NoPenalty ablation) and a new
// improvement phase begins. When training, the actions of the finished
// phase form one REINFORCE trajectory.

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "l2gls/candidate_lists.hpp"
#include "l2gls/errors.hpp"
#include "l2gls/gls.hpp"
#include "l2gls/instance.hpp"
#include "l2gls/operators.hpp"
#include "l2gls/policy.hpp"
#include "l2gls/rng.hpp"
#include "l2gls/solution.hpp"

namespace l2gls {

// L2GLS2 drops the three-node permutation operator; L2GLS3 drops relocate;
// NoPenalty keeps all four operators but never penalizes.
enum class Variant { L2GLS, L2GLS2, L2GLS3, NoPenalty };

enum class RewardKind { Binary, Advantage };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::L2GLS: return "L2GLS";
    case Variant::L2GLS2: return "L2GLS2";
    case Variant::L2GLS3: return "L2GLS3";
    case Variant::NoPenalty: return "NO_PENALTY";
  }
  return "?";
}

inline std::vector<MoveKind> action_catalog(Variant v) {
  switch (v) {
    case Variant::L2GLS:
    case Variant::NoPenalty:
      return {MoveKind::TwoOpt, MoveKind::Relocate, MoveKind::Swap, MoveKind::ThreePerm};
    case Variant::L2GLS2:
      return {MoveKind::TwoOpt, MoveKind::Relocate, MoveKind::Swap};
    case Variant::L2GLS3:
      return {MoveKind::TwoOpt, MoveKind::Swap, MoveKind::ThreePerm};
  }
  throw std::invalid_argument("unknown variant");
}

struct SearchConfig {
  int max_steps = 40000;
  int stall_threshold = 6;   // steps without true-cost improvement
  double epsilon = 0.05;     // exploration rate of action sampling
  double lambda = 0.3;       // penalty weight in the augmented objective
  double learning_rate = 0.001;
  Variant variant = Variant::L2GLS;
  RewardKind reward = RewardKind::Advantage;
  int candidate_k = 0;       // 0: N-1 for N <= 20, else 10
  // Stop after this many consecutive penalty phases without a new best
  // solution; 0 disables the early exit.
  int early_exit_phases = 5;
  std::optional<double> time_limit_seconds;
  bool collect_trace = false;
  int trace_stride = 0;      // 0: max_steps / 1000

  void check() const {
    if (max_steps < 1) throw std::invalid_argument("config: max_steps must be >= 1");
    if (stall_threshold < 1) throw std::invalid_argument("config: stall_threshold must be >= 1");
    if (!(epsilon >= 0.0 && epsilon <= 1.0))
      throw std::invalid_argument("config: epsilon must be in [0, 1]");
    if (!(lambda >= 0.0)) throw std::invalid_argument("config: lambda must be >= 0");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("config: learning_rate must be > 0");
    if (candidate_k < 0) throw std::invalid_argument("config: candidate_k must be >= 0");
    if (early_exit_phases < 0)
      throw std::invalid_argument("config: early_exit_phases must be >= 0");
    if (time_limit_seconds && !(*time_limit_seconds > 0.0))
      throw std::invalid_argument("config: time limit must be positive");
  }
};

struct SearchEvent {
  enum class Type { Action, Penalty };
  Type type = Type::Action;
  long step = 0;
  int action = -1;               // catalog index (Action events)
  MoveKind op = MoveKind::TwoOpt;
  bool applied = false;          // an improving move existed and was taken
  double delta_true = 0.0;
  double cost_after = 0.0;       // true cost, reported scale
  std::vector<std::pair<NodeId, NodeId>> penalized;  // Penalty events
};

struct SearchResult {
  Solution best;
  double best_cost = 0.0;     // true cost on the original instance
  double initial_cost = 0.0;  // reported scale
  long steps = 0;
  long penalty_count = 0;
  double wall_seconds = 0.0;
  bool hit_time_limit = false;
  bool early_exit = false;
  // (step, current true cost, best true cost), reported scale; populated
  // when collect_trace is set.
  std::vector<std::tuple<long, double, double>> trace;
  // Penalty events are always recorded; per-step action events only when
  // collect_trace is set.
  std::vector<SearchEvent> events;
};

inline bool detect_local_min(int stall_count, int stall_threshold) {
  return stall_count >= stall_threshold;
}

namespace detail {

struct TrainingHooks {
  RewardKind reward = RewardKind::Advantage;
  double learning_rate = 0.001;
  Policy* policy = nullptr;
  Trajectory traj;
};

// Ends an improvement phase: assigns rewards, performs one REINFORCE step.
// The advantage reward is already measured relative to the phase start, so
// its baseline is zero; binary rewards are centered on their batch mean.
inline void finalize_phase(TrainingHooks& hooks, double phase_first_cost,
                           double phase_final_cost) {
  if (hooks.traj.empty()) return;
  double baseline = 0.0;
  if (hooks.reward == RewardKind::Advantage) {
    const double adv = reward_advantage(phase_first_cost, phase_final_cost);
    for (TrajectorySample& s : hooks.traj) s.reward = adv;
  } else {
    double sum = 0.0;
    for (const TrajectorySample& s : hooks.traj) sum += s.reward;
    baseline = sum / static_cast<double>(hooks.traj.size());
  }
  reinforce_update(*hooks.policy, hooks.traj, baseline, hooks.learning_rate);
  hooks.traj.clear();
}

inline std::optional<Move> best_move_for(MoveKind kind, const Solution& sol,
                                         const EvalContext& ctx) {
  switch (kind) {
    case MoveKind::TwoOpt: return two_opt_best(sol, ctx);
    case MoveKind::Relocate: return relocate_best(sol, ctx);
    case MoveKind::Swap: return swap_best(sol, ctx);
    case MoveKind::ThreePerm: return three_perm_best(sol, ctx);
  }
  throw std::invalid_argument("unknown operator");
}

inline SearchResult solve_impl(const RoutingInstance& original, const SearchConfig& cfg,
                               const Policy* policy, SplitMix64& rng, TrainingHooks* hooks) {
  cfg.check();
  check_instance(original);

  RoutingInstance normalized_storage;
  const RoutingInstance* work = &original;
  if (needs_normalization(original)) {
    normalized_storage = normalize(original);
    work = &normalized_storage;
  }
  // Maps working-scale costs to the original coordinate scale for reporting.
  const double report_scale = work == &original ? 1.0 : work->scale / original.scale;

  const int n = work->size();
  int k = cfg.candidate_k != 0 ? cfg.candidate_k : (n <= 20 ? n - 1 : 10);
  k = std::min(k, n - 1);
  CandidateLists cand = build_candidate_lists(*work, k);
  PenaltyState penalties(cfg.lambda);
  const EvalContext ctx{work, &penalties, &cand};

  const std::vector<MoveKind> catalog = action_catalog(cfg.variant);
  if (policy != nullptr) {
    if (policy->dims().num_actions != static_cast<int>(catalog.size()))
      throw std::invalid_argument("policy was built for " +
                                  std::to_string(policy->dims().num_actions) +
                                  " actions but the variant has " +
                                  std::to_string(catalog.size()));
    if (policy->dims().input_dim != feature_dim(work->kind))
      throw std::invalid_argument("policy input dimension does not match the problem kind");
  }
  if (hooks != nullptr && policy == nullptr)
    throw std::invalid_argument("training requires a policy");

  Solution sol = initial_solution(*work, rng.next_u64());
  double cur = sol.cached_cost();

  SearchResult res;
  res.initial_cost = cur * report_scale;
  Solution best = sol;
  double best_work_cost = cur;

  ActionHistory history(policy != nullptr ? policy->dims().history_len : 0);
  const int num_actions = static_cast<int>(catalog.size());
  const int stride = cfg.trace_stride > 0 ? cfg.trace_stride : std::max(1, cfg.max_steps / 1000);

  int stall = 0;
  double phase_first_cost = cur;
  bool phase_found_best = false;
  int phases_without_best = 0;

  const auto started = std::chrono::steady_clock::now();
  auto elapsed = [&]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  };

  long step = 0;
  while (step < cfg.max_steps) {
    if (cfg.time_limit_seconds && (step & 31) == 0 && elapsed() >= *cfg.time_limit_seconds) {
      res.hit_time_limit = true;
      break;
    }
    ++step;

    int action;
    StateFeatures feats;
    double logprob = 0.0;
    if (policy != nullptr) {
      feats = extract_features(*work, sol, history.encode(num_actions));
      const std::vector<double> probs = policy->forward(feats);
      action = sample_action(probs, cfg.epsilon, rng);
      logprob = std::log(probs[action]);
    } else {
      action = rng.next_int(0, num_actions - 1);
    }

    const std::optional<Move> move = detail::best_move_for(catalog[action], sol, ctx);
    const double prev = cur;
    if (move) {
      apply_move(sol, *move);
      cur = sol.cached_cost();
    }
    const bool reduced = cur < prev - 1e-9;
    history.record(action, reduced ? 1 : -1);

    if (hooks != nullptr) {
      TrajectorySample s;
      s.state = std::move(feats);
      s.action = action;
      s.logprob = logprob;
      if (hooks->reward == RewardKind::Binary) s.reward = reward_binary(prev, cur);
      hooks->traj.push_back(std::move(s));
    }

    if (cur < best_work_cost - 1e-9) {
      best_work_cost = cur;
      best = sol;
      phase_found_best = true;
    }
    stall = reduced ? 0 : stall + 1;

    if (cfg.collect_trace) {
      SearchEvent ev;
      ev.type = SearchEvent::Type::Action;
      ev.step = step;
      ev.action = action;
      ev.op = catalog[action];
      ev.applied = move.has_value();
      ev.delta_true = move ? move->delta_true * report_scale : 0.0;
      ev.cost_after = cur * report_scale;
      res.events.push_back(std::move(ev));
      if (step % stride == 0 || step == cfg.max_steps)
        res.trace.emplace_back(step, cur * report_scale, best_work_cost * report_scale);
    }

    if (detect_local_min(stall, cfg.stall_threshold)) {
      if (cfg.variant != Variant::NoPenalty) {
        const std::vector<Feature> penalized = penalize(*work, sol, penalties);
        ++res.penalty_count;
        SearchEvent ev;
        ev.type = SearchEvent::Type::Penalty;
        ev.step = step;
        ev.cost_after = cur * report_scale;
        for (const Feature& f : penalized) ev.penalized.emplace_back(f.a, f.b);
        res.events.push_back(std::move(ev));
      }
      if (hooks != nullptr) finalize_phase(*hooks, phase_first_cost, cur);
      phases_without_best = phase_found_best ? 0 : phases_without_best + 1;
      phase_found_best = false;
      if (cfg.early_exit_phases > 0 && phases_without_best >= cfg.early_exit_phases) {
        res.early_exit = true;
        break;
      }
      phase_first_cost = cur;
      stall = 0;
    }
  }
  if (hooks != nullptr) finalize_phase(*hooks, phase_first_cost, cur);

  compact_routes(*work, best);
  const std::vector<Violation> violations = validate(*work, best);
  if (!violations.empty())
    throw std::logic_error("search produced an invalid solution: " +
                           detail::violations_to_string(violations));

  res.best_cost = recompute_cost(original, best);
  res.best = std::move(best);
  res.steps = step;
  res.wall_seconds = elapsed();
  return res;
}

}  // namespace detail

// Runs guided local search on one instance. `policy` may be null, in which
// case operators are chosen uniformly at random.
inline SearchResult solve(const RoutingInstance& inst, const SearchConfig& cfg,
                          const Policy* policy, SplitMix64& rng) {
  return detail::solve_impl(inst, cfg, policy, rng, nullptr);
}

inline SearchResult run_variant(Variant variant, const RoutingInstance& inst,
                                const SearchConfig& cfg, const Policy* policy, SplitMix64& rng) {
  SearchConfig c = cfg;
  c.variant = variant;
  return solve(inst, c, policy, rng);
}

// Trains a fresh policy by running the search on `episodes` generated
// instances of the given kind and size, applying one REINFORCE update per
// improvement phase. Returns the trained policy; per-episode best costs are
// appended to *episode_costs when provided.
inline Policy train(Kind kind, int num_nodes, const SearchConfig& cfg, int episodes,
                    std::uint64_t master_seed, std::vector<double>* episode_costs = nullptr) {
  cfg.check();
  if (episodes < 1) throw std::invalid_argument("train: episodes must be >= 1");
  const std::vector<MoveKind> catalog = action_catalog(cfg.variant);
  Policy policy(default_policy_dims(kind, static_cast<int>(catalog.size())),
                derive_seed(master_seed, 0));
  for (int ep = 0; ep < episodes; ++ep) {
    RoutingInstance inst;
    if (kind == Kind::TSP) {
      inst = generate_uniform_tsp(num_nodes, derive_seed(master_seed, 2 * ep + 1));
    } else {
      CvrpGenSpec gen;
      gen.num_customers = num_nodes;
      gen.capacity = default_cvrp_capacity(num_nodes);
      gen.seed = derive_seed(master_seed, 2 * ep + 1);
      inst = generate_cvrp(gen);
    }
    SplitMix64 rng(derive_seed(master_seed, 2 * ep + 2));
    detail::TrainingHooks hooks;
    hooks.reward = cfg.reward;
    hooks.learning_rate = cfg.learning_rate;
    hooks.policy = &policy;
    const SearchResult r = detail::solve_impl(inst, cfg, &policy, rng, &hooks);
    if (episode_costs != nullptr) episode_costs->push_back(r.best_cost);
  }
  return policy;
}

}  // namespace l2gls
