// Command-line front end: instance generation, solving, training,
// benchmarking and ablations.
//
// Every failure path prints a single machine-readable JSON error line to
// stderr and exits nonzero.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "l2gls/l2gls.hpp"

namespace {

using nlohmann::json;

struct CommonOptions {
  std::uint64_t seed = 1;
  int steps = 40000;
  int stall = 6;
  double epsilon = 0.05;
  double lambda = 0.3;
  double learning_rate = 0.001;
  std::string variant = "L2GLS";
  std::string reward = "advantage";
  int k = 0;
  int early_exit = 5;
  double time_limit = 0.0;
  std::string policy_path;
};

l2gls::Variant parse_variant(const std::string& name) {
  if (name == "L2GLS") return l2gls::Variant::L2GLS;
  if (name == "L2GLS2") return l2gls::Variant::L2GLS2;
  if (name == "L2GLS3") return l2gls::Variant::L2GLS3;
  if (name == "NO_PENALTY") return l2gls::Variant::NoPenalty;
  throw CLI::ValidationError("--variant", "unknown variant: " + name);
}

l2gls::SearchConfig make_config(const CommonOptions& opt) {
  l2gls::SearchConfig cfg;
  cfg.max_steps = opt.steps;
  cfg.stall_threshold = opt.stall;
  cfg.epsilon = opt.epsilon;
  cfg.lambda = opt.lambda;
  cfg.learning_rate = opt.learning_rate;
  cfg.variant = parse_variant(opt.variant);
  cfg.reward = opt.reward == "binary" ? l2gls::RewardKind::Binary
                                      : l2gls::RewardKind::Advantage;
  cfg.candidate_k = opt.k;
  cfg.early_exit_phases = opt.early_exit;
  if (opt.time_limit > 0.0) cfg.time_limit_seconds = opt.time_limit;
  return cfg;
}

void add_common_flags(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--seed", opt.seed, "random seed");
  cmd->add_option("--steps", opt.steps, "search step budget");
  cmd->add_option("--stall", opt.stall, "stalled steps before a penalty event");
  cmd->add_option("--epsilon", opt.epsilon, "exploration rate of action sampling");
  cmd->add_option("--lambda", opt.lambda, "penalty weight");
  cmd->add_option("--lr", opt.learning_rate, "policy learning rate");
  cmd->add_option("--variant", opt.variant, "L2GLS, L2GLS2, L2GLS3 or NO_PENALTY");
  cmd->add_option("--reward", opt.reward, "reward scheme: binary or advantage")
      ->check(CLI::IsMember({"binary", "advantage"}));
  cmd->add_option("--k", opt.k, "candidate list size (0 = automatic)");
  cmd->add_option("--early-exit", opt.early_exit,
                  "stop after this many phases without a new best (0 = never)");
  cmd->add_option("--time-limit", opt.time_limit, "wall-clock limit in seconds (0 = none)");
  cmd->add_option("--policy", opt.policy_path, "policy checkpoint to load");
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << content;
  if (!out) throw std::runtime_error("failed writing output file: " + path);
}

l2gls::Kind parse_kind(const std::string& kind) {
  if (kind == "tsp" || kind == "TSP") return l2gls::Kind::TSP;
  if (kind == "cvrp" || kind == "CVRP") return l2gls::Kind::CVRP;
  throw CLI::ValidationError("--kind", "unknown kind: " + kind);
}

// Reads an instance from a TSPLIB/CVRPLIB file (TYPE header decides) or a
// JSON file produced by `generate --format json`.
l2gls::RoutingInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw l2gls::ParseError("cannot open file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && (text[first] == '{' || text[first] == '[')) {
    return json::parse(text).get<l2gls::RoutingInstance>();
  }
  if (text.find("DEMAND_SECTION") != std::string::npos ||
      text.find("TYPE : CVRP") != std::string::npos ||
      text.find("TYPE: CVRP") != std::string::npos) {
    std::istringstream stream(text);
    return l2gls::parse_cvrplib(stream);
  }
  std::istringstream stream(text);
  return l2gls::parse_tsplib(stream);
}

json solve_summary(const l2gls::RoutingInstance& inst, const l2gls::SearchResult& r) {
  json j;
  j["instance"] = inst.name;
  j["nodes"] = inst.size();
  j["best_cost"] = r.best_cost;
  j["initial_cost"] = r.initial_cost;
  j["steps"] = r.steps;
  j["penalty_events"] = r.penalty_count;
  j["early_exit"] = r.early_exit;
  j["hit_time_limit"] = r.hit_time_limit;
  j["wall_seconds"] = r.wall_seconds;
  j["solution"] = r.best;
  return j;
}

void write_trace(const std::string& path, const l2gls::SearchResult& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open trace file: " + path);
  double best = r.initial_cost;
  for (const l2gls::SearchEvent& ev : r.events) {
    best = std::min(best, ev.cost_after);
    json j;
    j["step"] = ev.step;
    if (ev.type == l2gls::SearchEvent::Type::Penalty) {
      j["event"] = "PENALTY";
      json edges = json::array();
      for (const auto& [a, b] : ev.penalized) edges.push_back({a, b});
      j["edges"] = std::move(edges);
    } else {
      j["event"] = "ACTION";
      j["action"] = ev.action;
      j["op"] = l2gls::move_kind_name(ev.op);
      j["applied"] = ev.applied;
      j["delta_true"] = ev.delta_true;
    }
    j["cost"] = ev.cost_after;
    j["best"] = best;
    out << j.dump() << "\n";
  }
}

std::optional<l2gls::Policy> maybe_load_policy(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return l2gls::Policy::load_file(path);
}

std::vector<int> parse_sizes(const std::string& csv) {
  std::vector<int> sizes;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    sizes.push_back(std::stoi(tok));
  }
  if (sizes.empty()) throw CLI::ValidationError("--sizes", "no sizes given");
  return sizes;
}

const char* error_type_name(const std::exception& e) {
  if (dynamic_cast<const l2gls::ParseError*>(&e)) return "parse_error";
  if (dynamic_cast<const l2gls::UnsupportedFormat*>(&e)) return "unsupported_format";
  if (dynamic_cast<const l2gls::ValidationError*>(&e)) return "validation_error";
  if (dynamic_cast<const l2gls::DegenerateInstance*>(&e)) return "degenerate_instance";
  if (dynamic_cast<const l2gls::StaleMove*>(&e)) return "stale_move";
  if (dynamic_cast<const l2gls::TrainingDiverged*>(&e)) return "training_diverged";
  if (dynamic_cast<const l2gls::SizeLimitExceeded*>(&e)) return "size_limit";
  if (dynamic_cast<const std::invalid_argument*>(&e)) return "invalid_argument";
  if (dynamic_cast<const std::out_of_range*>(&e)) return "out_of_range";
  return "runtime_error";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Guided local search for TSP and CVRP with learned operator selection"};
  app.require_subcommand(1);

  // generate ----------------------------------------------------------------
  auto* gen = app.add_subcommand("generate", "generate a random instance");
  std::string gen_kind = "tsp", gen_depot = "random", gen_customers = "random";
  std::string gen_format = "tsplib", gen_out;
  int gen_n = 20, gen_capacity = 0, gen_demand_lo = 1, gen_demand_hi = 9;
  std::uint64_t gen_seed = 1;
  gen->add_option("--kind", gen_kind, "tsp or cvrp");
  gen->add_option("--n", gen_n, "number of nodes (tsp) or customers (cvrp)");
  gen->add_option("--seed", gen_seed, "random seed");
  gen->add_option("--capacity", gen_capacity, "vehicle capacity (0 = size default)");
  gen->add_option("--demand-lo", gen_demand_lo, "minimum customer demand");
  gen->add_option("--demand-hi", gen_demand_hi, "maximum customer demand");
  gen->add_option("--depot", gen_depot, "central, eccentric or random");
  gen->add_option("--customers", gen_customers, "random, clustered or random_clustered");
  gen->add_option("--format", gen_format, "tsplib or json")
      ->check(CLI::IsMember({"tsplib", "json"}));
  gen->add_option("--out", gen_out, "output file (default stdout)");

  // solve ---------------------------------------------------------------
  auto* solve_cmd = app.add_subcommand("solve", "run guided local search on one instance");
  CommonOptions solve_opt;
  std::string solve_in, solve_out, solve_trace, solve_kind = "tsp";
  int solve_n = 0;
  add_common_flags(solve_cmd, solve_opt);
  solve_cmd->add_option("--in", solve_in, "instance file (TSPLIB, CVRPLIB or JSON)");
  solve_cmd->add_option("--kind", solve_kind, "kind for generated instances");
  solve_cmd->add_option("--n", solve_n, "generate an instance of this size instead of --in");
  solve_cmd->add_option("--out", solve_out, "write the result JSON here (default stdout)");
  solve_cmd->add_option("--trace", solve_trace, "write a JSONL event trace here");

  // train ---------------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "train a policy on generated instances");
  CommonOptions train_opt;
  std::string train_kind = "tsp", train_out;
  int train_n = 20, train_episodes = 100;
  add_common_flags(train_cmd, train_opt);
  train_cmd->add_option("--kind", train_kind, "tsp or cvrp");
  train_cmd->add_option("--n", train_n, "instance size");
  train_cmd->add_option("--episodes", train_episodes, "training episodes");
  train_cmd->add_option("--out", train_out, "policy checkpoint path")->required();

  // bench ---------------------------------------------------------------
  auto* bench_cmd = app.add_subcommand("bench", "benchmark over generated instance batches");
  CommonOptions bench_opt;
  std::string bench_kind = "tsp", bench_sizes = "20", bench_format = "csv", bench_out;
  std::string bench_reference = "none";
  int bench_per = 100, bench_jobs = 1;
  bool bench_no_timing = false;
  add_common_flags(bench_cmd, bench_opt);
  bench_cmd->add_option("--kind", bench_kind, "tsp or cvrp");
  bench_cmd->add_option("--sizes", bench_sizes, "comma-separated instance sizes");
  bench_cmd->add_option("--per", bench_per, "instances per size");
  bench_cmd->add_option("--reference", bench_reference, "none or exact (TSP <= 20 nodes)")
      ->check(CLI::IsMember({"none", "exact"}));
  bench_cmd->add_option("--format", bench_format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  bench_cmd->add_option("--out", bench_out, "output file (default stdout)");
  bench_cmd->add_option("--jobs", bench_jobs, "worker threads");
  bench_cmd->add_flag("--no-timing", bench_no_timing,
                      "zero the timing column for byte-reproducible reports");

  // ablate --------------------------------------------------------------
  auto* ablate_cmd = app.add_subcommand("ablate", "compare all variants on shared instances");
  CommonOptions ablate_opt;
  std::string ablate_kind = "tsp", ablate_sizes = "20", ablate_format = "csv", ablate_out;
  int ablate_per = 20, ablate_jobs = 1;
  add_common_flags(ablate_cmd, ablate_opt);
  ablate_cmd->add_option("--kind", ablate_kind, "tsp or cvrp");
  ablate_cmd->add_option("--sizes", ablate_sizes, "comma-separated instance sizes");
  ablate_cmd->add_option("--per", ablate_per, "instances per size");
  ablate_cmd->add_option("--format", ablate_format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  ablate_cmd->add_option("--out", ablate_out, "output file (default stdout)");
  ablate_cmd->add_option("--jobs", ablate_jobs, "worker threads");

  // tsplib --------------------------------------------------------------
  auto* tsplib_cmd = app.add_subcommand("tsplib", "solve a TSPLIB or CVRPLIB file");
  CommonOptions tsplib_opt;
  std::string tsplib_in, tsplib_out, tsplib_trace;
  add_common_flags(tsplib_cmd, tsplib_opt);
  tsplib_cmd->add_option("file", tsplib_in, "instance file")->required();
  tsplib_cmd->add_option("--out", tsplib_out, "write the result JSON here (default stdout)");
  tsplib_cmd->add_option("--trace", tsplib_trace, "write a JSONL event trace here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    std::cerr << json{{"error", e.what()}, {"type", "cli_error"}}.dump() << "\n";
    return 2;
  }

  try {
    if (gen->parsed()) {
      l2gls::RoutingInstance inst;
      if (parse_kind(gen_kind) == l2gls::Kind::TSP) {
        inst = l2gls::generate_uniform_tsp(gen_n, gen_seed);
      } else {
        l2gls::CvrpGenSpec spec;
        spec.num_customers = gen_n;
        spec.capacity = gen_capacity != 0 ? gen_capacity : l2gls::default_cvrp_capacity(gen_n);
        spec.demand_lo = gen_demand_lo;
        spec.demand_hi = gen_demand_hi;
        spec.seed = gen_seed;
        if (gen_depot == "central") spec.depot = l2gls::DepotPosition::Central;
        else if (gen_depot == "eccentric") spec.depot = l2gls::DepotPosition::Eccentric;
        else if (gen_depot == "random") spec.depot = l2gls::DepotPosition::Random;
        else throw CLI::ValidationError("--depot", "unknown depot position: " + gen_depot);
        if (gen_customers == "random") spec.customers = l2gls::CustomerPosition::Random;
        else if (gen_customers == "clustered") spec.customers = l2gls::CustomerPosition::Clustered;
        else if (gen_customers == "random_clustered")
          spec.customers = l2gls::CustomerPosition::RandomClustered;
        else throw CLI::ValidationError("--customers", "unknown mode: " + gen_customers);
        inst = l2gls::generate_cvrp(spec);
      }
      if (gen_format == "tsplib") {
        write_output(gen_out, l2gls::serialize_tsplib(inst));
      } else {
        write_output(gen_out, json(inst).dump(2) + "\n");
      }
      return 0;
    }

    if (solve_cmd->parsed() || tsplib_cmd->parsed()) {
      const bool is_tsplib = tsplib_cmd->parsed();
      const CommonOptions& opt = is_tsplib ? tsplib_opt : solve_opt;
      const std::string in_path = is_tsplib ? tsplib_in : solve_in;
      const std::string out_path = is_tsplib ? tsplib_out : solve_out;
      const std::string trace_path = is_tsplib ? tsplib_trace : solve_trace;

      l2gls::RoutingInstance inst;
      if (!in_path.empty()) {
        inst = load_instance(in_path);
      } else if (!is_tsplib && solve_n > 0) {
        if (parse_kind(solve_kind) == l2gls::Kind::TSP) {
          inst = l2gls::generate_uniform_tsp(solve_n, opt.seed);
        } else {
          l2gls::CvrpGenSpec spec;
          spec.num_customers = solve_n;
          spec.capacity = l2gls::default_cvrp_capacity(solve_n);
          spec.seed = opt.seed;
          inst = l2gls::generate_cvrp(spec);
        }
      } else {
        throw std::invalid_argument("solve: pass --in FILE or --n SIZE");
      }

      l2gls::SearchConfig cfg = make_config(opt);
      cfg.collect_trace = !trace_path.empty();
      const auto policy = maybe_load_policy(opt.policy_path);
      l2gls::SplitMix64 rng(l2gls::derive_seed(opt.seed, 0x50e1));
      const l2gls::SearchResult r =
          l2gls::solve(inst, cfg, policy ? &*policy : nullptr, rng);
      if (!trace_path.empty()) write_trace(trace_path, r);
      write_output(out_path, solve_summary(inst, r).dump(2) + "\n");
      return 0;
    }

    if (train_cmd->parsed()) {
      l2gls::SearchConfig cfg = make_config(train_opt);
      std::vector<double> episode_costs;
      const l2gls::Policy policy = l2gls::train(parse_kind(train_kind), train_n, cfg,
                                                train_episodes, train_opt.seed, &episode_costs);
      policy.save_file(train_out);
      json j;
      j["episodes"] = train_episodes;
      j["checkpoint"] = train_out;
      j["episode_costs"] = episode_costs;
      std::cout << j.dump(2) << "\n";
      return 0;
    }

    if (bench_cmd->parsed()) {
      l2gls::BenchmarkSpec spec;
      spec.kind = parse_kind(bench_kind);
      spec.sizes = parse_sizes(bench_sizes);
      spec.instances_per_size = bench_per;
      spec.config = make_config(bench_opt);
      spec.master_seed = bench_opt.seed;
      spec.reference =
          bench_reference == "exact" ? l2gls::ReferenceKind::Exact : l2gls::ReferenceKind::None;
      spec.record_timing = !bench_no_timing;
      spec.jobs = bench_jobs;
      const auto policy = maybe_load_policy(bench_opt.policy_path);
      const l2gls::BenchmarkReport report =
          l2gls::run_benchmark(spec, policy ? &*policy : nullptr);
      const auto fmt =
          bench_format == "json" ? l2gls::ReportFormat::Json : l2gls::ReportFormat::Csv;
      write_output(bench_out, l2gls::emit_report(report, fmt));
      return report.failures == 0 ? 0 : 3;
    }

    if (ablate_cmd->parsed()) {
      const auto policy = maybe_load_policy(ablate_opt.policy_path);
      const l2gls::AblationReport report = l2gls::run_ablation(
          parse_kind(ablate_kind), parse_sizes(ablate_sizes), ablate_per,
          make_config(ablate_opt), policy ? &*policy : nullptr, ablate_opt.seed, ablate_jobs);
      const auto fmt =
          ablate_format == "json" ? l2gls::ReportFormat::Json : l2gls::ReportFormat::Csv;
      write_output(ablate_out, l2gls::emit_report(report, fmt));
      return 0;
    }
  } catch (const CLI::Error& e) {
    std::cerr << json{{"error", e.what()}, {"type", "cli_error"}}.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", e.what()}, {"type", error_type_name(e)}}.dump() << "\n";
    return 1;
  }
  return 0;
}
