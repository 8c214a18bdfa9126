#pragma once

// Benchmark harness: instance batches, exact references, ablations, reports.
//
// Determinism contract: the work list (instance seeds and per-run RNG
// streams) is a pure function of the benchmark spec, and every worker
// writes into its own pre-assigned slot, so results are identical for any
// number of worker threads. Wall-clock timings are the one exception; they
// can be suppressed with record_timing = false, which zeroes the timing
// column so that two runs of the same spec emit byte-identical reports.

#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "l2gls/errors.hpp"
#include "l2gls/instance.hpp"
#include "l2gls/search.hpp"
#include "l2gls/solution.hpp"

namespace l2gls {

// ---------------------------------------------------------------------------
// Exact TSP by Held-Karp dynamic programming

// Optimal tour cost and an optimal tour starting at node 0. O(2^n * n^2)
// time and O(2^n * n) memory; limited to 20 nodes (~90 MB of tables).
inline std::pair<double, std::vector<NodeId>> exact_tsp(const RoutingInstance& inst) {
  if (inst.kind != Kind::TSP) throw std::invalid_argument("exact_tsp: TSP instances only");
  check_instance(inst);
  const int num_nodes = inst.size();
  if (num_nodes > 20)
    throw SizeLimitExceeded("exact_tsp: instance has " + std::to_string(num_nodes) +
                            " nodes, limit is 20");

  const int n = num_nodes - 1;  // cities 1..num_nodes-1; the tour is rooted at node 0
  std::vector<double> dmat(static_cast<std::size_t>(num_nodes) * num_nodes);
  for (int i = 0; i < num_nodes; ++i)
    for (int j = 0; j < num_nodes; ++j) dmat[static_cast<std::size_t>(i) * num_nodes + j] = inst.dist(i, j);

  const int full = (1 << n) - 1;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dp(static_cast<std::size_t>(full + 1) * n, inf);
  std::vector<std::int8_t> parent(static_cast<std::size_t>(full + 1) * n, -1);
  for (int c = 0; c < n; ++c)
    dp[static_cast<std::size_t>(1 << c) * n + c] = dmat[static_cast<std::size_t>(0) * num_nodes + (c + 1)];

  for (int mask = 1; mask <= full; ++mask) {
    const int free = full & ~mask;
    if (free == 0) continue;
    for (int last = 0; last < n; ++last) {
      if (!(mask & (1 << last))) continue;
      const double base = dp[static_cast<std::size_t>(mask) * n + last];
      const double* drow = &dmat[static_cast<std::size_t>(last + 1) * num_nodes];
      int rem = free;
      while (rem != 0) {
        const int nxt = std::countr_zero(static_cast<unsigned>(rem));
        rem &= rem - 1;
        const double cand = base + drow[nxt + 1];
        double& slot = dp[static_cast<std::size_t>(mask | (1 << nxt)) * n + nxt];
        if (cand < slot) {
          slot = cand;
          parent[static_cast<std::size_t>(mask | (1 << nxt)) * n + nxt] =
              static_cast<std::int8_t>(last);
        }
      }
    }
  }

  int best_last = 0;
  double best = inf;
  for (int last = 0; last < n; ++last) {
    const double cand = dp[static_cast<std::size_t>(full) * n + last] +
                        dmat[static_cast<std::size_t>(last + 1) * num_nodes];
    if (cand < best) {
      best = cand;
      best_last = last;
    }
  }

  std::vector<NodeId> tour(num_nodes);
  int mask = full, last = best_last;
  for (int i = num_nodes - 1; i >= 1; --i) {
    tour[i] = static_cast<NodeId>(last + 1);
    const int prev = parent[static_cast<std::size_t>(mask) * n + last];
    mask &= ~(1 << last);
    last = prev;
  }
  tour[0] = 0;
  return {best, std::move(tour)};
}

// ---------------------------------------------------------------------------
// Benchmarks

enum class ReferenceKind { None, Exact };
enum class ReportFormat { Csv, Json };

struct BenchmarkSpec {
  Kind kind = Kind::TSP;
  std::vector<int> sizes;
  int instances_per_size = 100;
  SearchConfig config;
  std::uint64_t master_seed = 1;
  ReferenceKind reference = ReferenceKind::None;
  // Generation knobs for CVRP; capacity 0 picks the size-based default.
  DepotPosition depot = DepotPosition::Random;
  CustomerPosition customers = CustomerPosition::Random;
  int capacity = 0;
  bool record_timing = true;
  int jobs = 1;

  void check() const {
    if (sizes.empty()) throw std::invalid_argument("benchmark: no sizes given");
    if (instances_per_size < 1)
      throw std::invalid_argument("benchmark: instances_per_size must be >= 1");
    if (jobs < 1) throw std::invalid_argument("benchmark: jobs must be >= 1");
    if (reference == ReferenceKind::Exact) {
      if (kind != Kind::TSP)
        throw std::invalid_argument("benchmark: exact reference is available for TSP only");
      for (int s : sizes) {
        if (s > 20)
          throw std::invalid_argument("benchmark: exact reference is limited to sizes <= 20");
      }
    }
    config.check();
  }
};

struct InstanceResult {
  int size = 0;
  int index = 0;
  std::uint64_t seed = 0;
  double cost = std::numeric_limits<double>::quiet_NaN();
  double reference = std::numeric_limits<double>::quiet_NaN();
  double gap_pct = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;
  bool failed = false;
  std::string error;
};

struct ReportRow {
  int size = 0;
  double mean_cost = 0.0;
  double std_cost = 0.0;
  double gap_pct = std::numeric_limits<double>::quiet_NaN();
  double mean_seconds = 0.0;
  int count = 0;
};

struct BenchmarkReport {
  std::vector<ReportRow> rows;
  std::vector<InstanceResult> instances;
  int failures = 0;
};

namespace detail {

inline RoutingInstance benchmark_instance(const BenchmarkSpec& spec, int size,
                                          std::uint64_t seed) {
  if (spec.kind == Kind::TSP) return generate_uniform_tsp(size, seed);
  CvrpGenSpec gen;
  gen.num_customers = size;
  gen.capacity = spec.capacity != 0 ? spec.capacity : default_cvrp_capacity(size);
  gen.depot = spec.depot;
  gen.customers = spec.customers;
  gen.seed = seed;
  return generate_cvrp(gen);
}

// Sample standard deviation; zero for fewer than two points.
inline double sample_std(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

template <typename WorkFn>
inline void run_indexed(int total, int jobs, const WorkFn& work) {
  if (jobs <= 1) {
    for (int i = 0; i < total; ++i) work(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  const int workers = std::min(jobs, total);
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < total; i = next.fetch_add(1)) work(i);
    });
  }
  for (std::thread& t : pool) t.join();
}

}  // namespace detail

inline BenchmarkReport run_benchmark(const BenchmarkSpec& spec, const Policy* policy = nullptr) {
  spec.check();
  const int per = spec.instances_per_size;
  const int total = static_cast<int>(spec.sizes.size()) * per;

  BenchmarkReport report;
  report.instances.resize(total);

  detail::run_indexed(total, spec.jobs, [&](int idx) {
    const int size = spec.sizes[idx / per];
    const int i = idx % per;
    InstanceResult& out = report.instances[idx];
    out.size = size;
    out.index = i;
    out.seed = derive_seed(spec.master_seed, 2 * static_cast<std::uint64_t>(idx));
    const std::uint64_t rng_seed =
        derive_seed(spec.master_seed, 2 * static_cast<std::uint64_t>(idx) + 1);
    try {
      const RoutingInstance inst = detail::benchmark_instance(spec, size, out.seed);
      SplitMix64 rng(rng_seed);
      const auto started = std::chrono::steady_clock::now();
      const SearchResult r = solve(inst, spec.config, policy, rng);
      out.seconds =
          spec.record_timing
              ? std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count()
              : 0.0;
      out.cost = r.best_cost;
      if (spec.reference == ReferenceKind::Exact) {
        out.reference = exact_tsp(inst).first;
        out.gap_pct = 100.0 * (out.cost - out.reference) / out.reference;
      }
    } catch (const std::exception& e) {
      out.failed = true;
      out.error = e.what();
    }
  });

  for (const InstanceResult& r : report.instances) {
    if (r.failed) ++report.failures;
  }

  for (std::size_t s = 0; s < spec.sizes.size(); ++s) {
    ReportRow row;
    row.size = spec.sizes[s];
    std::vector<double> costs, gaps;
    double sec = 0.0;
    for (int i = 0; i < per; ++i) {
      const InstanceResult& r = report.instances[s * per + i];
      if (r.failed) continue;
      costs.push_back(r.cost);
      if (!std::isnan(r.gap_pct)) gaps.push_back(r.gap_pct);
      sec += r.seconds;
    }
    row.count = static_cast<int>(costs.size());
    if (row.count > 0) {
      double sum = 0.0;
      for (double c : costs) sum += c;
      row.mean_cost = sum / row.count;
      row.std_cost = detail::sample_std(costs, row.mean_cost);
      row.mean_seconds = sec / row.count;
      if (!gaps.empty()) {
        double gsum = 0.0;
        for (double g : gaps) gsum += g;
        row.gap_pct = gsum / static_cast<double>(gaps.size());
      }
    }
    report.rows.push_back(row);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Ablations

struct AblationCell {
  Variant variant = Variant::L2GLS;
  int size = 0;
  double mean_cost = 0.0;
  double mean_seconds = 0.0;
  int count = 0;
  int failures = 0;
};

struct AblationReport {
  std::vector<AblationCell> cells;  // variant-major, then size
};

// Runs every variant on the same instances with identical per-instance RNG
// streams, so differences between cells are attributable to the variant.
inline AblationReport run_ablation(Kind kind, const std::vector<int>& sizes,
                                   int instances_per_size, const SearchConfig& config,
                                   const Policy* policy = nullptr, std::uint64_t master_seed = 1,
                                   int jobs = 1) {
  const Variant variants[] = {Variant::L2GLS, Variant::L2GLS2, Variant::L2GLS3,
                              Variant::NoPenalty};
  AblationReport report;
  for (const Variant v : variants) {
    BenchmarkSpec spec;
    spec.kind = kind;
    spec.sizes = sizes;
    spec.instances_per_size = instances_per_size;
    spec.config = config;
    spec.config.variant = v;
    spec.master_seed = master_seed;
    spec.jobs = jobs;
    const BenchmarkReport bench = run_benchmark(spec, policy);
    for (const ReportRow& row : bench.rows) {
      AblationCell cell;
      cell.variant = v;
      cell.size = row.size;
      cell.mean_cost = row.mean_cost;
      cell.mean_seconds = row.mean_seconds;
      cell.count = row.count;
      cell.failures = bench.failures;
      report.cells.push_back(cell);
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Report emission

namespace detail {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace detail

inline void to_json(nlohmann::json& j, const InstanceResult& r) {
  j = nlohmann::json{{"size", r.size},     {"index", r.index},   {"seed", r.seed},
                     {"cost", r.cost},     {"reference", r.reference},
                     {"gap_pct", r.gap_pct}, {"seconds", r.seconds},
                     {"failed", r.failed}, {"error", r.error}};
}

inline void from_json(const nlohmann::json& j, InstanceResult& r) {
  auto num = [&](const char* key) {
    const auto& v = j.at(key);
    return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
  };
  r.size = j.at("size").get<int>();
  r.index = j.at("index").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.cost = num("cost");
  r.reference = num("reference");
  r.gap_pct = num("gap_pct");
  r.seconds = num("seconds");
  r.failed = j.at("failed").get<bool>();
  r.error = j.at("error").get<std::string>();
}

inline void to_json(nlohmann::json& j, const ReportRow& r) {
  j = nlohmann::json{{"size", r.size},       {"mean_cost", r.mean_cost},
                     {"std_cost", r.std_cost}, {"gap_pct", r.gap_pct},
                     {"mean_seconds", r.mean_seconds}, {"count", r.count}};
}

inline void from_json(const nlohmann::json& j, ReportRow& r) {
  r.size = j.at("size").get<int>();
  r.mean_cost = j.at("mean_cost").get<double>();
  r.std_cost = j.at("std_cost").get<double>();
  const auto& g = j.at("gap_pct");
  r.gap_pct = g.is_null() ? std::numeric_limits<double>::quiet_NaN() : g.get<double>();
  r.mean_seconds = j.at("mean_seconds").get<double>();
  r.count = j.at("count").get<int>();
}

inline void to_json(nlohmann::json& j, const BenchmarkReport& r) {
  j = nlohmann::json{{"rows", r.rows}, {"instances", r.instances}, {"failures", r.failures}};
}

inline void from_json(const nlohmann::json& j, BenchmarkReport& r) {
  r.rows = j.at("rows").get<std::vector<ReportRow>>();
  r.instances = j.at("instances").get<std::vector<InstanceResult>>();
  r.failures = j.at("failures").get<int>();
}

namespace detail {

inline bool double_eq_nan(double a, double b) {
  if (std::isnan(a) && std::isnan(b)) return true;
  return a == b;
}

}  // namespace detail

inline bool operator==(const ReportRow& a, const ReportRow& b) {
  return a.size == b.size && a.mean_cost == b.mean_cost && a.std_cost == b.std_cost &&
         detail::double_eq_nan(a.gap_pct, b.gap_pct) && a.mean_seconds == b.mean_seconds &&
         a.count == b.count;
}

inline bool operator==(const InstanceResult& a, const InstanceResult& b) {
  return a.size == b.size && a.index == b.index && a.seed == b.seed &&
         detail::double_eq_nan(a.cost, b.cost) && detail::double_eq_nan(a.reference, b.reference) &&
         detail::double_eq_nan(a.gap_pct, b.gap_pct) && a.seconds == b.seconds &&
         a.failed == b.failed && a.error == b.error;
}

inline bool operator==(const BenchmarkReport& a, const BenchmarkReport& b) {
  return a.rows == b.rows && a.instances == b.instances && a.failures == b.failures;
}

inline std::string emit_report(const BenchmarkReport& report, ReportFormat format) {
  if (format == ReportFormat::Json) {
    nlohmann::json j = report;
    return j.dump(2) + "\n";
  }
  std::string out = "size,mean_cost,std_cost,gap_pct,mean_seconds,count\n";
  for (const ReportRow& r : report.rows) {
    out += std::to_string(r.size);
    out += ',';
    out += detail::format_double(r.mean_cost);
    out += ',';
    out += detail::format_double(r.std_cost);
    out += ',';
    out += detail::format_double(r.gap_pct);
    out += ',';
    out += detail::format_double(r.mean_seconds);
    out += ',';
    out += std::to_string(r.count);
    out += '\n';
  }
  return out;
}

inline std::string emit_report(const AblationReport& report, ReportFormat format) {
  if (format == ReportFormat::Json) {
    nlohmann::json cells = nlohmann::json::array();
    for (const AblationCell& c : report.cells) {
      cells.push_back({{"variant", variant_name(c.variant)},
                       {"size", c.size},
                       {"mean_cost", c.mean_cost},
                       {"mean_seconds", c.mean_seconds},
                       {"count", c.count},
                       {"failures", c.failures}});
    }
    return nlohmann::json{{"cells", cells}}.dump(2) + "\n";
  }
  std::string out = "variant,size,mean_cost,mean_seconds,count\n";
  for (const AblationCell& c : report.cells) {
    out += variant_name(c.variant);
    out += ',';
    out += std::to_string(c.size);
    out += ',';
    out += detail::format_double(c.mean_cost);
    out += ',';
    out += detail::format_double(c.mean_seconds);
    out += ',';
    out += std::to_string(c.count);
    out += '\n';
  }
  return out;
}

}  // namespace l2gls
