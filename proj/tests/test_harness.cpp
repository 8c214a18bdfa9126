#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "l2gls/l2gls.hpp"
#include "oracles.hpp"

using namespace l2gls;

namespace {

SearchConfig tiny_config(int steps) {
  SearchConfig cfg;
  cfg.max_steps = steps;
  cfg.early_exit_phases = 0;
  return cfg;
}

}  // namespace

TEST_CASE("dynamic-programming optimum matches exhaustive enumeration", "[harness]") {
  SplitMix64 rng(0x5eedULL);
  for (int n = 5; n <= 9; ++n) {
    for (int rep = 0; rep < 20; ++rep) {
      const RoutingInstance inst =
          generate_uniform_tsp(n, rng.next_u64());
      const auto [cost, tour] = exact_tsp(inst);
      const double brute = oracle::exhaustive_tsp_opt(inst);
      REQUIRE(cost == Catch::Approx(brute).margin(1e-9));

      // The returned tour must be a permutation achieving that cost.
      REQUIRE(tour.size() == static_cast<std::size_t>(n));
      std::vector<NodeId> sorted = tour;
      std::sort(sorted.begin(), sorted.end());
      for (int i = 0; i < n; ++i) REQUIRE(sorted[i] == i);
      REQUIRE(oracle::tour_cost(inst, tour) == Catch::Approx(cost).margin(1e-9));
    }
  }
}

TEST_CASE("exact solver handles the smallest legal instance", "[harness]") {
  RoutingInstance inst;
  inst.kind = Kind::TSP;
  inst.name = "triangle";
  inst.coords = {{0.0, 0.0}, {3.0, 0.0}, {0.0, 4.0}};
  const auto [cost, tour] = exact_tsp(inst);
  REQUIRE(tour.size() == 3);
  REQUIRE(cost == Catch::Approx(12.0).margin(1e-12));  // 3 + 5 + 4

  inst.coords.pop_back();  // two nodes make no tour
  REQUIRE_THROWS_AS(exact_tsp(inst), ValidationError);
}

TEST_CASE("exact solver rejects oversized and non-tour inputs", "[harness]") {
  REQUIRE_THROWS_AS(exact_tsp(generate_uniform_tsp(21, 1)), SizeLimitExceeded);

  CvrpGenSpec spec;
  spec.num_customers = 6;
  spec.capacity = 20;
  spec.seed = 3;
  REQUIRE_THROWS_AS(exact_tsp(generate_cvrp(spec)), std::invalid_argument);
}

TEST_CASE("benchmark spec validation", "[harness]") {
  BenchmarkSpec spec;
  spec.sizes = {8};
  spec.config = tiny_config(100);
  REQUIRE_NOTHROW(spec.check());

  BenchmarkSpec empty = spec;
  empty.sizes.clear();
  REQUIRE_THROWS_AS(empty.check(), std::invalid_argument);

  BenchmarkSpec zero_per = spec;
  zero_per.instances_per_size = 0;
  REQUIRE_THROWS_AS(zero_per.check(), std::invalid_argument);

  BenchmarkSpec zero_jobs = spec;
  zero_jobs.jobs = 0;
  REQUIRE_THROWS_AS(zero_jobs.check(), std::invalid_argument);

  BenchmarkSpec exact_cvrp = spec;
  exact_cvrp.kind = Kind::CVRP;
  exact_cvrp.reference = ReferenceKind::Exact;
  REQUIRE_THROWS_AS(exact_cvrp.check(), std::invalid_argument);

  BenchmarkSpec exact_big = spec;
  exact_big.reference = ReferenceKind::Exact;
  exact_big.sizes = {10, 21};
  REQUIRE_THROWS_AS(exact_big.check(), std::invalid_argument);

  BenchmarkSpec bad_config = spec;
  bad_config.config.max_steps = 0;
  REQUIRE_THROWS_AS(bad_config.check(), std::invalid_argument);
}

TEST_CASE("benchmark runs are reproducible when timing is suppressed", "[harness]") {
  BenchmarkSpec spec;
  spec.kind = Kind::TSP;
  spec.sizes = {8, 10};
  spec.instances_per_size = 3;
  spec.config = tiny_config(200);
  spec.master_seed = 77;
  spec.record_timing = false;

  const BenchmarkReport a = run_benchmark(spec);
  const BenchmarkReport b = run_benchmark(spec);
  REQUIRE(a == b);
  REQUIRE(emit_report(a, ReportFormat::Csv) == emit_report(b, ReportFormat::Csv));
  REQUIRE(emit_report(a, ReportFormat::Json) == emit_report(b, ReportFormat::Json));

  // Sanity on shape: one row per size, every instance accounted for.
  REQUIRE(a.rows.size() == 2);
  REQUIRE(a.instances.size() == 6);
  REQUIRE(a.failures == 0);
  for (const ReportRow& row : a.rows) {
    CHECK(row.count == 3);
    CHECK(row.mean_cost > 0.0);
    CHECK(row.std_cost >= 0.0);
    CHECK(row.mean_seconds == 0.0);
    CHECK(std::isnan(row.gap_pct));
  }
  for (const InstanceResult& r : a.instances) {
    CHECK_FALSE(r.failed);
    CHECK(r.seconds == 0.0);
    CHECK(std::isnan(r.reference));
  }

  // With timing on, wall clocks differ between runs but costs must not.
  BenchmarkSpec timed = spec;
  timed.record_timing = true;
  const BenchmarkReport c = run_benchmark(timed);
  REQUIRE(c.instances.size() == a.instances.size());
  for (std::size_t i = 0; i < c.instances.size(); ++i) {
    CHECK(c.instances[i].cost == a.instances[i].cost);
    CHECK(c.instances[i].seed == a.instances[i].seed);
  }
  for (std::size_t i = 0; i < c.rows.size(); ++i) {
    CHECK(c.rows[i].mean_cost == a.rows[i].mean_cost);
    CHECK(c.rows[i].std_cost == a.rows[i].std_cost);
    CHECK(c.rows[i].count == a.rows[i].count);
  }
}

TEST_CASE("worker count does not change benchmark results", "[harness]") {
  BenchmarkSpec spec;
  spec.kind = Kind::CVRP;
  spec.sizes = {6, 9};
  spec.instances_per_size = 3;
  spec.config = tiny_config(150);
  spec.master_seed = 5;
  spec.record_timing = false;

  BenchmarkSpec parallel = spec;
  parallel.jobs = 4;

  const BenchmarkReport serial_report = run_benchmark(spec);
  const BenchmarkReport parallel_report = run_benchmark(parallel);
  REQUIRE(serial_report == parallel_report);
}

TEST_CASE("exact reference yields non-negative gaps", "[harness]") {
  BenchmarkSpec spec;
  spec.kind = Kind::TSP;
  spec.sizes = {7, 9};
  spec.instances_per_size = 4;
  spec.config = tiny_config(400);
  spec.master_seed = 11;
  spec.reference = ReferenceKind::Exact;
  spec.record_timing = false;

  const BenchmarkReport report = run_benchmark(spec);
  REQUIRE(report.failures == 0);
  for (const InstanceResult& r : report.instances) {
    REQUIRE_FALSE(std::isnan(r.reference));
    CHECK(r.reference > 0.0);
    CHECK(r.cost >= r.reference - 1e-9);
    CHECK(r.gap_pct == Catch::Approx(100.0 * (r.cost - r.reference) / r.reference)
                           .margin(1e-12));
    CHECK(r.gap_pct >= -1e-9);
  }
  for (const ReportRow& row : report.rows) {
    REQUIRE_FALSE(std::isnan(row.gap_pct));
    CHECK(row.gap_pct >= -1e-9);
  }
}

TEST_CASE("per-instance failures are recorded without aborting the run", "[harness]") {
  BenchmarkSpec spec;
  spec.kind = Kind::CVRP;
  spec.sizes = {6};
  spec.instances_per_size = 3;
  spec.config = tiny_config(100);
  spec.capacity = 5;  // below the largest generated demand, so generation throws
  spec.record_timing = false;

  const BenchmarkReport report = run_benchmark(spec);
  REQUIRE(report.failures == 3);
  for (const InstanceResult& r : report.instances) {
    CHECK(r.failed);
    CHECK_FALSE(r.error.empty());
    CHECK(std::isnan(r.cost));
  }
  REQUIRE(report.rows.size() == 1);
  CHECK(report.rows[0].count == 0);

  const std::string csv = emit_report(report, ReportFormat::Csv);
  CHECK(csv == "size,mean_cost,std_cost,gap_pct,mean_seconds,count\n"
               "6,0.000000,0.000000,,0.000000,0\n");
}

TEST_CASE("benchmark report survives a JSON round trip", "[harness]") {
  BenchmarkSpec spec;
  spec.kind = Kind::TSP;
  spec.sizes = {7};
  spec.instances_per_size = 2;
  spec.config = tiny_config(200);
  spec.reference = ReferenceKind::Exact;
  spec.record_timing = false;

  const BenchmarkReport report = run_benchmark(spec);
  const nlohmann::json j = nlohmann::json::parse(emit_report(report, ReportFormat::Json));
  const BenchmarkReport back = j.get<BenchmarkReport>();
  REQUIRE(back == report);

  // NaN fields serialize as null and come back as NaN.
  BenchmarkSpec failing = spec;
  failing.kind = Kind::CVRP;
  failing.reference = ReferenceKind::None;
  failing.capacity = 5;
  const BenchmarkReport broken = run_benchmark(failing);
  const nlohmann::json j2 =
      nlohmann::json::parse(emit_report(broken, ReportFormat::Json));
  const BenchmarkReport back2 = j2.get<BenchmarkReport>();
  REQUIRE(back2 == broken);
  REQUIRE(back2.failures == 2);
}

TEST_CASE("ablation covers every variant with shared instances", "[harness]") {
  const std::vector<int> sizes = {8};
  const SearchConfig cfg = tiny_config(150);

  const AblationReport report = run_ablation(Kind::TSP, sizes, 2, cfg, nullptr, 21);
  REQUIRE(report.cells.size() == 4);
  const Variant expected[] = {Variant::L2GLS, Variant::L2GLS2, Variant::L2GLS3,
                              Variant::NoPenalty};
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(report.cells[i].variant == expected[i]);
    CHECK(report.cells[i].size == 8);
    CHECK(report.cells[i].count == 2);
    CHECK(report.cells[i].failures == 0);
    CHECK(report.cells[i].mean_cost > 0.0);
  }

  const AblationReport again = run_ablation(Kind::TSP, sizes, 2, cfg, nullptr, 21);
  REQUIRE(again.cells.size() == report.cells.size());
  for (std::size_t i = 0; i < report.cells.size(); ++i) {
    CHECK(again.cells[i].mean_cost == report.cells[i].mean_cost);
    CHECK(again.cells[i].count == report.cells[i].count);
  }

  const std::string csv = emit_report(report, ReportFormat::Csv);
  CHECK(csv.rfind("variant,size,mean_cost,mean_seconds,count\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  CHECK(csv.find("L2GLS2,8,") != std::string::npos);
  CHECK(csv.find("NO_PENALTY,8,") != std::string::npos);

  const nlohmann::json j = nlohmann::json::parse(emit_report(report, ReportFormat::Json));
  REQUIRE(j.at("cells").size() == 4);
  CHECK(j.at("cells")[0].at("variant").get<std::string>() == "L2GLS");
  CHECK(j.at("cells")[3].at("variant").get<std::string>() == "NO_PENALTY");
}

TEST_CASE("report emitters handle empty and hand-built rows", "[harness]") {
  CHECK(emit_report(BenchmarkReport{}, ReportFormat::Csv) ==
        "size,mean_cost,std_cost,gap_pct,mean_seconds,count\n");
  CHECK(emit_report(AblationReport{}, ReportFormat::Csv) ==
        "variant,size,mean_cost,mean_seconds,count\n");

  BenchmarkReport report;
  ReportRow row;
  row.size = 5;
  row.mean_cost = 3.25;
  row.std_cost = 0.5;
  row.gap_pct = std::numeric_limits<double>::quiet_NaN();
  row.mean_seconds = 0.125;
  row.count = 7;
  report.rows.push_back(row);
  CHECK(emit_report(report, ReportFormat::Csv) ==
        "size,mean_cost,std_cost,gap_pct,mean_seconds,count\n"
        "5,3.250000,0.500000,,0.125000,7\n");
}
