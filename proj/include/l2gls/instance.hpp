#pragma once

// Problem instances: generation, file parsing, distances, normalization.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "l2gls/errors.hpp"
#include "l2gls/rng.hpp"

namespace l2gls {

using NodeId = std::int32_t;

enum class Kind { TSP, CVRP };

// EuclidRounded follows the TSPLIB EUC_2D convention (distances rounded to
// the nearest integer); EuclidReal is the plain Euclidean metric used for
// generated instances.
enum class DistanceMode { EuclidReal, EuclidRounded };

enum class DepotPosition { Central, Eccentric, Random };
enum class CustomerPosition { Random, Clustered, RandomClustered };

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline bool operator==(const Point& a, const Point& b) { return a.x == b.x && a.y == b.y; }

struct RoutingInstance {
  Kind kind = Kind::TSP;
  std::string name;
  std::vector<Point> coords;
  std::vector<int> demands;  // CVRP only; index 0 is the depot with demand 0
  int capacity = 0;          // CVRP only
  DistanceMode distance_mode = DistanceMode::EuclidReal;
  // Multiplier that maps normalized coordinates back to the original scale.
  double scale = 1.0;

  int size() const { return static_cast<int>(coords.size()); }
  int num_customers() const { return kind == Kind::CVRP ? size() - 1 : size(); }

  // Unchecked distance; the hot path for search. distance() below is the
  // bounds-checked variant.
  double dist(NodeId i, NodeId j) const {
    const double dx = coords[i].x - coords[j].x;
    const double dy = coords[i].y - coords[j].y;
    const double d = std::sqrt(dx * dx + dy * dy);
    if (distance_mode == DistanceMode::EuclidRounded) return std::floor(d + 0.5);
    return d;
  }
};

inline double distance(const RoutingInstance& inst, NodeId i, NodeId j) {
  if (i < 0 || j < 0 || i >= inst.size() || j >= inst.size())
    throw std::out_of_range("distance: node id out of range");
  return inst.dist(i, j);
}

// ---------------------------------------------------------------------------
// Validation

inline void check_instance(const RoutingInstance& inst) {
  if (inst.kind == Kind::TSP) {
    if (inst.size() < 3) throw ValidationError("TSP instance needs at least 3 nodes");
  } else {
    if (inst.size() < 2) throw ValidationError("CVRP instance needs a depot and a customer");
    if (inst.capacity <= 0) throw ValidationError("CVRP capacity must be positive");
    if (static_cast<int>(inst.demands.size()) != inst.size())
      throw ValidationError("CVRP demand vector length does not match node count");
    if (inst.demands[0] != 0) throw ValidationError("depot demand must be zero");
    for (int i = 1; i < inst.size(); ++i) {
      if (inst.demands[i] <= 0)
        throw ValidationError("customer " + std::to_string(i) + " has non-positive demand");
      if (inst.demands[i] > inst.capacity)
        throw ValidationError("customer " + std::to_string(i) + " demand exceeds vehicle capacity");
    }
  }
  for (const Point& p : inst.coords) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      throw ValidationError("instance has non-finite coordinates");
  }
}

// ---------------------------------------------------------------------------
// Generators

inline RoutingInstance generate_uniform_tsp(int n, std::uint64_t seed) {
  if (n < 3) throw std::invalid_argument("generate_uniform_tsp: n must be at least 3");
  SplitMix64 rng(seed);
  RoutingInstance inst;
  inst.kind = Kind::TSP;
  inst.name = "tsp" + std::to_string(n) + "-s" + std::to_string(seed);
  inst.coords.resize(n);
  for (int i = 0; i < n; ++i) {
    inst.coords[i].x = rng.next_double();
    inst.coords[i].y = rng.next_double();
  }
  inst.distance_mode = DistanceMode::EuclidReal;
  return inst;
}

struct CvrpGenSpec {
  int num_customers = 20;
  int capacity = 30;
  int demand_lo = 1;
  int demand_hi = 9;
  DepotPosition depot = DepotPosition::Random;
  CustomerPosition customers = CustomerPosition::Random;
  std::uint64_t seed = 1;
};

// Default vehicle capacities by instance size, matching the generation
// protocol the benchmarks assume.
inline int default_cvrp_capacity(int num_customers) {
  if (num_customers <= 20) return 20;
  if (num_customers <= 50) return 30;
  if (num_customers <= 100) return 40;
  return 50;
}

namespace detail {

inline double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

inline Point clustered_point(const std::vector<Point>& centers, SplitMix64& rng) {
  const int c = rng.next_int(0, static_cast<int>(centers.size()) - 1);
  Point p;
  p.x = clamp01(centers[c].x + rng.next_normal(0.0, 0.07));
  p.y = clamp01(centers[c].y + rng.next_normal(0.0, 0.07));
  return p;
}

}  // namespace detail

inline RoutingInstance generate_cvrp(const CvrpGenSpec& spec) {
  if (spec.num_customers < 2)
    throw std::invalid_argument("generate_cvrp: need at least 2 customers");
  if (spec.capacity <= 0) throw std::invalid_argument("generate_cvrp: capacity must be positive");
  if (spec.demand_lo < 1 || spec.demand_lo > spec.demand_hi)
    throw std::invalid_argument("generate_cvrp: bad demand range");
  if (spec.demand_hi > spec.capacity)
    throw std::invalid_argument("generate_cvrp: max demand exceeds capacity");

  SplitMix64 rng(spec.seed);
  RoutingInstance inst;
  inst.kind = Kind::CVRP;
  inst.name = "cvrp" + std::to_string(spec.num_customers) + "-c" + std::to_string(spec.capacity) +
              "-s" + std::to_string(spec.seed);
  inst.capacity = spec.capacity;
  inst.coords.resize(spec.num_customers + 1);
  inst.demands.assign(spec.num_customers + 1, 0);

  switch (spec.depot) {
    case DepotPosition::Central:
      inst.coords[0] = {0.5, 0.5};
      break;
    case DepotPosition::Eccentric:
      inst.coords[0] = {0.0, 0.0};
      break;
    case DepotPosition::Random:
      inst.coords[0] = {rng.next_double(), rng.next_double()};
      break;
  }

  std::vector<Point> centers;
  if (spec.customers != CustomerPosition::Random) {
    const int k = rng.next_int(3, 8);
    centers.resize(k);
    for (Point& c : centers) c = {rng.next_double(), rng.next_double()};
  }

  const int n = spec.num_customers;
  const int num_random = spec.customers == CustomerPosition::Random      ? n
                         : spec.customers == CustomerPosition::Clustered ? 0
                                                                         : n / 2;
  for (int i = 1; i <= n; ++i) {
    if (i <= num_random) {
      inst.coords[i] = {rng.next_double(), rng.next_double()};
    } else {
      inst.coords[i] = detail::clustered_point(centers, rng);
    }
    inst.demands[i] = rng.next_int(spec.demand_lo, spec.demand_hi);
  }
  inst.distance_mode = DistanceMode::EuclidReal;
  check_instance(inst);
  return inst;
}

// ---------------------------------------------------------------------------
// Normalization

// True when some coordinate falls outside the unit square, i.e. the instance
// did not come from our generators and should be normalized before search.
inline bool needs_normalization(const RoutingInstance& inst) {
  for (const Point& p : inst.coords) {
    if (p.x < -1e-12 || p.x > 1.0 + 1e-12 || p.y < -1e-12 || p.y > 1.0 + 1e-12) return true;
  }
  return false;
}

// Translates and uniformly scales coordinates into the unit square, keeping
// the aspect ratio. The returned instance measures real (unrounded)
// Euclidean distances; `scale` holds the factor that maps costs back.
inline RoutingInstance normalize(const RoutingInstance& inst) {
  if (inst.coords.empty()) throw DegenerateInstance("normalize: empty instance");
  double min_x = std::numeric_limits<double>::infinity(), min_y = min_x;
  double max_x = -min_x, max_y = -min_x;
  for (const Point& p : inst.coords) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const double span = std::max(max_x - min_x, max_y - min_y);
  if (!(span > 1e-12)) throw DegenerateInstance("normalize: all points coincide");
  RoutingInstance out = inst;
  for (Point& p : out.coords) {
    p.x = (p.x - min_x) / span;
    p.y = (p.y - min_y) / span;
  }
  out.scale = inst.scale * span;
  out.distance_mode = DistanceMode::EuclidReal;
  return out;
}

// ---------------------------------------------------------------------------
// TSPLIB / CVRPLIB parsing

namespace detail {

struct SpecLine {
  std::string key;
  std::string value;
};

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Splits "KEY : value" / "KEY: value" header lines; returns nullopt for
// section markers and data lines.
inline std::optional<SpecLine> parse_header_line(const std::string& line) {
  const std::size_t colon = line.find(':');
  if (colon == std::string::npos) return std::nullopt;
  SpecLine out;
  out.key = trim(line.substr(0, colon));
  out.value = trim(line.substr(colon + 1));
  if (out.key.empty()) return std::nullopt;
  return out;
}

}  // namespace detail

namespace detail {

struct LibFile {
  std::string name;
  std::string type;
  std::string edge_weight_type = "EUC_2D";
  int dimension = -1;
  int capacity = -1;
  std::vector<Point> coords;          // indexed by file id - 1
  std::vector<bool> has_coord;
  std::vector<int> demands;           // indexed by file id - 1
  std::vector<bool> has_demand;
  std::vector<int> depot_ids;         // file ids (1-based)
};

inline LibFile parse_lib_stream(std::istream& in) {
  LibFile f;
  std::string line;
  int lineno = 0;
  enum class Section { Header, Coords, Demands, Depots, Done };
  Section section = Section::Header;

  auto require_dimension = [&](const char* where) {
    if (f.dimension <= 0)
      throw ParseError(std::string(where) + " encountered before DIMENSION", lineno);
  };

  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t == "EOF") break;

    if (t == "NODE_COORD_SECTION") {
      require_dimension("NODE_COORD_SECTION");
      f.coords.assign(f.dimension, Point{});
      f.has_coord.assign(f.dimension, false);
      section = Section::Coords;
      continue;
    }
    if (t == "DEMAND_SECTION") {
      require_dimension("DEMAND_SECTION");
      f.demands.assign(f.dimension, 0);
      f.has_demand.assign(f.dimension, false);
      section = Section::Demands;
      continue;
    }
    if (t == "DEPOT_SECTION") {
      section = Section::Depots;
      continue;
    }
    if (t == "EDGE_WEIGHT_SECTION" || t == "DISPLAY_DATA_SECTION" || t == "TOUR_SECTION") {
      throw UnsupportedFormat("unsupported section: " + t);
    }

    switch (section) {
      case Section::Header: {
        auto h = parse_header_line(t);
        if (!h) throw ParseError("unrecognized header line: " + t, lineno);
        if (h->key == "NAME") {
          f.name = h->value;
        } else if (h->key == "TYPE") {
          // Values like "CVRP (...)" appear in the wild; keep the first token.
          std::istringstream ss(h->value);
          ss >> f.type;
        } else if (h->key == "DIMENSION") {
          try {
            f.dimension = std::stoi(h->value);
          } catch (const std::exception&) {
            throw ParseError("bad DIMENSION value: " + h->value, lineno);
          }
          if (f.dimension < 1) throw ParseError("DIMENSION must be positive", lineno);
        } else if (h->key == "CAPACITY") {
          try {
            f.capacity = std::stoi(h->value);
          } catch (const std::exception&) {
            throw ParseError("bad CAPACITY value: " + h->value, lineno);
          }
        } else if (h->key == "EDGE_WEIGHT_TYPE") {
          f.edge_weight_type = h->value;
        }
        // Unknown header keys (COMMENT, BEST_KNOWN, ...) are ignored.
        break;
      }
      case Section::Coords: {
        std::istringstream ss(t);
        long id;
        double x, y;
        if (!(ss >> id >> x >> y)) throw ParseError("malformed coordinate line: " + t, lineno);
        if (id < 1 || id > f.dimension)
          throw ParseError("coordinate id out of range: " + std::to_string(id), lineno);
        if (f.has_coord[id - 1])
          throw ParseError("duplicate coordinate id: " + std::to_string(id), lineno);
        f.coords[id - 1] = {x, y};
        f.has_coord[id - 1] = true;
        break;
      }
      case Section::Demands: {
        std::istringstream ss(t);
        long id;
        long d;
        if (!(ss >> id >> d)) throw ParseError("malformed demand line: " + t, lineno);
        if (id < 1 || id > f.dimension)
          throw ParseError("demand id out of range: " + std::to_string(id), lineno);
        if (f.has_demand[id - 1])
          throw ParseError("duplicate demand id: " + std::to_string(id), lineno);
        f.demands[id - 1] = static_cast<int>(d);
        f.has_demand[id - 1] = true;
        break;
      }
      case Section::Depots: {
        std::istringstream ss(t);
        long id;
        if (!(ss >> id)) throw ParseError("malformed depot line: " + t, lineno);
        if (id == -1) {
          section = Section::Done;
        } else {
          if (id < 1 || id > f.dimension)
            throw ParseError("depot id out of range: " + std::to_string(id), lineno);
          f.depot_ids.push_back(static_cast<int>(id));
        }
        break;
      }
      case Section::Done:
        throw ParseError("unexpected content after DEPOT_SECTION terminator: " + t, lineno);
    }
  }

  if (f.dimension <= 0) throw ParseError("missing DIMENSION header");
  if (f.edge_weight_type != "EUC_2D")
    throw UnsupportedFormat("unsupported EDGE_WEIGHT_TYPE: " + f.edge_weight_type);
  if (f.has_coord.empty()) throw ParseError("missing NODE_COORD_SECTION");
  for (int i = 0; i < f.dimension; ++i) {
    if (!f.has_coord[i])
      throw ParseError("missing coordinates for node " + std::to_string(i + 1));
  }
  return f;
}

}  // namespace detail

inline RoutingInstance parse_tsplib(std::istream& in) {
  detail::LibFile f = detail::parse_lib_stream(in);
  if (!f.type.empty() && f.type != "TSP")
    throw UnsupportedFormat("expected TYPE: TSP, got " + f.type);
  if (f.dimension < 3) throw ParseError("TSP instance needs at least 3 nodes");
  RoutingInstance inst;
  inst.kind = Kind::TSP;
  inst.name = f.name;
  inst.coords = std::move(f.coords);
  inst.distance_mode = DistanceMode::EuclidRounded;
  check_instance(inst);
  return inst;
}

inline RoutingInstance parse_cvrplib(std::istream& in) {
  detail::LibFile f = detail::parse_lib_stream(in);
  if (!f.type.empty() && f.type != "CVRP")
    throw UnsupportedFormat("expected TYPE: CVRP, got " + f.type);
  if (f.capacity <= 0) throw ParseError("missing or non-positive CAPACITY header");
  if (f.has_demand.empty()) throw ParseError("missing DEMAND_SECTION");
  for (int i = 0; i < f.dimension; ++i) {
    if (!f.has_demand[i]) throw ParseError("missing demand for node " + std::to_string(i + 1));
  }
  int depot_id = 1;
  if (!f.depot_ids.empty()) {
    if (f.depot_ids.size() > 1) throw UnsupportedFormat("multiple depots are not supported");
    depot_id = f.depot_ids[0];
  }
  RoutingInstance inst;
  inst.kind = Kind::CVRP;
  inst.name = f.name;
  inst.capacity = f.capacity;
  inst.coords = std::move(f.coords);
  inst.demands = std::move(f.demands);
  // Internally the depot is always node 0.
  if (depot_id != 1) {
    std::swap(inst.coords[0], inst.coords[depot_id - 1]);
    std::swap(inst.demands[0], inst.demands[depot_id - 1]);
  }
  if (inst.demands[0] != 0) throw ValidationError("depot demand must be zero");
  inst.distance_mode = DistanceMode::EuclidRounded;
  check_instance(inst);
  return inst;
}

inline RoutingInstance parse_tsplib_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);
  return parse_tsplib(in);
}

inline RoutingInstance parse_cvrplib_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);
  return parse_cvrplib(in);
}

// Writes an instance back in TSPLIB/CVRPLIB format. parse(serialize(x))
// reproduces x exactly for instances with rounded distances.
inline std::string serialize_tsplib(const RoutingInstance& inst) {
  std::ostringstream out;
  out.precision(17);
  out << "NAME : " << (inst.name.empty() ? "unnamed" : inst.name) << "\n";
  out << "TYPE : " << (inst.kind == Kind::TSP ? "TSP" : "CVRP") << "\n";
  out << "DIMENSION : " << inst.size() << "\n";
  out << "EDGE_WEIGHT_TYPE : EUC_2D\n";
  if (inst.kind == Kind::CVRP) out << "CAPACITY : " << inst.capacity << "\n";
  out << "NODE_COORD_SECTION\n";
  for (int i = 0; i < inst.size(); ++i)
    out << (i + 1) << " " << inst.coords[i].x << " " << inst.coords[i].y << "\n";
  if (inst.kind == Kind::CVRP) {
    out << "DEMAND_SECTION\n";
    for (int i = 0; i < inst.size(); ++i) out << (i + 1) << " " << inst.demands[i] << "\n";
    out << "DEPOT_SECTION\n1\n-1\n";
  }
  out << "EOF\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// JSON serialization

inline void to_json(nlohmann::json& j, const RoutingInstance& inst) {
  j = nlohmann::json{
      {"kind", inst.kind == Kind::TSP ? "TSP" : "CVRP"},
      {"name", inst.name},
      {"distance_mode",
       inst.distance_mode == DistanceMode::EuclidReal ? "euclid_real" : "euclid_rounded"},
      {"scale", inst.scale},
  };
  nlohmann::json coords = nlohmann::json::array();
  for (const Point& p : inst.coords) coords.push_back({p.x, p.y});
  j["coords"] = std::move(coords);
  if (inst.kind == Kind::CVRP) {
    j["capacity"] = inst.capacity;
    j["demands"] = inst.demands;
  }
}

inline void from_json(const nlohmann::json& j, RoutingInstance& inst) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "TSP") {
    inst.kind = Kind::TSP;
  } else if (kind == "CVRP") {
    inst.kind = Kind::CVRP;
  } else {
    throw ValidationError("unknown instance kind: " + kind);
  }
  inst.name = j.value("name", std::string{});
  const std::string mode = j.value("distance_mode", std::string{"euclid_real"});
  if (mode == "euclid_real") {
    inst.distance_mode = DistanceMode::EuclidReal;
  } else if (mode == "euclid_rounded") {
    inst.distance_mode = DistanceMode::EuclidRounded;
  } else {
    throw ValidationError("unknown distance mode: " + mode);
  }
  inst.scale = j.value("scale", 1.0);
  inst.coords.clear();
  for (const auto& c : j.at("coords")) {
    if (!c.is_array() || c.size() != 2) throw ValidationError("coords entries must be [x, y]");
    inst.coords.push_back({c[0].get<double>(), c[1].get<double>()});
  }
  if (inst.kind == Kind::CVRP) {
    inst.capacity = j.at("capacity").get<int>();
    inst.demands = j.at("demands").get<std::vector<int>>();
  } else {
    inst.capacity = 0;
    inst.demands.clear();
  }
  check_instance(inst);
}

inline bool operator==(const RoutingInstance& a, const RoutingInstance& b) {
  return a.kind == b.kind && a.name == b.name && a.coords == b.coords && a.demands == b.demands &&
         a.capacity == b.capacity && a.distance_mode == b.distance_mode && a.scale == b.scale;
}

}  // namespace l2gls
