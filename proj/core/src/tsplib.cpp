#include "nco/tsplib.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nco/errors.hpp"

namespace nco {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// "KEY : value" / "KEY: value" / bare section names.
bool split_header(const std::string& line, std::string& key, std::string& value) {
  const auto colon = line.find(':');
  if (colon == std::string::npos) {
    key = trim(line);
    value.clear();
    return !key.empty();
  }
  key = trim(line.substr(0, colon));
  value = trim(line.substr(colon + 1));
  return true;
}

double extent_of(const std::vector<Point>& coords) {
  double minx = coords[0].x, maxx = coords[0].x, miny = coords[0].y, maxy = coords[0].y;
  for (const auto& p : coords) {
    minx = std::min(minx, p.x);
    maxx = std::max(maxx, p.x);
    miny = std::min(miny, p.y);
    maxy = std::max(maxy, p.y);
  }
  return std::max(maxx - minx, maxy - miny);
}

struct RawFile {
  std::string name;
  std::string edge_weight_type;
  int dimension = -1;
  int capacity = -1;
  std::vector<Point> coords;      // by 1-based node id
  std::vector<int> demands;       // by 1-based node id
  std::vector<int> depot_ids;     // 1-based
  bool has_coords = false, has_demands = false;
};

RawFile parse_raw(const std::string& text, bool want_cvrp) {
  RawFile f;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  enum Section { kHeader, kCoords, kDemands, kDepot } section = kHeader;
  int coord_rows = 0, demand_rows = 0;

  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t == "EOF") break;

    // Section markers switch the parser mode wherever they appear.
    if (t == "NODE_COORD_SECTION") {
      if (f.dimension <= 0) {
        throw ParseError("line " + std::to_string(lineno) +
                         ": NODE_COORD_SECTION before DIMENSION");
      }
      f.coords.assign(f.dimension, {});
      f.has_coords = true;
      section = kCoords;
      continue;
    }
    if (t == "DEMAND_SECTION") {
      if (f.dimension <= 0) {
        throw ParseError("line " + std::to_string(lineno) + ": DEMAND_SECTION before DIMENSION");
      }
      f.demands.assign(f.dimension, 0);
      f.has_demands = true;
      section = kDemands;
      continue;
    }
    if (t == "DEPOT_SECTION") {
      section = kDepot;
      continue;
    }

    if (section == kHeader) {
      std::string key, value;
      if (!split_header(t, key, value)) continue;
      auto as_int = [&](const std::string& v) {
        try {
          return std::stoi(v);
        } catch (const std::exception&) {
          throw ParseError("line " + std::to_string(lineno) + ": expected integer for " + key +
                           ", got '" + v + "'");
        }
      };
      if (key == "NAME") f.name = value;
      else if (key == "EDGE_WEIGHT_TYPE") f.edge_weight_type = value;
      else if (key == "DIMENSION") f.dimension = as_int(value);
      else if (key == "CAPACITY") f.capacity = as_int(value);
      // TYPE / COMMENT / etc. are accepted and ignored
      continue;
    }

    std::istringstream ls(t);
    if (section == kCoords) {
      int id;
      double x, y;
      if (!(ls >> id >> x >> y) || id < 1 || id > f.dimension) {
        throw ParseError("line " + std::to_string(lineno) + ": malformed coordinate line '" + t +
                         "'");
      }
      f.coords[id - 1] = {x, y};
      ++coord_rows;
    } else if (section == kDemands) {
      int id, d;
      if (!(ls >> id >> d) || id < 1 || id > f.dimension) {
        throw ParseError("line " + std::to_string(lineno) + ": malformed demand line '" + t + "'");
      }
      f.demands[id - 1] = d;
      ++demand_rows;
    } else if (section == kDepot) {
      int id;
      if (ls >> id) {
        if (id == -1) section = kHeader;
        else f.depot_ids.push_back(id);
      }
    }
  }

  if (f.edge_weight_type != "EUC_2D") {
    throw ParseError("unsupported EDGE_WEIGHT_TYPE '" + f.edge_weight_type +
                     "' (only EUC_2D is supported)");
  }
  if (!f.has_coords) throw ParseError("missing NODE_COORD_SECTION");
  if (coord_rows != f.dimension) {
    throw ParseError("NODE_COORD_SECTION has " + std::to_string(coord_rows) + " of " +
                     std::to_string(f.dimension) + " coordinate lines");
  }
  if (want_cvrp) {
    if (f.capacity <= 0) throw ParseError("missing CAPACITY");
    if (!f.has_demands) throw ParseError("missing DEMAND_SECTION");
    if (demand_rows != f.dimension) {
      throw ParseError("DEMAND_SECTION has " + std::to_string(demand_rows) + " of " +
                       std::to_string(f.dimension) + " demand lines");
    }
  }
  return f;
}

}  // namespace

ProblemInstance parse_tsplib(const std::string& text) {
  RawFile f = parse_raw(text, false);
  ProblemInstance inst;
  inst.kind = ProblemKind::kTsp;
  inst.id = f.name;
  inst.coords = std::move(f.coords);
  inst.scale_hint = extent_of(inst.coords);
  inst.validate();
  return inst;
}

ProblemInstance parse_cvrplib(const std::string& text) {
  RawFile f = parse_raw(text, true);
  int depot_id = f.depot_ids.empty() ? 1 : f.depot_ids[0];
  if (depot_id < 1 || depot_id > f.dimension) {
    throw ParseError("depot id " + std::to_string(depot_id) + " out of range");
  }
  ProblemInstance inst;
  inst.kind = ProblemKind::kCvrp;
  inst.id = f.name;
  inst.capacity = f.capacity;
  // Depot first, then the remaining nodes in file order.
  inst.coords.push_back(f.coords[depot_id - 1]);
  inst.demands.push_back(0);
  for (int i = 0; i < f.dimension; ++i) {
    if (i == depot_id - 1) continue;
    inst.coords.push_back(f.coords[i]);
    inst.demands.push_back(f.demands[i]);
  }
  if (f.demands[depot_id - 1] != 0) {
    throw ValidationError("depot demand must be 0, got " +
                          std::to_string(f.demands[depot_id - 1]));
  }
  inst.scale_hint = extent_of(inst.coords);
  inst.validate();
  return inst;
}

std::int64_t tsplib_distance(const Point& a, const Point& b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return static_cast<std::int64_t>(std::llround(std::sqrt(dx * dx + dy * dy)));
}

std::int64_t tsplib_tour_cost(const std::vector<int>& tour, const ProblemInstance& raw) {
  std::int64_t c = 0;
  for (std::size_t i = 0; i + 1 < tour.size(); ++i)
    c += tsplib_distance(raw.coords[tour[i]], raw.coords[tour[i + 1]]);
  if (tour.size() > 1) c += tsplib_distance(raw.coords[tour.back()], raw.coords[tour.front()]);
  return c;
}

std::int64_t tsplib_route_cost(const std::vector<int>& actions, const ProblemInstance& raw) {
  std::int64_t c = 0;
  int prev = 0;
  for (int a : actions) {
    c += tsplib_distance(raw.coords[prev], raw.coords[a]);
    prev = a;
  }
  if (prev != 0) c += tsplib_distance(raw.coords[prev], raw.coords[0]);
  return c;
}

ProblemInstance rescale_to_unit(const ProblemInstance& raw) {
  ProblemInstance out = raw;
  double minx = raw.coords[0].x, maxx = raw.coords[0].x;
  double miny = raw.coords[0].y, maxy = raw.coords[0].y;
  for (const auto& p : raw.coords) {
    minx = std::min(minx, p.x);
    maxx = std::max(maxx, p.x);
    miny = std::min(miny, p.y);
    maxy = std::max(maxy, p.y);
  }
  const double scale = std::max(maxx - minx, maxy - miny);
  const double s = scale > 0.0 ? scale : 1.0;
  for (auto& p : out.coords) p = {(p.x - minx) / s, (p.y - miny) / s};
  out.scale_hint = scale;
  return out;
}

}  // namespace nco
