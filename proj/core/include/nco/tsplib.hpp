#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nco/problem.hpp"

namespace nco {

// TSPLib .tsp reader. Supports EDGE_WEIGHT_TYPE EUC_2D with a
// NODE_COORD_SECTION; anything else is a ParseError (with line numbers for
// malformed coordinate rows). Raw coordinates are kept; scale_hint records
// the max coordinate extent so evaluation can rescale into the unit square.
ProblemInstance parse_tsplib(const std::string& text);

// CVRPLib .vrp reader (CAPACITY, NODE_COORD_SECTION, DEMAND_SECTION,
// DEPOT_SECTION). The depot is moved to index 0.
ProblemInstance parse_cvrplib(const std::string& text);

// TSPLib EUC_2D distance: Euclidean rounded to nearest integer. Benchmark
// optima (berlin52 = 7542, ...) are defined under this metric.
std::int64_t tsplib_distance(const Point& a, const Point& b);

// Rounded tour length in raw coordinates, closing edge included.
std::int64_t tsplib_tour_cost(const std::vector<int>& tour, const ProblemInstance& raw);

// Rounded CVRP solution cost (route starts and ends at the depot).
std::int64_t tsplib_route_cost(const std::vector<int>& actions, const ProblemInstance& raw);

// Shift/scale coordinates into [0,1]^2 (shared scale on both axes, aspect
// preserved). The returned instance carries the same demands/capacity.
ProblemInstance rescale_to_unit(const ProblemInstance& raw);

}  // namespace nco
