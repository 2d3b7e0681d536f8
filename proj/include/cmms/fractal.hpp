#pragma once

#include "cmms/space.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace cmms {

/** Parameters of the singular-weight construction on [-1,1]^2.
 *
 * Level n carries 4^n balls of radius eps_n centered at the dyadic square
 * centers; the weight adds gamma_exp * ln(eps_n / r) inside each ball.
 * The schedule must satisfy 0 < eps_n <= eps * 8^{-n} for every n <= depth
 * (default: equality). validate() enforces the numeric bounds; ball
 * disjointness is a separate constructive check.
 */
struct FractalParams {
  double eps = 0.1;
  double gamma_exp = 0.5;
  int depth = 3;
  std::vector<double> eps_schedule;  // empty -> eps * 8^{-n}; else one entry per level

  double eps_n(int n) const;
  void validate() const;
};

/** Square center with exact dyadic coordinates a / 2^level.
 * Level 0 is the origin; children keep coordinates odd (a' = 2a +- 1). */
struct DyadicCenter {
  std::int64_t ax = 0;
  std::int64_t ay = 0;
  int level = 0;

  Point position() const;
};

// All level-n centers in recursion order: each parent expands to its
// upper-right, upper-left, lower-left, lower-right quarter centers.
std::vector<DyadicCenter> level_centers(int n);
std::vector<Point> enumerate_centers(const FractalParams& params, int n);

// Partial weight w_level(x), the sum over levels 0..level. Exactly +infinity
// when x sits on a ball center (the weight's poles); finite elsewhere.
// Per level only the ball around the center of the square containing x can
// reach x, so evaluation descends the quadtree in O(level).
double fractal_weight(const FractalParams& params, const Point& x, int level);

struct SeriesReport {
  double measure_total = 0.0;  // sum over levels of 4^n * pi * eps_n^2
  double diam_sum = 0.0;       // sum over levels of 4^n * 2 * eps_n
  double measure_bound = 0.0;  // 2 * pi * eps^2
  double diam_bound = 0.0;     // 4 * eps
  std::vector<double> measure_partial, diam_partial;  // per depth, cumulative
  bool measure_ok = false;
  bool diam_ok = false;
  bool partials_increasing = false;
  bool pass = false;
};

// Total ball measure and diameter sums against their closed-form bounds.
SeriesReport measure_diameter_bounds(const FractalParams& params);

// Integer-arithmetic verification of both series bounds for the default
// schedule: sum_{n<=depth} 16^{-n} < 2 and sum_{n<=depth} 2^{-n} <= 2,
// cleared of denominators so every quantity is an exact int64.
bool series_bounds_exact(int depth);

struct DisjointnessReport {
  bool ok = true;
  double worst_margin = 0.0;  // min over checked pairs of |c_a - c_b| - (eps_a + eps_b)
  int level_a = -1, level_b = -1;
  Point center_a{0.0, 0.0}, center_b{0.0, 0.0};  // first violating pair
};

// Constructive check that every ball is disjoint from all earlier levels.
// Only ancestor centers can come close: a foreign level-m center sits a full
// half-side 2^{-m} away from anything outside its own square, while
// eps_n + eps_m <= 2 eps 8^{-m} < 2^{-m}; so the check walks ancestor chains.
DisjointnessReport check_disjointness(const FractalParams& params);

// Shortest-path approximation of d_level(x, y) on a cell-centered grid over
// [-1,1]^2 with edge weights from the trapezoid reweighting of e^{w_level}.
// Endpoints snap to the nearest node. The resolution must be divisible by
// 2^{level+1} so that no grid node lands on a ball center (node ordinates
// in lowest terms carry the full power of two of the resolution).
double approx_distance(const FractalParams& params, int level, const Point& x, const Point& y,
                       int resolution);

struct GapPair {
  Point x{0.0, 0.0}, y{0.0, 0.0};
  double d_lo = 0.0;  // d_level
  double d_hi = 0.0;  // d_{level+1}
  double gap = 0.0;
};

struct GapReport {
  int level = 0;          // gaps measured between level and level + 1
  double bound = 0.0;     // pi*eps*2^{-(level+1)} + 2*eps/(1-gamma)*8^{-(level+1)}
  double grid_tol = 0.0;  // declared discretization allowance, 8 * cell size
  std::vector<GapPair> pairs;
  double max_gap = 0.0;
  bool monotone = true;     // every gap >= -1e-12
  bool under_bound = true;  // every gap <= bound + grid_tol
  SandwichReport sandwich;  // distance ratios vs sup |w_{level+1} - w_level|
  bool pass = false;
};

// Measures d_{level+1} - d_level over the sample pairs on one shared grid
// and checks the closed-form gap bound plus the distance sandwich.
GapReport gap_bound_check(const FractalParams& params, int level,
                          const std::vector<std::pair<Point, Point>>& sample_pairs,
                          int resolution);

struct RadialReport {
  double measured = 0.0;      // grid distance, near-center node to ball exit
  double analytic = 0.0;      // eps_n / (1 - gamma), the exact radial integral
  double tolerance = 0.0;     // grid allowance added to the analytic value
  double start_radius = 0.0;  // offset of the start node from the center
  bool pass = false;
};

// Cost of escaping one ball: shortest path from the node nearest the level-n
// center k to any node outside the ball, under that single ball's weight
// (isolation assumed). Uses a local even-resolution grid over the ball.
RadialReport radial_bound_check(const FractalParams& params, int n, int k, int resolution);

}  // namespace cmms
