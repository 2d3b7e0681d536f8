#include "cmms/fractal.hpp"

#include "cmms/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace cmms {
namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

// 4^n cardinalities and recursion depth stay in safe integer range here.
constexpr int kMaxEnumerationLevel = 12;
constexpr int kMaxDisjointnessDepth = 10;
constexpr int kMaxExactSeriesDepth = 14;  // 16^15 would leave int64

int two_adic_valuation(int x) {
  int v = 0;
  while (x > 0 && x % 2 == 0) {
    x /= 2;
    ++v;
  }
  return v;
}

int snap_node(const DiscreteMMS& grid, const Point& p) {
  const int nx = grid.grid->nx;
  const int ny = grid.grid->ny;
  double xmin = grid.coords[0][0], ymin = grid.coords[0][1];
  const double hx = grid.coords[1][0] - xmin;  // node 1 is (i=1, j=0)
  const double hy = grid.coords[static_cast<std::size_t>(nx)][1] - ymin;
  const auto clamp_idx = [](double t, int hi) {
    return std::clamp(static_cast<int>(std::llround(t)), 0, hi - 1);
  };
  const int i = clamp_idx((p[0] - xmin) / hx, nx);
  const int j = clamp_idx((p[1] - ymin) / hy, ny);
  return j * nx + i;
}

ScalarField weight_field(const FractalParams& params, const DiscreteMMS& grid, int level) {
  ScalarField w(static_cast<std::size_t>(grid.n));
  parallel_for(grid.n, [&](int i) { w[i] = fractal_weight(params, grid.coords[i], level); });
  for (int i = 0; i < grid.n; ++i)
    if (!std::isfinite(w[i]))
      fail("fractal grid: node " + std::to_string(i) + " coincides with a ball center");
  return w;
}

// One Dijkstra per distinct source, shared across the pair list.
std::vector<double> pair_distances(const DiscreteMMS& space,
                                   const std::vector<std::pair<int, int>>& pairs) {
  std::vector<int> sources;
  for (const auto& pr : pairs) sources.push_back(pr.first);
  std::sort(sources.begin(), sources.end());
  sources.erase(std::unique(sources.begin(), sources.end()), sources.end());

  std::vector<ScalarField> dist(sources.size());
  parallel_for(static_cast<int>(sources.size()),
               [&](int s) { dist[s] = geodesic_distance(space, sources[s]).dist; });

  std::vector<double> out;
  for (const auto& pr : pairs) {
    const auto it = std::lower_bound(sources.begin(), sources.end(), pr.first);
    out.push_back(dist[static_cast<std::size_t>(it - sources.begin())][pr.second]);
  }
  return out;
}

DiscreteMMS fractal_grid(int resolution) {
  return build_centered_grid_space(resolution, resolution, Bounds::symmetric_square());
}

void require_offset_resolution(int resolution, int level, const char* who) {
  if (resolution < 4) fail(std::string(who) + ": resolution must be >= 4");
  if (two_adic_valuation(resolution) < level + 1)
    fail(std::string(who) + ": resolution " + std::to_string(resolution) +
         " must be divisible by 2^" + std::to_string(level + 1) +
         " so grid nodes avoid all ball centers up to level " + std::to_string(level));
}

}  // namespace

double FractalParams::eps_n(int n) const {
  if (n < 0 || n > depth) fail("FractalParams::eps_n: level " + std::to_string(n) + " out of range");
  if (eps_schedule.empty()) return std::ldexp(eps, -3 * n);
  return eps_schedule[static_cast<std::size_t>(n)];
}

void FractalParams::validate() const {
  if (!(eps > 0.0) || !(eps < 0.25))
    fail("FractalParams: eps must lie in (0, 1/4), got " + std::to_string(eps));
  if (!(gamma_exp > 0.0) || !(gamma_exp < 1.0))
    fail("FractalParams: gamma_exp must lie in (0, 1), got " + std::to_string(gamma_exp));
  if (depth < 0 || depth > 40)
    fail("FractalParams: depth must lie in [0, 40], got " + std::to_string(depth));
  if (!eps_schedule.empty() && eps_schedule.size() < static_cast<std::size_t>(depth) + 1)
    fail("FractalParams: schedule has " + std::to_string(eps_schedule.size()) +
         " entries for depth " + std::to_string(depth));
  for (int n = 0; n <= depth; ++n) {
    const double en = eps_n(n);
    const double cap = std::ldexp(eps, -3 * n);
    if (!(en > 0.0) || !(en <= cap))
      fail("FractalParams: eps_n(" + std::to_string(n) + ") = " + std::to_string(en) +
           " violates 0 < eps_n <= eps * 8^-n = " + std::to_string(cap));
  }
}

Point DyadicCenter::position() const {
  return {std::ldexp(static_cast<double>(ax), -level), std::ldexp(static_cast<double>(ay), -level)};
}

std::vector<DyadicCenter> level_centers(int n) {
  if (n < 0 || n > kMaxEnumerationLevel)
    fail("level_centers: level must lie in [0, " + std::to_string(kMaxEnumerationLevel) +
         "], got " + std::to_string(n));
  std::vector<DyadicCenter> cur{DyadicCenter{0, 0, 0}};
  for (int lev = 1; lev <= n; ++lev) {
    std::vector<DyadicCenter> next;
    next.reserve(cur.size() * 4);
    for (const DyadicCenter& c : cur) {
      // quarter centers in the fixed child order UR, UL, DL, DR
      next.push_back({2 * c.ax + 1, 2 * c.ay + 1, lev});
      next.push_back({2 * c.ax - 1, 2 * c.ay + 1, lev});
      next.push_back({2 * c.ax - 1, 2 * c.ay - 1, lev});
      next.push_back({2 * c.ax + 1, 2 * c.ay - 1, lev});
    }
    cur = std::move(next);
  }
  return cur;
}

std::vector<Point> enumerate_centers(const FractalParams& params, int n) {
  params.validate();
  if (n > params.depth)
    fail("enumerate_centers: level " + std::to_string(n) + " exceeds depth " +
         std::to_string(params.depth));
  std::vector<Point> out;
  for (const DyadicCenter& c : level_centers(n)) out.push_back(c.position());
  return out;
}

double fractal_weight(const FractalParams& params, const Point& x, int level) {
  params.validate();
  if (level < 0 || level > params.depth)
    fail("fractal_weight: level " + std::to_string(level) + " exceeds depth " +
         std::to_string(params.depth));

  // Any ball that contains x belongs to the square chain containing x: a
  // foreign level-n center sits at least a half-side 2^{-n} > eps_n away.
  double total = 0.0;
  double cx = 0.0, cy = 0.0;
  for (int n = 0; n <= level; ++n) {
    const double r = std::hypot(x[0] - cx, x[1] - cy);
    if (r == 0.0) return std::numeric_limits<double>::infinity();
    const double en = params.eps_n(n);
    if (r < en) total += params.gamma_exp * std::log(en / r);
    const double step = std::ldexp(1.0, -(n + 1));
    cx += (x[0] >= cx) ? step : -step;
    cy += (x[1] >= cy) ? step : -step;
  }
  return total;
}

SeriesReport measure_diameter_bounds(const FractalParams& params) {
  params.validate();
  SeriesReport r;
  r.measure_bound = 2.0 * std::numbers::pi * params.eps * params.eps;
  r.diam_bound = 4.0 * params.eps;
  r.partials_increasing = true;

  double measure = 0.0, diam = 0.0;
  for (int n = 0; n <= params.depth; ++n) {
    const double count = std::ldexp(1.0, 2 * n);  // 4^n
    const double en = params.eps_n(n);
    measure += count * std::numbers::pi * en * en;
    diam += count * 2.0 * en;
    if (!r.measure_partial.empty() &&
        (measure <= r.measure_partial.back() || diam <= r.diam_partial.back()))
      r.partials_increasing = false;
    r.measure_partial.push_back(measure);
    r.diam_partial.push_back(diam);
  }
  r.measure_total = measure;
  r.diam_sum = diam;
  r.measure_ok = measure < r.measure_bound;
  r.diam_ok = diam <= r.diam_bound;
  r.pass = r.measure_ok && r.diam_ok && r.partials_increasing;
  return r;
}

bool series_bounds_exact(int depth) {
  if (depth < 0 || depth > kMaxExactSeriesDepth)
    fail("series_bounds_exact: depth must lie in [0, " + std::to_string(kMaxExactSeriesDepth) +
         "], got " + std::to_string(depth));
  // measure: sum 16^{-n} < 2, cleared by 16^depth; diameter: sum 2^{-n} <= 2,
  // cleared by 2^depth. All terms are exact powers of two.
  std::int64_t sum16 = 0;
  for (int n = 0; n <= depth; ++n) sum16 += std::int64_t{1} << (4 * (depth - n));
  const bool measure_ok = sum16 < (std::int64_t{2} << (4 * depth));
  std::int64_t sum2 = 0;
  for (int n = 0; n <= depth; ++n) sum2 += std::int64_t{1} << (depth - n);
  const bool diam_ok = sum2 <= (std::int64_t{2} << depth);
  return measure_ok && diam_ok;
}

DisjointnessReport check_disjointness(const FractalParams& params) {
  params.validate();
  if (params.depth > kMaxDisjointnessDepth)
    fail("check_disjointness: constructive check supports depth <= " +
         std::to_string(kMaxDisjointnessDepth) + ", got " + std::to_string(params.depth));

  DisjointnessReport rep;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  if (params.depth == 0) {
    rep.worst_margin = 0.0;
    return rep;
  }

  struct Anc {
    Point pos;
    double eps;
    int level;
  };
  std::vector<Anc> chain;
  chain.push_back({Point{0.0, 0.0}, params.eps_n(0), 0});

  const auto visit = [&](const auto& self, const DyadicCenter& c) -> void {
    const Point pos = c.position();
    const double en = params.eps_n(c.level);
    for (const Anc& a : chain) {
      const double dist = std::hypot(pos[0] - a.pos[0], pos[1] - a.pos[1]);
      const double margin = dist - (en + a.eps);
      if (margin < rep.worst_margin) rep.worst_margin = margin;
      if (margin <= 0.0 && rep.ok) {
        rep.ok = false;
        rep.level_a = a.level;
        rep.level_b = c.level;
        rep.center_a = a.pos;
        rep.center_b = pos;
      }
    }
    if (c.level == params.depth) return;
    chain.push_back({pos, en, c.level});
    const int lev = c.level + 1;
    self(self, DyadicCenter{2 * c.ax + 1, 2 * c.ay + 1, lev});
    self(self, DyadicCenter{2 * c.ax - 1, 2 * c.ay + 1, lev});
    self(self, DyadicCenter{2 * c.ax - 1, 2 * c.ay - 1, lev});
    self(self, DyadicCenter{2 * c.ax + 1, 2 * c.ay - 1, lev});
    chain.pop_back();
  };

  const int lev = 1;
  visit(visit, DyadicCenter{1, 1, lev});
  visit(visit, DyadicCenter{-1, 1, lev});
  visit(visit, DyadicCenter{-1, -1, lev});
  visit(visit, DyadicCenter{1, -1, lev});
  return rep;
}

double approx_distance(const FractalParams& params, int level, const Point& x, const Point& y,
                       int resolution) {
  params.validate();
  if (level < 0 || level > params.depth)
    fail("approx_distance: level " + std::to_string(level) + " exceeds depth " +
         std::to_string(params.depth));
  require_offset_resolution(resolution, level, "approx_distance");

  const DiscreteMMS grid = fractal_grid(resolution);
  const ScalarField w = weight_field(params, grid, level);
  ConformalPair pair{w, ScalarField(w.size(), 0.0)};
  const DiscreteMMS t = conformal_transform(grid, pair);
  const int s = snap_node(grid, x);
  const int d = snap_node(grid, y);
  return geodesic_distance(t, s).dist[d];
}

GapReport gap_bound_check(const FractalParams& params, int level,
                          const std::vector<std::pair<Point, Point>>& sample_pairs,
                          int resolution) {
  params.validate();
  if (level < 0 || level + 1 > params.depth)
    fail("gap_bound_check: needs level + 1 <= depth, got level " + std::to_string(level) +
         ", depth " + std::to_string(params.depth));
  require_offset_resolution(resolution, level + 1, "gap_bound_check");
  if (sample_pairs.empty()) fail("gap_bound_check: empty sample set");

  const DiscreteMMS grid = fractal_grid(resolution);
  const ScalarField w_lo = weight_field(params, grid, level);
  const ScalarField w_hi = weight_field(params, grid, level + 1);
  ConformalPair lo_pair{w_lo, ScalarField(w_lo.size(), 0.0)};
  ConformalPair hi_pair{w_hi, ScalarField(w_hi.size(), 0.0)};
  const DiscreteMMS t_lo = conformal_transform(grid, lo_pair);
  const DiscreteMMS t_hi = conformal_transform(grid, hi_pair);

  std::vector<std::pair<int, int>> node_pairs;
  for (const auto& pr : sample_pairs)
    node_pairs.emplace_back(snap_node(grid, pr.first), snap_node(grid, pr.second));

  const std::vector<double> d_lo = pair_distances(t_lo, node_pairs);
  const std::vector<double> d_hi = pair_distances(t_hi, node_pairs);

  GapReport rep;
  rep.level = level;
  const double tail = std::ldexp(1.0, -(level + 1));  // 2^{-(level+1)}
  rep.bound = std::numbers::pi * params.eps * tail +
              2.0 * params.eps / (1.0 - params.gamma_exp) * std::ldexp(1.0, -3 * (level + 1));
  rep.grid_tol = 8.0 * (2.0 / resolution);

  for (std::size_t p = 0; p < sample_pairs.size(); ++p) {
    GapPair gp;
    gp.x = sample_pairs[p].first;
    gp.y = sample_pairs[p].second;
    gp.d_lo = d_lo[p];
    gp.d_hi = d_hi[p];
    gp.gap = gp.d_hi - gp.d_lo;
    rep.max_gap = std::max(rep.max_gap, gp.gap);
    if (gp.gap < -1e-12) rep.monotone = false;
    if (!(gp.gap <= rep.bound + rep.grid_tol)) rep.under_bound = false;
    rep.pairs.push_back(gp);
  }
  rep.sandwich = distance_sandwich_check(grid, w_hi, w_lo, node_pairs);
  rep.pass = rep.monotone && rep.under_bound && rep.sandwich.pass;
  return rep;
}

RadialReport radial_bound_check(const FractalParams& params, int n, int k, int resolution) {
  params.validate();
  if (n < 0 || n > params.depth)
    fail("radial_bound_check: level " + std::to_string(n) + " exceeds depth " +
         std::to_string(params.depth));
  if (resolution < 4 || resolution % 2 != 0)
    fail("radial_bound_check: resolution must be even and >= 4 so no node hits the center");

  const std::vector<DyadicCenter> centers = level_centers(n);
  if (k < 0 || static_cast<std::size_t>(k) >= centers.size())
    fail("radial_bound_check: center index " + std::to_string(k) + " out of range for level " +
         std::to_string(n));
  const Point c = centers[static_cast<std::size_t>(k)].position();
  const double en = params.eps_n(n);

  const Bounds local{c[0] - en, c[1] - en, c[0] + en, c[1] + en};
  const DiscreteMMS grid = build_centered_grid_space(resolution, resolution, local);

  // Single-ball weight: the isolation precondition says no other ball meets
  // this neighborhood, so the radial cost only sees this pole.
  ScalarField w(static_cast<std::size_t>(grid.n));
  for (int i = 0; i < grid.n; ++i) {
    const double r = std::hypot(grid.coords[i][0] - c[0], grid.coords[i][1] - c[1]);
    w[i] = r < en ? params.gamma_exp * std::log(en / r) : 0.0;
  }
  ConformalPair pair{w, ScalarField(w.size(), 0.0)};
  const DiscreteMMS t = conformal_transform(grid, pair);

  const int start = snap_node(grid, c);
  const ScalarField dist = geodesic_distance(t, start).dist;

  RadialReport rep;
  rep.start_radius = std::hypot(grid.coords[start][0] - c[0], grid.coords[start][1] - c[1]);
  rep.analytic = en / (1.0 - params.gamma_exp);
  rep.measured = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid.n; ++i) {
    const double r = std::hypot(grid.coords[i][0] - c[0], grid.coords[i][1] - c[1]);
    if (r >= en) rep.measured = std::min(rep.measured, dist[i]);
  }
  const double h = 2.0 * en / resolution;
  // First cells sit in the singular zone where the trapezoid rule overpays
  // by O(h^{1-gamma} eps^gamma); the rest is ordinary O(h) path slack.
  rep.tolerance = 4.0 * std::pow(h, 1.0 - params.gamma_exp) * std::pow(en, params.gamma_exp) +
                  4.0 * h;
  rep.pass = rep.measured <= rep.analytic + rep.tolerance;
  return rep;
}

}  // namespace cmms
