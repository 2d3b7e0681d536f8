#pragma once

#include "cmms/field.hpp"

#include <array>
#include <optional>
#include <utility>
#include <vector>

namespace cmms {

using Point = std::array<double, 2>;

struct Edge {
  int i = 0;
  int j = 0;               // endpoints, stored once with i < j
  double length = 0.0;     // positive
  double sigma = -1.0;     // transverse cell width for finite-volume grids; < 0 when absent
};

struct GridShape {
  int nx = 0;
  int ny = 0;
};

struct Bounds {
  double xmin = 0.0, ymin = 0.0, xmax = 1.0, ymax = 1.0;

  static Bounds unit_square() { return {0.0, 0.0, 1.0, 1.0}; }
  static Bounds symmetric_square() { return {-1.0, -1.0, 1.0, 1.0}; }
};

/** Weighted-graph realization of a metric measure space.
 *
 * Nodes carry a measure and a local dimension; edges carry positive lengths.
 * Spaces built by the grid constructors also carry coordinates, per-edge
 * transverse widths and per-node cell volumes, which lets the calculus module
 * assemble a finite-volume Dirichlet form; spaces without that data get a
 * degree-normalized conductance heuristic instead.
 *
 * Invariants, established by finalize():
 *   - edge endpoints are distinct, in range, deduplicated, with i < j;
 *   - lengths and measures are positive and finite;
 *   - adjacency holds both directions of every edge;
 *   - `connected` reflects a full BFS sweep.
 */
struct DiscreteMMS {
  int n = 0;
  std::vector<Edge> edges;
  std::vector<double> measure;
  std::vector<int> dim_loc;
  std::vector<Point> coords;        // empty when coordinates are absent
  std::vector<double> cell_volume;  // empty for non-grid spaces
  std::vector<int> boundary;        // geometric boundary nodes (grids); may be empty
  std::optional<GridShape> grid;
  bool connected = true;

  // CSR adjacency over both edge directions
  std::vector<int> adj_start;  // size n + 1
  std::vector<int> adj_node;
  std::vector<int> adj_edge;   // index into `edges` per adjacency slot

  bool has_coords() const { return !coords.empty(); }
  bool has_fv_data() const { return !cell_volume.empty(); }
  int degree(int i) const { return adj_start[i + 1] - adj_start[i]; }

  // Validates the invariants above and (re)builds adjacency. Throws
  // std::invalid_argument on malformed data.
  void finalize();
};

// Axis-aligned grid with nodes at lattice points including the bounds
// corners. Spacing hx = width/(nx-1), hy = height/(ny-1); node measure is
// the area of its Voronoi cell clipped to the bounds (quarter cells at
// corners, half cells along sides). Requires nx, ny >= 2 and a
// non-degenerate rectangle.
DiscreteMMS build_grid_space(int nx, int ny, Bounds b);

// Same rectangle but nodes sit at cell centers: spacing hx = width/nx, all
// measures equal hx*hy and no node lies on the bounds. Used where node
// placement must avoid a prescribed lattice of singular points.
DiscreteMMS build_centered_grid_space(int nx, int ny, Bounds b);

// 1D segment with n nodes, end cells halved; dim_loc = 1.
DiscreteMMS build_path_space(int n, double length);

/** Applies the conformal data: every edge length picks up the trapezoid
 * factor (e^{w_i} + e^{w_j})/2, node measures scale by e^{v_i}. Grid
 * metadata transforms consistently: transverse widths scale by the same
 * edge factor per transverse dimension and cell volumes by e^{dim_loc * w}.
 * Coordinates and topology are unchanged.
 */
DiscreteMMS conformal_transform(const DiscreteMMS& space, const ConformalPair& pair);

struct GeodesicResult {
  ScalarField dist;     // +infinity where unreachable
  int unreachable = 0;  // count of unreachable nodes
};

// Single-source shortest paths over edge lengths (Dijkstra). Ties are broken
// toward the smaller node index, so results are deterministic.
GeodesicResult geodesic_distance(const DiscreteMMS& space, int source);

struct SandwichReport {
  double eps_hat = 0.0;          // sup |w1 - w2| over nodes
  double lo = 1.0, hi = 1.0;     // exp(-eps_hat), exp(eps_hat)
  double worst_ratio_dev = 0.0;  // how far any d1/d2 strays outside [lo, hi]
  int pairs_checked = 0;
  int pairs_skipped = 0;         // pairs with an unreachable endpoint
  bool pass = false;
};

// Distances under two weights w1, w2 (measure left alone) compared pairwise:
// every ratio d_{w1}/d_{w2} must lie in [e^{-eps_hat}, e^{eps_hat}] where
// eps_hat = sup|w1 - w2|. On a fixed graph this holds edge by edge, so the
// check is exact up to rounding.
SandwichReport distance_sandwich_check(const DiscreteMMS& space,
                                       const ScalarField& w1, const ScalarField& w2,
                                       const std::vector<std::pair<int, int>>& pairs);

// mask[i] = 1 iff node i is at graph distance >= collar from every boundary
// node. With an empty boundary set, everything is interior.
std::vector<char> interior_mask(const DiscreteMMS& space, int collar);

}  // namespace cmms
