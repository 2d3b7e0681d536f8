#include "cmms/space.hpp"

#include "cmms/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <stdexcept>
#include <string>

namespace cmms {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

}  // namespace

void DiscreteMMS::finalize() {
  if (n <= 0) fail("space: node count must be positive");
  if (static_cast<int>(measure.size()) != n) fail("space: measure size mismatch");
  if (static_cast<int>(dim_loc.size()) != n) fail("space: dim_loc size mismatch");
  if (!coords.empty() && static_cast<int>(coords.size()) != n)
    fail("space: coords size mismatch");
  if (!cell_volume.empty() && static_cast<int>(cell_volume.size()) != n)
    fail("space: cell_volume size mismatch");

  for (int i = 0; i < n; ++i) {
    if (!(measure[i] > 0.0) || !std::isfinite(measure[i]))
      fail("space: node " + std::to_string(i) + " has non-positive measure");
    if (dim_loc[i] < 1) fail("space: node " + std::to_string(i) + " has dim_loc < 1");
    if (!cell_volume.empty() && !(cell_volume[i] > 0.0))
      fail("space: node " + std::to_string(i) + " has non-positive cell volume");
  }

  // Canonicalize edges: i < j, deduplicate, reject loops and mismatched
  // duplicate lengths.
  std::map<std::pair<int, int>, Edge> dedup;
  for (Edge e : edges) {
    if (e.i == e.j) fail("space: self edge at node " + std::to_string(e.i));
    if (e.i < 0 || e.j < 0 || e.i >= n || e.j >= n)
      fail("space: edge endpoint out of range (" + std::to_string(e.i) + "," +
           std::to_string(e.j) + ")");
    if (!(e.length > 0.0) || !std::isfinite(e.length))
      fail("space: edge (" + std::to_string(e.i) + "," + std::to_string(e.j) +
           ") has non-positive length");
    if (e.i > e.j) std::swap(e.i, e.j);
    auto key = std::make_pair(e.i, e.j);
    auto it = dedup.find(key);
    if (it == dedup.end()) {
      dedup.emplace(key, e);
    } else if (it->second.length != e.length) {
      fail("space: duplicate edge (" + std::to_string(e.i) + "," + std::to_string(e.j) +
           ") with mismatched lengths");
    }
  }
  edges.clear();
  edges.reserve(dedup.size());
  for (auto& [key, e] : dedup) edges.push_back(e);

  adj_start.assign(n + 1, 0);
  for (const Edge& e : edges) {
    ++adj_start[e.i + 1];
    ++adj_start[e.j + 1];
  }
  for (int i = 0; i < n; ++i) adj_start[i + 1] += adj_start[i];
  adj_node.assign(adj_start[n], 0);
  adj_edge.assign(adj_start[n], 0);
  std::vector<int> cursor(adj_start.begin(), adj_start.end() - 1);
  for (int k = 0; k < static_cast<int>(edges.size()); ++k) {
    const Edge& e = edges[k];
    adj_node[cursor[e.i]] = e.j;
    adj_edge[cursor[e.i]++] = k;
    adj_node[cursor[e.j]] = e.i;
    adj_edge[cursor[e.j]++] = k;
  }

  // Connectivity sweep from node 0.
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int s = adj_start[u]; s < adj_start[u + 1]; ++s) {
      int v = adj_node[s];
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
    }
  }
  connected = (count == n);
}

DiscreteMMS build_grid_space(int nx, int ny, Bounds b) {
  if (nx < 2 || ny < 2)
    fail("build_grid_space: need nx, ny >= 2, got " + std::to_string(nx) + "x" +
         std::to_string(ny));
  const double width = b.xmax - b.xmin;
  const double height = b.ymax - b.ymin;
  if (!(width > 0.0) || !(height > 0.0)) fail("build_grid_space: degenerate bounds");

  const double hx = width / (nx - 1);
  const double hy = height / (ny - 1);

  DiscreteMMS s;
  s.n = nx * ny;
  s.grid = GridShape{nx, ny};
  s.coords.resize(s.n);
  s.measure.resize(s.n);
  s.cell_volume.resize(s.n);
  s.dim_loc.assign(s.n, 2);

  auto id = [nx](int i, int j) { return j * nx + i; };
  auto wx = [&](int i) { return (i == 0 || i == nx - 1) ? hx / 2.0 : hx; };
  auto wy = [&](int j) { return (j == 0 || j == ny - 1) ? hy / 2.0 : hy; };

  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      int v = id(i, j);
      s.coords[v] = {b.xmin + i * hx, b.ymin + j * hy};
      s.measure[v] = wx(i) * wy(j);
      s.cell_volume[v] = s.measure[v];
      if (i == 0 || i == nx - 1 || j == 0 || j == ny - 1) s.boundary.push_back(v);
    }
  }
  // Horizontal edges carry the y-extent of their row as transverse width,
  // vertical edges the x-extent of their column.
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i + 1 < nx; ++i)
      s.edges.push_back(Edge{id(i, j), id(i + 1, j), hx, wy(j)});
  for (int j = 0; j + 1 < ny; ++j)
    for (int i = 0; i < nx; ++i)
      s.edges.push_back(Edge{id(i, j), id(i, j + 1), hy, wx(i)});

  s.finalize();
  return s;
}

DiscreteMMS build_centered_grid_space(int nx, int ny, Bounds b) {
  if (nx < 2 || ny < 2)
    fail("build_centered_grid_space: need nx, ny >= 2, got " + std::to_string(nx) + "x" +
         std::to_string(ny));
  const double width = b.xmax - b.xmin;
  const double height = b.ymax - b.ymin;
  if (!(width > 0.0) || !(height > 0.0)) fail("build_centered_grid_space: degenerate bounds");

  const double hx = width / nx;
  const double hy = height / ny;

  DiscreteMMS s;
  s.n = nx * ny;
  s.grid = GridShape{nx, ny};
  s.coords.resize(s.n);
  s.measure.assign(s.n, hx * hy);
  s.cell_volume.assign(s.n, hx * hy);
  s.dim_loc.assign(s.n, 2);

  auto id = [nx](int i, int j) { return j * nx + i; };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      int v = id(i, j);
      s.coords[v] = {b.xmin + (i + 0.5) * hx, b.ymin + (j + 0.5) * hy};
      if (i == 0 || i == nx - 1 || j == 0 || j == ny - 1) s.boundary.push_back(v);
    }
  }
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i + 1 < nx; ++i)
      s.edges.push_back(Edge{id(i, j), id(i + 1, j), hx, hy});
  for (int j = 0; j + 1 < ny; ++j)
    for (int i = 0; i < nx; ++i)
      s.edges.push_back(Edge{id(i, j), id(i, j + 1), hy, hx});

  s.finalize();
  return s;
}

DiscreteMMS build_path_space(int n, double length) {
  if (n < 2) fail("build_path_space: need n >= 2");
  if (!(length > 0.0)) fail("build_path_space: length must be positive");
  const double h = length / (n - 1);

  DiscreteMMS s;
  s.n = n;
  s.coords.resize(n);
  s.measure.resize(n);
  s.cell_volume.resize(n);
  s.dim_loc.assign(n, 1);
  s.boundary = {0, n - 1};
  for (int i = 0; i < n; ++i) {
    s.coords[i] = {i * h, 0.0};
    s.measure[i] = (i == 0 || i == n - 1) ? h / 2.0 : h;
    s.cell_volume[i] = s.measure[i];
  }
  // 1D transverse faces are points; their width is the counting measure 1.
  for (int i = 0; i + 1 < n; ++i) s.edges.push_back(Edge{i, i + 1, h, 1.0});

  s.finalize();
  return s;
}

DiscreteMMS conformal_transform(const DiscreteMMS& space, const ConformalPair& pair) {
  require_size(pair, space.n, "conformal_transform");

  DiscreteMMS out = space;
  std::vector<double> ew(space.n);
  for (int i = 0; i < space.n; ++i) ew[i] = std::exp(pair.w[i]);

  for (Edge& e : out.edges) {
    const double edge_factor = 0.5 * (ew[e.i] + ew[e.j]);
    e.length *= edge_factor;
    if (e.sigma >= 0.0) {
      int dt = space.dim_loc[e.i] - 1;  // transverse dimension
      if (dt > 0) {
        double f = edge_factor;
        for (int k = 1; k < dt; ++k) f *= edge_factor;
        e.sigma *= f;
      }
    }
  }
  for (int i = 0; i < space.n; ++i) {
    out.measure[i] *= std::exp(pair.v[i]);
    if (!out.cell_volume.empty())
      out.cell_volume[i] *= std::exp(space.dim_loc[i] * pair.w[i]);
  }
  out.finalize();
  return out;
}

GeodesicResult geodesic_distance(const DiscreteMMS& space, int source) {
  if (source < 0 || source >= space.n)
    fail("geodesic_distance: source " + std::to_string(source) + " out of range");

  GeodesicResult r;
  r.dist = ScalarField(space.n, kInf);
  // (distance, node) ordering breaks ties toward the smaller index, which
  // pins down the settle order and keeps runs reproducible.
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
  r.dist[source] = 0.0;
  pq.emplace(0.0, source);
  std::vector<char> settled(space.n, 0);

  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (settled[u]) continue;
    settled[u] = 1;
    for (int s = space.adj_start[u]; s < space.adj_start[u + 1]; ++s) {
      int v = space.adj_node[s];
      double nd = d + space.edges[space.adj_edge[s]].length;
      if (nd < r.dist[v]) {
        r.dist[v] = nd;
        pq.emplace(nd, v);
      }
    }
  }
  for (int i = 0; i < space.n; ++i)
    if (r.dist[i] == kInf) ++r.unreachable;
  return r;
}

SandwichReport distance_sandwich_check(const DiscreteMMS& space,
                                       const ScalarField& w1, const ScalarField& w2,
                                       const std::vector<std::pair<int, int>>& pairs) {
  require_size(w1, space.n, "distance_sandwich_check");
  require_size(w2, space.n, "distance_sandwich_check");

  SandwichReport rep;
  for (int i = 0; i < space.n; ++i)
    rep.eps_hat = std::max(rep.eps_hat, std::abs(w1[i] - w2[i]));
  rep.lo = std::exp(-rep.eps_hat);
  rep.hi = std::exp(rep.eps_hat);

  ScalarField zero(space.n, 0.0);
  DiscreteMMS m1 = conformal_transform(space, ConformalPair{w1, zero});
  DiscreteMMS m2 = conformal_transform(space, ConformalPair{w2, zero});

  std::vector<int> sources;
  for (auto& [a, b] : pairs) {
    (void)b;
    if (std::find(sources.begin(), sources.end(), a) == sources.end()) sources.push_back(a);
  }
  std::vector<GeodesicResult> d1(sources.size()), d2(sources.size());
  parallel_for(static_cast<int>(sources.size()), [&](int k) {
    d1[k] = geodesic_distance(m1, sources[k]);
    d2[k] = geodesic_distance(m2, sources[k]);
  });

  for (auto& [a, b] : pairs) {
    if (a < 0 || b < 0 || a >= space.n || b >= space.n)
      fail("distance_sandwich_check: pair endpoint out of range");
    std::size_t k = std::find(sources.begin(), sources.end(), a) - sources.begin();
    double u = d1[k].dist[b];
    double v = d2[k].dist[b];
    if (!std::isfinite(u) || !std::isfinite(v) || a == b) {
      ++rep.pairs_skipped;
      continue;
    }
    double ratio = u / v;
    double dev = 0.0;
    if (ratio < rep.lo) dev = rep.lo / ratio - 1.0;
    if (ratio > rep.hi) dev = std::max(dev, ratio / rep.hi - 1.0);
    rep.worst_ratio_dev = std::max(rep.worst_ratio_dev, dev);
    ++rep.pairs_checked;
  }
  rep.pass = rep.worst_ratio_dev <= 1e-12;
  return rep;
}

std::vector<char> interior_mask(const DiscreteMMS& space, int collar) {
  std::vector<char> mask(space.n, 1);
  if (space.boundary.empty() || collar <= 0) return mask;

  std::vector<int> dist(space.n, -1);
  std::queue<int> q;
  for (int b : space.boundary) {
    if (b < 0 || b >= space.n) fail("interior_mask: boundary node out of range");
    if (dist[b] != 0) {
      dist[b] = 0;
      q.push(b);
    }
  }
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    if (dist[u] >= collar) continue;
    for (int s = space.adj_start[u]; s < space.adj_start[u + 1]; ++s) {
      int v = space.adj_node[s];
      if (dist[v] == -1) {
        dist[v] = dist[u] + 1;
        q.push(v);
      }
    }
  }
  for (int i = 0; i < space.n; ++i) mask[i] = (dist[i] == -1 || dist[i] >= collar) ? 1 : 0;
  return mask;
}

}  // namespace cmms
