#include <doctest.h>

#include "cmms/space.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>

using namespace cmms;

namespace {

int count_ones(const std::vector<char>& mask) {
  return static_cast<int>(std::count(mask.begin(), mask.end(), 1));
}

}  // namespace

TEST_SUITE("space") {

TEST_CASE("grid space has Voronoi cell structure") {
  auto s = build_grid_space(5, 5, Bounds::unit_square());
  CHECK(s.n == 25);
  CHECK(s.connected);
  CHECK(s.edges.size() == 40);  // 2 * 5 * 4
  CHECK(s.boundary.size() == 16);

  double total = std::accumulate(s.measure.begin(), s.measure.end(), 0.0);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-15));

  // h = 1/4; corner, edge, and interior cells carry 1/4, 1/2, and full area.
  CHECK(s.measure[0] == 0.015625);
  CHECK(s.measure[1] == 0.03125);
  CHECK(s.measure[6] == 0.0625);
  CHECK(s.cell_volume == s.measure);

  for (int i = 0; i < s.n; ++i) CHECK(s.dim_loc[i] == 2);
  CHECK(s.coords[0][0] == 0.0);
  CHECK(s.coords[24][0] == 1.0);
  CHECK(s.coords[24][1] == 1.0);
}

TEST_CASE("grid edges carry row and column transverse widths") {
  auto s = build_grid_space(5, 5, Bounds::unit_square());
  // Bottom-row horizontal edges see a half-height transverse face.
  for (const Edge& e : s.edges) {
    CHECK(e.length == 0.25);
    bool horizontal = (e.j == e.i + 1);
    int ri = e.i / 5, ci = e.i % 5;
    if (horizontal) {
      double expect = (ri == 0 || ri == 4) ? 0.125 : 0.25;
      CHECK(e.sigma == expect);
    } else {
      double expect = (ci == 0 || ci == 4) ? 0.125 : 0.25;
      CHECK(e.sigma == expect);
    }
  }
}

TEST_CASE("centered grid keeps nodes strictly inside with uniform cells") {
  auto s = build_centered_grid_space(8, 8, Bounds::symmetric_square());
  CHECK(s.n == 64);
  CHECK(s.connected);
  for (int i = 0; i < s.n; ++i) {
    CHECK(s.measure[i] == 0.0625);  // (2/8)^2
    CHECK(std::abs(s.coords[i][0]) < 1.0);
    CHECK(std::abs(s.coords[i][1]) < 1.0);
  }
  CHECK(s.boundary.size() == 28);  // outer ring of an 8x8 block
  double total = std::accumulate(s.measure.begin(), s.measure.end(), 0.0);
  CHECK(total == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("path space endpoints carry half cells") {
  auto s = build_path_space(9, 1.0);
  CHECK(s.n == 9);
  CHECK(s.dim_loc[0] == 1);
  CHECK(s.measure[0] == 0.0625);
  CHECK(s.measure[4] == 0.125);
  CHECK(s.boundary == std::vector<int>{0, 8});
  for (const Edge& e : s.edges) {
    CHECK(e.length == 0.125);
    CHECK(e.sigma == 1.0);
  }
}

TEST_CASE("finalize rejects malformed spaces") {
  DiscreteMMS s;
  s.n = 3;
  s.measure = {1.0, 1.0, 1.0};
  s.dim_loc = {1, 1, 1};
  s.edges = {Edge{0, 1, 1.0}, Edge{1, 2, 1.0}};

  SUBCASE("valid base passes") { CHECK_NOTHROW(s.finalize()); }
  SUBCASE("self edge") {
    s.edges.push_back(Edge{2, 2, 1.0});
    CHECK_THROWS_AS(s.finalize(), std::invalid_argument);
  }
  SUBCASE("endpoint out of range") {
    s.edges.push_back(Edge{1, 3, 1.0});
    CHECK_THROWS_AS(s.finalize(), std::invalid_argument);
  }
  SUBCASE("non-positive length") {
    s.edges.push_back(Edge{0, 2, 0.0});
    CHECK_THROWS_AS(s.finalize(), std::invalid_argument);
  }
  SUBCASE("duplicate edge with mismatched length") {
    s.edges.push_back(Edge{1, 0, 2.0});
    CHECK_THROWS_AS(s.finalize(), std::invalid_argument);
  }
  SUBCASE("duplicate edge with equal length collapses") {
    s.edges.push_back(Edge{1, 0, 1.0});
    s.finalize();
    CHECK(s.edges.size() == 2);
  }
  SUBCASE("measure size mismatch") {
    s.measure.pop_back();
    CHECK_THROWS_AS(s.finalize(), std::invalid_argument);
  }
  SUBCASE("non-positive measure") {
    s.measure[1] = 0.0;
    CHECK_THROWS_AS(s.finalize(), std::invalid_argument);
  }
}

TEST_CASE("conformal transform rescales lengths and measures") {
  auto s = build_grid_space(4, 4, Bounds::unit_square());
  const double c = std::log(2.0);
  auto t = conformal_transform(s, ConformalPair::constant(s.n, c, std::log(3.0)));

  for (std::size_t k = 0; k < s.edges.size(); ++k) {
    CHECK(t.edges[k].length == doctest::Approx(2.0 * s.edges[k].length).epsilon(1e-14));
    // dim_loc = 2: one transverse dimension scales with the same edge factor.
    CHECK(t.edges[k].sigma == doctest::Approx(2.0 * s.edges[k].sigma).epsilon(1e-14));
  }
  for (int i = 0; i < s.n; ++i) {
    CHECK(t.measure[i] == doctest::Approx(3.0 * s.measure[i]).epsilon(1e-14));
    CHECK(t.cell_volume[i] == doctest::Approx(4.0 * s.cell_volume[i]).epsilon(1e-14));
  }
}

TEST_CASE("zero weights transform to the identical space") {
  auto s = build_grid_space(6, 5, Bounds::unit_square());
  auto t = conformal_transform(s, ConformalPair::zero(s.n));
  REQUIRE(t.edges.size() == s.edges.size());
  CHECK(std::memcmp(t.measure.data(), s.measure.data(), s.measure.size() * sizeof(double)) == 0);
  CHECK(std::memcmp(t.cell_volume.data(), s.cell_volume.data(),
                    s.cell_volume.size() * sizeof(double)) == 0);
  for (std::size_t k = 0; k < s.edges.size(); ++k) {
    CHECK(t.edges[k].length == s.edges[k].length);
    CHECK(t.edges[k].sigma == s.edges[k].sigma);
  }
}

TEST_CASE("geodesic distance on a path is the arc length") {
  auto s = build_path_space(9, 1.0);
  auto r = geodesic_distance(s, 0);
  CHECK(r.unreachable == 0);
  for (int i = 0; i < 9; ++i) CHECK(r.dist[i] == i * 0.125);
}

TEST_CASE("geodesic distance on a grid is the taxicab distance") {
  auto s = build_grid_space(5, 5, Bounds::unit_square());
  auto r = geodesic_distance(s, 0);
  for (int j = 0; j < 5; ++j)
    for (int i = 0; i < 5; ++i) CHECK(r.dist[j * 5 + i] == (i + j) * 0.25);
}

TEST_CASE("geodesic distance marks unreachable components") {
  DiscreteMMS s;
  s.n = 4;
  s.measure.assign(4, 1.0);
  s.dim_loc.assign(4, 1);
  s.edges = {Edge{0, 1, 1.0}, Edge{2, 3, 1.0}};
  s.finalize();
  CHECK_FALSE(s.connected);

  auto r = geodesic_distance(s, 0);
  CHECK(r.unreachable == 2);
  CHECK(std::isinf(r.dist[2]));
  CHECK(r.dist[1] == 1.0);
}

TEST_CASE("geodesic distance is deterministic across runs") {
  auto s = build_centered_grid_space(16, 16, Bounds::symmetric_square());
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(0.0, 0.5);
  ScalarField w(s.n), zero(s.n, 0.0);
  for (auto& x : w.v) x = U(rng);
  auto t = conformal_transform(s, ConformalPair{w, zero});

  auto a = geodesic_distance(t, 3);
  auto b = geodesic_distance(t, 3);
  CHECK(std::memcmp(a.dist.v.data(), b.dist.v.data(), s.n * sizeof(double)) == 0);
}

TEST_CASE("distance sandwich bounds ratios by the weight gap") {
  auto s = build_centered_grid_space(16, 16, Bounds::symmetric_square());
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> U(0.0, 0.3);
  ScalarField w1(s.n), w2(s.n, 0.0);
  double wmax = 0.0;
  for (auto& x : w1.v) {
    x = U(rng);
    wmax = std::max(wmax, x);
  }

  std::vector<std::pair<int, int>> pairs{{0, 255}, {5, 87}, {12, 200}, {3, 3}};
  auto rep = distance_sandwich_check(s, w1, w2, pairs);
  CHECK(rep.eps_hat == wmax);
  CHECK(rep.pass);
  CHECK(rep.pairs_checked == 3);
  CHECK(rep.pairs_skipped == 1);  // the degenerate pair

  SUBCASE("equal weights give exact ratio one") {
    auto same = distance_sandwich_check(s, w1, w1, pairs);
    CHECK(same.eps_hat == 0.0);
    CHECK(same.worst_ratio_dev == 0.0);
    CHECK(same.pass);
  }
}

TEST_CASE("interior mask peels boundary collars") {
  auto s = build_grid_space(5, 5, Bounds::unit_square());
  CHECK(count_ones(interior_mask(s, 0)) == 25);
  CHECK(count_ones(interior_mask(s, 1)) == 9);
  CHECK(count_ones(interior_mask(s, 2)) == 1);
  CHECK(count_ones(interior_mask(s, 3)) == 0);

  DiscreteMMS open;
  open.n = 2;
  open.measure.assign(2, 1.0);
  open.dim_loc.assign(2, 1);
  open.edges = {Edge{0, 1, 1.0}};
  open.finalize();
  CHECK(count_ones(interior_mask(open, 2)) == 2);  // no boundary declared
}

}  // TEST_SUITE
