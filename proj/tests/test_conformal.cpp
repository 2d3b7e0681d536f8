#include <doctest.h>

#include "cmms/calculus.hpp"
#include "cmms/conformal.hpp"
#include "cmms/space.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <random>

using namespace cmms;

namespace {

DiscreteMMS dyadic_grid(int res = 33) { return build_grid_space(res, res, Bounds::unit_square()); }

ScalarField coord(const DiscreteMMS& s, int axis) {
  ScalarField f(s.n);
  for (int i = 0; i < s.n; ++i) f[i] = s.coords[i][axis];
  return f;
}

ScalarField apply(const DiscreteMMS& s, double (*fn)(double, double)) {
  ScalarField f(s.n);
  for (int i = 0; i < s.n; ++i) f[i] = fn(s.coords[i][0], s.coords[i][1]);
  return f;
}

bool bitwise_equal(const ScalarField& a, const ScalarField& b) {
  return a.size() == b.size() &&
         std::memcmp(a.v.data(), b.v.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_SUITE("conformal") {

TEST_CASE("zero weights reproduce the base calculus bitwise") {
  auto s = dyadic_grid(17);
  auto F = assemble_form(s);
  auto pair = ConformalPair::zero(s.n);
  auto f = apply(s, [](double x, double y) { return std::sin(x + y) + x * y; });

  CHECK(bitwise_equal(transformed_gradient_norm(s, pair, f), weak_gradient_norm(F, f)));
  CHECK(bitwise_equal(transformed_laplacian(s, pair, f), laplacian(F, f)));
  CHECK(bitwise_equal(transformed_gamma2(s, pair, f), gamma2(F, f)));

  auto X = VectorField::gradient(coord(s, 0));
  auto Y = VectorField::gradient(f);
  CHECK(bitwise_equal(transformed_inner_product(s, pair, X, Y), vf_inner(F, X, Y)));
  CHECK(bitwise_equal(transformed_covariant_derivative(s, pair, Y, X, X),
                      covariant_derivative(F, Y, X, X)));

  RicciParams rp{3.0, 1e-6};
  CHECK(bitwise_equal(transformed_ricci_n(s, pair, rp, f), ricci_n(s, rp, f)));
}

TEST_CASE("constant weights scale the operators by exact exponentials") {
  auto s = dyadic_grid(17);
  auto F = assemble_form(s);
  const double c = 0.3;
  auto pair = ConformalPair::constant(s.n, c, 0.0);
  auto f = apply(s, [](double x, double y) { return std::sin(x + y) + x * x; });

  auto gn = transformed_gradient_norm(s, pair, f);
  auto base_gn = weak_gradient_norm(F, f);
  auto lap = transformed_laplacian(s, pair, f);
  auto base_lap = laplacian(F, f);
  auto g2 = transformed_gamma2(s, pair, f);
  auto base_g2 = gamma2(F, f);
  for (int i = 0; i < s.n; ++i) {
    CHECK(gn[i] == std::exp(-c) * base_gn[i]);
    CHECK(lap[i] == std::exp(-2.0 * c) * base_lap[i]);
    CHECK(g2[i] == std::exp(-4.0 * c) * base_g2[i]);
  }
}

TEST_CASE("pure drift adds the measure term to the laplacian") {
  auto s = dyadic_grid(17);
  auto F = assemble_form(s);
  ConformalPair pair = ConformalPair::zero(s.n);
  pair.v = apply(s, [](double x, double y) { return x + 0.5 * y; });
  auto f = apply(s, [](double x, double y) { return std::sin(x) * std::cos(y); });

  auto out = transformed_laplacian(s, pair, f);
  auto lf = laplacian(F, f);
  auto drift = gamma(F, pair.v, f);
  for (int i = 0; i < s.n; ++i) CHECK(out[i] == lf[i] + drift[i]);
}

TEST_CASE("laplacian transforms compose additively in the weights") {
  auto s = dyadic_grid(17);
  auto F = assemble_form(s);
  auto w1 = apply(s, [](double x, double y) { return 0.2 * std::sin(x + y); });
  auto v1 = apply(s, [](double x, double) { return 0.1 * x; });
  auto w2 = apply(s, [](double x, double y) { return 0.15 * (x - y); });
  auto v2 = apply(s, [](double, double y) { return 0.05 * y * y; });
  auto f = apply(s, [](double x, double y) { return std::sin(x) + x * y; });

  ScalarField wsum(s.n), vsum(s.n), u2(s.n);
  for (int i = 0; i < s.n; ++i) {
    wsum[i] = w1[i] + w2[i];
    vsum[i] = v1[i] + v2[i];
    u2[i] = v2[i] - 2.0 * w2[i];
  }

  auto once = transformed_laplacian(s, ConformalPair{wsum, vsum}, f);
  auto first = transformed_laplacian(s, ConformalPair{w1, v1}, f);
  auto drift2 = gamma(F, u2, f);
  double scale = 0.0;
  for (int i = 0; i < s.n; ++i) scale = std::max(scale, std::abs(once[i]));
  for (int i = 0; i < s.n; ++i) {
    double twice = std::exp(-2.0 * w2[i]) * (first[i] + std::exp(-2.0 * w1[i]) * drift2[i]);
    CHECK(std::abs(once[i] - twice) <= 1e-12 * scale);
  }
}

TEST_CASE("inner products of linear gradients pick up exp(2w)") {
  auto s = dyadic_grid();
  const double c = 0.25;
  auto pair = ConformalPair::constant(s.n, c, 0.0);
  ScalarField f(s.n);
  for (int i = 0; i < s.n; ++i) f[i] = 3.0 * s.coords[i][0] - 2.0 * s.coords[i][1];
  auto X = VectorField::gradient(f);

  auto ip = transformed_inner_product(s, pair, X, X);
  for (int i = 0; i < s.n; ++i) CHECK(ip[i] == std::exp(2.0 * c) * 13.0);
}

TEST_CASE("angles between gradients survive the transformation") {
  auto s = dyadic_grid(17);
  auto w = apply(s, [](double x, double y) { return x + 0.5 * y; });
  ConformalPair pair{w, ScalarField(s.n, 0.0)};
  auto x = coord(s, 0), y = coord(s, 1);

  // Coefficient pairs kept away from parallel so acos stays well conditioned.
  const double quads[][4] = {
      {1.0, 0.0, 1.0, 1.0}, {2.0, 1.0, -1.0, 3.0}, {1.0, 2.0, 2.0, -1.0}, {0.5, -1.5, 2.0, 0.5}};
  for (const auto& q : quads) {
    ScalarField p1(s.n), p2(s.n);
    for (int i = 0; i < s.n; ++i) {
      p1[i] = q[0] * s.coords[i][0] + q[1] * s.coords[i][1];
      p2[i] = q[2] * s.coords[i][0] + q[3] * s.coords[i][1];
    }
    auto X = VectorField::gradient(p1);
    auto Y = VectorField::gradient(p2);
    auto ref = angle(s, X, Y);
    auto tr = transformed_angle(s, pair, X, Y);
    for (int i = 0; i < s.n; ++i) {
      REQUIRE(ref.defined[i]);
      REQUIRE(tr.defined[i]);
      CHECK(std::abs(tr.angle[i] - ref.angle[i]) <= 1e-12);
    }
  }

  SUBCASE("self angle is numerically zero") {
    auto X = VectorField::gradient(x);
    auto tr = transformed_angle(s, pair, X, X);
    for (int i = 0; i < s.n; ++i) CHECK(tr.angle[i] <= 1e-7);
  }
  SUBCASE("antiparallel gradients read pi") {
    VectorField X, Y;
    X.terms.push_back(VectorField::Term{ScalarField(s.n, 1.0), x});
    Y.terms.push_back(VectorField::Term{ScalarField(s.n, -1.0), x});
    auto tr = transformed_angle(s, pair, X, Y);
    for (int i = 0; i < s.n; ++i) CHECK(std::abs(tr.angle[i] - std::acos(-1.0)) <= 1e-7);
  }
  SUBCASE("zero gradients leave the angle undefined") {
    auto X = VectorField::gradient(ScalarField(s.n, 4.0));
    auto tr = transformed_angle(s, pair, X, X);
    CHECK(tr.undefined_nodes == s.n);
    for (int i = 0; i < s.n; ++i) CHECK_FALSE(tr.defined[i]);
  }
}

TEST_CASE("transformed hessian of x under w = y has closed form") {
  auto s = dyadic_grid();
  ConformalPair pair{coord(s, 1), ScalarField(s.n, 0.0)};
  auto f = coord(s, 0);

  auto th = transformed_hessian(s, pair, f);
  CHECK(th.internal_consistency <= 1e-10);
  auto mask = interior_mask(s, 2);
  for (int i = 0; i < s.n; ++i) {
    if (!mask[i]) continue;
    REQUIRE(th.matrix.valid[i]);
    const double e2 = std::exp(-2.0 * s.coords[i][1]);
    CHECK(th.matrix.m[i](0, 0) == 0.0);
    CHECK(th.matrix.m[i](1, 1) == 0.0);
    CHECK(th.matrix.m[i](0, 1) == -e2);
    CHECK(th.matrix.m[i](1, 0) == -e2);
    CHECK(th.hs2[i] == 2.0 * std::exp(-4.0 * s.coords[i][1]));
    CHECK(th.tr[i] == 0.0);
  }
}

TEST_CASE("in two dimensions the hessian trace scales like the laplacian") {
  auto s = dyadic_grid(17);
  auto F = assemble_form(s);
  auto frame = coordinate_frame(s, F);
  std::mt19937 rng(19);
  auto f = random_smooth_field(s, rng);
  auto w = random_smooth_field(s, rng);
  ConformalPair pair{w, ScalarField(s.n, 0.0)};

  auto th = transformed_hessian(s, pair, f);
  auto base_tr = trace(hessian(F, frame, f));
  for (int i = 0; i < s.n; ++i) {
    if (!th.matrix.valid[i]) continue;
    CHECK(th.tr[i] == std::exp(-2.0 * w[i]) * base_tr[i]);
  }
}

TEST_CASE("covariant derivative worked example") {
  // X = grad y, w = y, Y = Z = grad x: every correction term dies except
  // <X, grad w><Y, Z> = 1.
  auto s = dyadic_grid();
  ConformalPair pair{coord(s, 1), ScalarField(s.n, 0.0)};
  auto X = VectorField::gradient(coord(s, 1));
  auto Y = VectorField::gradient(coord(s, 0));

  auto out = transformed_covariant_derivative(s, pair, X, Y, Y);
  for (int i = 0; i < s.n; ++i) CHECK(out[i] == 1.0);
}

TEST_CASE("prediction and direct recomputation converge together") {
  // The remaining first-order identities: predicted transformed quantity vs
  // recomputation on the transformed space, interior relative error at two
  // resolutions with at least a factor-2 drop.
  auto run = [](int res) {
    auto s = build_grid_space(res, res, Bounds::unit_square());
    auto w = apply(s, [](double x, double y) { return 0.25 * (x + y); });
    auto v = apply(s, [](double x, double y) { return 0.125 * (x - y); });
    ConformalPair pair{w, v};
    auto p1 = apply(s, [](double x, double y) { return std::sin(x) + x * y; });
    auto p2 = apply(s, [](double x, double y) { return x * y + 0.5 * y * y; });
    auto X = VectorField::gradient(p1);
    auto Y = VectorField::gradient(p2);

    double worst = 0.0;
    auto fold = [&](const ScalarField& ref, const ScalarField& cand, int collar) {
      auto cmp = compare_fields(s, collar, ref, cand);
      worst = std::max(worst, cmp.max_rel);
    };
    fold(transformed_inner_product(s, pair, X, Y), direct_inner_product(s, pair, X, Y), 1);
    fold(transformed_covariant_derivative(s, pair, X, Y, Y),
         direct_covariant_derivative(s, pair, X, Y, Y), 2);
    fold(transformed_gamma2(s, pair, p1), direct_gamma2(s, pair, p1), 2);
    return worst;
  };
  double coarse = run(17), fine = run(33);
  CHECK(fine < 5e-2);
  CHECK(coarse / fine >= 2.0);
}

TEST_CASE("N-Ricci density vanishes for quadratics in flat space") {
  auto s = dyadic_grid(17);
  auto mask = interior_mask(s, 2);

  SUBCASE("pure square, N equal to the dimension") {
    auto f = apply(s, [](double x, double) { return x * x; });
    auto rho = ricci_n(s, RicciParams{2.0, 1e-6}, f);
    int collar_nan = 0;
    for (int i = 0; i < s.n; ++i) {
      if (mask[i])
        CHECK(rho[i] == 0.0);
      else if (!std::isfinite(rho[i]))
        ++collar_nan;  // trace-defect violations downgrade to NaN off the interior
    }
    CHECK(collar_nan > 0);
  }
  SUBCASE("mixed quadratic at N = 2 and N = 3") {
    auto f = apply(s, [](double x, double y) { return x * x + y * y - 3.0 * x * y; });
    auto r2 = ricci_n(s, RicciParams{2.0, 1e-6}, f);
    auto r3 = ricci_n(s, RicciParams{3.0, 1e-6}, f);
    for (int i = 0; i < s.n; ++i) {
      if (!mask[i]) continue;
      CHECK(std::abs(r2[i]) <= 1e-12);
      CHECK(std::abs(r3[i]) <= 1e-12);
    }
  }
  SUBCASE("N below the local dimension is rejected") {
    auto f = apply(s, [](double x, double) { return x * x; });
    CHECK_THROWS_AS(ricci_n(s, RicciParams{1.5, 1e-6}, f), std::invalid_argument);
  }
  SUBCASE("N equal to dim with an incompatible field is a hard error") {
    // A bump field's discrete trace defect is far above singular_tol at this
    // mesh, and N = dim_loc leaves no denominator to absorb it.
    auto f = apply(s, [](double x, double y) {
      return std::exp(-8.0 * ((x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5)));
    });
    CHECK_THROWS_AS(ricci_n(s, RicciParams{2.0, 1e-6}, f), std::domain_error);
  }
}

TEST_CASE("special-case weights make the two transformed Ricci routes agree") {
  auto s = dyadic_grid(17);

  SUBCASE("N = 3 with smooth fields, tight tolerance") {
    auto w = apply(s, [](double x, double y) { return 0.2 * std::sin(x + y); });
    ScalarField v(s.n);
    for (int i = 0; i < s.n; ++i) v[i] = 3.0 * w[i];
    RicciParams rp{3.0, 1e-6};
    auto f = apply(s, [](double x, double y) { return x * x + y * y + 0.5 * x * y; });

    auto lhs = transformed_ricci_n(s, ConformalPair{w, v}, rp, f);
    auto rhs = ricci_special_case_Nw(s, w, rp, f);
    double scale = 1.0;
    for (int i = 0; i < s.n; ++i)
      if (std::isfinite(rhs[i])) scale = std::max(scale, std::abs(rhs[i]));
    for (int i = 0; i < s.n; ++i) {
      CHECK(std::isfinite(lhs[i]) == std::isfinite(rhs[i]));
      if (std::isfinite(lhs[i])) CHECK(std::abs(lhs[i] - rhs[i]) <= 1e-10 * scale);
    }
  }
  SUBCASE("N = 2 with a quadratic is bitwise identical") {
    // v = 2w zeroes the drift, so both routes hit the same correction terms
    // in the same order.
    auto w = apply(s, [](double x, double y) { return 0.3 * x - 0.1 * y; });
    ScalarField v(s.n);
    for (int i = 0; i < s.n; ++i) v[i] = 2.0 * w[i];
    RicciParams rp{2.0, 1e-6};
    auto f = apply(s, [](double x, double) { return x * x; });

    auto lhs = transformed_ricci_n(s, ConformalPair{w, v}, rp, f);
    auto rhs = ricci_special_case_Nw(s, w, rp, f);
    CHECK(bitwise_equal(lhs, rhs));
  }
}

TEST_CASE("constant-weight curvature bound is exact") {
  auto s = dyadic_grid(17);
  const double c = 0.7, K = 1.5;
  double kp = curvature_bound(s, ScalarField(s.n, c), 2.0, K);
  CHECK(kp == std::exp(-2.0 * c) * K);
  CHECK(kp == 0.36989544591240975);
}

TEST_CASE("curvature bound handles the one-dimensional branch") {
  auto s = build_path_space(65, 1.0);
  ScalarField w(s.n);
  for (int i = 0; i < s.n; ++i) w[i] = 0.3 * std::sin(3.14159 * s.coords[i][0]);
  double kp = curvature_bound(s, w, 1.5, 0.0);  // N < 2 flips the extremal eigenvalue
  CHECK(std::isfinite(kp));
}

TEST_CASE("curvature bound rejects bad inputs") {
  auto s = dyadic_grid(9);
  CHECK_THROWS_AS(curvature_bound(s, ScalarField(s.n, 0.0), 1.0, 0.0), std::invalid_argument);
  ScalarField w(s.n, 0.0);
  w[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(curvature_bound(s, w, 2.0, 0.0), std::invalid_argument);
}

TEST_CASE("probe-certified curvature bound matches the constant case") {
  auto s = dyadic_grid(17);
  const double c = 0.3, K = 2.0;
  ScalarField w(s.n, c), v(s.n, 2.0 * c);
  ConformalPair pair{w, v};
  RicciParams rp{3.0, 1e-6};
  auto probes = default_probe_fields(s, 9);

  auto res = curvature_bound_general(s, pair, rp, K, probes);
  CHECK(res.probes_used == 13);
  CHECK(res.nodes_skipped == 0);
  CHECK(res.certified_over_probes);
  CHECK(std::abs(res.k_prime - std::exp(-2.0 * c) * K) <= 1e-10);

  SUBCASE("N must strictly exceed the dimension") {
    CHECK_THROWS_AS(curvature_bound_general(s, pair, RicciParams{2.0, 1e-6}, K, probes),
                    std::invalid_argument);
  }
  SUBCASE("empty probe family") {
    CHECK_THROWS_AS(curvature_bound_general(s, pair, rp, K, {}), std::invalid_argument);
  }
  SUBCASE("a constant probe certifies nothing") {
    std::vector<ScalarField> flat{ScalarField(s.n, 1.0)};
    CHECK_THROWS_AS(curvature_bound_general(s, pair, rp, K, flat), std::invalid_argument);
  }
}

TEST_CASE("ricci lower bound margins") {
  auto s = dyadic_grid(17);

  SUBCASE("constant test function gives exactly zero margins") {
    auto rep = ricci_lower_bound_check(s, RicciParams{2.0, 1e-6}, ScalarField(s.n, 2.5), 1.0);
    CHECK(rep.ricci_margin == 0.0);
    CHECK(rep.bochner_margin == 0.0);
    CHECK(rep.nodes_checked == 13 * 13);
    CHECK(rep.nodes_excluded == 0);
  }
  SUBCASE("flat space with a paraboloid stays within rounding of zero") {
    auto f = apply(s, [](double x, double y) { return x * x + y * y; });
    auto rep = ricci_lower_bound_check(s, RicciParams{2.0, 1e-6}, f, 0.0);
    CHECK(std::abs(rep.ricci_margin) <= 1e-12);
    CHECK(std::abs(rep.bochner_margin) <= 1e-12);
    CHECK(rep.ricci_margin >= -5e-2 * rep.scale);
    CHECK(rep.bochner_margin >= -5e-2 * rep.scale);
  }
}

TEST_CASE("field comparison utility") {
  auto s = dyadic_grid(9);
  ScalarField a(s.n, 1.0), b(s.n, 1.0);

  auto same = compare_fields(s, 1, a, b);
  CHECK(same.max_abs == 0.0);
  CHECK(same.max_rel == 0.0);
  CHECK(same.compared == 7 * 7);

  b[40] = std::numeric_limits<double>::quiet_NaN();
  auto holey = compare_fields(s, 1, a, b);
  CHECK(holey.excluded == 1);
  CHECK(holey.compared == 7 * 7 - 1);
}

TEST_CASE("default probe fields are deterministic") {
  auto s = dyadic_grid(9);
  auto p1 = default_probe_fields(s, 123);
  auto p2 = default_probe_fields(s, 123);
  REQUIRE(p1.size() == p2.size());
  CHECK(p1.size() == 13);
  for (std::size_t k = 0; k < p1.size(); ++k) CHECK(bitwise_equal(p1[k], p2[k]));
}

}  // TEST_SUITE
