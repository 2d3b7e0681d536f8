#include <doctest.h>

#include "cmms/oracle.hpp"

#include <cmath>
#include <utility>

using namespace cmms;

namespace {

SmoothField cubic() {
  SmoothField f;
  f.value = [](const Eigen::VectorXd& p) {
    return p[0] * p[0] * p[0] + 2.0 * p[0] * p[1] * p[1];
  };
  return f;
}

Eigen::Vector2d pt(double x, double y) { return Eigen::Vector2d(x, y); }

}  // namespace

TEST_SUITE("oracle") {

TEST_CASE("finite differences recover polynomial derivatives") {
  auto f = cubic();
  Eigen::VectorXd p = pt(0.7, -0.4);

  Eigen::VectorXd g = f.gradient(p);
  CHECK(std::abs(g[0] - (3.0 * 0.49 + 2.0 * 0.16)) <= 1e-7);
  CHECK(std::abs(g[1] - (4.0 * 0.7 * -0.4)) <= 1e-7);

  // Second differences lose ~eps/h^2 to cancellation; the tolerance reflects
  // that, not the truncation order.
  Eigen::MatrixXd H = f.hessian(p);
  CHECK(std::abs(H(0, 0) - 6.0 * 0.7) <= 1e-4);
  CHECK(std::abs(H(0, 1) - 4.0 * -0.4) <= 1e-4);
  CHECK(std::abs(H(1, 0) - H(0, 1)) <= 1e-9);  // symmetrized by construction
  CHECK(std::abs(H(1, 1) - 4.0 * 0.7) <= 1e-4);
}

TEST_CASE("finite-difference gradient converges at second order") {
  SmoothField f;
  f.value = [](const Eigen::VectorXd& p) { return std::sin(2.0 * p[0] + p[1]); };
  Eigen::VectorXd p = pt(0.3, 0.2);
  const double exact = 2.0 * std::cos(2.0 * 0.3 + 0.2);

  f.h_fd = 1e-3;
  double e1 = std::abs(f.gradient(p)[0] - exact);
  f.h_fd = 5e-4;
  double e2 = std::abs(f.gradient(p)[0] - exact);
  CHECK(e2 < e1);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.3));
}

TEST_CASE("stereographic weight matches its closed form") {
  auto w = stereographic_weight(2);
  const std::pair<double, double> pts[] = {{0.0, 0.0}, {0.5, -0.3}, {1.2, 0.7}};
  for (auto [x, y] : pts) {
    Eigen::VectorXd p = pt(x, y);
    const double r2 = x * x + y * y;
    CHECK(w.eval(p) == doctest::Approx(std::log(2.0 / (1.0 + r2))).epsilon(1e-15));

    Eigen::VectorXd g = w.gradient(p);
    CHECK(std::abs(g[0] - (-2.0 * x / (1.0 + r2))) <= 1e-14);
    CHECK(std::abs(g[1] - (-2.0 * y / (1.0 + r2))) <= 1e-14);

    // Analytic hessian against the finite-difference fallback.
    SmoothField fd;
    fd.value = w.value;
    fd.h_fd = 1e-4;
    Eigen::MatrixXd Ha = w.hessian(p);
    Eigen::MatrixXd Hf = fd.hessian(p);
    CHECK((Ha - Hf).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("conformal Ricci of the stereographic sphere is the metric") {
  auto w = stereographic_weight(2);
  const std::pair<double, double> pts[] = {{0.0, 0.0}, {0.4, 0.1}, {-0.8, 0.6}, {1.5, -1.1}};
  for (auto [x, y] : pts) {
    Eigen::VectorXd p = pt(x, y);
    Eigen::MatrixXd ric = smooth_conformal_ricci(w, 2, p);
    const double e2w = std::exp(2.0 * w.eval(p));
    Eigen::MatrixXd expect = e2w * Eigen::MatrixXd::Identity(2, 2);
    CHECK((ric - expect).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("round three-sphere has Ricci twice the metric") {
  auto w = stereographic_weight(3);
  Eigen::VectorXd p(3);
  p << 0.3, -0.2, 0.5;
  Eigen::MatrixXd ric = smooth_conformal_ricci(w, 3, p);
  const double e2w = std::exp(2.0 * w.eval(p));
  Eigen::MatrixXd expect = 2.0 * e2w * Eigen::MatrixXd::Identity(3, 3);
  CHECK((ric - expect).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("connection hessian reduces to the flat one at w = 0") {
  SmoothField w0;
  w0.value = [](const Eigen::VectorXd&) { return 0.0; };
  w0.grad = [](const Eigen::VectorXd& p) { return Eigen::VectorXd::Zero(p.size()).eval(); };
  w0.hess = [](const Eigen::VectorXd& p) {
    return Eigen::MatrixXd::Zero(p.size(), p.size()).eval();
  };

  SmoothField f;
  f.value = [](const Eigen::VectorXd& p) { return p[0] * p[0] * p[1]; };
  f.grad = [](const Eigen::VectorXd& p) {
    Eigen::VectorXd g(2);
    g << 2.0 * p[0] * p[1], p[0] * p[0];
    return g;
  };
  f.hess = [](const Eigen::VectorXd& p) {
    Eigen::MatrixXd H(2, 2);
    H << 2.0 * p[1], 2.0 * p[0], 2.0 * p[0], 0.0;
    return H;
  };

  Eigen::VectorXd p = pt(0.6, -0.9);
  Eigen::MatrixXd H = christoffel_hessian(w0, f, p);
  CHECK((H - f.hessian(p)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("connection hessian worked example") {
  // w = y, f = x: flat Hessian vanishes and the Christoffel terms leave
  // exactly [[0, -1], [-1, 0]].
  SmoothField w, f;
  w.value = [](const Eigen::VectorXd& p) { return p[1]; };
  w.grad = [](const Eigen::VectorXd&) { return Eigen::Vector2d(0.0, 1.0).eval(); };
  w.hess = [](const Eigen::VectorXd&) { return Eigen::Matrix2d::Zero().eval(); };
  f.value = [](const Eigen::VectorXd& p) { return p[0]; };
  f.grad = [](const Eigen::VectorXd&) { return Eigen::Vector2d(1.0, 0.0).eval(); };
  f.hess = [](const Eigen::VectorXd&) { return Eigen::Matrix2d::Zero().eval(); };

  Eigen::MatrixXd H = christoffel_hessian(w, f, pt(0.2, 0.8));
  CHECK(H(0, 0) == 0.0);
  CHECK(H(1, 1) == 0.0);
  CHECK(H(0, 1) == -1.0);
  CHECK(H(1, 0) == -1.0);
}

TEST_CASE("gauss curvature of the stereographic sphere is one") {
  auto w = stereographic_weight(2);
  const std::pair<double, double> pts[] = {{0.0, 0.0}, {0.7, -0.2}, {-1.3, 0.9}};
  for (auto [x, y] : pts) {
    CHECK(std::abs(gauss_curvature_2d(w, Eigen::Vector2d(x, y)) - 1.0) <= 1e-12);
  }
}

}  // TEST_SUITE
