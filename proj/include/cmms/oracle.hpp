#pragma once

#include <Eigen/Dense>

#include <functional>

namespace cmms {

/** Closed-form scalar function on R^d with optional analytic derivatives.
 *
 * When `grad` or `hess` is not supplied, second-order central differences
 * with step `h_fd` stand in. The finite-difference fallback is what the
 * convergence tests exercise; analytic derivatives are preferred whenever
 * the expression is known.
 */
struct SmoothField {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad;   // optional
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> hess;   // optional
  double h_fd = 1e-5;

  double eval(const Eigen::VectorXd& p) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& p) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& p) const;
};

// Ricci tensor of the metric e^{2w} * delta on flat R^n:
//   Ric' = -(n-2) (Hess w - dw (x) dw) + (-Lap w - (n-2)|dw|^2) I.
// Returns the n x n matrix in the background coordinate basis. n >= 2.
Eigen::MatrixXd smooth_conformal_ricci(const SmoothField& w, int n, const Eigen::VectorXd& p);

// Hessian of f with respect to the Levi-Civita connection of e^{2w} * delta:
//   (Hess_g' f)_ij = d2f_ij - dw_i df_j - dw_j df_i + delta_ij <dw, df>.
Eigen::MatrixXd christoffel_hessian(const SmoothField& w, const SmoothField& f,
                                    const Eigen::VectorXd& p);

// Gauss curvature of e^{2w} * delta on R^2: K = -e^{-2w} Lap w.
double gauss_curvature_2d(const SmoothField& w, const Eigen::Vector2d& p);

// w = ln(2 / (1 + |x|^2)) with analytic derivatives; e^{2w} delta is the
// round unit sphere minus a point in stereographic coordinates.
SmoothField stereographic_weight(int n = 2);

}  // namespace cmms
