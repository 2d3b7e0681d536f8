#include "cmms/oracle.hpp"

#include <stdexcept>

namespace cmms {

double SmoothField::eval(const Eigen::VectorXd& p) const {
  if (!value) throw std::invalid_argument("SmoothField: no value function");
  return value(p);
}

Eigen::VectorXd SmoothField::gradient(const Eigen::VectorXd& p) const {
  if (grad) return grad(p);
  const int d = static_cast<int>(p.size());
  Eigen::VectorXd g(d);
  Eigen::VectorXd q = p;
  for (int i = 0; i < d; ++i) {
    q[i] = p[i] + h_fd;
    double fp = eval(q);
    q[i] = p[i] - h_fd;
    double fm = eval(q);
    q[i] = p[i];
    g[i] = (fp - fm) / (2.0 * h_fd);
  }
  return g;
}

Eigen::MatrixXd SmoothField::hessian(const Eigen::VectorXd& p) const {
  if (hess) return hess(p);
  const int d = static_cast<int>(p.size());
  Eigen::MatrixXd H(d, d);
  Eigen::VectorXd q = p;
  const double f0 = eval(p);
  for (int i = 0; i < d; ++i) {
    q[i] = p[i] + h_fd;
    double fp = eval(q);
    q[i] = p[i] - h_fd;
    double fm = eval(q);
    q[i] = p[i];
    H(i, i) = (fp - 2.0 * f0 + fm) / (h_fd * h_fd);
  }
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      q[i] = p[i] + h_fd;
      q[j] = p[j] + h_fd;
      double fpp = eval(q);
      q[j] = p[j] - h_fd;
      double fpm = eval(q);
      q[i] = p[i] - h_fd;
      double fmm = eval(q);
      q[j] = p[j] + h_fd;
      double fmp = eval(q);
      q[i] = p[i];
      q[j] = p[j];
      H(i, j) = H(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * h_fd * h_fd);
    }
  }
  return 0.5 * (H + H.transpose());
}

Eigen::MatrixXd smooth_conformal_ricci(const SmoothField& w, int n, const Eigen::VectorXd& p) {
  if (n < 2) throw std::invalid_argument("smooth_conformal_ricci: n must be >= 2");
  if (p.size() != n) throw std::invalid_argument("smooth_conformal_ricci: point dimension != n");

  Eigen::VectorXd dw = w.gradient(p);
  Eigen::MatrixXd ddw = w.hessian(p);
  double lap = ddw.trace();
  double dw2 = dw.squaredNorm();

  Eigen::MatrixXd ric = -(n - 2) * (ddw - dw * dw.transpose());
  ric += (-lap - (n - 2) * dw2) * Eigen::MatrixXd::Identity(n, n);
  return 0.5 * (ric + ric.transpose());
}

Eigen::MatrixXd christoffel_hessian(const SmoothField& w, const SmoothField& f,
                                    const Eigen::VectorXd& p) {
  Eigen::VectorXd dw = w.gradient(p);
  Eigen::VectorXd df = f.gradient(p);
  Eigen::MatrixXd H = f.hessian(p);
  const int d = static_cast<int>(p.size());
  Eigen::MatrixXd out = H - dw * df.transpose() - df * dw.transpose() +
                        dw.dot(df) * Eigen::MatrixXd::Identity(d, d);
  return 0.5 * (out + out.transpose());
}

double gauss_curvature_2d(const SmoothField& w, const Eigen::Vector2d& p) {
  Eigen::VectorXd q = p;
  double lap = w.hessian(q).trace();
  return -std::exp(-2.0 * w.eval(q)) * lap;
}

SmoothField stereographic_weight(int n) {
  SmoothField w;
  w.value = [](const Eigen::VectorXd& p) { return std::log(2.0 / (1.0 + p.squaredNorm())); };
  w.grad = [](const Eigen::VectorXd& p) {
    return Eigen::VectorXd(-2.0 / (1.0 + p.squaredNorm()) * p);
  };
  w.hess = [](const Eigen::VectorXd& p) {
    const int d = static_cast<int>(p.size());
    double s = 1.0 + p.squaredNorm();
    Eigen::MatrixXd H = (4.0 / (s * s)) * (p * p.transpose());
    H -= (2.0 / s) * Eigen::MatrixXd::Identity(d, d);
    return H;
  };
  (void)n;
  return w;
}

}  // namespace cmms
