#include "cmms/conformal.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

namespace cmms {
namespace {

// Slack for deciding whether N coincides with a node's local dimension.
constexpr double kDimTol = 1e-9;
constexpr int kGammaCollar = 2;  // collar width for Gamma-of-Gamma quantities

const double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_finite_weights(const DiscreteMMS& space, const ConformalPair& pair) {
  require_size(pair, static_cast<std::size_t>(space.n), "conformal weights");
  for (int i = 0; i < space.n; ++i) {
    if (!std::isfinite(pair.w[i]) || !std::isfinite(pair.v[i]))
      throw std::invalid_argument("conformal weights: non-finite value at node " +
                                  std::to_string(i));
  }
}

ScalarField exp_field(const ScalarField& w, double s) {
  ScalarField out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = std::exp(s * w[i]);
  return out;
}

// The measure weight enters every transformed formula through v - 2w only.
ScalarField drift_field(const ConformalPair& pair) {
  ScalarField u(pair.w.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = pair.v[i] - 2.0 * pair.w[i];
  return u;
}

// A gradient combination keeps its action under the transform; only the
// chart changes: sum a grad p = sum (a e^{2w}) grad' p.
VectorField to_transformed_chart(const VectorField& X, const ScalarField& e2w) {
  VectorField out = X;
  for (auto& t : out.terms)
    for (std::size_t i = 0; i < t.coeff.size(); ++i) t.coeff[i] *= e2w[i];
  return out;
}

struct BaseCalculus {
  DirichletForm F;
  LocalFrame frame;
};

BaseCalculus framed_calculus(const DiscreteMMS& space) {
  BaseCalculus b;
  b.F = assemble_form(space);
  b.frame = coordinate_frame(space, b.F);
  return b;
}

// N-Ricci density against the node measure. Frame-invalid nodes are NaN.
// On nodes with dim_loc == N the residual term is declared zero when its
// numerator |tr H_f - Lf| stays under singular_tol * scale; interior
// violations are a hard error, collar violations yield NaN (their
// one-sided stencils carry no information).
ScalarField ricci_density(const DiscreteMMS& space, const DirichletForm& F,
                          const LocalFrame& frame, const RicciParams& params,
                          const ScalarField& f, const char* who) {
  require_size(f, static_cast<std::size_t>(F.n), who);
  for (int i = 0; i < F.n; ++i) {
    if (params.N < F.dim_loc[i] - kDimTol)
      throw std::invalid_argument(std::string(who) + ": N = " + std::to_string(params.N) +
                                  " below dim_loc = " + std::to_string(F.dim_loc[i]) +
                                  " at node " + std::to_string(i));
  }

  const ScalarField g2 = gamma2(F, f);
  const ScalarField lf = laplacian(F, f);
  const BilinearField H = hessian(F, frame, f);
  const ScalarField hs = hs_norm(H);
  const ScalarField trH = trace(H);
  const std::vector<char> interior = interior_mask(space, kGammaCollar);

  double scale = 1.0;
  for (int i = 0; i < F.n; ++i)
    if (interior[i] && frame.valid[i])
      scale = std::max({scale, std::abs(trH[i]), std::abs(lf[i])});
  const double tol_abs = params.singular_tol * scale;

  ScalarField out(static_cast<std::size_t>(F.n), kNaN);
  std::vector<int> offending;
  double worst = 0.0;
  for (int i = 0; i < F.n; ++i) {
    if (!frame.valid[i]) continue;
    const double dn = params.N - F.dim_loc[i];
    const double defect = trH[i] - lf[i];
    double residual;
    if (std::abs(dn) > kDimTol) {
      residual = defect * defect / dn;
    } else if (std::abs(defect) <= tol_abs) {
      residual = 0.0;
    } else if (interior[i]) {
      offending.push_back(i);
      worst = std::max(worst, std::abs(defect));
      continue;
    } else {
      continue;
    }
    out[i] = g2[i] - hs[i] * hs[i] - residual;
  }

  if (!offending.empty()) {
    std::ostringstream msg;
    msg << who << ": N = dim_loc but |tr H_f - Lf| exceeds " << tol_abs << " (worst "
        << worst << ") at " << offending.size() << " interior node(s):";
    for (std::size_t k = 0; k < offending.size() && k < 8; ++k) msg << ' ' << offending[k];
    if (offending.size() > 8) msg << " ...";
    throw std::domain_error(msg.str());
  }
  return out;
}

// Transformed N-Ricci density against the transformed measure, expanded
// over base-space operators. The 1/(N - dim_loc) pieces get the same
// singular convention as ricci_density, applied to their joint numerator.
ScalarField transformed_ricci_density(const DiscreteMMS& space, const DirichletForm& F,
                                      const LocalFrame& frame, const ConformalPair& pair,
                                      const RicciParams& params, const ScalarField& f,
                                      const char* who) {
  const ScalarField rho = ricci_density(space, F, frame, params, f, who);
  const ScalarField u = drift_field(pair);
  const ScalarField A = gamma(F, pair.w, f);
  const ScalarField B = gamma(F, u, f);
  const ScalarField gf = gamma(F, f);
  const ScalarField lf = laplacian(F, f);
  const ScalarField lw = laplacian(F, pair.w);
  const ScalarField guw = gamma(F, u, pair.w);
  const ScalarField Hu = hessian_pair(F, u, f, f);
  const ScalarField trH = trace(hessian(F, frame, f));
  const ScalarField e4 = exp_field(pair.w, -4.0);
  const std::vector<char> interior = interior_mask(space, kGammaCollar);

  double s = 1.0;
  for (int i = 0; i < F.n; ++i)
    if (interior[i] && frame.valid[i])
      s = std::max({s, std::abs(A[i]), std::abs(B[i]), std::abs(lf[i]), std::abs(trH[i])});
  const double tol_num = params.singular_tol * s * s;

  ScalarField out(static_cast<std::size_t>(F.n), kNaN);
  std::vector<int> offending;
  double worst = 0.0;
  for (int i = 0; i < F.n; ++i) {
    if (!std::isfinite(rho[i])) {
      out[i] = rho[i];
      continue;
    }
    const double d = static_cast<double>(F.dim_loc[i]);
    const double dn = params.N - d;
    const double defect = lf[i] - trH[i];
    const double n1 = (2.0 - d) * (params.N - 2.0) * A[i] * A[i];
    const double n2 = -2.0 * A[i] * defect * (2.0 - d);
    const double n3 = -B[i] * (B[i] + 2.0 * defect + (4.0 - 2.0 * d) * A[i]);
    double divided;
    if (std::abs(dn) > kDimTol) {
      divided = (n1 + n2 + n3) / dn;
    } else if (std::abs(n1) + std::abs(n2) + std::abs(n3) <= tol_num) {
      divided = 0.0;
    } else if (interior[i]) {
      offending.push_back(i);
      worst = std::max(worst, std::abs(n1) + std::abs(n2) + std::abs(n3));
      continue;
    } else {
      continue;
    }
    const double correction = A[i] * (2.0 * lf[i] + 2.0 * B[i] - 2.0 * trH[i]) - Hu[i] -
                              gf[i] * (guw[i] + lw[i]) + divided;
    out[i] = e4[i] * (rho[i] + correction);
  }

  if (!offending.empty()) {
    std::ostringstream msg;
    msg << who << ": N = dim_loc but the residual numerator exceeds " << tol_num
        << " (worst " << worst << ") at " << offending.size() << " interior node(s):";
    for (std::size_t k = 0; k < offending.size() && k < 8; ++k) msg << ' ' << offending[k];
    if (offending.size() > 8) msg << " ...";
    throw std::domain_error(msg.str());
  }
  return out;
}

AngleField angle_impl(const DirichletForm& F, const VectorField& X, const VectorField& Y,
                      const ScalarField* conformal_scale) {
  const ScalarField ip = vf_inner(F, X, Y);
  const ScalarField n1 = vf_inner(F, X, X);
  const ScalarField n2 = vf_inner(F, Y, Y);

  AngleField out;
  const std::size_t n = ip.size();
  out.angle = ScalarField(n, kNaN);
  out.cosine = ScalarField(n, kNaN);
  out.defined.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    double a = std::max(n1[i], 0.0);
    double b = std::max(n2[i], 0.0);
    double num = ip[i];
    if (conformal_scale) {
      a *= (*conformal_scale)[i];
      b *= (*conformal_scale)[i];
      num *= (*conformal_scale)[i];
    }
    const double den = std::sqrt(a * b);
    if (!(den > 0.0) || !std::isfinite(den)) {
      ++out.undefined_nodes;
      continue;
    }
    const double c = std::clamp(num / den, -1.0, 1.0);
    out.cosine[i] = c;
    out.angle[i] = std::acos(c);
    out.defined[i] = 1;
  }
  return out;
}

}  // namespace

ScalarField transformed_gradient_norm(const DiscreteMMS& space, const ConformalPair& pair,
                                      const ScalarField& f) {
  require_finite_weights(space, pair);
  const DirichletForm F = assemble_form(space);
  require_size(f, static_cast<std::size_t>(F.n), "transformed_gradient_norm");
  const ScalarField gf = gamma(F, f);
  ScalarField out(gf.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::exp(-pair.w[i]) * std::sqrt(std::max(gf[i], 0.0));
  return out;
}

ScalarField transformed_laplacian(const DiscreteMMS& space, const ConformalPair& pair,
                                  const ScalarField& f) {
  require_finite_weights(space, pair);
  const DirichletForm F = assemble_form(space);
  require_size(f, static_cast<std::size_t>(F.n), "transformed_laplacian");
  const ScalarField lf = laplacian(F, f);
  const ScalarField drift = gamma(F, drift_field(pair), f);
  const ScalarField e2 = exp_field(pair.w, -2.0);
  ScalarField out(lf.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = e2[i] * (lf[i] + drift[i]);
  return out;
}

ScalarField transformed_inner_product(const DiscreteMMS& space, const ConformalPair& pair,
                                      const VectorField& X, const VectorField& Y) {
  require_finite_weights(space, pair);
  const DirichletForm F = assemble_form(space);
  require_size(X, static_cast<std::size_t>(F.n), "transformed_inner_product");
  require_size(Y, static_cast<std::size_t>(F.n), "transformed_inner_product");
  const ScalarField ip = vf_inner(F, X, Y);
  ScalarField out(ip.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(2.0 * pair.w[i]) * ip[i];
  return out;
}

AngleField angle(const DiscreteMMS& space, const VectorField& X, const VectorField& Y) {
  const DirichletForm F = assemble_form(space);
  require_size(X, static_cast<std::size_t>(F.n), "angle");
  require_size(Y, static_cast<std::size_t>(F.n), "angle");
  return angle_impl(F, X, Y, nullptr);
}

AngleField transformed_angle(const DiscreteMMS& space, const ConformalPair& pair,
                             const VectorField& X, const VectorField& Y) {
  require_finite_weights(space, pair);
  const DirichletForm F = assemble_form(space);
  require_size(X, static_cast<std::size_t>(F.n), "transformed_angle");
  require_size(Y, static_cast<std::size_t>(F.n), "transformed_angle");
  const ScalarField e2w = exp_field(pair.w, 2.0);
  return angle_impl(F, X, Y, &e2w);
}

TransformedHessian transformed_hessian(const DiscreteMMS& space, const ConformalPair& pair,
                                       const ScalarField& f) {
  require_finite_weights(space, pair);
  const BaseCalculus bc = framed_calculus(space);
  require_size(f, static_cast<std::size_t>(bc.F.n), "transformed_hessian");

  const BilinearField H = hessian(bc.F, bc.frame, f);
  const std::vector<ScalarField> fsh = frame_coefficients(bc.F, bc.frame, f);
  const std::vector<ScalarField> wsh = frame_coefficients(bc.F, bc.frame, pair.w);
  const int d = bc.frame.dim;
  const int n = bc.F.n;

  TransformedHessian out;
  out.matrix.m.assign(n, Eigen::MatrixXd::Zero(d, d));
  out.matrix.valid = bc.frame.valid;
  out.hs2 = ScalarField(static_cast<std::size_t>(n), kNaN);
  out.tr = ScalarField(static_cast<std::size_t>(n), kNaN);

  double consistency = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!bc.frame.valid[i]) continue;
    Eigen::VectorXd fv(d), wv(d);
    for (int k = 0; k < d; ++k) {
      fv(k) = fsh[k][i];
      wv(k) = wsh[k][i];
    }
    const double G = wv.dot(fv);
    const double trH = H.m[i].trace();
    const double e2 = std::exp(-2.0 * pair.w[i]);
    const double e4 = std::exp(-4.0 * pair.w[i]);

    Eigen::MatrixXd M = H.m[i] - wv * fv.transpose() - fv * wv.transpose() +
                        G * Eigen::MatrixXd::Identity(d, d);
    M *= e2;
    out.matrix.m[i] = M;

    const double hwf = wv.dot(H.m[i] * fv);
    out.hs2[i] = e4 * (H.m[i].squaredNorm() + 2.0 * fv.squaredNorm() * wv.squaredNorm() +
                       (d - 2.0) * G * G - 4.0 * hwf + 2.0 * G * trH);
    out.tr[i] = e2 * (trH + (d - 2.0) * G);

    const double dh = std::abs(M.squaredNorm() - out.hs2[i]) / std::max(1.0, std::abs(out.hs2[i]));
    const double dt = std::abs(M.trace() - out.tr[i]) / std::max(1.0, std::abs(out.tr[i]));
    consistency = std::max({consistency, dh, dt});
  }
  out.internal_consistency = consistency;
  return out;
}

ScalarField transformed_covariant_derivative(const DiscreteMMS& space, const ConformalPair& pair,
                                             const VectorField& X, const VectorField& Y,
                                             const VectorField& Z) {
  require_finite_weights(space, pair);
  const DirichletForm F = assemble_form(space);
  const auto n = static_cast<std::size_t>(F.n);
  require_size(X, n, "transformed_covariant_derivative");
  require_size(Y, n, "transformed_covariant_derivative");
  require_size(Z, n, "transformed_covariant_derivative");

  const ScalarField base = covariant_derivative(F, X, Y, Z);
  const ScalarField yw = vf_inner_grad(F, Y, pair.w);
  const ScalarField zw = vf_inner_grad(F, Z, pair.w);
  const ScalarField xw = vf_inner_grad(F, X, pair.w);
  const ScalarField xz = vf_inner(F, X, Z);
  const ScalarField xy = vf_inner(F, X, Y);
  const ScalarField yz = vf_inner(F, Y, Z);

  ScalarField out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = base[i] - yw[i] * xz[i] - zw[i] * xy[i] + xw[i] * yz[i];
  return out;
}

ScalarField transformed_gamma2(const DiscreteMMS& space, const ConformalPair& pair,
                               const ScalarField& f) {
  require_finite_weights(space, pair);
  const DirichletForm F = assemble_form(space);
  require_size(f, static_cast<std::size_t>(F.n), "transformed_gamma2");

  const ScalarField u = drift_field(pair);
  const ScalarField g2 = gamma2(F, f);
  const ScalarField gf = gamma(F, f);
  const ScalarField gw = gamma(F, pair.w);
  const ScalarField lw = laplacian(F, pair.w);
  const ScalarField lf = laplacian(F, f);
  const ScalarField gw_gf = gamma(F, pair.w, gf);   // Gamma(w, Gamma(f))
  const ScalarField guw = gamma(F, u, pair.w);      // Gamma(u, w)
  const ScalarField gu_gf = gamma(F, u, gf);        // Gamma(u, Gamma(f))
  const ScalarField gfu = gamma(F, f, u);           // Gamma(f, u)
  const ScalarField gf_gfu = gamma(F, f, gfu);      // Gamma(f, Gamma(f, u))
  const ScalarField gwf = gamma(F, pair.w, f);
  const ScalarField e4 = exp_field(pair.w, -4.0);

  ScalarField out(gf.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = e4[i] * (g2[i] + 2.0 * gf[i] * gw[i] - lw[i] * gf[i] - 2.0 * gw_gf[i] -
                      gf[i] * guw[i] + 0.5 * gu_gf[i] - gf_gfu[i] + 2.0 * gwf[i] * lf[i] +
                      2.0 * gwf[i] * gfu[i]);
  }
  return out;
}

ScalarField ricci_n(const DiscreteMMS& space, const RicciParams& params, const ScalarField& f) {
  const BaseCalculus bc = framed_calculus(space);
  return ricci_density(space, bc.F, bc.frame, params, f, "ricci_n");
}

ScalarField transformed_ricci_n(const DiscreteMMS& space, const ConformalPair& pair,
                                const RicciParams& params, const ScalarField& f) {
  require_finite_weights(space, pair);
  const BaseCalculus bc = framed_calculus(space);
  return transformed_ricci_density(space, bc.F, bc.frame, pair, params, f,
                                   "transformed_ricci_n");
}

ScalarField ricci_special_case_Nw(const DiscreteMMS& space, const ScalarField& w,
                                  const RicciParams& params, const ScalarField& f) {
  const BaseCalculus bc = framed_calculus(space);
  const auto n = static_cast<std::size_t>(bc.F.n);
  require_size(w, n, "ricci_special_case_Nw");
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(w[i]))
      throw std::invalid_argument("ricci_special_case_Nw: non-finite weight at node " +
                                  std::to_string(i));

  const ScalarField rho = ricci_density(space, bc.F, bc.frame, params, f,
                                        "ricci_special_case_Nw");
  const ScalarField gw = gamma(bc.F, w);
  const ScalarField gf = gamma(bc.F, f);
  const ScalarField lw = laplacian(bc.F, w);
  const ScalarField A = gamma(bc.F, w, f);
  const ScalarField Hw = hessian_pair(bc.F, w, f, f);  // H_w(grad f, grad f)
  const ScalarField e4 = exp_field(w, -4.0);

  ScalarField out(n, kNaN);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(rho[i])) {
      out[i] = rho[i];
      continue;
    }
    out[i] = e4[i] * (rho[i] + (-lw[i] - (params.N - 2.0) * gw[i]) * gf[i] -
                      (params.N - 2.0) * (Hw[i] - A[i] * A[i]));
  }
  return out;
}

double curvature_bound(const DiscreteMMS& space, const ScalarField& w, double N, double K) {
  const auto n = static_cast<std::size_t>(space.n);
  require_size(w, n, "curvature_bound");
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(w[i]))
      throw std::invalid_argument("curvature_bound: non-finite weight at node " +
                                  std::to_string(i));
  for (int i = 0; i < space.n; ++i)
    if (N < space.dim_loc[i] - kDimTol)
      throw std::invalid_argument("curvature_bound: N = " + std::to_string(N) +
                                  " below dim_loc = " + std::to_string(space.dim_loc[i]) +
                                  " at node " + std::to_string(i));

  const BaseCalculus bc = framed_calculus(space);
  const BilinearField Hw = hessian(bc.F, bc.frame, w);
  const std::vector<ScalarField> wsh = frame_coefficients(bc.F, bc.frame, w);
  const ScalarField gw = gamma(bc.F, w);
  const ScalarField lw = laplacian(bc.F, w);
  const std::vector<char> interior = interior_mask(space, kGammaCollar);
  const int d = bc.frame.dim;
  const double coef = N - 2.0;

  double best = std::numeric_limits<double>::infinity();
  int used = 0;
  for (int i = 0; i < bc.F.n; ++i) {
    if (!interior[i] || !bc.frame.valid[i]) continue;
    Eigen::MatrixXd M = Hw.m[i];
    for (int k = 0; k < d; ++k)
      for (int l = 0; l < d; ++l) M(k, l) -= wsh[k][i] * wsh[l][i];
    double lam;
    if (d == 1) {
      lam = M(0, 0);
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
      lam = coef >= 0.0 ? es.eigenvalues().maxCoeff() : es.eigenvalues().minCoeff();
    }
    const double val = std::exp(-2.0 * w[i]) * (K - lw[i] - coef * gw[i] - coef * lam);
    best = std::min(best, val);
    ++used;
  }
  if (used == 0)
    throw std::invalid_argument("curvature_bound: no interior nodes after boundary exclusion");
  return best;
}

CurvatureGeneralResult curvature_bound_general(const DiscreteMMS& space, const ConformalPair& pair,
                                               const RicciParams& params, double K,
                                               const std::vector<ScalarField>& probes) {
  if (probes.empty())
    throw std::invalid_argument("curvature_bound_general: empty probe set");
  require_finite_weights(space, pair);
  int dmax = 1;
  for (int i = 0; i < space.n; ++i) dmax = std::max(dmax, space.dim_loc[i]);
  if (!(params.N > dmax))
    throw std::invalid_argument("curvature_bound_general: N' = " + std::to_string(params.N) +
                                " must exceed the maximal dim_loc = " + std::to_string(dmax));

  const BaseCalculus bc = framed_calculus(space);
  const ScalarField e4 = exp_field(pair.w, 4.0);
  const auto n = static_cast<std::size_t>(bc.F.n);

  std::vector<ScalarField> correction, gprobe;
  std::vector<double> floor_g;
  for (const ScalarField& p : probes) {
    require_size(p, n, "curvature_bound_general probe");
    const ScalarField rho = ricci_density(space, bc.F, bc.frame, params, p,
                                          "curvature_bound_general");
    const ScalarField rho_t = transformed_ricci_density(space, bc.F, bc.frame, pair, params, p,
                                                        "curvature_bound_general");
    ScalarField corr(n), g = gamma(bc.F, p);
    double gmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      corr[i] = e4[i] * rho_t[i] - rho[i];
      gmax = std::max(gmax, g[i]);
    }
    correction.push_back(std::move(corr));
    gprobe.push_back(std::move(g));
    floor_g.push_back(1e-12 * gmax);
  }

  const std::vector<char> interior = interior_mask(space, kGammaCollar);
  double best = std::numeric_limits<double>::infinity();
  int skipped = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!interior[i] || !bc.frame.valid[i]) continue;
    double bracket = -std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < correction.size(); ++q) {
      if (!(gprobe[q][i] > floor_g[q]) || !std::isfinite(correction[q][i])) continue;
      bracket = std::max(bracket, correction[q][i] / gprobe[q][i]);
    }
    if (!std::isfinite(bracket)) {
      ++skipped;
      continue;
    }
    best = std::min(best, std::exp(-2.0 * pair.w[i]) * (K + bracket));
  }
  if (!std::isfinite(best))
    throw std::invalid_argument("curvature_bound_general: no usable interior nodes");

  CurvatureGeneralResult res;
  res.k_prime = best;
  res.probes_used = static_cast<int>(probes.size());
  res.nodes_skipped = skipped;
  res.certified_over_probes = true;
  return res;
}

RicciCheckReport ricci_lower_bound_check(const DiscreteMMS& space, const RicciParams& params,
                                         const ScalarField& f, double K) {
  const BaseCalculus bc = framed_calculus(space);
  const ScalarField rho = ricci_density(space, bc.F, bc.frame, params, f,
                                        "ricci_lower_bound_check");
  const ScalarField g2 = gamma2(bc.F, f);
  const ScalarField gf = gamma(bc.F, f);
  const ScalarField lf = laplacian(bc.F, f);
  const std::vector<char> interior = interior_mask(space, kGammaCollar);

  RicciCheckReport rep;
  double m1 = std::numeric_limits<double>::infinity();
  double m2 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < bc.F.n; ++i) {
    if (!interior[i]) continue;
    if (!bc.frame.valid[i] || !std::isfinite(rho[i])) {
      ++rep.nodes_excluded;
      continue;
    }
    ++rep.nodes_checked;
    const double bochner = g2[i] - lf[i] * lf[i] / params.N - rho[i];
    m1 = std::min(m1, rho[i] - K * gf[i]);
    m2 = std::min(m2, bochner);
    rep.scale = std::max({rep.scale, std::abs(g2[i]), lf[i] * lf[i] / params.N});
  }
  if (rep.nodes_checked == 0)
    throw std::invalid_argument("ricci_lower_bound_check: no interior nodes");
  rep.ricci_margin = m1;
  rep.bochner_margin = m2;
  return rep;
}

ScalarField direct_gradient_norm(const DiscreteMMS& space, const ConformalPair& pair,
                                 const ScalarField& f) {
  require_finite_weights(space, pair);
  const DiscreteMMS t = conformal_transform(space, pair);
  return weak_gradient_norm(assemble_form(t), f);
}

ScalarField direct_laplacian(const DiscreteMMS& space, const ConformalPair& pair,
                             const ScalarField& f) {
  require_finite_weights(space, pair);
  const DiscreteMMS t = conformal_transform(space, pair);
  return laplacian(assemble_form(t), f);
}

ScalarField direct_inner_product(const DiscreteMMS& space, const ConformalPair& pair,
                                 const VectorField& X, const VectorField& Y) {
  require_finite_weights(space, pair);
  const DiscreteMMS t = conformal_transform(space, pair);
  const DirichletForm Ft = assemble_form(t);
  const ScalarField e2w = exp_field(pair.w, 2.0);
  return vf_inner(Ft, to_transformed_chart(X, e2w), to_transformed_chart(Y, e2w));
}

TransformedHessian direct_hessian(const DiscreteMMS& space, const ConformalPair& pair,
                                  const ScalarField& f) {
  require_finite_weights(space, pair);
  const DiscreteMMS t = conformal_transform(space, pair);
  const BaseCalculus bc = framed_calculus(t);
  TransformedHessian out;
  out.matrix = hessian(bc.F, bc.frame, f);
  const ScalarField hs = hs_norm(out.matrix);
  out.tr = trace(out.matrix);
  out.hs2 = ScalarField(hs.size(), kNaN);
  for (std::size_t i = 0; i < hs.size(); ++i) {
    if (!out.matrix.valid[i]) {
      out.tr[i] = kNaN;
      continue;
    }
    out.hs2[i] = hs[i] * hs[i];
  }
  out.internal_consistency = 0.0;
  return out;
}

ScalarField direct_covariant_derivative(const DiscreteMMS& space, const ConformalPair& pair,
                                        const VectorField& X, const VectorField& Y,
                                        const VectorField& Z) {
  require_finite_weights(space, pair);
  const DiscreteMMS t = conformal_transform(space, pair);
  const DirichletForm Ft = assemble_form(t);
  // Reading the same potentials through the transformed form scales every
  // gradient slot by e^{-2w}; three slots and one metric contraction leave
  // a net e^{-4w} to undo.
  ScalarField out = covariant_derivative(Ft, X, Y, Z);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= std::exp(4.0 * pair.w[i]);
  return out;
}

ScalarField direct_gamma2(const DiscreteMMS& space, const ConformalPair& pair,
                          const ScalarField& f) {
  require_finite_weights(space, pair);
  const DiscreteMMS t = conformal_transform(space, pair);
  return gamma2(assemble_form(t), f);
}

ScalarField direct_ricci_n(const DiscreteMMS& space, const ConformalPair& pair,
                           const RicciParams& params, const ScalarField& f) {
  require_finite_weights(space, pair);
  const DiscreteMMS t = conformal_transform(space, pair);
  const BaseCalculus bc = framed_calculus(t);
  return ricci_density(t, bc.F, bc.frame, params, f, "direct_ricci_n");
}

std::vector<ScalarField> default_probe_fields(const DiscreteMMS& space, unsigned seed) {
  if (!space.has_coords())
    throw std::invalid_argument("default_probe_fields: space has no coordinates");
  const auto n = static_cast<std::size_t>(space.n);

  double xmin = space.coords[0][0], xmax = xmin;
  double ymin = space.coords[0][1], ymax = ymin;
  for (const Point& p : space.coords) {
    xmin = std::min(xmin, p[0]);
    xmax = std::max(xmax, p[0]);
    ymin = std::min(ymin, p[1]);
    ymax = std::max(ymax, p[1]);
  }
  const double dx = xmax - xmin, dy = ymax - ymin;

  std::vector<ScalarField> probes;
  auto from = [&](auto&& fn) {
    ScalarField f(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = fn(space.coords[i]);
    return f;
  };
  probes.push_back(from([](const Point& p) { return p[0]; }));
  probes.push_back(from([](const Point& p) { return p[0] * p[0]; }));
  if (dy > 0.0) {
    probes.push_back(from([](const Point& p) { return p[1]; }));
    probes.push_back(from([](const Point& p) { return p[0] * p[1]; }));
    probes.push_back(from([](const Point& p) { return p[1] * p[1]; }));
  }

  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double diag = std::hypot(std::max(dx, 1e-12), std::max(dy, 1e-12));
  for (int b = 0; b < 8; ++b) {
    const double cx = xmin + u01(rng) * dx;
    const double cy = ymin + u01(rng) * dy;
    const double s = (0.15 + 0.25 * u01(rng)) * diag;
    const double amp = (0.5 + u01(rng)) * (u01(rng) < 0.5 ? 1.0 : -1.0);
    probes.push_back(from([&](const Point& p) {
      const double r2 = (p[0] - cx) * (p[0] - cx) + (p[1] - cy) * (p[1] - cy);
      return amp * std::exp(-r2 / (2.0 * s * s));
    }));
  }
  return probes;
}

ScalarField random_smooth_field(const DiscreteMMS& space, std::mt19937& rng) {
  if (!space.has_coords())
    throw std::invalid_argument("random_smooth_field: space has no coordinates");
  const auto n = static_cast<std::size_t>(space.n);

  double xmin = space.coords[0][0], xmax = xmin;
  double ymin = space.coords[0][1], ymax = ymin;
  for (const Point& p : space.coords) {
    xmin = std::min(xmin, p[0]);
    xmax = std::max(xmax, p[0]);
    ymin = std::min(ymin, p[1]);
    ymax = std::max(ymax, p[1]);
  }
  const double dx = xmax - xmin, dy = ymax - ymin;
  const double diag = std::hypot(std::max(dx, 1e-12), std::max(dy, 1e-12));

  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double ax = 2.0 * u01(rng) - 1.0;
  const double ay = 2.0 * u01(rng) - 1.0;
  struct Bump {
    double cx, cy, s, amp;
  };
  std::vector<Bump> bumps;
  for (int b = 0; b < 3; ++b) {
    Bump bp;
    bp.cx = xmin + u01(rng) * dx;
    bp.cy = ymin + u01(rng) * dy;
    bp.s = (0.15 + 0.25 * u01(rng)) * diag;
    bp.amp = (0.5 + u01(rng)) * (u01(rng) < 0.5 ? 1.0 : -1.0);
    bumps.push_back(bp);
  }

  ScalarField f(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Point& p = space.coords[i];
    double val = ax * p[0] + ay * p[1];
    for (const Bump& bp : bumps) {
      const double r2 = (p[0] - bp.cx) * (p[0] - bp.cx) + (p[1] - bp.cy) * (p[1] - bp.cy);
      val += bp.amp * std::exp(-r2 / (2.0 * bp.s * bp.s));
    }
    f[i] = val;
  }
  return f;
}

FieldComparison compare_fields(const DiscreteMMS& space, int collar, const ScalarField& reference,
                               const ScalarField& candidate) {
  const auto n = static_cast<std::size_t>(space.n);
  require_size(reference, n, "compare_fields reference");
  require_size(candidate, n, "compare_fields candidate");
  const std::vector<char> mask = interior_mask(space, collar);

  FieldComparison cmp;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    if (!std::isfinite(reference[i]) || !std::isfinite(candidate[i])) {
      ++cmp.excluded;
      continue;
    }
    ++cmp.compared;
    cmp.max_abs = std::max(cmp.max_abs, std::abs(reference[i] - candidate[i]));
    cmp.scale = std::max(cmp.scale, std::abs(reference[i]));
  }
  if (cmp.compared > 0)
    cmp.max_rel = cmp.scale > 0.0 ? cmp.max_abs / cmp.scale
                                  : (cmp.max_abs > 0.0 ? std::numeric_limits<double>::infinity()
                                                       : 0.0);
  return cmp;
}

}  // namespace cmms
