#include "cmms/calculus.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cmms {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

// Eigenvalue floor (relative) below which a frame Gram matrix counts as
// degenerate at a node.
constexpr double kFrameTol = 1e-12;

}  // namespace

DirichletForm assemble_form(const DiscreteMMS& space) {
  DirichletForm F;
  F.n = space.n;
  F.adj_start = space.adj_start;
  F.adj_node = space.adj_node;
  F.adj_edge = space.adj_edge;
  F.measure = space.measure;
  F.dim_loc = space.dim_loc;
  F.conductance.resize(space.edges.size());

  bool fv = space.has_fv_data();
  if (fv)
    for (const Edge& e : space.edges)
      if (e.sigma < 0.0) fv = false;

  if (fv) {
    for (std::size_t k = 0; k < space.edges.size(); ++k) {
      const Edge& e = space.edges[k];
      double rho_i = space.measure[e.i] / space.cell_volume[e.i];
      double rho_j = space.measure[e.j] / space.cell_volume[e.j];
      F.conductance[k] = 0.5 * (rho_i + rho_j) * e.sigma / e.length;
    }
  } else {
    // Heuristic for graphs without cell geometry; symmetric and positive,
    // which is all the structural identities need.
    double mean_degree = 2.0 * static_cast<double>(space.edges.size()) / space.n;
    if (!(mean_degree > 0.0)) fail("assemble_form: space has no edges");
    for (std::size_t k = 0; k < space.edges.size(); ++k) {
      const Edge& e = space.edges[k];
      F.conductance[k] =
          (space.measure[e.i] + space.measure[e.j]) / (2.0 * mean_degree * e.length * e.length);
    }
  }
  return F;
}

ScalarField gamma(const DirichletForm& F, const ScalarField& f, const ScalarField& g) {
  require_size(f, F.n, "gamma");
  require_size(g, F.n, "gamma");
  ScalarField out(F.n, 0.0);
  for (int i = 0; i < F.n; ++i) {
    double acc = 0.0;
    for (int s = F.adj_start[i]; s < F.adj_start[i + 1]; ++s) {
      int j = F.adj_node[s];
      double c = F.conductance[F.adj_edge[s]];
      acc += c * (f[j] - f[i]) * (g[j] - g[i]);
    }
    out[i] = acc / (2.0 * F.measure[i]);
  }
  return out;
}

ScalarField gamma(const DirichletForm& F, const ScalarField& f) { return gamma(F, f, f); }

ScalarField laplacian(const DirichletForm& F, const ScalarField& f) {
  require_size(f, F.n, "laplacian");
  ScalarField out(F.n, 0.0);
  for (int i = 0; i < F.n; ++i) {
    double acc = 0.0;
    for (int s = F.adj_start[i]; s < F.adj_start[i + 1]; ++s) {
      int j = F.adj_node[s];
      acc += F.conductance[F.adj_edge[s]] * (f[j] - f[i]);
    }
    out[i] = acc / F.measure[i];
  }
  return out;
}

ScalarField gamma2(const DirichletForm& F, const ScalarField& f) {
  ScalarField gf = gamma(F, f);
  ScalarField lf = laplacian(F, f);
  ScalarField lgf = laplacian(F, gf);
  ScalarField glf = gamma(F, f, lf);
  ScalarField out(F.n, 0.0);
  for (int i = 0; i < F.n; ++i) out[i] = 0.5 * lgf[i] - glf[i];
  return out;
}

ScalarField weak_gradient_norm(const DirichletForm& F, const ScalarField& f) {
  ScalarField g = gamma(F, f);
  ScalarField out(F.n, 0.0);
  for (int i = 0; i < F.n; ++i) out[i] = std::sqrt(std::max(0.0, g[i]));
  return out;
}

ScalarField hessian_pair(const DirichletForm& F, const ScalarField& f,
                         const ScalarField& g, const ScalarField& h) {
  ScalarField gfh = gamma(F, f, h);
  ScalarField gfg = gamma(F, f, g);
  ScalarField ggh = gamma(F, g, h);
  ScalarField a = gamma(F, g, gfh);
  ScalarField b = gamma(F, h, gfg);
  ScalarField c = gamma(F, f, ggh);
  ScalarField out(F.n, 0.0);
  for (int i = 0; i < F.n; ++i) out[i] = 0.5 * (a[i] + b[i] - c[i]);
  return out;
}

LocalFrame coordinate_frame(const DiscreteMMS& space, const DirichletForm& F) {
  if (!space.has_coords()) fail("coordinate_frame: space has no coordinates");
  int d = space.dim_loc[0];
  for (int i = 0; i < space.n; ++i)
    if (space.dim_loc[i] != d) fail("coordinate_frame: dim_loc must be uniform");
  if (d < 1 || d > 2) fail("coordinate_frame: dim_loc " + std::to_string(d) + " unsupported");

  LocalFrame fr;
  fr.dim = d;
  fr.valid.assign(space.n, 1);

  ScalarField px(space.n), py(space.n);
  for (int i = 0; i < space.n; ++i) {
    px[i] = space.coords[i][0];
    py[i] = space.coords[i][1];
  }
  fr.potentials.push_back(px);
  if (d == 2) fr.potentials.push_back(py);

  // Gram matrices of the potential gradients in the Gamma inner product.
  ScalarField g11 = gamma(F, fr.potentials[0]);
  ScalarField g12, g22;
  if (d == 2) {
    g12 = gamma(F, fr.potentials[0], fr.potentials[1]);
    g22 = gamma(F, fr.potentials[1]);
  }

  fr.coeff.assign(d, std::vector<ScalarField>(d, ScalarField(space.n, 0.0)));
  double scale = 0.0;
  for (int i = 0; i < space.n; ++i) scale = std::max(scale, std::abs(g11[i]));
  if (d == 2)
    for (int i = 0; i < space.n; ++i) scale = std::max(scale, std::abs(g22[i]));
  double floor = kFrameTol * std::max(scale, 1.0);

  for (int i = 0; i < space.n; ++i) {
    if (g11[i] <= floor) {
      fr.valid[i] = 0;
      continue;
    }
    double r1 = 1.0 / std::sqrt(g11[i]);
    fr.coeff[0][0][i] = r1;
    if (d == 2) {
      // e2 = (grad y - proj onto grad x) normalized, Gram-Schmidt in Gamma.
      double proj = g12[i] / g11[i];
      double s2 = g22[i] - g12[i] * proj;
      if (s2 <= floor) {
        fr.valid[i] = 0;
        continue;
      }
      double r2 = 1.0 / std::sqrt(s2);
      fr.coeff[1][0][i] = -proj * r2;
      fr.coeff[1][1][i] = r2;
    }
  }
  return fr;
}

std::vector<ScalarField> frame_coefficients(const DirichletForm& F, const LocalFrame& frame,
                                            const ScalarField& f) {
  require_size(f, F.n, "frame_coefficients");
  std::vector<ScalarField> gfp;
  gfp.reserve(frame.potentials.size());
  for (const auto& p : frame.potentials) gfp.push_back(gamma(F, f, p));

  std::vector<ScalarField> out(frame.dim, ScalarField(F.n, 0.0));
  for (int k = 0; k < frame.dim; ++k)
    for (std::size_t l = 0; l < frame.potentials.size(); ++l)
      for (int i = 0; i < F.n; ++i) out[k][i] += frame.coeff[k][l][i] * gfp[l][i];
  return out;
}

double frame_orthonormality_defect(const DirichletForm& F, const LocalFrame& frame) {
  std::size_t np = frame.potentials.size();
  std::vector<std::vector<ScalarField>> gram(np, std::vector<ScalarField>(np));
  for (std::size_t a = 0; a < np; ++a)
    for (std::size_t b = a; b < np; ++b) {
      gram[a][b] = gamma(F, frame.potentials[a], frame.potentials[b]);
      if (b != a) gram[b][a] = gram[a][b];
    }

  double worst = 0.0;
  for (int i = 0; i < F.n; ++i) {
    if (!frame.valid[i]) continue;
    for (int k = 0; k < frame.dim; ++k) {
      for (int l = 0; l < frame.dim; ++l) {
        double acc = 0.0;
        for (std::size_t a = 0; a < np; ++a)
          for (std::size_t b = 0; b < np; ++b)
            acc += frame.coeff[k][a][i] * frame.coeff[l][b][i] * gram[a][b][i];
        worst = std::max(worst, std::abs(acc - (k == l ? 1.0 : 0.0)));
      }
    }
  }
  return worst;
}

BilinearField hessian(const DirichletForm& F, const LocalFrame& frame, const ScalarField& f) {
  require_size(f, F.n, "hessian");
  std::size_t np = frame.potentials.size();

  // Potential-pair Hessian values P_ab = H_f(grad p_a, grad p_b).
  std::vector<std::vector<ScalarField>> P(np, std::vector<ScalarField>(np));
  for (std::size_t a = 0; a < np; ++a)
    for (std::size_t b = a; b < np; ++b) {
      P[a][b] = hessian_pair(F, f, frame.potentials[a], frame.potentials[b]);
      if (b != a) P[b][a] = P[a][b];
    }

  BilinearField out;
  out.m.assign(F.n, Eigen::MatrixXd::Zero(frame.dim, frame.dim));
  out.valid.assign(frame.valid.begin(), frame.valid.end());
  for (int i = 0; i < F.n; ++i) {
    if (!out.valid[i]) continue;
    Eigen::MatrixXd A(frame.dim, static_cast<int>(np));
    for (int k = 0; k < frame.dim; ++k)
      for (std::size_t l = 0; l < np; ++l) A(k, static_cast<int>(l)) = frame.coeff[k][l][i];
    Eigen::MatrixXd Pm(np, np);
    for (std::size_t a = 0; a < np; ++a)
      for (std::size_t b = 0; b < np; ++b)
        Pm(static_cast<int>(a), static_cast<int>(b)) = P[a][b][i];
    Eigen::MatrixXd M = A * Pm * A.transpose();
    out.m[i] = 0.5 * (M + M.transpose());
  }
  return out;
}

ScalarField hs_norm(const BilinearField& b) {
  ScalarField out(b.m.size(), 0.0);
  for (std::size_t i = 0; i < b.m.size(); ++i)
    out[i] = b.valid[i] ? b.m[i].norm() : 0.0;
  return out;
}

ScalarField trace(const BilinearField& b) {
  ScalarField out(b.m.size(), 0.0);
  for (std::size_t i = 0; i < b.m.size(); ++i)
    out[i] = b.valid[i] ? b.m[i].trace() : 0.0;
  return out;
}

ScalarField vf_inner(const DirichletForm& F, const VectorField& X, const VectorField& Y) {
  require_size(X, F.n, "vf_inner");
  require_size(Y, F.n, "vf_inner");
  ScalarField out(F.n, 0.0);
  for (const auto& tx : X.terms) {
    for (const auto& ty : Y.terms) {
      ScalarField g = gamma(F, tx.potential, ty.potential);
      for (int i = 0; i < F.n; ++i) out[i] += tx.coeff[i] * ty.coeff[i] * g[i];
    }
  }
  return out;
}

ScalarField vf_inner_grad(const DirichletForm& F, const VectorField& X, const ScalarField& f) {
  require_size(X, F.n, "vf_inner_grad");
  require_size(f, F.n, "vf_inner_grad");
  ScalarField out(F.n, 0.0);
  for (const auto& tx : X.terms) {
    ScalarField g = gamma(F, tx.potential, f);
    for (int i = 0; i < F.n; ++i) out[i] += tx.coeff[i] * g[i];
  }
  return out;
}

ScalarField hessian_vv(const DirichletForm& F, const ScalarField& f, const VectorField& Y,
                       const VectorField& Z) {
  require_size(Y, F.n, "hessian_vv");
  require_size(Z, F.n, "hessian_vv");
  ScalarField out(F.n, 0.0);
  for (const auto& ty : Y.terms) {
    for (const auto& tz : Z.terms) {
      ScalarField h = hessian_pair(F, f, ty.potential, tz.potential);
      for (int i = 0; i < F.n; ++i) out[i] += ty.coeff[i] * tz.coeff[i] * h[i];
    }
  }
  return out;
}

ScalarField covariant_derivative(const DirichletForm& F, const VectorField& X,
                                 const VectorField& Y, const VectorField& Z) {
  require_size(X, F.n, "covariant_derivative");
  ScalarField out(F.n, 0.0);
  for (const auto& tx : X.terms) {
    ScalarField h = hessian_vv(F, tx.potential, Y, Z);
    ScalarField da_y = vf_inner_grad(F, Y, tx.coeff);   // <grad a, Y>
    ScalarField dp_z = vf_inner_grad(F, Z, tx.potential);  // <grad p, Z>
    for (int i = 0; i < F.n; ++i) out[i] += tx.coeff[i] * h[i] + da_y[i] * dp_z[i];
  }
  return out;
}

VectorField frame_vector_field(const LocalFrame& frame, int k) {
  if (k < 0 || k >= frame.dim) fail("frame_vector_field: index out of range");
  VectorField x;
  for (std::size_t l = 0; l < frame.potentials.size(); ++l)
    x.terms.push_back(VectorField::Term{frame.coeff[k][l], frame.potentials[l]});
  return x;
}

}  // namespace cmms
