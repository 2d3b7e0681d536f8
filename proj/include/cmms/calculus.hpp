#pragma once

#include "cmms/field.hpp"
#include "cmms/space.hpp"

#include <Eigen/Dense>

#include <vector>

namespace cmms {

/** Symmetric Dirichlet form E(f,g) = 1/2 sum_e c_e (f_j - f_i)(g_j - g_i).
 *
 * Conductances come from the space: finite-volume grids use
 * c_e = rho_e * sigma_e / l_e with rho_e the edge average of measure
 * density per cell volume, generic graphs use the degree-normalized rule
 * c_e = (m_i + m_j) / (2 * mean_degree * l_e^2). Either way the form is
 * symmetric with nonnegative conductances, so integration by parts
 * sum_i phi_i (Lf)_i m_i = -sum_i Gamma(phi,f)_i m_i holds to rounding.
 */
struct DirichletForm {
  int n = 0;
  std::vector<int> adj_start, adj_node, adj_edge;
  std::vector<double> conductance;  // per canonical edge
  std::vector<double> measure;
  std::vector<int> dim_loc;
};

DirichletForm assemble_form(const DiscreteMMS& space);

// Carre du champ Gamma(f,g)(i) = (1/2m_i) sum_j c_ij (f_j - f_i)(g_j - g_i).
ScalarField gamma(const DirichletForm& F, const ScalarField& f, const ScalarField& g);
ScalarField gamma(const DirichletForm& F, const ScalarField& f);

// Generator Lf(i) = (1/m_i) sum_j c_ij (f_j - f_i).
ScalarField laplacian(const DirichletForm& F, const ScalarField& f);

// Iterated form Gamma_2(f) = 1/2 L Gamma(f) - Gamma(f, Lf). Values within
// two stencils of a boundary mix one-sided differences; identity checks
// should mask that collar out.
ScalarField gamma2(const DirichletForm& F, const ScalarField& f);

// |Df|(i) = sqrt(Gamma(f)(i)); the minimal weak upper gradient realized here.
ScalarField weak_gradient_norm(const DirichletForm& F, const ScalarField& f);

// Hessian value H_f(grad g, grad h) by polarization:
//   2 H_f(grad g, grad h) = Gamma(g, Gamma(f,h)) + Gamma(h, Gamma(f,g))
//                         - Gamma(f, Gamma(g,h)).
ScalarField hessian_pair(const DirichletForm& F, const ScalarField& f,
                         const ScalarField& g, const ScalarField& h);

/** Pointwise orthonormal frame spanned by gradients of potential fields.
 *
 * Frame vector e_k = sum_l coeff[k][l] * grad(potentials[l]); the
 * coefficients are produced by Gram-Schmidt in the Gamma inner product, so
 * Gamma-contractions of frame vectors reproduce delta_kl wherever `valid`.
 * Nodes where the potential gradients are degenerate are flagged invalid
 * and excluded from downstream reports.
 */
struct LocalFrame {
  int dim = 0;
  std::vector<ScalarField> potentials;
  std::vector<std::vector<ScalarField>> coeff;  // [frame vector][potential] -> field
  std::vector<char> valid;
};

// Frame from coordinate functions; on an axis-aligned grid the coordinate
// gradients are already Gamma-orthonormal and the coefficients collapse to
// the diagonal normalizers. Requires coordinates and uniform dim_loc.
LocalFrame coordinate_frame(const DiscreteMMS& space, const DirichletForm& F);

// max over valid nodes of |<e_k, e_l> - delta_kl|.
double frame_orthonormality_defect(const DirichletForm& F, const LocalFrame& frame);

// Frame coefficients of grad f: out[k](i) = <grad f, e_k>(i).
std::vector<ScalarField> frame_coefficients(const DirichletForm& F, const LocalFrame& frame,
                                            const ScalarField& f);

/** Node-indexed symmetric dim x dim matrices (Hessians, Ricci candidates). */
struct BilinearField {
  std::vector<Eigen::MatrixXd> m;
  std::vector<char> valid;

  std::size_t size() const { return m.size(); }
};

// Frame-matrix Hessian: entry (k,l) = H_f(e_k, e_l), assembled from the
// potential-pair polarization values and the frame coefficients.
BilinearField hessian(const DirichletForm& F, const LocalFrame& frame, const ScalarField& f);

ScalarField hs_norm(const BilinearField& b);  // Frobenius norm per node
ScalarField trace(const BilinearField& b);

// <X, Y> = sum a_l b_m Gamma(p_l, q_m) for gradient combinations.
ScalarField vf_inner(const DirichletForm& F, const VectorField& X, const VectorField& Y);

// <X, grad f>.
ScalarField vf_inner_grad(const DirichletForm& F, const VectorField& X, const ScalarField& f);

// H_f(Y, Z) extended to gradient combinations by bilinearity over terms.
ScalarField hessian_vv(const DirichletForm& F, const ScalarField& f, const VectorField& Y,
                       const VectorField& Z);

// Covariant derivative contraction grad X : (Y (x) Z). For X = sum a_l grad p_l,
//   grad X : (Y (x) Z) = sum_l [ a_l H_{p_l}(Y, Z) + <grad a_l, Y> <grad p_l, Z> ],
// the Leibniz expansion with the first tensor slot taken by Y.
ScalarField covariant_derivative(const DirichletForm& F, const VectorField& X,
                                 const VectorField& Y, const VectorField& Z);

// Frame vectors as VectorField values (for tests and probe construction).
VectorField frame_vector_field(const LocalFrame& frame, int k);

}  // namespace cmms
