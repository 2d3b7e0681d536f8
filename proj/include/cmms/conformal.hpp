#pragma once

#include "cmms/calculus.hpp"
#include "cmms/field.hpp"
#include "cmms/space.hpp"

#include <random>
#include <vector>

namespace cmms {

/** Parameters for the dimension-N Ricci operators.
 *
 * `N` is the curvature-dimension parameter (N >= dim_loc everywhere). The
 * residual term carries a 1/(N - dim_loc) factor; on nodes with
 * dim_loc == N it is declared zero provided its numerator stays within
 * `singular_tol` times the field scale, and a hard error names the interior
 * nodes where that fails. Boundary-collar nodes failing the check are set
 * to NaN and excluded instead of erroring, since their one-sided stencils
 * carry no usable information anyway.
 */
struct RicciParams {
  double N = 2.0;
  double singular_tol = 1e-6;
};

// ---- prediction operators (closed-form transformation rules on the base space)

// |Df|' = e^{-w} |Df|.
ScalarField transformed_gradient_norm(const DiscreteMMS& space, const ConformalPair& pair,
                                      const ScalarField& f);

// L'f = e^{-2w} (Lf + Gamma(v - 2w, f)); the measure weight enters only
// through the drift term.
ScalarField transformed_laplacian(const DiscreteMMS& space, const ConformalPair& pair,
                                  const ScalarField& f);

// <X,Y>' = e^{2w} <X,Y> for fixed vector fields.
ScalarField transformed_inner_product(const DiscreteMMS& space, const ConformalPair& pair,
                                      const VectorField& X, const VectorField& Y);

struct AngleField {
  ScalarField angle;        // radians; meaningful where defined
  ScalarField cosine;       // the arccos argument
  std::vector<char> defined;
  int undefined_nodes = 0;  // zero-norm nodes
};

// Angle between gradient combinations under the base metric.
AngleField angle(const DiscreteMMS& space, const VectorField& X, const VectorField& Y);

// Same angle evaluated through the transformed inner products. The e^{2w}
// factors cancel inside the arccos argument, so this agrees with angle()
// to rounding at any resolution.
AngleField transformed_angle(const DiscreteMMS& space, const ConformalPair& pair,
                             const VectorField& X, const VectorField& Y);

struct TransformedHessian {
  BilinearField matrix;  // entrywise transformed Hessian in the e^{-w}-scaled frame
  ScalarField hs2;       // closed-form squared Hilbert-Schmidt norm
  ScalarField tr;        // closed-form trace
  double internal_consistency = 0.0;  // max |matrix-derived - closed-form|
};

// Entrywise rule (H'_f)_kl = e^{-2w} (H_kl - w_k f_l - w_l f_k + <w,f> delta_kl)
// with w_k, f_k the frame coefficients of the gradients. The returned hs2
// and tr come from the expanded closed forms; they match the matrix by
// construction, which internal_consistency records.
TransformedHessian transformed_hessian(const DiscreteMMS& space, const ConformalPair& pair,
                                       const ScalarField& f);

// grad'X : (Y (x) Z) = grad X : (Y (x) Z) - <Y,grad w><X,Z> - <Z,grad w><X,Y>
//                     + <X,grad w><Y,Z>.
ScalarField transformed_covariant_derivative(const DiscreteMMS& space, const ConformalPair& pair,
                                             const VectorField& X, const VectorField& Y,
                                             const VectorField& Z);

// Gamma_2 of the transformed space as a density against the transformed
// measure, expanded over base-space operators.
ScalarField transformed_gamma2(const DiscreteMMS& space, const ConformalPair& pair,
                               const ScalarField& f);

// ---- Ricci operators

// N-Ricci density against the base measure:
//   ricci_N(f) = Gamma_2(f) - |H_f|^2_HS - (tr H_f - Lf)^2 / (N - dim_loc).
ScalarField ricci_n(const DiscreteMMS& space, const RicciParams& params, const ScalarField& f);

// N-Ricci density of the transformed space against the transformed measure,
// expanded over base-space operators (general weights w, v).
ScalarField transformed_ricci_n(const DiscreteMMS& space, const ConformalPair& pair,
                                const RicciParams& params, const ScalarField& f);

// Same quantity for the volume-coupled case v = N w, via the reduced rule
//   e^{-4w} ( ricci_N(f) + (-Lw - (N-2)Gamma(w)) Gamma(f)
//             - (N-2) (H_w(grad f, grad f) - Gamma(w,f)^2) ).
// Agrees with transformed_ricci_n at v = N w up to rounding; the reduction
// is polynomial in shared ingredients.
ScalarField ricci_special_case_Nw(const DiscreteMMS& space, const ScalarField& w,
                                  const RicciParams& params, const ScalarField& f);

// ---- curvature lower bounds

// K' = inf over interior nodes of
//   e^{-2w} [ K - Lw - (N-2) Gamma(w) - (N-2) lambda(H_w - dw (x) dw) ]
// where lambda is the extreme eigenvalue of the frame matrix (max for
// N >= 2, min for N < 2), realizing the sup over gradient directions as a
// Rayleigh quotient. Exact for constant w.
double curvature_bound(const DiscreteMMS& space, const ScalarField& w, double N, double K);

struct CurvatureGeneralResult {
  double k_prime = 0.0;
  int probes_used = 0;
  int nodes_skipped = 0;          // interior nodes with no usable probe
  bool certified_over_probes = true;  // bound certified only against the probe family
};

// K' = inf over interior nodes of e^{-2w} [ K + max over probe fields of
//   (e^{4w} ricci'_N(f) - ricci_N(f)) / Gamma(f) ].
// The maximization runs over the supplied probes only, so the value is
// certified against that family rather than all test functions.
CurvatureGeneralResult curvature_bound_general(const DiscreteMMS& space, const ConformalPair& pair,
                                               const RicciParams& params, double K,
                                               const std::vector<ScalarField>& probes);

struct RicciCheckReport {
  double ricci_margin = 0.0;    // min over interior of ricci_N(f) - K Gamma(f)
  double bochner_margin = 0.0;  // min over interior of Gamma_2(f) - (Lf)^2/N - ricci_N(f)
  double scale = 1.0;           // normalization for relative margin thresholds
  int nodes_checked = 0;
  int nodes_excluded = 0;
};

// Verifies the lower-bound and Bochner inequalities for one test field on
// the given space, intrinsically (no transformation involved).
RicciCheckReport ricci_lower_bound_check(const DiscreteMMS& space, const RicciParams& params,
                                         const ScalarField& f, double K);

// ---- direct recomputation routes (double solves on the transformed space)

ScalarField direct_gradient_norm(const DiscreteMMS& space, const ConformalPair& pair,
                                 const ScalarField& f);
ScalarField direct_laplacian(const DiscreteMMS& space, const ConformalPair& pair,
                             const ScalarField& f);
ScalarField direct_inner_product(const DiscreteMMS& space, const ConformalPair& pair,
                                 const VectorField& X, const VectorField& Y);
TransformedHessian direct_hessian(const DiscreteMMS& space, const ConformalPair& pair,
                                  const ScalarField& f);
// Contracted covariant derivative recomputed with the transformed calculus.
// The potential lists are read through the transformed carre du champ, which
// scales each gradient by e^{-2w}; the result is rescaled by e^{4w} so it
// targets the same base-normalized quantity as the prediction route.
ScalarField direct_covariant_derivative(const DiscreteMMS& space, const ConformalPair& pair,
                                        const VectorField& X, const VectorField& Y,
                                        const VectorField& Z);
ScalarField direct_gamma2(const DiscreteMMS& space, const ConformalPair& pair,
                          const ScalarField& f);
ScalarField direct_ricci_n(const DiscreteMMS& space, const ConformalPair& pair,
                           const RicciParams& params, const ScalarField& f);

// ---- probe fields and comparisons

// Coordinate functions, their pairwise products and squares, plus eight
// seeded Gaussian bumps. Deterministic for a fixed seed.
std::vector<ScalarField> default_probe_fields(const DiscreteMMS& space, unsigned seed);

// One random smooth field: a few Gaussian bumps over the coordinate range
// plus a linear part. Drives property-style tests.
ScalarField random_smooth_field(const DiscreteMMS& space, std::mt19937& rng);

struct FieldComparison {
  double max_abs = 0.0;
  double max_rel = 0.0;  // max_abs / max(|reference| over compared nodes, eps)
  double scale = 0.0;    // max |reference|
  int compared = 0;
  int excluded = 0;
};

// Compares candidate against reference on interior nodes (given collar),
// skipping non-finite entries on either side.
FieldComparison compare_fields(const DiscreteMMS& space, int collar, const ScalarField& reference,
                               const ScalarField& candidate);

}  // namespace cmms
