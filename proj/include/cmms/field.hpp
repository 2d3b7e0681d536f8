#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cmms {

/** Node-indexed scalar values, the basic currency of every operator here.
 *
 * A field is only meaningful relative to the space whose nodes index it;
 * operators check the length against the space they were built from and
 * throw std::invalid_argument on mismatch.
 */
struct ScalarField {
  std::vector<double> v;

  ScalarField() = default;
  explicit ScalarField(std::size_t n, double fill = 0.0) : v(n, fill) {}
  explicit ScalarField(std::vector<double> values) : v(std::move(values)) {}

  std::size_t size() const { return v.size(); }
  double& operator[](std::size_t i) { return v[i]; }
  double operator[](std::size_t i) const { return v[i]; }

  auto begin() { return v.begin(); }
  auto end() { return v.end(); }
  auto begin() const { return v.begin(); }
  auto end() const { return v.end(); }
};

/** Conformal data (w, v): lengths are rescaled by e^w, the measure by e^v. */
struct ConformalPair {
  ScalarField w;
  ScalarField v;

  static ConformalPair zero(std::size_t n) {
    return ConformalPair{ScalarField(n, 0.0), ScalarField(n, 0.0)};
  }
  static ConformalPair constant(std::size_t n, double cw, double cv) {
    return ConformalPair{ScalarField(n, cw), ScalarField(n, cv)};
  }
};

/** Vector field given as a gradient combination X = sum_l a_l grad(p_l).
 *
 * Coefficients a_l are per-node fields, potentials p_l are scalar fields.
 * Everything downstream (inner products, angles, covariant derivatives)
 * is evaluated through carre-du-champ calls on the potentials, so this
 * representation is exactly the class of fields the calculus can see.
 */
struct VectorField {
  struct Term {
    ScalarField coeff;
    ScalarField potential;
  };
  std::vector<Term> terms;

  static VectorField gradient(ScalarField f) {
    VectorField x;
    const std::size_t n = f.size();
    x.terms.push_back(Term{ScalarField(n, 1.0), std::move(f)});
    return x;
  }
};

inline void require_size(const ScalarField& f, std::size_t n, const char* what) {
  if (f.size() != n)
    throw std::invalid_argument(std::string(what) + ": field has " +
                                std::to_string(f.size()) + " values, space has " +
                                std::to_string(n) + " nodes");
}

inline void require_size(const ConformalPair& p, std::size_t n, const char* what) {
  require_size(p.w, n, what);
  require_size(p.v, n, what);
}

inline void require_size(const VectorField& x, std::size_t n, const char* what) {
  if (x.terms.empty())
    throw std::invalid_argument(std::string(what) + ": vector field has no terms");
  for (const auto& t : x.terms) {
    require_size(t.coeff, n, what);
    require_size(t.potential, n, what);
  }
}

}  // namespace cmms
