#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "emdk/ground.hpp"
#include "emdk/multiset.hpp"

namespace emdk {

// Tanimoto-type normalization of a kernel value:
//   T(x, y) = K(x, y) / (K(x, x) + K(y, y) - K(x, y)).
// When both diagonal values are zero to within 1e-12 * scale the result is
// 1. `scale` defaults to max(|kxy|, |kxx|, |kyy|). Throws DomainError on a
// zero denominator with a nonzero diagonal.
double tanimoto(double kxy, double kxx, double kyy, std::optional<double> scale = std::nullopt);

// n-fold nested Tanimoto transform in closed form,
//   K / (2^(n-1) [K(x,x) + K(y,y)] - (2^n - 1) K(x, y)),
// with n = 0 giving 2K / (K(x,x) + K(y,y)).
double tanimoto_nested(double kxy, double kxx, double kyy, int n,
                       std::optional<double> scale = std::nullopt);

// Anchored biotope transform of a distance:
//   [2D(x,y) - D(x,x) - D(y,y)] / [D(x,p) + D(y,p) + D(x,y) - D(x,x) - D(y,y) - D(p,p)].
// Returns 0 when the numerator vanishes; throws DomainError when only the
// denominator does.
double biotope(double dxy, double dxx, double dyy, double dxp, double dyp, double dpp);

// Matrixwise forms. The diagonal of the input supplies K(x, x).
Eigen::MatrixXd tanimoto(const Eigen::MatrixXd& gram);
Eigen::MatrixXd tanimoto_nested(const Eigen::MatrixXd& gram, int n);

// Distances from every roster element to the anchor p, plus D(p, p).
struct Anchor {
  Eigen::VectorXd to_anchor;
  double self = 0.0;
};

// Anchor at roster element `row`.
Anchor anchor_at_row(const Eigen::MatrixXd& distances, Eigen::Index row);

Eigen::MatrixXd biotope(const Eigen::MatrixXd& distances, const Anchor& anchor);

struct PdIzation {
  int order = 0;            // 0 means the input was already PSD
  Eigen::MatrixXd result;  // the transformed Gram at that order
  double min_eigenvalue = 0.0;
};

// Smallest n in [0, cap] such that the n-fold nested transform of `gram`
// (n = 0: the input itself) has min eigenvalue >= -tol * max |eigenvalue|.
// Throws DomainError if 2K(x,y) = K(x,x) + K(y,y) for some distinct pair
// (to 1e-12 relative) and SolverError when the cap is reached.
PdIzation pd_ization_order(const Eigen::MatrixXd& gram, double tol = 1e-8, int cap = 64);

// mu(A n B) / mu(A u B); 1 for two empty sets.
double jaccard_index(const WeightedPointSet& a, const WeightedPointSet& b);

// |mu(A) - mu(B)| / max(mu(A), mu(B)); 0 for two empty sets.
double mass_ratio_distance(const WeightedPointSet& a, const WeightedPointSet& b);

// Pointwise kernels over arbitrary domains.
template <class T>
PairFunction<T> tanimoto_kernel(PairFunction<T> k) {
  return [k = std::move(k)](const T& x, const T& y) { return tanimoto(k(x, y), k(x, x), k(y, y)); };
}

template <class T>
PairFunction<T> nested_tanimoto_kernel(PairFunction<T> k, int n) {
  return [k = std::move(k), n](const T& x, const T& y) {
    return tanimoto_nested(k(x, y), k(x, x), k(y, y), n);
  };
}

template <class T>
PairFunction<T> biotope_distance(PairFunction<T> d, T p) {
  const double dpp = d(p, p);
  return [d = std::move(d), p = std::move(p), dpp](const T& x, const T& y) {
    return biotope(d(x, y), d(x, x), d(y, y), d(x, p), d(y, p), dpp);
  };
}

}  // namespace emdk
