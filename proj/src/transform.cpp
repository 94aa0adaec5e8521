#include "emdk/transform.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "emdk/errors.hpp"

namespace emdk {

namespace {

constexpr double kZeroDiagTol = 1e-12;

double default_scale(double a, double b, double c) {
  return std::max({std::abs(a), std::abs(b), std::abs(c)});
}

double matrix_scale(const Eigen::MatrixXd& m) {
  return m.size() > 0 ? m.cwiseAbs().maxCoeff() : 0.0;
}

double min_eig_ratio(const Eigen::MatrixXd& g, double* min_eig) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw SolverError("eigensolver failed");
  const auto& ev = es.eigenvalues();
  *min_eig = ev.minCoeff();
  return std::max(std::abs(ev.minCoeff()), std::abs(ev.maxCoeff()));
}

}  // namespace

double tanimoto(double kxy, double kxx, double kyy, std::optional<double> scale) {
  return tanimoto_nested(kxy, kxx, kyy, 1, scale);
}

double tanimoto_nested(double kxy, double kxx, double kyy, int n, std::optional<double> scale) {
  if (n < 0) throw DomainError("nesting depth must be >= 0");
  const double s = scale.value_or(default_scale(kxy, kxx, kyy));
  const double zero = kZeroDiagTol * s;
  if (std::abs(kxx) <= zero && std::abs(kyy) <= zero) return 1.0;
  double denom;
  double numer = kxy;
  if (n == 0) {
    denom = kxx + kyy;
    numer = 2.0 * kxy;
  } else {
    const double half_pow = std::ldexp(1.0, n - 1);  // 2^(n-1)
    denom = half_pow * ((kxx - kxy) + (kyy - kxy)) + kxy;
  }
  if (denom == 0.0) {
    std::ostringstream msg;
    msg << "zero denominator in nested transform (n=" << n << ", kxy=" << kxy << ", kxx=" << kxx
        << ", kyy=" << kyy << ")";
    throw DomainError(msg.str());
  }
  return numer / denom;
}

double biotope(double dxy, double dxx, double dyy, double dxp, double dyp, double dpp) {
  const double numer = 2.0 * dxy - dxx - dyy;
  if (numer == 0.0) return 0.0;
  const double denom = dxp + dyp + dxy - dxx - dyy - dpp;
  if (denom == 0.0) throw DomainError("degenerate anchor: biotope denominator is zero");
  return numer / denom;
}

Eigen::MatrixXd tanimoto(const Eigen::MatrixXd& gram) { return tanimoto_nested(gram, 1); }

Eigen::MatrixXd tanimoto_nested(const Eigen::MatrixXd& gram, int n) {
  if (gram.rows() != gram.cols()) throw DimensionMismatch("Gram matrix must be square");
  const double s = matrix_scale(gram);
  Eigen::MatrixXd out(gram.rows(), gram.cols());
  for (Eigen::Index i = 0; i < gram.rows(); ++i) {
    for (Eigen::Index j = i; j < gram.cols(); ++j) {
      const double v = tanimoto_nested(gram(i, j), gram(i, i), gram(j, j), n, s);
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

Anchor anchor_at_row(const Eigen::MatrixXd& distances, Eigen::Index row) {
  if (row < 0 || row >= distances.rows()) throw DomainError("anchor row out of range");
  return Anchor{distances.col(row), distances(row, row)};
}

Eigen::MatrixXd biotope(const Eigen::MatrixXd& distances, const Anchor& anchor) {
  if (distances.rows() != distances.cols()) throw DimensionMismatch("distance matrix must be square");
  if (anchor.to_anchor.size() != distances.rows()) {
    throw DimensionMismatch("anchor distances do not match the matrix size");
  }
  Eigen::MatrixXd out(distances.rows(), distances.cols());
  for (Eigen::Index i = 0; i < distances.rows(); ++i) {
    for (Eigen::Index j = i; j < distances.cols(); ++j) {
      const double v = biotope(distances(i, j), distances(i, i), distances(j, j),
                               anchor.to_anchor(i), anchor.to_anchor(j), anchor.self);
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

PdIzation pd_ization_order(const Eigen::MatrixXd& gram, double tol, int cap) {
  if (gram.rows() != gram.cols()) throw DimensionMismatch("Gram matrix must be square");
  const double s = matrix_scale(gram);
  for (Eigen::Index i = 0; i < gram.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < gram.cols(); ++j) {
      if (std::abs(2.0 * gram(i, j) - gram(i, i) - gram(j, j)) <= 1e-12 * s) {
        std::ostringstream msg;
        msg << "rows " << i << " and " << j << " satisfy 2K(x,y) = K(x,x) + K(y,y)";
        throw DomainError(msg.str());
      }
    }
  }
  PdIzation out;
  for (int n = 0; n <= cap; ++n) {
    Eigen::MatrixXd g = n == 0 ? gram : tanimoto_nested(gram, n);
    double min_eig = 0.0;
    const double max_abs = g.size() > 0 ? min_eig_ratio(g, &min_eig) : 0.0;
    if (min_eig >= -tol * max_abs) {
      out.order = n;
      out.result = std::move(g);
      out.min_eigenvalue = min_eig;
      return out;
    }
  }
  std::ostringstream msg;
  msg << "nested transform did not become PSD within " << cap << " iterations";
  throw SolverError(msg.str());
}

double jaccard_index(const WeightedPointSet& a, const WeightedPointSet& b) {
  const double inter = intersect(a, b).total_mass();
  return tanimoto(inter, a.total_mass(), b.total_mass());
}

double mass_ratio_distance(const WeightedPointSet& a, const WeightedPointSet& b) {
  const double hi = std::max(a.total_mass(), b.total_mass());
  if (hi == 0.0) return 0.0;
  return std::abs(a.total_mass() - b.total_mass()) / hi;
}

}  // namespace emdk
