#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "emdk/multiset.hpp"

namespace emdk {

enum class GroundKind { euclidean, squared_euclidean, discrete, circle_geodesic, precomputed, custom };

std::string to_string(GroundKind kind);

using PointMetric = std::function<double(std::span<const double>, std::span<const double>)>;

// Pairwise cost between individual points. Optionally thresholded:
// D_t(x, y) = min(t, D(x, y)).
//
// Circle points are single angles in [0, 2*pi) on the unit circle.
// Precomputed distances are keyed by point index: a point is a 1-vector
// holding an integer row index into the matrix.
class GroundDistance {
 public:
  static GroundDistance euclidean();
  static GroundDistance squared_euclidean();
  static GroundDistance discrete();
  static GroundDistance circle();
  // Throws InputError unless `matrix` is square, finite and symmetric to
  // 1e-9 relative; the stored matrix is the symmetrized average.
  static GroundDistance precomputed(const Eigen::MatrixXd& matrix);
  // Arbitrary symmetric cost; `bound` is the supremum when known.
  static GroundDistance custom(PointMetric fn, std::optional<double> bound = std::nullopt,
                               std::string name = "custom");

  // Throws DomainError unless t > 0.
  GroundDistance thresholded(double t) const;

  GroundKind kind() const { return kind_; }
  std::optional<double> threshold() const { return threshold_; }
  const Eigen::MatrixXd* matrix() const { return matrix_.get(); }

  double operator()(std::span<const double> x, std::span<const double> y) const;

  // Supremum of the distance when finite: the threshold, 1 for discrete,
  // pi for the circle, the largest entry of a precomputed matrix.
  std::optional<double> bound() const;

  std::string describe() const;

 private:
  GroundKind kind_ = GroundKind::euclidean;
  std::optional<double> threshold_;
  std::shared_ptr<const Eigen::MatrixXd> matrix_;
  PointMetric custom_;
  std::optional<double> custom_bound_;
  std::string name_;
};

double eval(const GroundDistance& d, std::span<const double> x, std::span<const double> y);

// Geodesic distance as the arc-cosine of the dot product of the unit vectors
// at angles a and b. Slower than the wrapped |a - b| form used by
// GroundDistance::circle(); kept as a reference.
double circle_geodesic_reference(double a, double b);

// Cost matrix [D(a_i, b_j)] between the supports of two sets.
Eigen::MatrixXd cost_matrix(const WeightedPointSet& a, const WeightedPointSet& b,
                            const GroundDistance& d);

// Destination for the excess mass of the larger set. Either a point p of
// the ground space (cost D(b, p), self cost D(p, p)) or a flat rate beta
// charged per unit of excess mass.
class SinkSpec {
 public:
  static SinkSpec point(Point p);
  // Throws DomainError unless beta > 0.
  static SinkSpec flat_rate(double beta);

  bool is_flat() const { return flat_; }
  double beta() const { return beta_; }
  const Point& location() const { return point_; }

  double cost_to_sink(const GroundDistance& d, std::span<const double> x) const;
  double self_cost(const GroundDistance& d) const;

  std::string describe() const;

 private:
  bool flat_ = true;
  double beta_ = 0.0;
  Point point_;
};

template <class T>
using PairFunction = std::function<double(const T&, const T&)>;

// K(x, y) = D(x, x0) + D(y, x0) - D(x, y) - D(x0, x0).
// K is positive definite exactly when D is conditionally negative definite.
template <class T>
PairFunction<T> kernel_from_distance(PairFunction<T> dist, T x0) {
  const double self = dist(x0, x0);
  return [dist = std::move(dist), x0 = std::move(x0), self](const T& x, const T& y) {
    return dist(x, x0) + dist(y, x0) - dist(x, y) - self;
  };
}

// Induced squared feature-space distance D(x, y) = K(x, x) + K(y, y) - 2K(x, y).
template <class T>
PairFunction<T> distance_from_kernel(PairFunction<T> kernel) {
  return [kernel = std::move(kernel)](const T& x, const T& y) {
    return kernel(x, x) + kernel(y, y) - 2.0 * kernel(x, y);
  };
}

PairFunction<Point> as_pair_function(const GroundDistance& d);

// 1 - discrete(x, y): 1 on identical points, 0 otherwise.
double discrete_kernel(std::span<const double> x, std::span<const double> y);

}  // namespace emdk
