#include "emdk/ground.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "emdk/errors.hpp"

namespace emdk {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_same_dim(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    std::ostringstream msg;
    msg << "ground distance dimension mismatch: " << x.size() << " vs " << y.size();
    throw DimensionMismatch(msg.str());
  }
}

double angle_of(std::span<const double> x) {
  if (x.size() != 1) throw DimensionMismatch("circle points are single angles");
  const double a = x[0];
  if (!(a >= 0.0 && a < kTwoPi)) {
    std::ostringstream msg;
    msg << "circle angle " << a << " outside [0, 2pi)";
    throw DomainError(msg.str());
  }
  return a;
}

std::size_t index_of(std::span<const double> x, Eigen::Index n) {
  if (x.size() != 1) throw DimensionMismatch("precomputed ground points are single indices");
  const double v = x[0];
  if (!(v >= 0.0) || v != std::floor(v) || v >= static_cast<double>(n)) {
    std::ostringstream msg;
    msg << "precomputed index " << v << " out of range [0, " << n << ")";
    throw DomainError(msg.str());
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

std::string to_string(GroundKind kind) {
  switch (kind) {
    case GroundKind::euclidean: return "euclidean";
    case GroundKind::squared_euclidean: return "sqeuclidean";
    case GroundKind::discrete: return "discrete";
    case GroundKind::circle_geodesic: return "circle";
    case GroundKind::precomputed: return "precomputed";
    case GroundKind::custom: return "custom";
  }
  return "unknown";
}

GroundDistance GroundDistance::euclidean() {
  GroundDistance d;
  d.kind_ = GroundKind::euclidean;
  return d;
}

GroundDistance GroundDistance::squared_euclidean() {
  GroundDistance d;
  d.kind_ = GroundKind::squared_euclidean;
  return d;
}

GroundDistance GroundDistance::discrete() {
  GroundDistance d;
  d.kind_ = GroundKind::discrete;
  return d;
}

GroundDistance GroundDistance::circle() {
  GroundDistance d;
  d.kind_ = GroundKind::circle_geodesic;
  return d;
}

GroundDistance GroundDistance::precomputed(const Eigen::MatrixXd& matrix) {
  if (matrix.rows() != matrix.cols()) throw InputError("precomputed distance must be square");
  if (!matrix.allFinite()) throw InputError("precomputed distance has non-finite entries");
  const double scale = std::max(1.0, matrix.cwiseAbs().maxCoeff());
  const double asym = (matrix - matrix.transpose()).cwiseAbs().maxCoeff();
  if (matrix.size() > 0 && asym > 1e-9 * scale) {
    std::ostringstream msg;
    msg << "precomputed distance is not symmetric (max |D - D^T| = " << asym << ")";
    throw InputError(msg.str());
  }
  GroundDistance d;
  d.kind_ = GroundKind::precomputed;
  d.matrix_ = std::make_shared<const Eigen::MatrixXd>(0.5 * (matrix + matrix.transpose()));
  return d;
}

GroundDistance GroundDistance::custom(PointMetric fn, std::optional<double> bound,
                                      std::string name) {
  GroundDistance d;
  d.kind_ = GroundKind::custom;
  d.custom_ = std::move(fn);
  d.custom_bound_ = bound;
  d.name_ = std::move(name);
  return d;
}

GroundDistance GroundDistance::thresholded(double t) const {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("threshold must be positive and finite");
  GroundDistance d = *this;
  d.threshold_ = t;
  return d;
}

double GroundDistance::operator()(std::span<const double> x, std::span<const double> y) const {
  double v = 0.0;
  switch (kind_) {
    case GroundKind::euclidean:
    case GroundKind::squared_euclidean: {
      require_same_dim(x, y);
      double s = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) {
        const double diff = x[k] - y[k];
        s += diff * diff;
      }
      v = kind_ == GroundKind::euclidean ? std::sqrt(s) : s;
      break;
    }
    case GroundKind::discrete:
      require_same_dim(x, y);
      v = std::equal(x.begin(), x.end(), y.begin()) ? 0.0 : 1.0;
      break;
    case GroundKind::circle_geodesic: {
      const double diff = std::abs(angle_of(x) - angle_of(y));
      v = std::min(diff, kTwoPi - diff);
      break;
    }
    case GroundKind::precomputed: {
      const auto i = index_of(x, matrix_->rows());
      const auto j = index_of(y, matrix_->rows());
      v = (*matrix_)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      break;
    }
    case GroundKind::custom:
      require_same_dim(x, y);
      v = custom_(x, y);
      break;
  }
  return threshold_ ? std::min(*threshold_, v) : v;
}

std::optional<double> GroundDistance::bound() const {
  if (threshold_) return threshold_;
  switch (kind_) {
    case GroundKind::discrete: return 1.0;
    case GroundKind::circle_geodesic: return std::numbers::pi;
    case GroundKind::precomputed:
      return matrix_->size() > 0 ? std::optional<double>(matrix_->maxCoeff()) : 0.0;
    case GroundKind::custom: return custom_bound_;
    default: return std::nullopt;
  }
}

std::string GroundDistance::describe() const {
  std::ostringstream out;
  out << (kind_ == GroundKind::custom ? name_ : to_string(kind_));
  if (threshold_) out << "@t=" << *threshold_;
  return out.str();
}

double eval(const GroundDistance& d, std::span<const double> x, std::span<const double> y) {
  return d(x, y);
}

double circle_geodesic_reference(double a, double b) {
  const double dot = std::cos(a) * std::cos(b) + std::sin(a) * std::sin(b);
  return std::acos(std::clamp(dot, -1.0, 1.0));
}

Eigen::MatrixXd cost_matrix(const WeightedPointSet& a, const WeightedPointSet& b,
                            const GroundDistance& d) {
  common_dimension(a, b);
  Eigen::MatrixXd c(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d(a.point(i), b.point(j));
    }
  }
  return c;
}

SinkSpec SinkSpec::point(Point p) {
  SinkSpec s;
  s.flat_ = false;
  s.point_ = std::move(p);
  return s;
}

SinkSpec SinkSpec::flat_rate(double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("flat sink rate must be positive");
  SinkSpec s;
  s.flat_ = true;
  s.beta_ = beta;
  return s;
}

double SinkSpec::cost_to_sink(const GroundDistance& d, std::span<const double> x) const {
  return flat_ ? beta_ : d(x, point_);
}

double SinkSpec::self_cost(const GroundDistance& d) const {
  return flat_ ? 0.0 : d(point_, point_);
}

std::string SinkSpec::describe() const {
  std::ostringstream out;
  if (flat_) {
    out << "flat:" << beta_;
  } else {
    out << "point:";
    for (std::size_t k = 0; k < point_.size(); ++k) out << (k ? "," : "") << point_[k];
  }
  return out.str();
}

PairFunction<Point> as_pair_function(const GroundDistance& d) {
  return [d](const Point& x, const Point& y) { return d(x, y); };
}

double discrete_kernel(std::span<const double> x, std::span<const double> y) {
  require_same_dim(x, y);
  return std::equal(x.begin(), x.end(), y.begin()) ? 1.0 : 0.0;
}

}  // namespace emdk
