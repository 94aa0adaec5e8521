#include "emdk/multiset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "emdk/errors.hpp"

namespace emdk {

namespace {

int compare_coords(std::span<const double> a, std::span<const double> b) {
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k] < b[k]) return -1;
    if (b[k] < a[k]) return 1;
  }
  return 0;
}

// Pointwise combination of two canonical supports. `op` receives the two
// densities (0 where absent) and returns the combined density.
template <class Op>
WeightedPointSet combine(const WeightedPointSet& a, const WeightedPointSet& b, Op op) {
  const std::size_t d = common_dimension(a, b);
  std::vector<Point> pts;
  std::vector<double> ms;
  pts.reserve(a.size() + b.size());
  ms.reserve(a.size() + b.size());
  auto emit = [&](std::span<const double> x, double m) {
    if (m > 0.0) {
      pts.emplace_back(x.begin(), x.end());
      ms.push_back(m);
    }
  };
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size()) {
      emit(a.point(i), op(a.mass(i), 0.0));
      ++i;
    } else if (i == a.size()) {
      emit(b.point(j), op(0.0, b.mass(j)));
      ++j;
    } else {
      const int c = compare_coords(a.point(i), b.point(j));
      if (c < 0) {
        emit(a.point(i), op(a.mass(i), 0.0));
        ++i;
      } else if (c > 0) {
        emit(b.point(j), op(0.0, b.mass(j)));
        ++j;
      } else {
        emit(a.point(i), op(a.mass(i), b.mass(j)));
        ++i;
        ++j;
      }
    }
  }
  return WeightedPointSet(d, pts, ms);
}

}  // namespace

WeightedPointSet::WeightedPointSet(std::size_t dimension, const std::vector<Point>& points,
                                   const std::vector<double>& masses) {
  if (points.size() != masses.size()) {
    throw InputError("point and mass counts differ");
  }
  std::vector<std::size_t> order;
  order.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double m = masses[i];
    if (!std::isfinite(m) || m < 0.0) {
      std::ostringstream msg;
      msg << "mass " << i << " is negative or non-finite (" << m << ")";
      throw InputError(msg.str());
    }
    if (points[i].size() != dimension) {
      std::ostringstream msg;
      msg << "point " << i << " has dimension " << points[i].size() << ", expected "
          << dimension;
      throw DimensionMismatch(msg.str());
    }
    for (double c : points[i]) {
      if (!std::isfinite(c)) throw InputError("non-finite coordinate");
    }
    if (m > 0.0) order.push_back(i);
  }
  if (order.empty()) return;
  if (dimension == 0) throw DimensionMismatch("nonempty point set needs dimension >= 1");

  // -0.0 and +0.0 compare equal but differ bitwise; fold them before sorting.
  auto canon = [&](std::size_t i) {
    Point p = points[i];
    for (double& c : p) c = c + 0.0;
    return p;
  };
  std::vector<Point> sorted_pts;
  sorted_pts.reserve(order.size());
  for (std::size_t i : order) sorted_pts.push_back(canon(i));
  std::vector<std::size_t> idx(order.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
    return compare_coords(sorted_pts[x], sorted_pts[y]) < 0;
  });

  dimension_ = dimension;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const Point& p = sorted_pts[idx[k]];
    const double m = masses[order[idx[k]]];
    if (!masses_.empty() && compare_coords(point(masses_.size() - 1), p) == 0) {
      masses_.back() += m;
    } else {
      coords_.insert(coords_.end(), p.begin(), p.end());
      masses_.push_back(m);
    }
  }
  total_mass_ = std::accumulate(masses_.begin(), masses_.end(), 0.0);
  if (!std::isfinite(total_mass_)) throw InputError("total mass is not finite");
}

WeightedPointSet::WeightedPointSet(std::size_t dimension, const std::vector<Point>& points)
    : WeightedPointSet(dimension, points, std::vector<double>(points.size(), 1.0)) {}

std::vector<Point> WeightedPointSet::points() const {
  std::vector<Point> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) {
    auto p = point(i);
    out.emplace_back(p.begin(), p.end());
  }
  return out;
}

double WeightedPointSet::density(std::span<const double> x) const {
  if (empty() || x.size() != dimension_) return 0.0;
  std::size_t lo = 0, hi = size();
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    const int c = compare_coords(point(mid), x);
    if (c == 0) return masses_[mid];
    if (c < 0) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  return 0.0;
}

WeightedPointSet& WeightedPointSet::set_id(std::string id) {
  id_ = std::move(id);
  return *this;
}

WeightedPointSet& WeightedPointSet::set_class_label(std::optional<std::string> label) {
  class_label_ = std::move(label);
  return *this;
}

WeightedPointSet& WeightedPointSet::set_group_label(std::optional<std::string> group) {
  group_label_ = std::move(group);
  return *this;
}

WeightedPointSet WeightedPointSet::scaled(double c) const {
  if (!(c >= 0.0) || !std::isfinite(c)) throw DomainError("scale factor must be finite and >= 0");
  std::vector<double> ms(masses_);
  for (double& m : ms) m *= c;
  WeightedPointSet out(dimension_, points(), ms);
  out.id_ = id_;
  out.class_label_ = class_label_;
  out.group_label_ = group_label_;
  return out;
}

bool WeightedPointSet::same_measure(const WeightedPointSet& other) const {
  if (empty() || other.empty()) return empty() && other.empty();
  return dimension_ == other.dimension_ && coords_ == other.coords_ && masses_ == other.masses_;
}

double total_mass(const WeightedPointSet& a) { return a.total_mass(); }

std::size_t common_dimension(const WeightedPointSet& a, const WeightedPointSet& b) {
  if (a.empty()) return b.dimension();
  if (b.empty()) return a.dimension();
  if (a.dimension() != b.dimension()) {
    std::ostringstream msg;
    msg << "dimension mismatch: " << a.dimension() << " vs " << b.dimension();
    throw DimensionMismatch(msg.str());
  }
  return a.dimension();
}

WeightedPointSet intersect(const WeightedPointSet& a, const WeightedPointSet& b) {
  return combine(a, b, [](double x, double y) { return std::min(x, y); });
}

WeightedPointSet unite(const WeightedPointSet& a, const WeightedPointSet& b) {
  return combine(a, b, [](double x, double y) { return std::max(x, y); });
}

WeightedPointSet sum_sets(const WeightedPointSet& a, const WeightedPointSet& b) {
  return combine(a, b, [](double x, double y) { return x + y; });
}

WeightedPointSet difference(const WeightedPointSet& a, const WeightedPointSet& b) {
  return combine(a, b, [](double x, double y) { return x > y ? x - y : 0.0; });
}

WeightedPointSet normalize(const WeightedPointSet& a) {
  if (!(a.total_mass() > 0.0)) throw DomainError("cannot normalize a set with zero total mass");
  return a.scaled(1.0 / a.total_mass());
}

bool is_subset(const WeightedPointSet& a, const WeightedPointSet& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.mass(i) > b.density(a.point(i))) return false;
  }
  return true;
}

}  // namespace emdk
