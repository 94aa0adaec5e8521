#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace emdk {

using Point = std::vector<double>;

// A finitely supported multiset over R^d: support points with positive masses.
//
// Construction canonicalizes the input: zero masses are dropped, points with
// bit-identical coordinates are merged by summing their masses, and the
// support is sorted lexicographically. Two sets built from the same
// (point, mass) pairs in any order therefore compare equal.
//
// The empty set carries dimension 0 and is compatible with every dimension.
class WeightedPointSet {
 public:
  WeightedPointSet() = default;

  // Throws InputError on negative or non-finite masses, non-finite
  // coordinates, or points whose length differs from `dimension`.
  WeightedPointSet(std::size_t dimension, const std::vector<Point>& points,
                   const std::vector<double>& masses);

  // Unit mass per point.
  WeightedPointSet(std::size_t dimension, const std::vector<Point>& points);

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return masses_.size(); }
  bool empty() const { return masses_.empty(); }

  std::span<const double> point(std::size_t i) const {
    return {coords_.data() + i * dimension_, dimension_};
  }
  double mass(std::size_t i) const { return masses_[i]; }
  const std::vector<double>& masses() const { return masses_; }
  const std::vector<double>& coordinates() const { return coords_; }
  std::vector<Point> points() const;

  double total_mass() const { return total_mass_; }

  // Mass at `x`, 0 when x is not in the support.
  double density(std::span<const double> x) const;

  const std::string& id() const { return id_; }
  const std::optional<std::string>& class_label() const { return class_label_; }
  const std::optional<std::string>& group_label() const { return group_label_; }

  WeightedPointSet& set_id(std::string id);
  WeightedPointSet& set_class_label(std::optional<std::string> label);
  WeightedPointSet& set_group_label(std::optional<std::string> group);

  // Same support and labels, masses multiplied by c >= 0.
  WeightedPointSet scaled(double c) const;

  // Equality of the canonical (support, masses) pair; labels are ignored.
  bool same_measure(const WeightedPointSet& other) const;

 private:
  std::size_t dimension_ = 0;
  std::vector<double> coords_;  // size() * dimension_, row-major
  std::vector<double> masses_;
  double total_mass_ = 0.0;
  std::string id_;
  std::optional<std::string> class_label_;
  std::optional<std::string> group_label_;
};

double total_mass(const WeightedPointSet& a);

// Pointwise min of densities.
WeightedPointSet intersect(const WeightedPointSet& a, const WeightedPointSet& b);
// Pointwise max of densities.
WeightedPointSet unite(const WeightedPointSet& a, const WeightedPointSet& b);
// Pointwise sum of densities.
WeightedPointSet sum_sets(const WeightedPointSet& a, const WeightedPointSet& b);
// Pointwise max(chi_A - chi_B, 0).
WeightedPointSet difference(const WeightedPointSet& a, const WeightedPointSet& b);

// Divides masses by the total mass. Throws DomainError for zero total mass.
WeightedPointSet normalize(const WeightedPointSet& a);

// Pointwise chi_A <= chi_B.
bool is_subset(const WeightedPointSet& a, const WeightedPointSet& b);

// Dimension shared by a and b (0 when both are empty). Throws
// DimensionMismatch when two nonempty sets disagree.
std::size_t common_dimension(const WeightedPointSet& a, const WeightedPointSet& b);

}  // namespace emdk
