#pragma once

#include <Eigen/Core>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emdk/gram.hpp"

namespace emdk {

enum class Correction { none, shift, ksvm };

std::string to_string(Correction c);
// Throws InputError for names other than none, shift, ksvm.
Correction parse_correction(const std::string& name);

struct SmoOptions {
  double C = 1.0;
  double eps = 1e-3;          // stop when the maximal KKT violation drops below eps
  std::size_t max_iter = 0;   // 0: max(10^7, 100 n)
  bool record_objective = false;
};

struct SmoResult {
  Eigen::VectorXd alpha;  // unsigned dual variables in [0, C]
  double bias = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  double violation = 0.0;  // final maximal KKT violation
  std::vector<double> objective_trace;  // dual objective after each step
};

// C-SVM dual  max 1^T a - 1/2 a^T Y K Y a  s.t. 0 <= a <= C, y^T a = 0,
// solved by pairwise coordinate ascent on the maximal violating pair.
// Non-positive pair curvature (indefinite K) is replaced by a tiny positive
// value, which sends the step to the edge of the box.
SmoResult smo_solve(const Eigen::MatrixXd& kernel, std::span<const int> labels,
                    const SmoOptions& options = {});

struct TrainOptions {
  double C = 1.0;
  Correction correction = Correction::none;
  std::optional<double> shift;  // shift mode: default is -min eigenvalue
  double eps = 1e-3;
  std::size_t max_iter = 0;  // 0: solver default (convex) or max(10^5, 100 n) (plain)
  double ksvm_tol = 1e-8;
};

struct SvmModel {
  Eigen::VectorXd alphas;  // signed coefficients, one per training row
  double bias = 0.0;
  std::vector<std::string> train_ids;
  std::string class_name;
  Correction correction = Correction::none;
  double shift = 0.0;
  bool converged = true;  // false when the iteration cap stopped training
  std::size_t iterations = 0;

  double decision(std::span<const double> kernel_row) const;
};

SvmModel train_binary(const GramMatrix& gram, std::span<const int> labels,
                      const TrainOptions& options = {});

struct Prediction {
  double score = 0.0;
  int label = 1;
};

// score = sum alpha_i k_i + b; label = sign(score) with ties resolved to +1.
// Throws DimensionMismatch when the row length differs from the training set.
Prediction predict(const SvmModel& model, std::span<const double> kernel_row);

struct OneVsAllModel {
  std::vector<std::string> classes;  // sorted
  std::vector<SvmModel> machines;    // aligned with classes

  // Per-class scores and the argmax class (ties: smallest class name).
  std::string predict(std::span<const double> kernel_row, std::vector<double>* scores = nullptr) const;
};

// One machine per class (+1 = class, -1 = rest). Shift uses one s for all
// machines; ksvm reuses a single eigendecomposition of the Gram matrix.
// Throws DomainError with fewer than two classes.
OneVsAllModel train_one_vs_all(const GramMatrix& gram, const std::vector<std::string>& class_labels,
                               const TrainOptions& options = {});

}  // namespace emdk
