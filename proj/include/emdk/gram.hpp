#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "emdk/ground.hpp"
#include "emdk/multiset.hpp"

namespace emdk {

enum class GramKind { distance, kernel };

std::string to_string(GramKind kind);

// Labeled symmetric matrix of pairwise evaluations.
//
// Construction symmetrizes by averaging. Asymmetry beyond 1e-6 relative is
// rejected with InputError, as are distance matrices with a nonzero
// diagonal or negative entries (beyond 1e-9 relative).
class GramMatrix {
 public:
  GramMatrix() = default;
  GramMatrix(Eigen::MatrixXd values, std::vector<std::string> ids, GramKind kind,
             std::string provenance = {});

  const Eigen::MatrixXd& values() const { return values_; }
  const std::vector<std::string>& ids() const { return ids_; }
  GramKind kind() const { return kind_; }
  const std::string& provenance() const { return provenance_; }
  std::size_t size() const { return ids_.size(); }

  GramMatrix submatrix(std::span<const std::size_t> index) const;

 private:
  Eigen::MatrixXd values_;
  std::vector<std::string> ids_;
  GramKind kind_ = GramKind::kernel;
  std::string provenance_;
};

using SetPairFunction = std::function<double(const WeightedPointSet&, const WeightedPointSet&)>;

// Evaluator failure at entry (row, col).
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(std::size_t row, std::size_t col, const std::string& what);
  std::size_t row() const { return row_; }
  std::size_t col() const { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

// Full symmetric matrix [fn(items[i], items[j])], diagonal included. Each
// upper-triangle entry is evaluated exactly once, so the result does not
// depend on `threads` (0 = hardware concurrency).
GramMatrix assemble_gram(const std::vector<WeightedPointSet>& items, const SetPairFunction& fn,
                         GramKind kind, std::string provenance = {}, unsigned threads = 0);

// Rectangular [fn(rows[i], cols[j])].
Eigen::MatrixXd assemble_cross(const std::vector<WeightedPointSet>& rows,
                               const std::vector<WeightedPointSet>& cols,
                               const SetPairFunction& fn, unsigned threads = 0);

struct RbfParams {
  double u = 1.0;
  bool automatic = true;  // u = 1 / mean training distance
};

// 1 / mean of the strict upper triangle restricted to `train_index` (all rows
// when empty). Throws DomainError when that mean is not positive.
double auto_rbf_scale(const Eigen::MatrixXd& distances, std::span<const std::size_t> train_index = {});

// exp(-u d_ij). In automatic mode u is resolved from `train_index` and
// written back into `params`.
GramMatrix rbf_from_distance(const GramMatrix& distances, RbfParams& params,
                             std::span<const std::size_t> train_index = {});
Eigen::MatrixXd rbf(const Eigen::MatrixXd& distances, double u);

// exp(-u sum_a sum_b chi_A(a) chi_B(b) D(a, b)).
double idk(const WeightedPointSet& a, const WeightedPointSet& b, const GroundDistance& d, double u);

struct DefinitenessReport {
  std::vector<double> eigenvalues;  // ascending
  double min_eig = 0.0;
  double max_abs_eig = 0.0;
  bool is_psd = true;
  double centered_max_eig = 0.0;  // largest eigenvalue of P G P, P = I - 11^T / n
  bool is_cnd = true;
  double tolerance = 1e-8;
  // (k, share of sum |lambda| carried by the k largest |lambda|)
  std::vector<std::pair<int, double>> concentration;
};

DefinitenessReport diagnose(const Eigen::MatrixXd& gram, double tol = 1e-8);
DefinitenessReport diagnose(const GramMatrix& gram, double tol = 1e-8);

struct ShiftResult {
  GramMatrix gram;
  double shift = 0.0;
};

// G + sI with s = max(0, -min eigenvalue) unless given.
ShiftResult shift_correct(const GramMatrix& gram, std::optional<double> shift = std::nullopt);

struct SpectralDecomposition {
  Eigen::MatrixXd vectors;  // columns
  Eigen::VectorXd values;
};

SpectralDecomposition decompose(const Eigen::MatrixXd& symmetric);

// Krein-space correction of the label-conjugated Gram YGY = U D U^T.
// `corrected` is U S D U^T with S = sign(D); eigenvalues below
// -tol * max|D| are flipped, the rest keep S = +1. With nothing flipped the
// corrected matrix is YGY itself and the coefficient map is the identity.
struct KsvmCorrection {
  Eigen::MatrixXd corrected;
  Eigen::MatrixXd basis;   // U
  Eigen::VectorXd signs;   // diag(S)
  Eigen::VectorXd values;  // diag(D)
  bool flipped = false;

  // alpha = U S U^T alpha_bar.
  Eigen::VectorXd map_coefficients(const Eigen::VectorXd& alpha_bar) const;
  // Y corrected Y: the same correction expressed on kernel values.
  Eigen::MatrixXd kernel_space(std::span<const int> labels) const;
};

KsvmCorrection ksvm_correct(const Eigen::MatrixXd& gram, std::span<const int> labels,
                            double tol = 1e-8);

// Reuses one decomposition G = V D V^T for any label vector: U = Y V.
KsvmCorrection ksvm_correct(const SpectralDecomposition& gram_eigen, const Eigen::MatrixXd& gram,
                            std::span<const int> labels, double tol = 1e-8);

enum class FlowGramTarget { emi, flow_products };

struct FlowGramResult {
  int order = 0;
  Eigen::MatrixXd emi;          // EMI Gram before any transform
  Eigen::MatrixXd flow_gram;    // block matrix of H_i^j = F_i^j o K_i^j
  Eigen::MatrixXd final_gram;   // PSD EMI Gram after `order` nested transforms
  std::vector<std::size_t> block_offsets;
};

// Builds the block flow Gram of pairwise-disjoint discrete sets under ground
// kernel K (maximum-cost maximum flows), then applies nested transforms to
// either the EMI Gram or the block matrix until the result is PSD at `tol`.
// Throws DomainError when supports overlap or K violates
// 2K(x, y) < K(x, x) + K(y, y) on distinct support points.
FlowGramResult flow_gram_pdize(const std::vector<WeightedPointSet>& sets, const PointMetric& kernel,
                               FlowGramTarget target = FlowGramTarget::emi, double tol = 1e-8,
                               int cap = 64);

}  // namespace emdk
