#include "emdk/gram.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "emdk/errors.hpp"
#include "emdk/transform.hpp"
#include "emdk/transport.hpp"

namespace emdk {

namespace {

double scale_of(const Eigen::MatrixXd& m) { return m.size() > 0 ? m.cwiseAbs().maxCoeff() : 0.0; }

unsigned resolve_threads(unsigned threads, std::size_t work) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(work, 1)));
}

// Evaluates `task(k)` for k in [0, count) across threads. The failure with
// the smallest k is rethrown so error reporting is deterministic.
template <class Task>
void parallel_for(std::size_t count, unsigned threads, Task task) {
  threads = resolve_threads(threads, count);
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_at = count;
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::size_t k = next++; k < count; k = next++) {
      try {
        task(k);
      } catch (...) {
        std::lock_guard lock(mu);
        if (k < failed_at) {
          failed_at = k;
          failure = std::current_exception();
        }
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
}

Eigen::MatrixXd centered(const Eigen::MatrixXd& g) {
  const Eigen::VectorXd row_mean = g.rowwise().mean();
  const Eigen::RowVectorXd col_mean = g.colwise().mean();
  const double mean = g.mean();
  Eigen::MatrixXd c = g;
  c.colwise() -= row_mean;
  c.rowwise() -= col_mean;
  c.array() += mean;
  return 0.5 * (c + c.transpose());
}

std::string describe_entry_error(const std::exception& e) { return e.what(); }

}  // namespace

std::string to_string(GramKind kind) { return kind == GramKind::distance ? "distance" : "kernel"; }

GramMatrix::GramMatrix(Eigen::MatrixXd values, std::vector<std::string> ids, GramKind kind,
                       std::string provenance)
    : ids_(std::move(ids)), kind_(kind), provenance_(std::move(provenance)) {
  if (values.rows() != values.cols()) throw InputError("Gram matrix must be square");
  if (static_cast<std::size_t>(values.rows()) != ids_.size()) {
    throw InputError("Gram matrix size does not match the number of ids");
  }
  if (!values.allFinite()) throw InputError("Gram matrix has non-finite entries");
  const double s = scale_of(values);
  if (values.size() > 0) {
    const double asym = (values - values.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-6 * s) {
      std::ostringstream msg;
      msg << "Gram matrix is not symmetric (max |G - G^T| = " << asym << ")";
      throw InputError(msg.str());
    }
  }
  values_ = 0.5 * (values + values.transpose());
  if (kind_ == GramKind::distance && values_.size() > 0) {
    if (values_.diagonal().cwiseAbs().maxCoeff() > 1e-9 * s) {
      throw InputError("distance matrix has a nonzero diagonal");
    }
    if (values_.minCoeff() < -1e-9 * s) throw InputError("distance matrix has negative entries");
  }
}

GramMatrix GramMatrix::submatrix(std::span<const std::size_t> index) const {
  const auto n = static_cast<Eigen::Index>(index.size());
  Eigen::MatrixXd sub(n, n);
  std::vector<std::string> sub_ids;
  sub_ids.reserve(index.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    sub_ids.push_back(ids_.at(index[static_cast<std::size_t>(i)]));
    for (Eigen::Index j = 0; j < n; ++j) {
      sub(i, j) = values_(static_cast<Eigen::Index>(index[static_cast<std::size_t>(i)]),
                          static_cast<Eigen::Index>(index[static_cast<std::size_t>(j)]));
    }
  }
  return GramMatrix(std::move(sub), std::move(sub_ids), kind_, provenance_);
}

EvaluationError::EvaluationError(std::size_t row, std::size_t col, const std::string& what)
    : std::runtime_error([&] {
        std::ostringstream msg;
        msg << "evaluation failed at (" << row << ", " << col << "): " << what;
        return msg.str();
      }()),
      row_(row),
      col_(col) {}

GramMatrix assemble_gram(const std::vector<WeightedPointSet>& items, const SetPairFunction& fn,
                         GramKind kind, std::string provenance, unsigned threads) {
  const std::size_t n = items.size();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(n * (n + 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) pairs.emplace_back(i, j);
  }
  Eigen::MatrixXd g(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  parallel_for(pairs.size(), threads, [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    double v;
    try {
      v = fn(items[i], items[j]);
    } catch (const std::exception& e) {
      throw EvaluationError(i, j, describe_entry_error(e));
    }
    g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    g(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
  });
  std::vector<std::string> ids;
  ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ids.push_back(items[i].id().empty() ? std::to_string(i) : items[i].id());
  }
  return GramMatrix(std::move(g), std::move(ids), kind, std::move(provenance));
}

Eigen::MatrixXd assemble_cross(const std::vector<WeightedPointSet>& rows,
                               const std::vector<WeightedPointSet>& cols,
                               const SetPairFunction& fn, unsigned threads) {
  const std::size_t total = rows.size() * cols.size();
  Eigen::MatrixXd g(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  parallel_for(total, threads, [&](std::size_t k) {
    const std::size_t i = k / cols.size();
    const std::size_t j = k % cols.size();
    try {
      g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = fn(rows[i], cols[j]);
    } catch (const std::exception& e) {
      throw EvaluationError(i, j, describe_entry_error(e));
    }
  });
  return g;
}

double auto_rbf_scale(const Eigen::MatrixXd& distances, std::span<const std::size_t> train_index) {
  std::vector<std::size_t> idx(train_index.begin(), train_index.end());
  if (idx.empty()) {
    for (Eigen::Index i = 0; i < distances.rows(); ++i) idx.push_back(static_cast<std::size_t>(i));
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      sum += distances(static_cast<Eigen::Index>(idx[a]), static_cast<Eigen::Index>(idx[b]));
      ++count;
    }
  }
  const double mean = count ? sum / static_cast<double>(count) : 0.0;
  if (!(mean > 0.0)) throw DomainError("automatic RBF scale needs a positive mean training distance");
  return 1.0 / mean;
}

Eigen::MatrixXd rbf(const Eigen::MatrixXd& distances, double u) {
  return (-u * distances.array()).exp().matrix();
}

GramMatrix rbf_from_distance(const GramMatrix& distances, RbfParams& params,
                             std::span<const std::size_t> train_index) {
  if (params.automatic) params.u = auto_rbf_scale(distances.values(), train_index);
  if (!(params.u > 0.0)) throw DomainError("RBF scale u must be positive");
  std::ostringstream prov;
  prov << distances.provenance() << " | rbf(u=" << params.u << ")";
  return GramMatrix(rbf(distances.values(), params.u), distances.ids(), GramKind::kernel,
                    prov.str());
}

double idk(const WeightedPointSet& a, const WeightedPointSet& b, const GroundDistance& d, double u) {
  common_dimension(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) s += a.mass(i) * b.mass(j) * d(a.point(i), b.point(j));
  }
  return std::exp(-u * s);
}

DefinitenessReport diagnose(const Eigen::MatrixXd& gram, double tol) {
  if (gram.rows() != gram.cols()) throw DimensionMismatch("Gram matrix must be square");
  DefinitenessReport r;
  r.tolerance = tol;
  if (gram.size() == 0) return r;
  const Eigen::MatrixXd sym = 0.5 * (gram + gram.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw SolverError("eigensolver did not converge");
  const Eigen::VectorXd& ev = es.eigenvalues();
  r.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  r.min_eig = ev.minCoeff();
  r.max_abs_eig = ev.cwiseAbs().maxCoeff();
  r.is_psd = r.min_eig >= -tol * r.max_abs_eig;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> cs(centered(sym), Eigen::EigenvaluesOnly);
  if (cs.info() != Eigen::Success) throw SolverError("eigensolver did not converge (centered)");
  r.centered_max_eig = cs.eigenvalues().maxCoeff();
  r.is_cnd = r.centered_max_eig <= tol * r.max_abs_eig;

  std::vector<double> mags(r.eigenvalues.size());
  std::transform(r.eigenvalues.begin(), r.eigenvalues.end(), mags.begin(),
                 [](double x) { return std::abs(x); });
  std::sort(mags.rbegin(), mags.rend());
  double total = 0.0;
  for (double m : mags) total += m;
  for (int k : {1, 5, 10, 50, 100}) {
    if (static_cast<std::size_t>(k) > mags.size()) break;
    double top = 0.0;
    for (int i = 0; i < k; ++i) top += mags[static_cast<std::size_t>(i)];
    r.concentration.emplace_back(k, total > 0.0 ? top / total : 0.0);
  }
  return r;
}

DefinitenessReport diagnose(const GramMatrix& gram, double tol) { return diagnose(gram.values(), tol); }

ShiftResult shift_correct(const GramMatrix& gram, std::optional<double> shift) {
  if (gram.kind() != GramKind::kernel) throw DomainError("shift correction applies to kernel matrices");
  double s;
  if (shift) {
    s = *shift;
  } else {
    const auto report = diagnose(gram);
    s = std::max(0.0, -report.min_eig);
  }
  Eigen::MatrixXd shifted = gram.values();
  shifted.diagonal().array() += s;
  std::ostringstream prov;
  prov << gram.provenance() << " | shift(s=" << s << ")";
  return ShiftResult{GramMatrix(std::move(shifted), gram.ids(), GramKind::kernel, prov.str()), s};
}

SpectralDecomposition decompose(const Eigen::MatrixXd& symmetric) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (symmetric + symmetric.transpose()));
  if (es.info() != Eigen::Success) throw SolverError("eigendecomposition did not converge");
  return SpectralDecomposition{es.eigenvectors(), es.eigenvalues()};
}

namespace {

Eigen::MatrixXd conjugate(const Eigen::MatrixXd& g, std::span<const int> labels) {
  Eigen::MatrixXd out = g;
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
      if (labels[static_cast<std::size_t>(i)] != labels[static_cast<std::size_t>(j)]) out(i, j) = -out(i, j);
    }
  }
  return out;
}

void check_labels(std::span<const int> labels, Eigen::Index n) {
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    throw DimensionMismatch("label vector length does not match the Gram matrix");
  }
  for (int y : labels) {
    if (y != 1 && y != -1) throw DomainError("labels must be +1 or -1");
  }
}

KsvmCorrection finish_ksvm(Eigen::MatrixXd basis, Eigen::VectorXd values, const Eigen::MatrixXd& yGy,
                           double tol) {
  KsvmCorrection k;
  const double max_abs = values.size() ? values.cwiseAbs().maxCoeff() : 0.0;
  k.signs = Eigen::VectorXd::Ones(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) < -tol * max_abs) {
      k.signs(i) = -1.0;
      k.flipped = true;
    }
  }
  if (k.flipped) {
    const Eigen::VectorXd abs_values = k.signs.cwiseProduct(values);
    k.corrected = basis * abs_values.asDiagonal() * basis.transpose();
    k.corrected = 0.5 * (k.corrected + k.corrected.transpose());
  } else {
    k.corrected = yGy;
  }
  k.basis = std::move(basis);
  k.values = std::move(values);
  return k;
}

}  // namespace

Eigen::VectorXd KsvmCorrection::map_coefficients(const Eigen::VectorXd& alpha_bar) const {
  if (!flipped) return alpha_bar;
  return basis * (signs.asDiagonal() * (basis.transpose() * alpha_bar));
}

Eigen::MatrixXd KsvmCorrection::kernel_space(std::span<const int> labels) const {
  check_labels(labels, corrected.rows());
  return conjugate(corrected, labels);
}

KsvmCorrection ksvm_correct(const Eigen::MatrixXd& gram, std::span<const int> labels, double tol) {
  check_labels(labels, gram.rows());
  const Eigen::MatrixXd yGy = conjugate(gram, labels);
  SpectralDecomposition eig = decompose(yGy);
  return finish_ksvm(std::move(eig.vectors), std::move(eig.values), yGy, tol);
}

KsvmCorrection ksvm_correct(const SpectralDecomposition& gram_eigen, const Eigen::MatrixXd& gram,
                            std::span<const int> labels, double tol) {
  check_labels(labels, gram.rows());
  Eigen::MatrixXd u = gram_eigen.vectors;
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    if (labels[static_cast<std::size_t>(i)] < 0) u.row(i) = -u.row(i);
  }
  return finish_ksvm(std::move(u), gram_eigen.values, conjugate(gram, labels), tol);
}

FlowGramResult flow_gram_pdize(const std::vector<WeightedPointSet>& sets, const PointMetric& kernel,
                               FlowGramTarget target, double tol, int cap) {
  const std::size_t n = sets.size();
  FlowGramResult out;
  out.block_offsets.resize(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) out.block_offsets[i + 1] = out.block_offsets[i] + sets[i].size();
  const std::size_t total = out.block_offsets[n];

  // Disjointness and the strict kernel inequality on distinct support points.
  std::vector<std::pair<std::size_t, std::size_t>> where;  // (set, index)
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t i = 0; i < sets[s].size(); ++i) where.emplace_back(s, i);
  }
  for (std::size_t p = 0; p < where.size(); ++p) {
    const auto x = sets[where[p].first].point(where[p].second);
    const double kxx = kernel(x, x);
    for (std::size_t q = p + 1; q < where.size(); ++q) {
      const auto y = sets[where[q].first].point(where[q].second);
      if (x.size() == y.size() && std::equal(x.begin(), x.end(), y.begin())) {
        std::ostringstream msg;
        msg << "sets " << where[p].first << " and " << where[q].first << " share a support point";
        throw DomainError(msg.str());
      }
      if (!(2.0 * kernel(x, y) < kxx + kernel(y, y))) {
        throw DomainError("ground kernel violates 2K(x,y) < K(x,x) + K(y,y) on distinct points");
      }
    }
  }

  out.emi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  out.flow_gram = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(total));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const auto& a = sets[i];
      const auto& b = sets[j];
      Eigen::MatrixXd k(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
      for (std::size_t p = 0; p < a.size(); ++p) {
        for (std::size_t q = 0; q < b.size(); ++q) {
          k(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) = kernel(a.point(p), b.point(q));
        }
      }
      const Eigen::MatrixXd negated = -k;
      const TransportPlan plan = solve_transport(a.masses(), b.masses(), negated);
      double sum = 0.0;
      for (const auto& e : plan.flow) {
        const double h = e.amount * k(static_cast<Eigen::Index>(e.source), static_cast<Eigen::Index>(e.target));
        const auto r = static_cast<Eigen::Index>(out.block_offsets[i] + e.source);
        const auto c = static_cast<Eigen::Index>(out.block_offsets[j] + e.target);
        out.flow_gram(r, c) += h;
        if (i != j) out.flow_gram(c, r) += h;
        sum += h;
      }
      out.emi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = sum;
      out.emi(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = sum;
    }
  }
  // Self blocks are symmetric in exact arithmetic; fold rounding asymmetry.
  out.flow_gram = 0.5 * (out.flow_gram + out.flow_gram.transpose());

  if (target == FlowGramTarget::emi) {
    PdIzation r = pd_ization_order(out.emi, tol, cap);
    out.order = r.order;
    out.final_gram = std::move(r.result);
    return out;
  }
  PdIzation r = pd_ization_order(out.flow_gram, tol, cap);
  out.order = r.order;
  out.final_gram = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out.final_gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          r.result
              .block(static_cast<Eigen::Index>(out.block_offsets[i]),
                     static_cast<Eigen::Index>(out.block_offsets[j]),
                     static_cast<Eigen::Index>(sets[i].size()), static_cast<Eigen::Index>(sets[j].size()))
              .sum();
    }
  }
  return out;
}

}  // namespace emdk
