#include "emdk/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "emdk/errors.hpp"

namespace emdk {

namespace {

constexpr double kTau = 1e-12;

std::size_t default_cap(std::size_t n, bool convex) {
  return convex ? std::max<std::size_t>(10'000'000, 100 * n) : std::max<std::size_t>(100'000, 100 * n);
}

double dual_objective(const Eigen::VectorXd& alpha, const Eigen::VectorXd& grad) {
  // f = 1/2 a^T Q a - e^T a = 1/2 sum a_t (G_t - 1); the dual objective is -f.
  return -0.5 * alpha.dot(grad.array().matrix() - Eigen::VectorXd::Ones(alpha.size()));
}

struct BinaryInput {
  Eigen::MatrixXd kernel;  // matrix handed to the solver
  const KsvmCorrection* ksvm = nullptr;
  double shift = 0.0;
};

SvmModel fit(const BinaryInput& in, const GramMatrix& gram, std::span<const int> labels,
             const TrainOptions& options) {
  SmoOptions smo;
  smo.C = options.C;
  smo.eps = options.eps;
  smo.max_iter = options.max_iter
                     ? options.max_iter
                     : default_cap(labels.size(), options.correction != Correction::none);
  const SmoResult r = smo_solve(in.kernel, labels, smo);

  Eigen::VectorXd unsigned_alpha = in.ksvm ? in.ksvm->map_coefficients(r.alpha) : r.alpha;
  SvmModel m;
  m.alphas.resize(unsigned_alpha.size());
  for (Eigen::Index i = 0; i < unsigned_alpha.size(); ++i) {
    m.alphas(i) = labels[static_cast<std::size_t>(i)] * unsigned_alpha(i);
  }
  m.bias = r.bias;
  m.train_ids = gram.ids();
  m.correction = options.correction;
  m.shift = in.shift;
  m.converged = r.converged;
  m.iterations = r.iterations;
  return m;
}

void check_gram(const GramMatrix& gram, std::span<const int> labels) {
  if (gram.kind() != GramKind::kernel) throw DomainError("SVM training needs a kernel matrix");
  if (labels.size() != gram.size()) throw DimensionMismatch("label count does not match the Gram matrix");
  if (!gram.values().allFinite()) throw InputError("kernel matrix has non-finite entries");
  for (int y : labels) {
    if (y != 1 && y != -1) throw DomainError("binary labels must be +1 or -1");
  }
}

}  // namespace

std::string to_string(Correction c) {
  switch (c) {
    case Correction::none: return "none";
    case Correction::shift: return "shift";
    case Correction::ksvm: return "ksvm";
  }
  return "none";
}

Correction parse_correction(const std::string& name) {
  if (name == "none") return Correction::none;
  if (name == "shift") return Correction::shift;
  if (name == "ksvm") return Correction::ksvm;
  throw InputError("unknown correction '" + name + "' (expected none, shift, ksvm)");
}

SmoResult smo_solve(const Eigen::MatrixXd& kernel, std::span<const int> labels, const SmoOptions& options) {
  const auto n = static_cast<Eigen::Index>(labels.size());
  if (kernel.rows() != n || kernel.cols() != n) throw DimensionMismatch("kernel/label size mismatch");
  if (!(options.C > 0.0)) throw DomainError("C must be positive");
  const double C = options.C;
  auto y = [&](Eigen::Index t) { return static_cast<double>(labels[static_cast<std::size_t>(t)]); };
  auto q = [&](Eigen::Index s, Eigen::Index t) { return y(s) * y(t) * kernel(s, t); };

  SmoResult r;
  r.alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);
  Eigen::VectorXd& alpha = r.alpha;
  const std::size_t cap = options.max_iter ? options.max_iter : default_cap(labels.size(), true);
  if (options.record_objective) r.objective_trace.push_back(0.0);

  auto in_up = [&](Eigen::Index t) { return (y(t) > 0 && alpha(t) < C) || (y(t) < 0 && alpha(t) > 0); };
  auto in_low = [&](Eigen::Index t) { return (y(t) > 0 && alpha(t) > 0) || (y(t) < 0 && alpha(t) < C); };

  while (true) {
    Eigen::Index i = -1, j = -1;
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      const double v = -y(t) * grad(t);
      if (in_up(t) && v > gmax) {
        gmax = v;
        i = t;
      }
      if (in_low(t) && v < gmin) {
        gmin = v;
        j = t;
      }
    }
    r.violation = (i < 0 || j < 0) ? 0.0 : gmax - gmin;
    if (i < 0 || j < 0 || r.violation < options.eps) {
      r.converged = true;
      break;
    }
    if (r.iterations >= cap) break;
    ++r.iterations;

    const double old_i = alpha(i);
    const double old_j = alpha(j);
    if (y(i) != y(j)) {
      double quad = kernel(i, i) + kernel(j, j) + 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad(i) - grad(j)) / quad;
      const double diff = alpha(i) - alpha(j);
      alpha(i) += delta;
      alpha(j) += delta;
      if (diff > 0.0) {
        if (alpha(j) < 0.0) {
          alpha(j) = 0.0;
          alpha(i) = diff;
        }
      } else if (alpha(i) < 0.0) {
        alpha(i) = 0.0;
        alpha(j) = -diff;
      }
      if (diff > 0.0) {
        if (alpha(i) > C) {
          alpha(i) = C;
          alpha(j) = C - diff;
        }
      } else if (alpha(j) > C) {
        alpha(j) = C;
        alpha(i) = C + diff;
      }
    } else {
      double quad = kernel(i, i) + kernel(j, j) - 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad(i) - grad(j)) / quad;
      const double sum = alpha(i) + alpha(j);
      alpha(i) -= delta;
      alpha(j) += delta;
      if (sum > C) {
        if (alpha(i) > C) {
          alpha(i) = C;
          alpha(j) = sum - C;
        }
      } else if (alpha(j) < 0.0) {
        alpha(j) = 0.0;
        alpha(i) = sum;
      }
      if (sum > C) {
        if (alpha(j) > C) {
          alpha(j) = C;
          alpha(i) = sum - C;
        }
      } else if (alpha(i) < 0.0) {
        alpha(i) = 0.0;
        alpha(j) = sum;
      }
    }
    const double di = alpha(i) - old_i;
    const double dj = alpha(j) - old_j;
    for (Eigen::Index t = 0; t < n; ++t) grad(t) += q(t, i) * di + q(t, j) * dj;
    if (options.record_objective) r.objective_trace.push_back(dual_objective(alpha, grad));
  }

  // Bias from free support vectors, else the midpoint of the feasible bracket.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = y(t) * grad(t);
    if (alpha(t) >= C) {
      if (y(t) < 0) {
        ub = std::min(ub, yg);
      } else {
        lb = std::max(lb, yg);
      }
    } else if (alpha(t) <= 0.0) {
      if (y(t) > 0) {
        ub = std::min(ub, yg);
      } else {
        lb = std::max(lb, yg);
      }
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  double rho;
  if (n_free > 0) {
    rho = sum_free / static_cast<double>(n_free);
  } else if (std::isfinite(ub) && std::isfinite(lb)) {
    rho = 0.5 * (ub + lb);
  } else {
    rho = std::isfinite(ub) ? ub : (std::isfinite(lb) ? lb : 0.0);
  }
  r.bias = -rho;
  return r;
}

double SvmModel::decision(std::span<const double> kernel_row) const {
  return predict(*this, kernel_row).score;
}

SvmModel train_binary(const GramMatrix& gram, std::span<const int> labels, const TrainOptions& options) {
  check_gram(gram, labels);
  BinaryInput in;
  KsvmCorrection ksvm;
  switch (options.correction) {
    case Correction::none:
      in.kernel = gram.values();
      break;
    case Correction::shift: {
      ShiftResult s = shift_correct(gram, options.shift);
      in.shift = s.shift;
      in.kernel = s.gram.values();
      break;
    }
    case Correction::ksvm:
      ksvm = ksvm_correct(gram.values(), labels, options.ksvm_tol);
      in.kernel = ksvm.kernel_space(labels);
      in.ksvm = &ksvm;
      break;
  }
  return fit(in, gram, labels, options);
}

Prediction predict(const SvmModel& model, std::span<const double> kernel_row) {
  if (kernel_row.size() != static_cast<std::size_t>(model.alphas.size())) {
    std::ostringstream msg;
    msg << "kernel row has " << kernel_row.size() << " entries, model expects " << model.alphas.size();
    throw DimensionMismatch(msg.str());
  }
  Prediction p;
  p.score = model.bias;
  for (std::size_t i = 0; i < kernel_row.size(); ++i) {
    p.score += model.alphas(static_cast<Eigen::Index>(i)) * kernel_row[i];
  }
  p.label = p.score >= 0.0 ? 1 : -1;
  return p;
}

std::string OneVsAllModel::predict(std::span<const double> kernel_row, std::vector<double>* scores) const {
  if (machines.empty()) throw DomainError("empty one-vs-all model");
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  if (scores) scores->clear();
  for (std::size_t c = 0; c < machines.size(); ++c) {
    const double s = emdk::predict(machines[c], kernel_row).score;
    if (scores) scores->push_back(s);
    if (s > best_score) {
      best_score = s;
      best = c;
    }
  }
  return classes[best];
}

OneVsAllModel train_one_vs_all(const GramMatrix& gram, const std::vector<std::string>& class_labels,
                               const TrainOptions& options) {
  if (class_labels.size() != gram.size()) throw DimensionMismatch("class label count does not match the Gram matrix");
  const std::set<std::string> unique(class_labels.begin(), class_labels.end());
  if (unique.size() < 2) throw DomainError("one-vs-all training needs at least two classes");

  OneVsAllModel model;
  model.classes.assign(unique.begin(), unique.end());

  std::vector<int> dummy(gram.size(), 1);
  check_gram(gram, dummy);

  BinaryInput shared;
  SpectralDecomposition eig;
  if (options.correction == Correction::shift) {
    ShiftResult s = shift_correct(gram, options.shift);
    shared.shift = s.shift;
    shared.kernel = s.gram.values();
  } else if (options.correction == Correction::ksvm) {
    eig = decompose(gram.values());
  } else {
    shared.kernel = gram.values();
  }

  for (const auto& cls : model.classes) {
    std::vector<int> y(class_labels.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = class_labels[i] == cls ? 1 : -1;
    SvmModel m;
    if (options.correction == Correction::ksvm) {
      const KsvmCorrection k = ksvm_correct(eig, gram.values(), y, options.ksvm_tol);
      BinaryInput in;
      in.kernel = k.kernel_space(y);
      in.ksvm = &k;
      m = fit(in, gram, y, options);
    } else {
      m = fit(shared, gram, y, options);
    }
    m.class_name = cls;
    model.machines.push_back(std::move(m));
  }
  return model;
}

}  // namespace emdk
