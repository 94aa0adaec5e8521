#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "emdk/emdk.hpp"

namespace testing {

using emdk::Point;
using emdk::WeightedPointSet;

inline std::mt19937_64& rng() {
  static std::mt19937_64 r(20240611);
  return r;
}

inline double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng()); }
inline int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng()); }

inline WeightedPointSet random_set(std::size_t dim, int n, double mass_lo = 0.1, double mass_hi = 2.0,
                                   double coord = 5.0) {
  std::vector<Point> pts;
  std::vector<double> m;
  for (int i = 0; i < n; ++i) {
    Point p(dim);
    for (auto& x : p) x = uniform(-coord, coord);
    pts.push_back(p);
    m.push_back(uniform(mass_lo, mass_hi));
  }
  return WeightedPointSet(dim, pts, m);
}

// Integer masses on a small integer lattice so that supports overlap.
inline WeightedPointSet random_integer_multiset(int n, int max_mass, int lattice = 6) {
  std::vector<Point> pts;
  std::vector<double> m;
  for (int i = 0; i < n; ++i) {
    pts.push_back({static_cast<double>(uniform_int(0, lattice - 1))});
    m.push_back(uniform_int(1, max_mass));
  }
  return WeightedPointSet(1, pts, m);
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

inline Eigen::MatrixXd random_pd(int n, int rank = -1) {
  if (rank < 0) rank = n;
  Eigen::MatrixXd f(rank, n);
  for (int i = 0; i < rank; ++i)
    for (int j = 0; j < n; ++j) f(i, j) = uniform(-1, 1);
  return f.transpose() * f;
}

inline Eigen::VectorXd eigenvalues(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline Eigen::MatrixXd centered(const Eigen::MatrixXd& g) {
  const auto n = g.rows();
  const Eigen::MatrixXd p = Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  return p * g * p;
}

// Unit atoms of each set, by support index.
inline std::vector<std::size_t> atoms(const WeightedPointSet& s) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (int k = 0; k < static_cast<int>(std::lround(s.mass(i))); ++k) out.push_back(i);
  }
  return out;
}

// Exhaustive optimum over injections of the smaller atom list into the
// larger one. Integer masses make the LP optimum integral, so this is the
// transport optimum. sign = +1 minimizes, -1 maximizes.
inline double brute_force_transport(const WeightedPointSet& a, const WeightedPointSet& b,
                                    const Eigen::MatrixXd& cost, int sign = 1) {
  std::vector<std::size_t> sa = atoms(a), sb = atoms(b);
  bool swapped = false;
  if (sa.size() > sb.size()) {
    std::swap(sa, sb);
    swapped = true;
  }
  std::vector<std::size_t> perm(sb.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (std::size_t k = 0; k < sa.size(); ++k) {
      const std::size_t i = sa[k], j = sb[perm[k]];
      c += swapped ? cost(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i))
                   : cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    best = std::min(best, sign * c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return sign * best;
}

// Optimality certificate for a min-cost max-flow: feasibility plus absence of
// a negative cycle in the residual network (Bellman-Ford). Returns an empty
// string when the plan is optimal.
inline std::string check_optimal(const std::vector<double>& supply, const std::vector<double>& demand,
                                 const Eigen::MatrixXd& cost, const emdk::TransportPlan& plan, double tol = 1e-9) {
  const std::size_t n = supply.size(), m = demand.size();
  const double total = std::min(std::accumulate(supply.begin(), supply.end(), 0.0),
                                std::accumulate(demand.begin(), demand.end(), 0.0));
  const double scale = std::max(1.0, total);
  const auto out = plan.outflow(n);
  const auto in = plan.inflow(m);
  for (std::size_t i = 0; i < n; ++i)
    if (out[i] > supply[i] + tol * scale) return "row " + std::to_string(i) + " exceeds supply";
  for (std::size_t j = 0; j < m; ++j)
    if (in[j] > demand[j] + tol * scale) return "column " + std::to_string(j) + " exceeds demand";
  for (const auto& f : plan.flow)
    if (f.amount < -tol * scale) return "negative flow";
  if (std::abs(plan.total_flow - total) > tol * scale) return "total flow is not maximal";
  if (rel_err(plan.recompute_cost(cost), plan.cost) > tol) return "stored cost differs from recomputed";

  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  for (const auto& e : plan.flow) f(static_cast<Eigen::Index>(e.source), static_cast<Eigen::Index>(e.target)) += e.amount;

  // nodes: 0 = s, 1..n supply, n+1..n+m demand, n+m+1 = t
  struct Edge { std::size_t u, v; double w; };
  std::vector<Edge> edges;
  const std::size_t s = 0, t = n + m + 1;
  const double eps = 1e-12 * scale;
  for (std::size_t i = 0; i < n; ++i) {
    if (supply[i] - out[i] > eps) edges.push_back({s, 1 + i, 0.0});
    if (out[i] > eps) edges.push_back({1 + i, s, 0.0});
    for (std::size_t j = 0; j < m; ++j) {
      const double c = cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      edges.push_back({1 + i, 1 + n + j, c});
      if (f(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > eps) edges.push_back({1 + n + j, 1 + i, -c});
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    if (demand[j] - in[j] > eps) edges.push_back({1 + n + j, t, 0.0});
    if (in[j] > eps) edges.push_back({t, 1 + n + j, 0.0});
  }
  const std::size_t nodes = n + m + 2;
  std::vector<double> dist(nodes, 0.0);
  const double cscale = std::max(1.0, cost.cwiseAbs().maxCoeff());
  for (std::size_t it = 0; it < nodes; ++it) {
    bool changed = false;
    for (const auto& e : edges) {
      if (dist[e.u] + e.w < dist[e.v] - 1e-10 * cscale) {
        dist[e.v] = dist[e.u] + e.w;
        changed = true;
      }
    }
    if (!changed) return {};
  }
  return "negative cycle in residual network";
}

inline double iterate_tanimoto(double kxy, double kxx, double kyy, int n) {
  // Diagonal entries stay 1 under the transform once nonzero; track them.
  for (int k = 0; k < n; ++k) {
    const double next_xy = emdk::tanimoto(kxy, kxx, kyy);
    const double next_xx = emdk::tanimoto(kxx, kxx, kxx);
    const double next_yy = emdk::tanimoto(kyy, kyy, kyy);
    kxy = next_xy;
    kxx = next_xx;
    kyy = next_yy;
  }
  return kxy;
}

}  // namespace testing
