#pragma once

#include <Eigen/Core>
#include <functional>
#include <span>
#include <vector>

#include "emdk/ground.hpp"
#include "emdk/multiset.hpp"

namespace emdk {

struct FlowEntry {
  std::size_t source;  // index into the first set's support
  std::size_t target;  // index into the second set's support
  double amount;
};

// Optimal flow between two supports. `cost` is the unscaled objective
// sum f_ij * c_ij; `total_flow` equals the smaller of the two total masses.
struct TransportPlan {
  std::vector<FlowEntry> flow;
  double cost = 0.0;
  double total_flow = 0.0;

  std::vector<double> outflow(std::size_t n_sources) const;
  std::vector<double> inflow(std::size_t n_targets) const;
  // Sum f_ij * c_ij recomputed from the flow entries.
  double recompute_cost(const Eigen::MatrixXd& cost_matrix) const;
};

// Minimum-cost maximum flow on the complete bipartite graph from `supply` to
// `demand` (successive shortest paths with Dijkstra and node potentials).
// Costs may be negative. Masses are rescaled internally so the larger side
// totals 1. Throws InputError on negative or non-finite masses and
// SolverError if the augmentation loop fails to terminate.
TransportPlan solve_transport(std::span<const double> supply, std::span<const double> demand,
                              const Eigen::MatrixXd& cost);

// Earth mover's distance without total-flow scaling: min over feasible flows
// of sum f(a, b) D(a, b), where feasible flows move min(mu(A), mu(B)) mass.
TransportPlan emd(const WeightedPointSet& a, const WeightedPointSet& b, const GroundDistance& d);

// emd(...).cost divided by the total flow. Throws DomainError when the
// smaller set has zero mass.
double emd_rubner(const WeightedPointSet& a, const WeightedPointSet& b, const GroundDistance& d);

// Cost of moving the larger set's unmatched mass to the sink:
// sum over the larger set of excess(x) * [cost_to_sink(x) - self_cost / 2].
// `plan` is a maximum flow from a to b, e.g. emdhat_p_parts(a, b, d, sink).plan.
double emdnot(const WeightedPointSet& a, const WeightedPointSet& b, const TransportPlan& plan,
              const GroundDistance& d, const SinkSpec& sink);

struct EmdHatParts {
  TransportPlan plan;
  double transport = 0.0;  // cost of `plan`
  double excess = 0.0;     // emdnot(a, b, plan)
  double value() const { return transport + excess; }
};

EmdHatParts emdhat_p_parts(const WeightedPointSet& a, const WeightedPointSet& b,
                           const GroundDistance& d, const SinkSpec& sink);

// min over maximum flows f of  sum f D + emdnot(f). The sink is an extra
// node on the smaller side holding the mass difference, so the transport
// part is an optimal partial flow and the value is symmetric in (a, b).
double emdhat_p(const WeightedPointSet& a, const WeightedPointSet& b, const GroundDistance& d,
                const SinkSpec& sink);

// emdhat_p(a, {}): every unit of a goes to the sink.
double emdhat_to_empty(const WeightedPointSet& a, const GroundDistance& d, const SinkSpec& sink);

// emd + alpha * |mu(A) - mu(B)| * sup D. Throws DomainError when D is
// unbounded or alpha < 0.
double emdhat_alpha(const WeightedPointSet& a, const WeightedPointSet& b, const GroundDistance& d,
                    double alpha);

// Earth mover's intersection anchored at the empty set:
// emdhat_p(A, {}) + emdhat_p(B, {}) - emdhat_p(A, B).
double emi(const WeightedPointSet& a, const WeightedPointSet& b, const GroundDistance& d,
           const SinkSpec& sink);

// sum f*(a, b) K(a, b) for the maximum-cost maximum flow with respect to the
// ground kernel K. Equals emi(a, b, D, p) when K is the kernel induced from
// D anchored at p.
double emi_from_kernel(const WeightedPointSet& a, const WeightedPointSet& b,
                       const PointMetric& kernel);

// emi + total_flow * D(p, p).
double emi_prime(const WeightedPointSet& a, const WeightedPointSet& b, const GroundDistance& d,
                 const SinkSpec& sink);

// Convex symmetric cost h(a - b) on the line.
using LineCost = std::function<double(double)>;
double abs_cost(double x);
double square_cost(double x);

// Transport between equal-mass 1-D sets by matching quantiles in ascending
// order. Throws DomainError when masses differ by more than 1e-9 relative.
double emd_1d(const WeightedPointSet& a, const WeightedPointSet& b, const LineCost& h = abs_cost);

// Transport on the unit circle with geodesic cost: min over alpha of
// integral |U - V - alpha|, attained at the weighted median of U - V.
double emd_circle(const WeightedPointSet& a, const WeightedPointSet& b);
// Same integral with alpha set to the mean of U - V instead of the median.
double emd_circle_mean_approx(const WeightedPointSet& a, const WeightedPointSet& b);

}  // namespace emdk
