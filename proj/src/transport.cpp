#include "emdk/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "emdk/errors.hpp"

namespace emdk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_masses(std::span<const double> m, const char* what) {
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!std::isfinite(m[i]) || m[i] < 0.0) {
      std::ostringstream msg;
      msg << what << " mass " << i << " is negative or non-finite";
      throw InputError(msg.str());
    }
  }
}

bool masses_match(double ma, double mb) {
  return std::abs(ma - mb) <= 1e-9 * std::max(ma, mb);
}

// Residual network of the bipartite transport problem, solved by successive
// shortest augmenting paths. Node layout: 0 source, 1..n supply nodes,
// n+1..n+m demand nodes, n+m+1 sink. Arcs supply->demand have infinite
// capacity; their reverse arcs carry the current flow.
class SuccessivePaths {
 public:
  SuccessivePaths(std::vector<double> supply, std::vector<double> demand, Eigen::MatrixXd cost)
      : n_(supply.size()),
        m_(demand.size()),
        supply_left_(std::move(supply)),
        demand_left_(std::move(demand)),
        cost_(std::move(cost)),
        flow_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(m_))),
        potential_(n_ + m_ + 2, 0.0) {}

  void run() {
    const std::size_t cap = 100 * (n_ + m_ + 2) * (n_ + m_ + 2) + 1000;
    for (std::size_t iter = 0; iter < cap; ++iter) {
      if (!augment()) return;
    }
    std::ostringstream msg;
    msg << "transport solver did not terminate after " << cap << " augmentations (" << n_ << "x"
        << m_ << ")";
    throw SolverError(msg.str());
  }

  const Eigen::MatrixXd& flow() const { return flow_; }

 private:
  static constexpr double kResidualTol = 1e-14;

  std::size_t source() const { return 0; }
  std::size_t sink() const { return n_ + m_ + 1; }
  std::size_t supply_node(std::size_t i) const { return 1 + i; }
  std::size_t demand_node(std::size_t j) const { return 1 + n_ + j; }

  double c(std::size_t i, std::size_t j) const {
    return cost_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  double& f(std::size_t i, std::size_t j) {
    return flow_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

  // One Dijkstra pass over reduced costs followed by an augmentation along
  // the shortest source-sink path. Returns false when no path remains.
  bool augment() {
    const std::size_t nodes = n_ + m_ + 2;
    std::vector<double> dist(nodes, kInf);
    std::vector<std::size_t> prev(nodes, nodes);
    std::vector<char> done(nodes, 0);
    dist[source()] = 0.0;

    auto relax = [&](std::size_t u, std::size_t v, double arc_cost) {
      double reduced = arc_cost + potential_[u] - potential_[v];
      if (reduced < 0.0) reduced = 0.0;  // rounding only; potentials keep arcs non-negative
      const double nd = dist[u] + reduced;
      if (nd < dist[v]) {
        dist[v] = nd;
        prev[v] = u;
      }
    };

    for (std::size_t step = 0; step < nodes; ++step) {
      std::size_t u = nodes;
      double best = kInf;
      for (std::size_t v = 0; v < nodes; ++v) {
        if (!done[v] && dist[v] < best) {
          best = dist[v];
          u = v;
        }
      }
      if (u == nodes) break;
      done[u] = 1;
      if (u == source()) {
        for (std::size_t i = 0; i < n_; ++i) {
          if (supply_left_[i] > kResidualTol) relax(u, supply_node(i), 0.0);
        }
      } else if (u <= n_) {
        const std::size_t i = u - 1;
        for (std::size_t j = 0; j < m_; ++j) relax(u, demand_node(j), c(i, j));
      } else if (u < sink()) {
        const std::size_t j = u - 1 - n_;
        for (std::size_t i = 0; i < n_; ++i) {
          if (f(i, j) > kResidualTol) relax(u, supply_node(i), -c(i, j));
        }
        if (demand_left_[j] > kResidualTol) relax(u, sink(), 0.0);
      }
    }
    if (!done[sink()]) return false;

    for (std::size_t v = 0; v < nodes; ++v) {
      if (done[v]) potential_[v] += dist[v];
    }

    // Bottleneck along the path; forward supply->demand arcs are uncapacitated.
    double push = kInf;
    for (std::size_t v = sink(); v != source(); v = prev[v]) {
      const std::size_t u = prev[v];
      if (u == source()) {
        push = std::min(push, supply_left_[v - 1]);
      } else if (v == sink()) {
        push = std::min(push, demand_left_[u - 1 - n_]);
      } else if (u > n_) {
        push = std::min(push, f(v - 1, u - 1 - n_));
      }
    }
    for (std::size_t v = sink(); v != source(); v = prev[v]) {
      const std::size_t u = prev[v];
      if (u == source()) {
        supply_left_[v - 1] -= push;
      } else if (v == sink()) {
        demand_left_[u - 1 - n_] -= push;
      } else if (u <= n_) {
        f(u - 1, v - 1 - n_) += push;
      } else {
        double& back = f(v - 1, u - 1 - n_);
        back -= push;
        if (back < kResidualTol) back = 0.0;
      }
    }
    return true;
  }

  std::size_t n_;
  std::size_t m_;
  std::vector<double> supply_left_;
  std::vector<double> demand_left_;
  Eigen::MatrixXd cost_;
  Eigen::MatrixXd flow_;
  std::vector<double> potential_;
};

// Piecewise-constant U - V on the circle: (value, arc length) per interval.
std::vector<std::pair<double, double>> cdf_difference_on_circle(const WeightedPointSet& a,
                                                                const WeightedPointSet& b) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (common_dimension(a, b) > 1) throw DimensionMismatch("circle sets must be 1-dimensional");
  if (!masses_match(a.total_mass(), b.total_mass())) {
    throw DomainError("circle transport needs equal total masses");
  }
  // (angle, signed mass) events, A positive and B negative.
  std::vector<std::pair<double, double>> events;
  auto add = [&](const WeightedPointSet& s, double sign) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double t = s.point(i)[0];
      if (!(t >= 0.0 && t < two_pi)) throw DomainError("circle angle outside [0, 2pi)");
      events.emplace_back(t, sign * s.mass(i));
    }
  };
  add(a, 1.0);
  add(b, -1.0);
  std::sort(events.begin(), events.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });

  std::vector<std::pair<double, double>> pieces;
  double level = 0.0;
  double last = 0.0;
  for (std::size_t k = 0; k < events.size();) {
    const double t = events[k].first;
    if (t > last) pieces.emplace_back(level, t - last);
    while (k < events.size() && events[k].first == t) {
      level += events[k].second;
      ++k;
    }
    last = t;
  }
  if (two_pi > last) pieces.emplace_back(level, two_pi - last);
  return pieces;
}

double l1_about(const std::vector<std::pair<double, double>>& pieces, double alpha) {
  double s = 0.0;
  for (const auto& [value, length] : pieces) s += length * std::abs(value - alpha);
  return s;
}

}  // namespace

std::vector<double> TransportPlan::outflow(std::size_t n_sources) const {
  std::vector<double> out(n_sources, 0.0);
  for (const auto& e : flow) out.at(e.source) += e.amount;
  return out;
}

std::vector<double> TransportPlan::inflow(std::size_t n_targets) const {
  std::vector<double> in(n_targets, 0.0);
  for (const auto& e : flow) in.at(e.target) += e.amount;
  return in;
}

double TransportPlan::recompute_cost(const Eigen::MatrixXd& cost_matrix) const {
  double s = 0.0;
  for (const auto& e : flow) {
    s += e.amount *
         cost_matrix(static_cast<Eigen::Index>(e.source), static_cast<Eigen::Index>(e.target));
  }
  return s;
}

TransportPlan solve_transport(std::span<const double> supply, std::span<const double> demand,
                              const Eigen::MatrixXd& cost) {
  check_masses(supply, "supply");
  check_masses(demand, "demand");
  if (cost.rows() != static_cast<Eigen::Index>(supply.size()) ||
      cost.cols() != static_cast<Eigen::Index>(demand.size())) {
    throw DimensionMismatch("cost matrix shape does not match supply/demand");
  }
  if (!cost.allFinite()) throw InputError("cost matrix has non-finite entries");

  TransportPlan plan;
  const double total_supply = std::accumulate(supply.begin(), supply.end(), 0.0);
  const double total_demand = std::accumulate(demand.begin(), demand.end(), 0.0);
  if (supply.empty() || demand.empty() || total_supply <= 0.0 || total_demand <= 0.0) return plan;

  const double scale = std::max(total_supply, total_demand);
  std::vector<double> s(supply.begin(), supply.end());
  std::vector<double> d(demand.begin(), demand.end());
  for (double& x : s) x /= scale;
  for (double& x : d) x /= scale;

  // Every maximum flow carries the same total, so a constant shift of the
  // costs leaves the optimal flow unchanged and makes all costs >= 0.
  const double shift = cost.minCoeff();
  SuccessivePaths solver(std::move(s), std::move(d), cost.array() - shift);
  solver.run();

  const Eigen::MatrixXd& f = solver.flow();
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    for (Eigen::Index j = 0; j < f.cols(); ++j) {
      if (f(i, j) > 0.0) {
        const double amount = f(i, j) * scale;
        plan.flow.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), amount});
        plan.total_flow += amount;
        plan.cost += amount * cost(i, j);
      }
    }
  }
  return plan;
}

TransportPlan emd(const WeightedPointSet& a, const WeightedPointSet& b, const GroundDistance& d) {
  const Eigen::MatrixXd c = cost_matrix(a, b, d);
  return solve_transport(a.masses(), b.masses(), c);
}

double emd_rubner(const WeightedPointSet& a, const WeightedPointSet& b, const GroundDistance& d) {
  if (!(std::min(a.total_mass(), b.total_mass()) > 0.0)) {
    throw DomainError("Rubner-scaled EMD needs positive total flow");
  }
  const TransportPlan plan = emd(a, b, d);
  return plan.cost / plan.total_flow;
}

double emdnot(const WeightedPointSet& a, const WeightedPointSet& b, const TransportPlan& plan,
              const GroundDistance& d, const SinkSpec& sink) {
  const double ma = a.total_mass();
  const double mb = b.total_mass();
  if (std::abs(ma - mb) <= 1e-12 * std::max(ma, mb)) return 0.0;
  const bool b_larger = ma <= mb;
  const WeightedPointSet& larger = b_larger ? b : a;
  const std::vector<double> moved =
      b_larger ? plan.inflow(larger.size()) : plan.outflow(larger.size());
  const double half_self = 0.5 * sink.self_cost(d);
  double s = 0.0;
  for (std::size_t k = 0; k < larger.size(); ++k) {
    const double excess = std::max(0.0, larger.mass(k) - moved[k]);
    if (excess > 0.0) s += excess * (sink.cost_to_sink(d, larger.point(k)) - half_self);
  }
  return s;
}

EmdHatParts emdhat_p_parts(const WeightedPointSet& a, const WeightedPointSet& b,
                           const GroundDistance& d, const SinkSpec& sink) {
  EmdHatParts parts;
  const double ma = a.total_mass();
  const double mb = b.total_mass();
  if (std::abs(ma - mb) <= 1e-12 * std::max(ma, mb)) {
    parts.plan = emd(a, b, d);
    parts.transport = parts.plan.cost;
    return parts;
  }
  // The sink joins the smaller side with the mass difference; routing the
  // excess and transporting the rest are optimized together.
  const bool b_larger = ma < mb;
  const WeightedPointSet& larger = b_larger ? b : a;
  const Eigen::MatrixXd c = cost_matrix(a, b, d);
  const double half_self = 0.5 * sink.self_cost(d);
  Eigen::VectorXd to_sink(static_cast<Eigen::Index>(larger.size()));
  for (std::size_t k = 0; k < larger.size(); ++k) {
    to_sink(static_cast<Eigen::Index>(k)) = sink.cost_to_sink(d, larger.point(k)) - half_self;
  }
  std::vector<double> sa = a.masses(), sb = b.masses();
  Eigen::MatrixXd aug;
  if (b_larger) {
    sa.push_back(mb - ma);
    aug.resize(c.rows() + 1, c.cols());
    aug.topRows(c.rows()) = c;
    aug.row(c.rows()) = to_sink.transpose();
  } else {
    sb.push_back(ma - mb);
    aug.resize(c.rows(), c.cols() + 1);
    aug.leftCols(c.cols()) = c;
    aug.col(c.cols()) = to_sink;
  }
  const TransportPlan full = solve_transport(sa, sb, aug);
  for (const auto& f : full.flow) {
    const bool is_sink = b_larger ? f.source == a.size() : f.target == b.size();
    if (is_sink) {
      parts.excess += f.amount * aug(static_cast<Eigen::Index>(f.source), static_cast<Eigen::Index>(f.target));
    } else {
      parts.plan.flow.push_back(f);
      parts.transport += f.amount * c(static_cast<Eigen::Index>(f.source), static_cast<Eigen::Index>(f.target));
      parts.plan.total_flow += f.amount;
    }
  }
  parts.plan.cost = parts.transport;
  return parts;
}

double emdhat_p(const WeightedPointSet& a, const WeightedPointSet& b, const GroundDistance& d,
                const SinkSpec& sink) {
  return emdhat_p_parts(a, b, d, sink).value();
}

double emdhat_to_empty(const WeightedPointSet& a, const GroundDistance& d, const SinkSpec& sink) {
  return emdnot(a, WeightedPointSet{}, TransportPlan{}, d, sink);
}

double emdhat_alpha(const WeightedPointSet& a, const WeightedPointSet& b, const GroundDistance& d,
                    double alpha) {
  if (!(alpha >= 0.0)) throw DomainError("alpha must be non-negative");
  const auto sup = d.bound();
  if (!sup) throw DomainError("emdhat_alpha needs a bounded ground distance (" + d.describe() + ")");
  return emd(a, b, d).cost + alpha * std::abs(a.total_mass() - b.total_mass()) * *sup;
}

double emi(const WeightedPointSet& a, const WeightedPointSet& b, const GroundDistance& d,
           const SinkSpec& sink) {
  return emdhat_to_empty(a, d, sink) + emdhat_to_empty(b, d, sink) - emdhat_p(a, b, d, sink);
}

double emi_from_kernel(const WeightedPointSet& a, const WeightedPointSet& b,
                       const PointMetric& kernel) {
  common_dimension(a, b);
  Eigen::MatrixXd k(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = kernel(a.point(i), b.point(j));
    }
  }
  const Eigen::MatrixXd negated = -k;
  const TransportPlan plan = solve_transport(a.masses(), b.masses(), negated);
  return plan.recompute_cost(k);
}

double emi_prime(const WeightedPointSet& a, const WeightedPointSet& b, const GroundDistance& d,
                 const SinkSpec& sink) {
  const double flow = std::min(a.total_mass(), b.total_mass());
  return emi(a, b, d, sink) + flow * sink.self_cost(d);
}

double abs_cost(double x) { return std::abs(x); }
double square_cost(double x) { return x * x; }

double emd_1d(const WeightedPointSet& a, const WeightedPointSet& b, const LineCost& h) {
  if (common_dimension(a, b) > 1) throw DimensionMismatch("emd_1d needs 1-dimensional sets");
  const double ma = a.total_mass();
  const double mb = b.total_mass();
  if (!masses_match(ma, mb)) throw DomainError("emd_1d needs equal total masses");
  if (a.empty() || b.empty()) return 0.0;

  // Supports are already sorted ascending by construction.
  const double tol = 1e-15 * std::max(ma, mb);
  std::size_t i = 0, j = 0;
  double ra = a.mass(0), rb = b.mass(0);
  double total = 0.0;
  while (i < a.size() && j < b.size()) {
    const double f = std::min(ra, rb);
    total += f * h(a.point(i)[0] - b.point(j)[0]);
    ra -= f;
    rb -= f;
    if (ra <= tol) {
      if (++i < a.size()) ra = a.mass(i);
    }
    if (rb <= tol) {
      if (++j < b.size()) rb = b.mass(j);
    }
  }
  return total;
}

double emd_circle(const WeightedPointSet& a, const WeightedPointSet& b) {
  auto pieces = cdf_difference_on_circle(a, b);
  if (pieces.empty()) return 0.0;
  std::vector<std::pair<double, double>> sorted = pieces;
  std::sort(sorted.begin(), sorted.end());
  double total_length = 0.0;
  for (const auto& p : sorted) total_length += p.second;
  // Lower weighted median.
  double acc = 0.0;
  double median = sorted.back().first;
  for (const auto& [value, length] : sorted) {
    acc += length;
    if (acc >= 0.5 * total_length) {
      median = value;
      break;
    }
  }
  return l1_about(pieces, median);
}

double emd_circle_mean_approx(const WeightedPointSet& a, const WeightedPointSet& b) {
  auto pieces = cdf_difference_on_circle(a, b);
  double weighted = 0.0, total_length = 0.0;
  for (const auto& [value, length] : pieces) {
    weighted += value * length;
    total_length += length;
  }
  const double mean = total_length > 0.0 ? weighted / total_length : 0.0;
  return l1_about(pieces, mean);
}

}  // namespace emdk
