// Acceptance gate: one PASS/FAIL/SKIP line per criterion, nonzero exit on FAIL.
#include <Eigen/Eigenvalues>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "emdk/emdk.hpp"

using namespace emdk;

namespace {

std::mt19937_64 rng(424242);

double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void run(const std::string& name, double limit_seconds, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > limit_seconds) {
    o.pass = false;
    o.detail += " [over time budget]";
  }
  if (!o.pass) ++failures;
  std::printf("%s %s (%.2fs) %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), secs, o.detail.c_str());
  std::fflush(stdout);
}

void skip(const std::string& name, const std::string& why) { std::printf("SKIP %s %s\n", name.c_str(), why.c_str()); }

double rel_diff(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(3);
  os << x;
  return os.str();
}

WeightedPointSet random_line_set(int n, double lo, double hi) {
  std::vector<Point> pts;
  std::vector<double> m;
  for (int i = 0; i < n; ++i) {
    pts.push_back({uniform(lo, hi)});
    m.push_back(uniform(0.05, 2.0));
  }
  return WeightedPointSet(1, pts, m);
}

WeightedPointSet with_mass(const WeightedPointSet& s, double total) { return s.scaled(total / s.total_mass()); }

Eigen::MatrixXd random_pd(int n) {
  Eigen::MatrixXd f(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) f(i, j) = uniform(-1, 1);
  return f.transpose() * f;
}

Eigen::MatrixXd unit_diagonal(const Eigen::MatrixXd& g) {
  const Eigen::VectorXd s = g.diagonal().cwiseSqrt().cwiseInverse();
  return s.asDiagonal() * g * s.asDiagonal();
}

double min_eig_ratio(const Eigen::MatrixXd& g) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double mx = ev.cwiseAbs().maxCoeff();
  return mx == 0.0 ? 0.0 : ev.minCoeff() / mx;
}

WeightedPointSet random_multiset(int n, int max_mass) {
  std::vector<Point> pts;
  std::vector<double> m;
  for (int i = 0; i < n; ++i) {
    pts.push_back({static_cast<double>(uniform_int(0, 5))});
    m.push_back(uniform_int(1, max_mass));
  }
  return WeightedPointSet(1, pts, m);
}

std::vector<std::string> row_names(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("r" + std::to_string(i));
  return out;
}

std::string data_dir() {
#ifdef EMDK_TEST_DATA_DIR
  return EMDK_TEST_DATA_DIR;
#else
  return "tests/data";
#endif
}

Outcome line_oracle() {
  double worst = 0.0;
  for (int t = 0; t < 500; ++t) {
    const auto a = random_line_set(uniform_int(1, 8), -5, 5);
    const auto b = with_mass(random_line_set(uniform_int(1, 8), -5, 5), a.total_mass());
    worst = std::max(worst, rel_diff(emd_1d(a, b, abs_cost), emd(a, b, GroundDistance::euclidean()).cost));
    worst = std::max(worst, rel_diff(emd_1d(a, b, square_cost), emd(a, b, GroundDistance::squared_euclidean()).cost));
  }
  return {worst <= 1e-8, "max rel diff " + fmt(worst)};
}

Outcome circle_oracle() {
  double worst = 0.0;
  const double two_pi = 2 * std::numbers::pi;
  for (int t = 0; t < 500; ++t) {
    const auto a = random_line_set(uniform_int(1, 8), 0, two_pi);
    const auto b = with_mass(random_line_set(uniform_int(1, 8), 0, two_pi), a.total_mass());
    worst = std::max(worst, rel_diff(emd_circle(a, b), emd(a, b, GroundDistance::circle()).cost));
  }
  return {worst <= 1e-8, "max rel diff " + fmt(worst)};
}

Outcome discrete_reduction() {
  const auto d01 = GroundDistance::discrete();
  double worst = 0.0;
  for (int t = 0; t < 500; ++t) {
    const auto a = random_multiset(uniform_int(0, 6), 5);
    const auto b = random_multiset(uniform_int(0, 6), 5);
    const double inter = intersect(a, b).total_mass();
    worst = std::max(worst, std::abs(emi_from_kernel(a, b, discrete_kernel) - inter));
    worst = std::max(worst, std::abs(emi(a, b, d01, SinkSpec::flat_rate(0.5)) - inter));
    const bool a_small = a.total_mass() <= b.total_mass();
    const auto& small = a_small ? a : b;
    const auto& large = a_small ? b : a;
    const double e = emd(a, b, d01).cost;
    const double not1 = std::abs(a.total_mass() - b.total_mass());  // flat rate 1
    const double hat = e + not1;
    worst = std::max(worst, std::abs(e - difference(small, large).total_mass()));
    worst = std::max(worst, std::abs(hat - difference(large, small).total_mass()));
    worst = std::max(worst, std::abs(hat - emdhat_p(a, b, d01, SinkSpec::flat_rate(1.0))));
    const double sym = difference(a, b).total_mass() + difference(b, a).total_mass();
    worst = std::max(worst, std::abs(e + hat - sym));
  }
  return {worst <= 1e-12, "max abs diff " + fmt(worst)};
}

Outcome preservation() {
  double worst_pd = 1.0;
  for (int t = 0; t < 200; ++t) {
    const int n = uniform_int(3, 30);
    Eigen::MatrixXd f(uniform_int(1, n), n);
    for (Eigen::Index i = 0; i < f.rows(); ++i)
      for (Eigen::Index j = 0; j < n; ++j) f(i, j) = uniform(-1, 1);
    worst_pd = std::min(worst_pd, min_eig_ratio(tanimoto(f.transpose() * f)));
  }
  double worst_cnd = -1.0;
  for (int t = 0; t < 200; ++t) {
    const int n = uniform_int(3, 30);
    Eigen::MatrixXd d(n, n);
    if (t % 2 == 0) {
      Eigen::MatrixXd x(n, 3);
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < 3; ++k) x(i, k) = uniform(-2, 2);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) d(i, j) = (x.row(i) - x.row(j)).squaredNorm();
    } else {
      d = Eigen::MatrixXd::Ones(n, n) - Eigen::MatrixXd::Identity(n, n);
    }
    const Eigen::MatrixXd nd = biotope(d, anchor_at_row(d, uniform_int(0, n - 1)));
    const auto r = diagnose(nd);
    worst_cnd = std::max(worst_cnd, r.centered_max_eig / std::max(r.max_abs_eig, 1e-300));
  }
  return {worst_pd >= -1e-8 && worst_cnd <= 1e-8,
          "worst min/max eig " + fmt(worst_pd) + ", worst centered max eig ratio " + fmt(worst_cnd)};
}

Outcome nesting() {
  double worst_iter = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Eigen::MatrixXd g = random_pd(uniform_int(3, 10));
    Eigen::MatrixXd it = g;
    for (int n = 1; n <= 20; ++n) {
      it = tanimoto(it);
      const Eigen::MatrixXd closed = tanimoto_nested(g, n);
      worst_iter = std::max(worst_iter, (closed - it).cwiseAbs().maxCoeff());
    }
  }
  double worst_off = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Eigen::MatrixXd g = unit_diagonal(random_pd(8));
    Eigen::MatrixXd k = tanimoto_nested(g, 30);
    k.diagonal().setZero();
    worst_off = std::max(worst_off, k.cwiseAbs().maxCoeff());
  }
  int found = 0, max_order = 0;
  while (found < 100) {
    const int n = uniform_int(4, 12);
    Eigen::MatrixXd g = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) g(i, j) = g(j, i) = uniform(-0.95, 0.95);
    if (min_eig_ratio(g) >= 0) continue;
    const auto r = pd_ization_order(g);
    if (r.order < 1 || min_eig_ratio(r.result) < -1e-8) return {false, "pd-ization did not reach PSD"};
    max_order = std::max(max_order, r.order);
    ++found;
  }
  return {worst_iter <= 1e-12 && worst_off <= std::ldexp(1.0, -25),
          "iteration diff " + fmt(worst_iter) + ", K^30 off-diagonal " + fmt(worst_off) +
              ", largest n0 " + std::to_string(max_order)};
}

Outcome exp_bridge() {
  const auto d01 = GroundDistance::discrete();
  const SetPairFunction hat = [&](const WeightedPointSet& a, const WeightedPointSet& b) {
    return emdhat_p(a, b, d01, SinkSpec::flat_rate(0.5));
  };
  double worst = 1.0;
  for (int t = 0; t < 20; ++t) {
    std::vector<WeightedPointSet> sets;
    for (int k = 0; k < 25; ++k) sets.push_back(random_multiset(uniform_int(0, 6), 4));
    const auto g = assemble_gram(sets, hat, GramKind::distance);
    if (!diagnose(g).is_cnd) return {false, "distance Gram not verified CND"};
    for (double u : {0.1, 1.0, 10.0}) worst = std::min(worst, min_eig_ratio(rbf(g.values(), u)));
  }
  return {worst >= -1e-8, "worst min/max eig " + fmt(worst)};
}

Outcome constant_ground() {
  double worst_emi = 0.0, worst_prime = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double c0 = uniform(0.5, 2), c1 = uniform(-1, 1), c2 = uniform(0.1, 0.4);
    const auto g = [=](double x) { return c0 + c2 * std::sin(c1 * x); };
    const auto d = GroundDistance::custom(
        [=](std::span<const double> x, std::span<const double> y) { return g(x[0]) + g(y[0]); }, std::nullopt, "g");
    for (int t = 0; t < 100; ++t) {
      const auto a = random_line_set(uniform_int(0, 6), -3, 3);
      const auto b = random_line_set(uniform_int(0, 6), -3, 3);
      const double p = uniform(-3, 3);
      const auto sink = SinkSpec::point({p});
      const double scale = std::max(1.0, emdhat_to_empty(a, d, sink) + emdhat_to_empty(b, d, sink));
      worst_emi = std::max(worst_emi, std::abs(emi(a, b, d, sink)) / scale);
      const double expected = 2 * g(p) * std::min(a.total_mass(), b.total_mass());
      worst_prime = std::max(worst_prime, std::abs(emi_prime(a, b, d, sink) - expected));
    }
  }
  return {worst_emi <= 1e-9 && worst_prime <= 1e-9,
          "|EMI|/scale " + fmt(worst_emi) + ", EMI' diff " + fmt(worst_prime)};
}

Outcome two_point() {
  // K(x, y) = xy on the support {+1, -1}; Lemma 1 gives it from D = (x - y)^2 / 2 at p = 0
  const auto half_sq = GroundDistance::custom(
      [](std::span<const double> x, std::span<const double> y) { return 0.5 * (x[0] - y[0]) * (x[0] - y[0]); },
      std::nullopt, "half-sq");
  double worst = 0.0;
  for (int i = 0; i <= 20; ++i) {
    for (int j = 0; j <= 20; ++j) {
      const double x = i / 20.0, y = j / 20.0;
      const WeightedPointSet a(1, {{1.0}, {-1.0}}, {x, 1 - x});
      const WeightedPointSet b(1, {{1.0}, {-1.0}}, {y, 1 - y});
      const double closed = 2 * (std::min(x, y) + std::min(1 - x, 1 - y)) - 1;
      worst = std::max(worst, std::abs(emi(a, b, half_sq, SinkSpec::point({0.0})) - closed));
    }
  }
  return {worst <= 1e-10, "max abs diff " + fmt(worst)};
}

WeightedPointSet draw_circle(std::mt19937_64& r) {
  const int n = std::uniform_int_distribution<int>(4, 8)(r);
  std::uniform_real_distribution<double> ang(0, 2 * std::numbers::pi), w(0.05, 1.0);
  std::vector<Point> pts;
  std::vector<double> m;
  for (int i = 0; i < n; ++i) {
    pts.push_back({ang(r)});
    m.push_back(w(r));
  }
  return normalize(WeightedPointSet(1, pts, m));
}

WeightedPointSet jitter(const WeightedPointSet& s, std::mt19937_64& r, bool move_points) {
  std::normal_distribution<double> g(0, 0.1);
  const double two_pi = 2 * std::numbers::pi;
  std::vector<Point> pts;
  std::vector<double> m;
  for (std::size_t i = 0; i < s.size(); ++i) {
    Point p(s.point(i).begin(), s.point(i).end());
    if (move_points) p[0] = std::fmod(p[0] + g(r) + 10 * two_pi, two_pi);
    pts.push_back(p);
    m.push_back(std::max(1e-3, s.mass(i) * std::exp(g(r))));
  }
  return normalize(WeightedPointSet(s.dimension(), pts, m));
}

WeightedPointSet draw_square(std::mt19937_64& r) {
  std::uniform_real_distribution<double> w(0.0, 1.0);
  std::vector<Point> pts{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  std::vector<double> m;
  for (int i = 0; i < 4; ++i) m.push_back(w(r) + 1e-3);
  return normalize(WeightedPointSet(2, pts, m));
}

Outcome circle_witness() {
  const SetPairFunction lp = [](const WeightedPointSet& a, const WeightedPointSet& b) {
    return emd(a, b, GroundDistance::circle()).cost;
  };
  const SetPairFunction closed = [](const WeightedPointSet& a, const WeightedPointSet& b) { return emd_circle(a, b); };
  const SetPerturb move = [](const WeightedPointSet& s, std::mt19937_64& r) { return jitter(s, r, true); };
  const auto found = search_non_cnd(draw_circle, closed, 2000, 6, 11, 1e-6, move);
  if (!found) return {false, "no witness in 2000 trials"};
  const auto path = std::filesystem::path(data_dir()) / "circle_witness.json";
  std::string note;
  if (!std::filesystem::exists(path)) {
    std::filesystem::create_directories(path.parent_path());
    write_json_file(witness_to_json(*found), path.string());
    note = ", serialized";
  }
  const auto stored = witness_from_json(read_json_file(path.string()));
  const auto again = evaluate_cnd_witness(stored.sets, lp);
  const bool ok = again.centered_max_eig > 1e-6 * again.scale;
  return {ok, "found at trial " + std::to_string(found->trial) + " (eig " + fmt(found->centered_max_eig) +
                  "); stored witness re-verified by LP: eig " + fmt(again.centered_max_eig) + " scale " +
                  fmt(again.scale) + note};
}

void grid_probe() {
  const SetPairFunction lp = [](const WeightedPointSet& a, const WeightedPointSet& b) {
    return emd(a, b, GroundDistance::euclidean()).cost;
  };
  const auto t0 = std::chrono::steady_clock::now();
  const SetPerturb reweigh = [](const WeightedPointSet& s, std::mt19937_64& r) { return jitter(s, r, false); };
  const auto found = search_non_cnd(draw_square, lp, 2000, 6, 13, 1e-6, reweigh);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (found) {
    const auto path = std::filesystem::path(data_dir()) / "grid_witness.json";
    if (!std::filesystem::exists(path)) write_json_file(witness_to_json(*found), path.string());
    std::printf("INFO grid-probe witness found at trial %d, centered eig %.3g (%.2fs)\n", found->trial,
                found->centered_max_eig, secs);
  } else {
    std::printf("INFO grid-probe no witness on the unit square in 2000 trials (%.2fs)\n", secs);
  }
}

struct Labeled {
  Eigen::MatrixXd k;
  std::vector<int> y;
  std::vector<std::string> classes;
};

Labeled blob_kernel(int n, int classes) {
  Eigen::MatrixXd x(n, 2);
  Labeled out;
  for (int i = 0; i < n; ++i) {
    const int c = i % classes;
    out.y.push_back(c == 0 ? 1 : -1);
    out.classes.push_back("c" + std::to_string(c));
    x.row(i) << 2.0 * c + uniform(-1.5, 1.5), uniform(-1.5, 1.5);
  }
  out.k.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out.k(i, j) = std::exp(-0.5 * (x.row(i) - x.row(j)).squaredNorm());
  return out;
}

Outcome ksvm_check() {
  double worst_dec = 0.0;
  for (int t = 0; t < 10; ++t) {
    const auto b = blob_kernel(30, 2);
    const GramMatrix g(b.k, row_names(30), GramKind::kernel);
    const auto plain = train_binary(g, b.y, {.C = 1.0});
    const auto ks = train_binary(g, b.y, {.C = 1.0, .correction = Correction::ksvm});
    for (Eigen::Index i = 0; i < 30; ++i) {
      const Eigen::VectorXd row = b.k.row(i).transpose();
      const std::span<const double> r(row.data(), 30);
      worst_dec = std::max(worst_dec, std::abs(plain.decision(r) - ks.decision(r)));
    }
  }
  double worst_reuse = 0.0;
  for (int t = 0; t < 10; ++t) {
    const int n = 12;
    Eigen::MatrixXd g = random_pd(n) - 2.0 * Eigen::MatrixXd::Identity(n, n);
    const auto eig = decompose(g);
    for (int c = 0; c < 4; ++c) {
      std::vector<int> y(n);
      for (int i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = i % 4 == c ? 1 : -1;
      const auto shared = ksvm_correct(eig, g, y);
      const auto fresh = ksvm_correct(g, y);
      worst_reuse = std::max(worst_reuse, (shared.corrected - fresh.corrected).cwiseAbs().maxCoeff());
    }
  }
  Eigen::MatrixXd s(2, 2);
  s << 0, 1, 1, 0;
  const std::vector<int> ones{1, 1};
  const double id_err = (ksvm_correct(s, ones).corrected - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff();
  return {worst_dec <= 1e-6 && worst_reuse <= 1e-9 && id_err <= 1e-12,
          "decision diff " + fmt(worst_dec) + ", reuse diff " + fmt(worst_reuse) + ", |G| error " + fmt(id_err)};
}

Outcome shift_check() {
  double worst = 1.0;
  for (int t = 0; t < 50; ++t) {
    const int n = uniform_int(3, 20);
    Eigen::MatrixXd g(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) g(i, j) = g(j, i) = uniform(-1, 1);
    const auto r = shift_correct(GramMatrix(g, row_names(static_cast<std::size_t>(n)), GramKind::kernel));
    worst = std::min(worst, min_eig_ratio(r.gram.values()));
  }
  bool unchanged = true;
  for (int t = 0; t < 10; ++t) {
    const auto b = blob_kernel(20, 2);
    const GramMatrix g(b.k, row_names(20), GramKind::kernel);
    if (shift_correct(g).shift != 0.0) unchanged = false;
    const auto plain = train_binary(g, b.y, {.C = 1.0});
    const auto sh = train_binary(g, b.y, {.C = 1.0, .correction = Correction::shift});
    if (sh.shift != 0.0 || plain.alphas != sh.alphas || plain.bias != sh.bias) unchanged = false;
  }
  return {worst >= -1e-8 && unchanged,
          "worst min/max eig after shift " + fmt(worst) + (unchanged ? ", PSD inputs unchanged" : ", PSD input changed")};
}

Outcome end_to_end() {
  SynthParams p;
  p.seed = 7;
  const Dataset data = generate_synthetic(p);
  ExperimentSpec spec;
  spec.pipeline.threshold = 5.0;
  spec.C = 10.0;
  spec.protocol.k = 5;
  spec.protocol.seed = 1;
  spec.pipeline.variant = Variant::emdhat_sink;
  const double hat = run_experiment(spec, data).mean_accuracy;
  spec.pipeline.variant = Variant::emjd;
  const double jd = run_experiment(spec, data).mean_accuracy;
  spec.pipeline.variant = Variant::emd_rubner;
  const double rub = run_experiment(spec, data).mean_accuracy;
  const bool ok = hat >= 95.0 && std::abs(jd - hat) <= 2.0 && hat - rub >= 5.0;
  return {ok, "emdhat " + fmt(hat) + "%, emjd " + fmt(jd) + "%, emd-rubner " + fmt(rub) + "%"};
}

Outcome posture(const std::string& path) {
  ExperimentSpec spec;
  spec.dataset_path = path;
  spec.dataset_format = "posture-csv";
  spec.sample_per_class_per_group = 75;
  spec.sample_seed = 1;
  spec.pipeline.threshold = 100.0;
  spec.pipeline.variant = Variant::emdhat_sink;
  spec.C = 10.0;
  spec.protocol.kind = "leave_one_group_out";
  const auto r = run_experiment(spec);
  return {std::abs(r.mean_accuracy - 95.02) <= 4.0,
          "mean " + fmt(r.mean_accuracy) + "% +- " + fmt(r.std_accuracy) + " over " + std::to_string(r.folds.size()) +
              " held-out users"};
}

}  // namespace

int main() {
  run("oracle-1d-transport", 10, line_oracle);
  run("oracle-circle-transport", 20, circle_oracle);
  run("discrete-metric-reduction", 5, discrete_reduction);
  run("transform-preservation", 30, preservation);
  run("closed-form-nesting", 30, nesting);
  run("exp-bridge", 20, exp_bridge);
  run("constant-ground-distance", 1e9, constant_ground);
  run("two-point-line-identity", 1e9, two_point);
  run("circle-non-cnd-witness", 60, circle_witness);
  grid_probe();
  run("ksvm-correctness", 1e9, ksvm_check);
  run("shift-correctness", 1e9, shift_check);
  run("end-to-end-synthetic", 300, end_to_end);
  if (const char* p = std::getenv("EMDK_POSTURE_CSV"); p && *p) {
    run("posture-band", 1800, [&] { return posture(p); });
  } else {
    skip("posture-band", "(EMDK_POSTURE_CSV not set)");
  }
  return failures == 0 ? 0 : 1;
}
