#include "doctest.h"
#include "support.hpp"

using namespace emdk;
using testing::uniform;

namespace {
double ev(const GroundDistance& d, Point x, Point y) { return d(x, y); }
}  // namespace

TEST_CASE("built-in distances") {
  CHECK(ev(GroundDistance::euclidean(), {0, 0}, {3, 4}) == 5.0);
  CHECK(ev(GroundDistance::squared_euclidean(), {0, 0}, {3, 4}) == 25.0);
  CHECK(ev(GroundDistance::discrete(), {1, 2}, {1, 2}) == 0.0);
  CHECK(ev(GroundDistance::discrete(), {1, 2}, {1, 3}) == 1.0);
  CHECK(ev(GroundDistance::circle(), {0}, {3 * M_PI / 2}) == doctest::Approx(M_PI / 2).epsilon(1e-15));
  CHECK(ev(GroundDistance::circle(), {0.1}, {0.1 + M_PI}) == doctest::Approx(M_PI));
  CHECK_THROWS_AS(ev(GroundDistance::euclidean(), {0, 0}, {1}), DimensionMismatch);
  CHECK_THROWS_AS(ev(GroundDistance::circle(), {7.0}, {0.0}), DomainError);
}

TEST_CASE("circle fast path matches the arccos form") {
  const auto d = GroundDistance::circle();
  for (int t = 0; t < 1000; ++t) {
    const double x = uniform(0, 2 * M_PI), y = uniform(0, 2 * M_PI);
    CHECK(std::abs(d(Point{x}, Point{y}) - circle_geodesic_reference(x, y)) <= 1e-7);
  }
  // arccos loses precision near 0 and pi; compare away from those.
  for (int t = 0; t < 1000; ++t) {
    const double x = uniform(0, 2 * M_PI);
    const double y = std::fmod(x + uniform(0.1, M_PI - 0.1), 2 * M_PI);
    CHECK(std::abs(d(Point{x}, Point{y}) - circle_geodesic_reference(x, y)) <= 1e-12);
  }
}

TEST_CASE("thresholding") {
  const auto e = GroundDistance::euclidean();
  const auto t1 = e.thresholded(1.0), t2 = e.thresholded(2.5);
  CHECK(ev(t1, {0, 0}, {3, 4}) == 1.0);
  CHECK(*t1.bound() == 1.0);
  CHECK_FALSE(e.bound().has_value());
  CHECK(*GroundDistance::discrete().bound() == 1.0);
  CHECK_THROWS_AS(e.thresholded(0.0), DomainError);
  for (int k = 0; k < 200; ++k) {
    Point x{uniform(-3, 3), uniform(-3, 3)}, y{uniform(-3, 3), uniform(-3, 3)};
    CHECK(t1(x, y) <= 1.0);
    CHECK(t1(x, y) <= t2(x, y));
    CHECK(t1(x, y) == t1(y, x));
  }
}

TEST_CASE("precomputed distances") {
  Eigen::MatrixXd m(3, 3);
  m << 0, 1, 2, 1, 0, 3, 2, 3, 0;
  const auto d = GroundDistance::precomputed(m);
  CHECK(ev(d, {0}, {2}) == 2.0);
  CHECK(ev(d, {2}, {1}) == 3.0);
  CHECK(*d.bound() == 3.0);
  CHECK_THROWS(ev(d, {0}, {3}));
  Eigen::MatrixXd bad = m;
  bad(0, 1) = 1.5;
  CHECK_THROWS_AS(GroundDistance::precomputed(bad), InputError);
  Eigen::MatrixXd nearly = m;
  nearly(0, 1) += 1e-12;
  CHECK(GroundDistance::precomputed(nearly).matrix()->isApprox(m, 1e-11));
}

TEST_CASE("sink specs") {
  const auto e = GroundDistance::euclidean();
  const auto flat = SinkSpec::flat_rate(2.0);
  CHECK(flat.cost_to_sink(e, Point{5, 5}) == 2.0);
  CHECK(flat.self_cost(e) == 0.0);
  CHECK_THROWS_AS(SinkSpec::flat_rate(0.0), DomainError);
  const auto p = SinkSpec::point({0, 0});
  CHECK(p.cost_to_sink(e, Point{3, 4}) == 5.0);
}

TEST_CASE("kernel from distance") {
  PairFunction<Point> sq = as_pair_function(GroundDistance::squared_euclidean());
  auto k = kernel_from_distance(sq, Point{0.0});
  for (int t = 0; t < 20; ++t) {
    const double x = uniform(-5, 5), y = uniform(-5, 5);
    CHECK(k({x}, {y}) == doctest::Approx(2 * x * y).epsilon(1e-12));
    CHECK(k({0.0}, {y}) == 0.0);
  }
  // discrete metric, fresh anchor p: K(x,x) = 2, K(x,y) = 1, K(p,.) = 0
  auto kd = kernel_from_distance(as_pair_function(GroundDistance::discrete()), Point{99.0});
  const std::vector<Point> space{{0}, {1}, {2}, {99}};
  for (const auto& x : space) {
    for (const auto& y : space) {
      const double dxp = x[0] == 99 ? 0 : 1, dyp = y[0] == 99 ? 0 : 1, dxy = x == y ? 0 : 1;
      CHECK(kd(x, y) == dxp + dyp - dxy);
    }
  }
  CHECK(kd({0}, {0}) == 2.0);
  CHECK(kd({0}, {1}) == 1.0);
}

TEST_CASE("distance from kernel") {
  PairFunction<Point> dot = [](const Point& x, const Point& y) { return x[0] * y[0]; };
  auto d = distance_from_kernel(dot);
  CHECK(d({3.0}, {1.0}) == 4.0);
  PairFunction<Point> k01 = [](const Point& x, const Point& y) { return discrete_kernel(x, y); };
  auto d01 = distance_from_kernel(k01);
  CHECK(d01({1.0}, {1.0}) == 0.0);
  CHECK(d01({1.0}, {2.0}) == 2.0);
  // round trip doubles the squared Euclidean distance
  auto sq = as_pair_function(GroundDistance::squared_euclidean());
  auto round = distance_from_kernel(kernel_from_distance(sq, Point{0.3, -1.0}));
  for (int t = 0; t < 50; ++t) {
    Point x{uniform(-2, 2), uniform(-2, 2)}, y{uniform(-2, 2), uniform(-2, 2)};
    CHECK(testing::rel_err(round(x, y), 2 * sq(x, y)) <= 1e-12);
  }
}

TEST_CASE("definiteness of ground distances") {
  auto sq = as_pair_function(GroundDistance::squared_euclidean());
  for (int t = 0; t < 50; ++t) {
    const int n = testing::uniform_int(2, 6);
    std::vector<Point> pts;
    for (int i = 0; i < n; ++i) pts.push_back({uniform(-3, 3), uniform(-3, 3)});
    auto k = kernel_from_distance(sq, pts[0]);
    Eigen::MatrixXd g(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) g(i, j) = k(pts[i], pts[j]);
    const auto ev = testing::eigenvalues(g);
    CHECK(ev.minCoeff() >= -1e-8 * ev.cwiseAbs().maxCoeff());
  }
  for (int n = 2; n <= 8; ++n) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Ones(n, n) - Eigen::MatrixXd::Identity(n, n);
    CHECK(testing::eigenvalues(testing::centered(d)).maxCoeff() <= 1e-10);
  }
}
