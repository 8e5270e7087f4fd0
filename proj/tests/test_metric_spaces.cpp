#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "doslab/metric_spaces.hpp"

using namespace doslab;
using namespace doslab::metric;
using Catch::Matchers::WithinAbs;

namespace {

// Exhaustive box enumeration, independent of the library's ball code.
std::vector<std::pair<Coords, double>> brute_ball(int d, double p, double R) {
  std::vector<std::pair<Coords, double>> out;
  const auto r = static_cast<std::int64_t>(std::floor(R));
  Coords x(static_cast<std::size_t>(d), -r);
  while (true) {
    double dist = 0.0;
    if (std::isinf(p)) {
      for (auto v : x) dist = std::max(dist, static_cast<double>(std::llabs(v)));
    } else {
      for (auto v : x) dist += std::pow(static_cast<double>(std::llabs(v)), p);
      dist = std::pow(dist, 1.0 / p);
    }
    if (dist <= R + 1e-9) out.emplace_back(x, dist);
    std::size_t a = 0;
    while (a < x.size() && x[a] == r) x[a++] = -r;
    if (a == x.size()) break;
    ++x[a];
  }
  return out;
}

}  // namespace

TEST_CASE("lattice balls match exhaustive enumeration", "[ball]") {
  CHECK(ball_points(DiscreteSpace::lattice(1, 2.0), 3.0).size() == 7);
  CHECK(ball_points(DiscreteSpace::lattice(2, 1.0), 1.0).size() == 5);
  for (int d : {1, 2, 3}) {
    for (double p : {1.0, 2.0, 3.0, kInfinity}) {
      for (double R : {0.0, 1.0, 2.5, 4.0}) {
        const auto got = ball_points(DiscreteSpace::lattice(d, p), R);
        const auto want = brute_ball(d, p, R);
        REQUIRE(got.size() == want.size());
        std::set<Coords> a, b;
        for (const auto& e : got) a.insert(std::get<Coords>(e.point));
        for (const auto& e : want) b.insert(e.first);
        CHECK(a == b);
      }
    }
  }
}

TEST_CASE("ball order is by distance then coordinates", "[ball]") {
  const auto ball = ball_points(DiscreteSpace::lattice(2, 2.0), 3.0);
  for (std::size_t i = 1; i < ball.size(); ++i) {
    const auto& a = ball[i - 1];
    const auto& b = ball[i];
    CHECK((a.distance < b.distance ||
           (a.distance == b.distance && std::get<Coords>(a.point) < std::get<Coords>(b.point))));
  }
  CHECK(ball.front().distance == 0.0);
  CHECK(ball.front().level == 0);
}

TEST_CASE("free group balls have 2*3^k - 1 points", "[ball][f2]") {
  const auto f2 = DiscreteSpace::free_group();
  CHECK(ball_points(f2, 2.0).size() == 17);
  for (int k = 0; k <= 7; ++k) {
    CHECK(ball_points(f2, k).size() == static_cast<std::size_t>(2 * std::pow(3, k) - 1));
  }
}

TEST_CASE("free group word codec round-trips", "[f2]") {
  for (NodeId id = 0; id < 2000; ++id) {
    const auto w = f2::decode(id);
    CHECK(f2::encode(w) == id);
    CHECK(f2::word_length(id) == w.size());
    for (std::size_t i = 1; i < w.size(); ++i) CHECK((w[i] ^ 1) != w[i - 1]);  // reduced
  }
}

TEST_CASE("ladder examples", "[ladder]") {
  const auto z2 = radii_ladder(DiscreteSpace::lattice(2, 2.0), 4);
  REQUIRE(z2.size() == 4);
  CHECK_THAT(z2.radii[0], WithinAbs(1.0, 1e-15));
  CHECK_THAT(z2.radii[1], WithinAbs(std::sqrt(2.0), 1e-15));
  CHECK_THAT(z2.radii[2], WithinAbs(2.0, 1e-15));
  CHECK_THAT(z2.radii[3], WithinAbs(std::sqrt(5.0), 1e-15));
  CHECK(z2.ball_counts == std::vector<std::uint64_t>{5, 9, 13, 21});

  const auto z1 = radii_ladder(DiscreteSpace::lattice(1, 2.0), 3);
  CHECK(z1.radii == std::vector<double>{1, 2, 3});
  CHECK(z1.ball_counts == std::vector<std::uint64_t>{3, 5, 7});

  const auto to_r = radii_ladder_to_radius(DiscreteSpace::lattice(2, 2.0), std::sqrt(40.0));
  CHECK(to_r.size() == 20);
  CHECK(to_r.ball_counts == radii_ladder(DiscreteSpace::lattice(2, 2.0), 20).ball_counts);

  const auto l1 = radii_ladder(DiscreteSpace::lattice(2, 1.0), 12);
  for (std::uint64_t k = 1; k <= 12; ++k) CHECK(l1.ball_counts[k - 1] == 2 * k * k + 2 * k + 1);
}

TEST_CASE("coordination sequences", "[ladder]") {
  const auto l1 = coordination_sequence(radii_ladder(DiscreteSpace::lattice(2, 1.0), 30));
  for (std::size_t k = 1; k <= 30; ++k) CHECK(l1[k - 1] == 4 * k);
  for (auto s : coordination_sequence(radii_ladder(DiscreteSpace::lattice(1, 2.0), 30))) CHECK(s == 2);
  const auto f = coordination_sequence(radii_ladder(DiscreteSpace::free_group(), 9));
  for (std::size_t k = 1; k <= 9; ++k) CHECK(f[k - 1] == 4 * static_cast<std::uint64_t>(std::pow(3, k - 1)));
}

TEST_CASE("ball counts agree with the ladder", "[ladder][property]") {
  for (const auto& space : {DiscreteSpace::lattice(2, 2.0), DiscreteSpace::lattice(3, 1.0),
                            DiscreteSpace::lattice(2, kInfinity), DiscreteSpace::free_group()}) {
    const auto ladder = radii_ladder(space, 8);
    for (std::size_t k = 0; k < ladder.size(); ++k) {
      CHECK(ball_points(space, ladder.radii[k]).size() == ladder.ball_counts[k]);
    }
    ladder.validate();
  }
}

TEST_CASE("metric axioms on random triples", "[property]") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::int64_t> coord(-20, 20);
  std::uniform_int_distribution<NodeId> node(0, 3000);
  auto g = std::make_shared<const Graph>(std::vector<NodeId>{0, 1, 2, 3, 4, 5},
                                         std::vector<std::pair<NodeId, NodeId>>{{0, 1}, {1, 2}, {2, 3}, {3, 0}, {3, 4}, {4, 5}});
  const auto cyc = DiscreteSpace::graph(g, 0);
  for (const auto& space : {DiscreteSpace::lattice(2, 2.0), DiscreteSpace::lattice(3, 1.0),
                            DiscreteSpace::lattice(2, 3.5), DiscreteSpace::free_group(), cyc}) {
    for (int t = 0; t < 1000; ++t) {
      auto pick = [&]() -> Point {
        if (space.is_lattice()) {
          Coords c(static_cast<std::size_t>(space.lattice_info().dim));
          for (auto& v : c) v = coord(rng);
          return c;
        }
        if (space.kind() == SpaceKind::cayley_f2) return node(rng);
        return NodeId{node(rng) % 6};
      };
      const Point x = pick(), y = pick(), z = pick();
      CHECK(space.distance(x, y) == space.distance(y, x));
      CHECK(space.distance(x, z) <= space.distance(x, y) + space.distance(y, z) + 1e-9);
      CHECK((space.distance(x, y) == 0.0) == (x == y));
    }
  }
}

TEST_CASE("condition (C) verdicts", "[condc]") {
  const auto z1 = condition_c_report(radii_ladder(DiscreteSpace::lattice(1, 2.0), 500), 0.2, 0.01);
  CHECK(z1.verdict == Verdict::pass);
  for (std::size_t k = 0; k < z1.ratios.size(); ++k) {
    const double kk = static_cast<double>(k + 1);
    CHECK_THAT(z1.ratios[k], WithinAbs((2 * kk + 3) / (2 * kk + 1), 1e-12));
  }
  const auto f2 = condition_c_report(radii_ladder(DiscreteSpace::free_group(), 12), 0.2, 0.01);
  CHECK(f2.verdict == Verdict::fail);
  CHECK_THAT(f2.tail_ratio, WithinAbs(3.0, 0.01));
  CHECK_THROWS_AS(condition_c_report(radii_ladder(DiscreteSpace::lattice(1, 2.0), 5), 0.2, 0.01), ValidationError);
}

TEST_CASE("polynomial shell growth passes condition (C)", "[condc][property]") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + trial % 3;
    std::uniform_real_distribution<double> u(1.0, 2.0);
    RadiiLadder ladder;
    std::uint64_t N = 1;
    for (int k = 1; k <= 4000; ++k) {
      N += static_cast<std::uint64_t>(std::ceil(u(rng) * std::pow(k, d)));
      ladder.push(k, N);
    }
    const auto rep = condition_c_report(ladder, 0.2, 0.01);
    for (double r : rep.ratios) CHECK(r >= 1.0);
    CHECK(rep.verdict == Verdict::pass);
  }
}

TEST_CASE("quasi-polynomial fits", "[quasi]") {
  std::vector<std::uint64_t> lin;
  for (std::uint64_t k = 1; k <= 20; ++k) lin.push_back(4 * k);
  const auto a = quasi_poly_fit(std::span<const std::uint64_t>(lin), 1, 1);
  CHECK_THAT(a.coefficients[0][0], WithinAbs(4.0, 1e-9));
  CHECK_THAT(a.coefficients[0][1], WithinAbs(0.0, 1e-8));
  CHECK(a.max_residual < 1e-8);

  std::vector<std::uint64_t> par;
  for (std::uint64_t k = 1; k <= 30; ++k) par.push_back(k % 2 == 0 ? 2 * k : 2 * k + 1);
  const auto b = quasi_poly_fit(std::span<const std::uint64_t>(par), 2, 1);
  CHECK(b.coefficients.size() == 2);
  CHECK(b.max_residual < 1e-8);
  for (std::size_t k = 10; k <= 30; ++k) CHECK_THAT(b.evaluate(k), WithinAbs(static_cast<double>(par[k - 1]), 1e-7));

  std::vector<double> ex;
  for (int k = 1; k <= 20; ++k) ex.push_back(std::pow(3.0, k));
  CHECK(quasi_poly_fit(std::span<const double>(ex), 1, 2).max_residual > 1e3);

  CHECK_THROWS_AS(quasi_poly_fit(std::span<const std::uint64_t>(lin.data(), 3), 1, 1), ValidationError);
}

TEST_CASE("edge list ingestion", "[graph]") {
  std::istringstream path("0 1\n1 2\n2 3\n");
  CHECK(ball_points(ingest_graph(path, 0), 2.0).size() == 3);

  std::istringstream cycle("# square\n0 1\n1 2\n\n2 3\n3 0\n0 1\n");
  const auto ladder = radii_ladder_to_radius(ingest_graph(cycle, 0), 10.0);
  CHECK(ladder.radii == std::vector<double>{1, 2});
  CHECK(ladder.ball_counts == std::vector<std::uint64_t>{3, 4});

  std::istringstream two("0 1\n1 2\n2 0\n10 11\n");
  const auto small = ingest_graph(two, 11);
  CHECK(small.size() == 2u);

  std::istringstream bad("0 1\n1 x\n");
  try {
    ingest_graph(bad, 0);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  std::istringstream missing("0 1\n");
  CHECK_THROWS_AS(ingest_graph(missing, 7), Error);
}

TEST_CASE("budget is enforced instead of truncating", "[budget]") {
  EnumerationOptions tight{100};
  CHECK_THROWS_AS(ball_points(DiscreteSpace::lattice(2, 2.0), 50.0, tight), BudgetExceeded);
  try {
    radii_ladder(DiscreteSpace::free_group(), 10, tight);
    FAIL("expected a partial ladder");
  } catch (const PartialLadderError& e) {
    CHECK(e.prefix().ball_counts == std::vector<std::uint64_t>{5, 17, 53});
    e.prefix().validate();
  }
  CHECK_THROWS_AS(radii_ladder(DiscreteSpace::lattice(2, 2.0), 1000, tight), PartialLadderError);
}
