#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "doslab/dos_dixmier.hpp"
#include "doslab/reference_models.hpp"

using namespace doslab;
using namespace doslab::ref;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Independent block rule: blocks [4^m + 1, 2*4^m] are zero and
// [2*4^m + 1, 4^(m+1)] are one.
int lambda_by_blocks(std::uint64_t n) {
  if (n == 1) return 1;
  for (std::uint64_t q = 1;; q *= 4) {
    if (n <= 2 * q) return 0;
    if (n <= 4 * q) return 1;
  }
}

}  // namespace

TEST_CASE("counterexample block values", "[counterexample]") {
  CHECK(counterexample_lambda(1) == 1);
  CHECK(counterexample_lambda(2) == 0);
  CHECK(counterexample_lambda(5) == 0);
  CHECK(counterexample_lambda(10) == 1);
  CHECK_THROWS_AS(counterexample_lambda(0), ValidationError);
  std::uint64_t sum = 0;
  for (std::uint64_t n = 1; n <= (1u << 20); ++n) {
    const int v = lambda_by_blocks(n);
    if (counterexample_lambda(n) != v) FAIL("mismatch at n = " << n);
    sum += static_cast<std::uint64_t>(v);
    if ((n & (n - 1)) == 0 || n % 9973 == 0) CHECK(counterexample_prefix_sum(n) == sum);
  }
}

TEST_CASE("block partition is exact", "[counterexample][property]") {
  // Block lengths 1, 2^(2m), 2^(2m) ... tile [1, 2^20] without gaps.
  std::uint64_t end = 1;
  std::vector<std::uint64_t> ends{1};
  for (std::uint64_t q = 1; 4 * q <= (1u << 20); q *= 4) {
    end += q;
    ends.push_back(end);
    CHECK(end == 2 * q);
    end += 2 * q;
    ends.push_back(end);
    CHECK(end == 4 * q);
  }
  for (std::size_t i = 1; i < ends.size(); ++i) {
    const int first = counterexample_lambda(ends[i - 1] + 1);
    for (std::uint64_t n = ends[i - 1] + 1; n <= ends[i]; ++n) CHECK(counterexample_lambda(n) == first);
    if (i + 1 < ends.size()) CHECK(counterexample_lambda(ends[i] + 1) != first);
  }
}

TEST_CASE("counterexample Cesaro values", "[counterexample]") {
  const auto rows = counterexample_report(12);
  REQUIRE(rows.size() == 26);
  CHECK(rows[2].n == 4);
  CHECK(rows[2].prefix_sum == 3);
  CHECK(rows[3].n == 8);
  CHECK(rows[3].prefix_sum == 3);
  double prev_even = 2.0, prev_odd = 2.0;
  for (const auto& r : rows) {
    const auto q = std::uint64_t{1} << (2 * r.m);
    if (r.n == q) {
      // prefix / 4^m == (1 + 2^(2m+1)) / (3 4^m) in integers.
      CHECK(3 * r.prefix_sum == 1 + (std::uint64_t{1} << (2 * r.m + 1)));
      CHECK(counterexample_even_numerator(r.m) == 1 + (std::uint64_t{1} << (2 * r.m + 1)));
      if (r.m > 0) CHECK(r.cesaro < prev_even);
      CHECK(r.cesaro > 2.0 / 3.0);
      prev_even = r.cesaro;
    } else {
      CHECK(r.n == 2 * q);
      // Same ones as at 4^m over twice the length: 1/3 + 1/(6 4^m).
      CHECK(6 * r.prefix_sum == 2 + 4 * q);
      if (r.m > 0) CHECK(r.cesaro < prev_odd);
      CHECK(r.cesaro > 1.0 / 3.0);
      prev_odd = r.cesaro;
    }
  }
  CHECK_THAT(rows[24].cesaro, WithinAbs(2.0 / 3.0, 1e-7));
  CHECK_THAT(rows[25].cesaro, WithinAbs(1.0 / 3.0, 1e-7));
  CHECK_THROWS_AS(counterexample_report(kMaxCounterexampleM + 1), BudgetExceeded);
}

TEST_CASE("counterexample log-Cesaro", "[counterexample]") {
  // Direct summation oracle; rows reach n = 2^25.
  double s = 0.0;
  std::vector<double> direct;
  for (std::uint64_t k = 1; k <= (1u << 25); ++k) {
    s += lambda_by_blocks(k) / static_cast<double>(k);
    if ((k & (k - 1)) == 0) direct.push_back(s / std::log(2.0 + static_cast<double>(k)));
  }
  const auto rows = counterexample_report(12);
  for (const auto& r : rows) {
    const auto j = static_cast<std::size_t>(std::log2(static_cast<double>(r.n)));
    CHECK_THAT(r.log_cesaro, WithinAbs(direct[j], 1e-10));
  }
  CHECK_THAT(rows[24].log_cesaro, WithinAbs(0.5, 0.1));
  double prev = 1.0;
  for (const auto& r : rows) {
    if (r.n != (std::uint64_t{1} << (2 * r.m)) || r.m < 2) continue;
    CHECK(std::abs(r.log_cesaro - 0.5) < prev);
    prev = std::abs(r.log_cesaro - 0.5);
  }
}

TEST_CASE("unit ball volumes", "[volume]") {
  for (double p : {1.0, 1.5, 2.0, 7.0, metric::kInfinity}) CHECK_THAT(vp_volume(1, p), WithinRel(2.0, 1e-14));
  CHECK_THAT(vp_volume(2, 2.0), WithinRel(std::numbers::pi, 1e-14));
  CHECK_THAT(vp_volume(2, 1.0), WithinRel(2.0, 1e-14));
  CHECK(vp_volume(3, metric::kInfinity) == 8.0);
  CHECK_THAT(vp_volume(3, 2.0), WithinRel(4.0 * std::numbers::pi / 3.0, 1e-14));
  CHECK_THAT(vp_volume(3, 1.0), WithinRel(8.0 / 6.0, 1e-14));
  // Lattice point count oracle: |B_R| / R^d -> V_p(d).
  const auto ladder = metric::radii_ladder_to_radius(metric::DiscreteSpace::lattice(2, 3.0), 300.0);
  CHECK_THAT(static_cast<double>(ladder.ball_counts.back()) / (300.0 * 300.0), WithinRel(vp_volume(2, 3.0), 0.01));
}

TEST_CASE("arcsine law", "[arcsine]") {
  CHECK(arcsine_ids(0.0) == 0.5);
  CHECK(arcsine_ids(2.0) == 1.0);
  CHECK(arcsine_ids(3.0) == 1.0);
  CHECK(arcsine_ids(-2.0) == 0.0);
  CHECK_THAT(arcsine_ids(1.0), WithinAbs(2.0 / 3.0, 1e-15));
  for (double E = -2.5; E < 2.5; E += 0.01) CHECK(arcsine_ids(E) <= arcsine_ids(E + 0.01));

  // Eigenvalues of the n-site path: 2 cos(pi j / (n + 1)).
  const int n = 4001;
  for (double E = -1.9; E <= 1.9; E += 0.05) {
    int count = 0;
    for (int j = 1; j <= n; ++j) count += 2.0 * std::cos(std::numbers::pi * j / (n + 1)) <= E;
    CHECK_THAT(arcsine_ids(E), WithinAbs(static_cast<double>(count) / n, 0.01));
  }
  const auto ids = dos::ids_histogram(metric::path_graph(0, 4000, 2000), ham::HamiltonianSpec{}, 2000.0, 0.0);
  CHECK_THAT(ids(1.0), WithinAbs(2.0 / 3.0, 0.01));

  CHECK_THAT(arcsine_expectation([](double) { return 1.0; }), WithinAbs(1.0, 1e-12));
  CHECK_THAT(arcsine_expectation([](double E) { return E * E; }), WithinAbs(2.0, 1e-10));
  CHECK_THAT(arcsine_expectation([](double E) { return E * E * E * E; }), WithinAbs(6.0, 1e-10));
}

TEST_CASE("two-band model", "[arcsine]") {
  const auto g = [](double E) { return std::exp(-E * E); };
  CHECK_THAT(two_band_expectation(0.0, g), WithinAbs(arcsine_expectation(g), 1e-10));
  // Moments of the periodic operator: per-site mean of E is v/2, of E^2 is 2 + v^2/2.
  CHECK_THAT(two_band_expectation(1.5, [](double E) { return E; }), WithinAbs(0.75, 1e-10));
  CHECK_THAT(two_band_expectation(1.5, [](double E) { return E * E; }), WithinAbs(2.0 + 1.125, 1e-10));
}
