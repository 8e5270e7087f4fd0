#include <catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "doslab/spectral_core.hpp"

using namespace doslab;
using namespace doslab::spectral;
using metric::DiscreteSpace;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ham::TruncatedOperator z1_adjacency(double R) {
  return ham::build_truncated(DiscreteSpace::lattice(1, 2.0), ham::HamiltonianSpec{}, R);
}

Eigen::MatrixXd random_symmetric(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) a(i, j) = a(j, i) = g(rng);
  return a;
}

std::vector<double> sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST_CASE("eigenvalue ordering", "[order]") {
  CHECK(order_eigenvalues({3, -1, 2}).values == std::vector<double>{3, 2, -1});
  CHECK(order_eigenvalues({1, -1}).values == std::vector<double>{1, -1});
  CHECK(order_eigenvalues({-1, 1}).values == std::vector<double>{1, -1});
  const auto s = order_eigenvalues({0.5, 2.0, 0.5, -2.0});
  CHECK(s.values == std::vector<double>{2.0, -2.0, 0.5, 0.5});
  CHECK(s.original_index == std::vector<std::size_t>{1, 3, 0, 2});

  Eigen::MatrixXd d = Eigen::Vector3d(3, -1, 2).asDiagonal();
  CHECK(symmetric_eigenvalues(d).values == std::vector<double>{3, 2, -1});
}

TEST_CASE("path adjacency spectrum has a closed form", "[eigh]") {
  const auto seq = symmetric_eigenvalues(z1_adjacency(2.0));
  std::vector<double> want;
  for (int j = 1; j <= 5; ++j) want.push_back(2.0 * std::cos(std::numbers::pi * j / 6.0));
  const auto got = sorted(seq.values);
  want = sorted(want);
  for (std::size_t i = 0; i < 5; ++i) CHECK_THAT(got[i], WithinAbs(want[i], 1e-12));

  const auto big = z1_adjacency(600.0);
  const auto eig = eigh(big);
  const auto n = static_cast<double>(big.size());
  for (Eigen::Index j = 0; j < eig.values.size(); ++j) {
    CHECK_THAT(eig.values[j], WithinAbs(-2.0 * std::cos(std::numbers::pi * (j + 1) / (n + 1)), 1e-11));
  }
}

TEST_CASE("eigensolver residual and orthogonality", "[eigh][property]") {
  std::mt19937_64 rng(1);
  for (Eigen::Index n : {1, 7, 60, 200}) {
    const auto a = random_symmetric(rng, n);
    const auto e = eigh(a);
    const double norm = a.norm();
    CHECK((a * e.vectors - e.vectors * e.values.asDiagonal()).norm() <= 1e-12 * norm * static_cast<double>(n));
    CHECK((e.vectors.transpose() * e.vectors - Eigen::MatrixXd::Identity(n, n)).norm() < 1e-11);
  }
  // Tridiagonal fast path against the dense route.
  ham::HamiltonianSpec s;
  s.potential.kind = ham::Potential::Kind::iid_uniform;
  s.potential.seed = 4;
  const auto op = ham::build_truncated(DiscreteSpace::lattice(1, 2.0), s, 150.0);
  const auto fast = eigh(op);
  const auto dense = eigh(op.dense());
  CHECK((fast.values - dense.values).cwiseAbs().maxCoeff() < 1e-12);
  const auto m = op.dense();
  CHECK((m * fast.vectors - fast.vectors * fast.values.asDiagonal()).norm() < 1e-11);
  CHECK((fast.vectors.transpose() * fast.vectors - Eigen::MatrixXd::Identity(m.rows(), m.rows())).norm() < 1e-10);

  Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(3, 3);
  bad(1, 1) = std::nan("");
  CHECK_THROWS_AS(eigh(bad), Error);
}

TEST_CASE("values-only and vector solves agree", "[eigh][property]") {
  // Values-only solves above 256 use the two-stage reduction; the vector route does not.
  std::mt19937_64 rng(41);
  for (Eigen::Index n : {255, 300, 700}) {
    const Eigen::MatrixXd a = random_symmetric(rng, n);
    const auto values = eigh(a, false).values;
    const auto full = eigh(a, true);
    CHECK((values - full.values).cwiseAbs().maxCoeff() <= 1e-10 * full.values.cwiseAbs().maxCoeff());
    CHECK((a * full.vectors - full.vectors * full.values.asDiagonal()).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("functional calculus", "[function]") {
  const auto H = z1_adjacency(40.0);
  const auto h = H.dense();
  CHECK((apply_function(H, ScalarFunction::identity()).dense() - h).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((apply_function(H, ScalarFunction::constant(1.0)).dense() - Eigen::MatrixXd::Identity(h.rows(), h.rows()))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
  const auto sq = apply_function(H, ScalarFunction::polynomial({0, 0, 1})).dense();
  CHECK((sq - h * h).cwiseAbs().maxCoeff() < 1e-9);
  const auto g = apply_function(H, ScalarFunction::bump(0.3, 0.5)).dense();
  CHECK(g == g.transpose());

  // Spectral mapping.
  const auto f = ScalarFunction::gaussian(0.5, 0.7);
  const auto ev = sorted(symmetric_eigenvalues(apply_function(H, f)).values);
  std::vector<double> mapped;
  for (double e : eigh(H, false).values) mapped.push_back(f(e));
  mapped = sorted(mapped);
  for (std::size_t i = 0; i < ev.size(); ++i) CHECK_THAT(ev[i], WithinAbs(mapped[i], 1e-12));

  const auto diag = function_diagonal(eigh(H), f);
  CHECK((diag - apply_function(H, f).dense().diagonal()).cwiseAbs().maxCoeff() < 1e-13);

  CHECK_THROWS_AS(apply_function(H, ScalarFunction::table({0.0, 1.0}, {1.0, 1.0})), ValidationError);
}

TEST_CASE("scalar functions", "[function]") {
  const auto b = ScalarFunction::bump(1.0, 0.5, 2.0);
  CHECK(b(1.0) == 2.0);
  CHECK(b(1.5) == 0.0);
  CHECK(b(0.4) == 0.0);
  CHECK(b(1.2) > 0.0);
  CHECK_THAT(ScalarFunction::gaussian(0.0, 2.0)(2.0), WithinRel(std::exp(-0.5), 1e-15));
  CHECK(ScalarFunction::polynomial({1, 2, 3})(2.0) == 17.0);
  const auto t = ScalarFunction::table({0, 1, 3}, {0, 2, 0});
  CHECK(t(0.5) == 1.0);
  CHECK(t(2.0) == 1.0);
  CHECK_THROWS_AS(t(3.5), ValidationError);
  CHECK_THROWS_AS(ScalarFunction::table({0, 0}, {1, 1}), ValidationError);
  CHECK_THROWS_AS(ScalarFunction::bump(0, -1), ValidationError);
}

TEST_CASE("product eigenvalues", "[product]") {
  const auto space = DiscreteSpace::lattice(1, 2.0);
  const auto ladder = metric::radii_ladder(space, 2);
  const auto w = ham::lattice_weight(space).bound_to(ladder);
  ham::TruncatedOperator id = z1_adjacency(2.0);
  id.matrix = Eigen::MatrixXd::Identity(5, 5);
  const auto seq = product_eigenvalues(id, w);
  const std::vector<double> want{1, 0.5, 0.5, 1.0 / 3, 1.0 / 3};
  for (std::size_t i = 0; i < 5; ++i) CHECK_THAT(seq.values[i], WithinAbs(want[i], 1e-15));

  id.matrix.setZero();
  for (double v : product_eigenvalues(id, w).values) CHECK(v == 0.0);

  Eigen::VectorXd neg = Eigen::VectorXd::Ones(5);
  neg[2] = 0.0;
  CHECK_THROWS_AS(product_eigenvalues(Eigen::MatrixXd::Identity(5, 5), neg), ValidationError);
}

TEST_CASE("similarity route matches the nonsymmetric product", "[product][property]") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.05, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 2 + trial % 9;
    const auto T = random_symmetric(rng, n);
    Eigen::VectorXd w(n);
    for (auto& x : w) x = u(rng);
    const auto ours = sorted(product_eigenvalues(T, w).values);
    Eigen::EigenSolver<Eigen::MatrixXd> es(T * w.asDiagonal(), false);
    std::vector<double> oracle;
    for (Eigen::Index i = 0; i < n; ++i) {
      CHECK(std::abs(es.eigenvalues()[i].imag()) < 1e-8);
      oracle.push_back(es.eigenvalues()[i].real());
    }
    oracle = sorted(oracle);
    for (std::size_t i = 0; i < ours.size(); ++i) CHECK_THAT(ours[i], WithinAbs(oracle[i], 1e-8));
  }
}

TEST_CASE("Gram product path agrees with the dense product", "[product]") {
  const auto H = z1_adjacency(120.0);
  const auto eig = eigh(H);
  const auto space = DiscreteSpace::lattice(1, 2.0);
  const auto w = ham::weights_on(H, ham::lattice_weight(space).bound_to(metric::radii_ladder(space, 120)));
  for (const auto& g : {ScalarFunction::bump(0.5, 0.4), ScalarFunction::gaussian(0.0, 0.5),
                        ScalarFunction::polynomial({0.1, -1.0})}) {
    const auto fast = function_product_eigenvalues(eig, g, w);
    const auto full = product_eigenvalues(apply_function(eig, g), w);
    REQUIRE(fast.size() == full.size());
    for (std::size_t i = 0; i < fast.size(); ++i) CHECK_THAT(fast.values[i], WithinAbs(full.values[i], 1e-11));
  }
}

TEST_CASE("log-Cesaro series", "[cesaro]") {
  const std::vector<double> zeros(1000, 0.0);
  for (double v : log_cesaro(zeros).Lambda) CHECK(v == 0.0);

  std::vector<double> harmonic(1 << 20);
  for (std::size_t k = 0; k < harmonic.size(); ++k) harmonic[k] = 1.0 / static_cast<double>(k + 1);
  const auto hs = log_cesaro(harmonic);
  CHECK(hs.n.front() == 0);
  CHECK(hs.n.back() == harmonic.size() - 1);
  // H(m) = log m + gamma + 1/(2m) - 1/(12m^2) + O(m^-4).
  const double gamma = 0.5772156649015329;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    const double m = static_cast<double>(hs.n[i] + 1);
    if (m >= 16) CHECK_THAT(hs.S[i], WithinAbs(std::log(m) + gamma + 0.5 / m - 1.0 / (12.0 * m * m), 1e-4 / m));
  }
  CHECK_THAT(hs.Lambda.back(), WithinAbs(1.0, 0.05));
  CHECK(std::abs(hs.Lambda.back() - 1.0) < std::abs(hs.Lambda[hs.find_dyadic(10)] - 1.0));
}

TEST_CASE("log-Cesaro is linear", "[cesaro][property]") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(3000), y(3000), z(3000);
    const double a = g(rng), b = g(rng);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = g(rng);
      y[i] = g(rng);
      z[i] = a * x[i] + b * y[i];
    }
    const auto sx = log_cesaro(x), sy = log_cesaro(y), sz = log_cesaro(z);
    for (std::size_t i = 0; i < sz.size(); ++i) {
      CHECK_THAT(sz.S[i], WithinAbs(a * sx.S[i] + b * sy.S[i], 1e-9));
      CHECK_THAT(sz.Lambda[i], WithinAbs(a * sx.Lambda[i] + b * sy.Lambda[i], 1e-9));
    }
  }
}

TEST_CASE("levelled sums match the expanded sequence", "[cesaro]") {
  const std::vector<double> v{0.5, 0.25, 0.125};
  const std::vector<std::uint64_t> m{1, 4, 3};
  const auto a = log_cesaro_levels(v, m);
  const auto b = log_cesaro(std::vector<double>{0.5, 0.25, 0.25, 0.25, 0.25, 0.125, 0.125, 0.125});
  CHECK(a.n == b.n);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK_THAT(a.S[i], WithinAbs(b.S[i], 1e-15));
}

TEST_CASE("slope estimates", "[slope]") {
  std::vector<double> h(1 << 21), alt(1 << 21);
  for (std::size_t k = 0; k < h.size(); ++k) {
    h[k] = 1.0 / static_cast<double>(k + 1);
    alt[k] = (k % 2 == 0 ? 1.0 : -1.0) / static_cast<double>(k + 1);
  }
  const DyadicWindow w{10, 20};
  const auto fh = slope_dixmier_estimate(log_cesaro(h), w);
  CHECK_THAT(fh.slope, WithinAbs(1.0, 1e-3));
  CHECK(fh.max_abs_residual < 1e-2);
  CHECK(std::abs(fh.residual_growth_slope) < 1e-3);
  const auto fa = slope_dixmier_estimate(log_cesaro(alt), w);
  CHECK_THAT(fa.slope, WithinAbs(0.0, 1e-3));
  CHECK(fa.n0 == 1024);
  CHECK(fa.n_max == (1u << 20));
  CHECK_THAT(fh.lambda_tail, WithinAbs(1.0, 0.05));

  CHECK_THROWS_AS(slope_dixmier_estimate(log_cesaro(h), DyadicWindow{10, 16}), ValidationError);
  CHECK_THROWS_AS(slope_dixmier_estimate(log_cesaro(h), DyadicWindow{14, 22}), Error);

  const auto dw = default_window(1 << 20);
  CHECK(dw.j_hi == 20);
  CHECK(dw.j_lo == 10);
  CHECK(default_window(1 << 30).j_lo == 15);
}

TEST_CASE("weighted Cesaro means", "[toeplitz]") {
  std::vector<double> a(100000), c(100000, 2.5), alt(100000);
  for (std::size_t k = 0; k < a.size(); ++k) {
    a[k] = 1.0 / static_cast<double>(k + 1);
    alt[k] = k % 2 == 0 ? 1.0 : -1.0;
  }
  for (double r : weighted_cesaro(a, c).ratios) CHECK_THAT(r, WithinAbs(2.5, 1e-12));
  const auto wa = weighted_cesaro(a, alt);
  CHECK(std::abs(wa.ratios.back()) < 0.1);
  CHECK(std::abs(wa.ratios.back()) < std::abs(wa.ratios[100]));
  CHECK_THAT(wa.sup_k_a, WithinAbs(1.0, 1e-12));
  CHECK_THROWS_AS(weighted_cesaro(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0, 1.0}), ValidationError);
}

TEST_CASE("Toeplitz averaging of convergent sequences", "[toeplitz][property]") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = 1 << 16;
  for (int trial = 0; trial < 100; ++trial) {
    const double L = 4.0 * u(rng) - 2.0, amp = u(rng), rate = 0.5 + u(rng);
    std::vector<double> z(n), cw(n);
    for (std::size_t k = 0; k < n; ++k) {
      z[k] = L + amp * (2.0 * u(rng) - 1.0) / std::pow(static_cast<double>(k + 1), rate);
      cw[k] = u(rng);
    }
    // Direct weighted mean with nonnegative weights; oracle for the limit is L.
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      num += cw[k] * z[k];
      den += cw[k];
    }
    CHECK_THAT(num / den, WithinAbs(L, 0.02));
    // Schedule: |ratio_n - L| <= sum_{k<=n} a_k |z_k - L| / sum_{k<=n} a_k, which tends to 0.
    std::vector<double> a(n);
    for (std::size_t k = 0; k < n; ++k) a[k] = 1.0 / static_cast<double>(k + 1);
    const auto ratios = weighted_cesaro(a, z).ratios;
    double bound_num = 0.0, bound_den = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      bound_num += a[k] * std::abs(z[k] - L);
      bound_den += a[k];
      if ((k & (k + 1)) == 0) CHECK(std::abs(ratios[k] - L) <= bound_num / bound_den + 1e-12);
    }
    CHECK(bound_num / bound_den < 0.25);
  }
}

TEST_CASE("bounded weighted deviation", "[toeplitz]") {
  const std::size_t n = 1 << 18;
  std::vector<double> a(n), flat(n, 1.5), fast(n), slow(n);
  for (std::size_t k = 0; k < n; ++k) a[k] = 1.0 / static_cast<double>(k + 1);
  for (double d : weighted_cesaro_bounded(a, flat, 1.5).deviation) CHECK(d == 0.0);
  // x chosen so the running means are sigma_k = L + e_k exactly.
  auto from_means = [&](auto e) {
    std::vector<double> x(n);
    double prev = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double s = (1.0 + e(k)) * static_cast<double>(k + 1);
      x[k] = s - prev;
      prev = s;
    }
    return x;
  };
  fast = from_means([](std::size_t k) { return 1.0 / std::pow(static_cast<double>(k + 1), 2); });
  slow = from_means([](std::size_t k) { return 1.0 / std::log(static_cast<double>(k) + 2.0); });
  const auto bf = weighted_cesaro_bounded(a, fast, 1.0);
  const auto bs = weighted_cesaro_bounded(a, slow, 1.0);
  CHECK(bf.max_deviation < 5.0);
  CHECK(std::abs(bf.growth_slope) < 0.05);
  // Deviation grows like log log n here.
  CHECK(bs.growth_slope > 0.05);
  CHECK(bs.growth_slope > 5.0 * std::abs(bf.growth_slope));
  CHECK(bs.deviation.back() > bs.deviation[bs.deviation.size() / 2]);
  CHECK_THAT(bf.hypothesis_sum, WithinAbs(1.2020569031595942, 1e-6));  // zeta(3)
  CHECK(bs.hypothesis_sum > 3.0 * bf.hypothesis_sum);
}

TEST_CASE("subsequence summation", "[subsequence]") {
  const std::size_t N = 1 << 16;
  std::vector<double> c(N, 0.7);
  std::vector<std::uint64_t> sq, dy;
  for (std::uint64_t i = 1; i * i <= N; ++i) sq.push_back(i * i);
  for (std::uint64_t i = 1; i <= N; i *= 2) dy.push_back(i);
  const auto rc = subsequence_equivalence_check(c, sq);
  CHECK(rc.max_tail_discrepancy < 1e-3);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> r(N);
  for (auto& x : r) x = 0.2 + u(rng);
  CHECK(subsequence_equivalence_check(r, sq).max_tail_discrepancy < 0.03);

  std::vector<double> blocks(N);
  for (std::size_t k = 1; k <= N; ++k) blocks[k - 1] = (static_cast<int>(std::floor(std::log2(static_cast<double>(k)))) % 2 == 0) ? 1.0 : -1.0;
  const auto rb = subsequence_equivalence_check(blocks, dy);
  CHECK(rb.max_tail_discrepancy > 0.2);
  CHECK_THAT(rb.tail_ratio_max, WithinAbs(2.0, 1e-12));
}

TEST_CASE("modulated norm profile", "[modulated]") {
  std::vector<double> t;
  for (double x = 1.0; x <= 1e6; x *= 10.0) t.push_back(x);
  const Eigen::Index n = 201;
  Eigen::VectorXd V(n);
  for (Eigen::Index i = 0; i < n; ++i) V[i] = 1.0 / (2.0 * static_cast<double>((i + 1) / 2) + 2.0);
  for (double p : modulated_norm_profile(Eigen::MatrixXd::Zero(n, n), V, t).profile) CHECK(p == 0.0);

  auto sup_for = [&](Eigen::Index m) {
    Eigen::VectorXd v(m);
    for (Eigen::Index i = 0; i < m; ++i) v[i] = 1.0 / (2.0 * static_cast<double>((i + 1) / 2) + 2.0);
    return modulated_norm_profile(Eigen::MatrixXd(v.asDiagonal()), v, t).running_sup.back();
  };
  const double s1 = sup_for(n), s2 = sup_for(2 * n - 1);
  CHECK(s1 < 1.0);
  CHECK_THAT(s2, WithinRel(s1, 0.05));

  // Direct evaluation oracle for a single t.
  const Eigen::MatrixXd T = Eigen::MatrixXd(V.asDiagonal());
  const double t0 = 100.0;
  Eigen::MatrixXd R = (Eigen::VectorXd::Ones(n) + t0 * V).cwiseInverse().asDiagonal();
  const auto prof = modulated_norm_profile(T, V, std::vector<double>{t0});
  CHECK_THAT(prof.profile[0], WithinRel(std::sqrt(t0) * (T * R).norm(), 1e-12));

  std::mt19937_64 rng(6);
  Eigen::MatrixXd B = random_symmetric(rng, n);
  B /= eigh(B, false).values.cwiseAbs().maxCoeff();
  const double sb = modulated_norm_profile(B * T, V, t).running_sup.back();
  CHECK(sb <= modulated_norm_profile(T, V, t).running_sup.back() * (1.0 + 1e-12));
}

TEST_CASE("modulated gap stays bounded", "[modulated]") {
  const auto space = DiscreteSpace::lattice(1, 2.0);
  const double R = 1500.0;
  const auto H = z1_adjacency(R);
  const auto eig = eigh(H);
  const auto ladder = metric::radii_ladder(space, static_cast<std::size_t>(R));
  const auto w = ham::weights_on(H, ham::lattice_weight(space).bound_to(ladder));
  const auto g = ScalarFunction::bump(0.0, 1.0);
  const auto seq = function_product_eigenvalues(eig, g, w);
  const auto diag = function_diagonal(eig, g);
  const auto gap = modulated_gap(seq, diag, w, DyadicWindow{3, 11});
  CHECK(gap.relative_growth <= 0.05);
  CHECK(gap.scale > 0.0);
}
