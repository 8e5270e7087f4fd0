#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace doslab::ref {

/// Block sequence in {0,1}: lambda_1 = 1, zero on [4^m + 1, 2*4^m] and one on
/// [2*4^m + 1, 4^(m+1)] for m >= 0.
int counterexample_lambda(std::uint64_t n);

/// Exact prefix sum of lambda_1..lambda_n.
std::uint64_t counterexample_prefix_sum(std::uint64_t n);

/// Sum_{k<=n} lambda_k / k, summed block by block.
double counterexample_weighted_sum(std::uint64_t n);

struct CounterexampleRow {
  int m = 0;
  std::uint64_t n = 0;            // 2^(2m) or 2^(2m+1)
  std::uint64_t prefix_sum = 0;   // exact sum of lambda_k, k <= n
  double cesaro = 0.0;            // prefix_sum / n
  double log_cesaro = 0.0;        // sum lambda_k/k divided by log(2+n)
};

inline constexpr int kMaxCounterexampleM = 14;

/// Rows for n = 4^m and n = 2*4^m, m = 0..m_max (in that order).
std::vector<CounterexampleRow> counterexample_report(int m_max);

/// Closed form numerator/denominator of the Cesaro value at n = 4^m:
/// (1 + 2^(2m+1)) / (3 * 4^m).
std::uint64_t counterexample_even_numerator(int m);

/// Volume of the unit l_p ball in R^d; p = infinity gives 2^d.
double vp_volume(int d, double p);

/// Integrated density of states of the one-dimensional adjacency operator.
double arcsine_ids(double E);

/// Integral of g against the arcsine density 1/(pi sqrt(4 - E^2)) on (-2, 2).
double arcsine_expectation(const std::function<double(double)>& g, int nodes = 8192);

/// Per-site spectral average of g for the adjacency operator on Z with the
/// alternating potential (0, v): bands v/2 +- sqrt(v^2/4 + 4 cos^2(q/2)).
double two_band_expectation(double v, const std::function<double(double)>& g, int nodes = 8192);

}  // namespace doslab::ref
