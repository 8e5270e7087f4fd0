#include "doslab/reference_models.hpp"

#include "doslab/error.hpp"

#include <bit>
#include <cmath>
#include <numbers>

namespace doslab::ref {

namespace {

// H(n) = sum_{k<=n} 1/k; asymptotic expansion past n = 64.
long double harmonic(std::uint64_t n) {
  if (n <= 64) {
    long double s = 0.0L;
    for (std::uint64_t k = n; k >= 1; --k) s += 1.0L / static_cast<long double>(k);
    return s;
  }
  const long double x = static_cast<long double>(n);
  const long double x2 = x * x;
  constexpr long double gamma = 0.57721566490153286060651209008240243L;
  return std::log(x) + gamma + 1.0L / (2.0L * x) - 1.0L / (12.0L * x2) + 1.0L / (120.0L * x2 * x2) -
         1.0L / (252.0L * x2 * x2 * x2);
}

std::uint64_t pow4(int m) { return std::uint64_t{1} << (2 * m); }

}  // namespace

int counterexample_lambda(std::uint64_t n) {
  if (n == 0) throw ValidationError("counterexample sequence is indexed from n = 1");
  if (n == 1) return 1;
  // n - 1 in [4^m, 2*4^m) has odd bit width 2m+1 (zero block), otherwise even.
  return std::bit_width(n - 1) % 2 == 1 ? 0 : 1;
}

std::uint64_t counterexample_prefix_sum(std::uint64_t n) {
  if (n == 0) return 0;
  std::uint64_t sum = 1;
  for (int m = 1;; ++m) {
    const std::uint64_t lo = 2 * pow4(m - 1) + 1;
    const std::uint64_t hi = pow4(m);
    if (lo > n) break;
    sum += std::min(hi, n) - lo + 1;
    if (hi >= n) break;
  }
  return sum;
}

double counterexample_weighted_sum(std::uint64_t n) {
  if (n == 0) return 0.0;
  long double sum = 1.0L;
  for (int m = 1;; ++m) {
    const std::uint64_t lo = 2 * pow4(m - 1) + 1;
    const std::uint64_t hi = pow4(m);
    if (lo > n) break;
    sum += harmonic(std::min(hi, n)) - harmonic(lo - 1);
    if (hi >= n) break;
  }
  return static_cast<double>(sum);
}

std::uint64_t counterexample_even_numerator(int m) { return 1 + (std::uint64_t{1} << (2 * m + 1)); }

std::vector<CounterexampleRow> counterexample_report(int m_max) {
  if (m_max < 0) throw ValidationError("m_max must be >= 0");
  if (m_max > kMaxCounterexampleM) {
    throw BudgetExceeded("counterexample report up to m = " + std::to_string(m_max),
                         std::uint64_t{1} << (2 * m_max + 1),
                         std::uint64_t{1} << (2 * kMaxCounterexampleM + 1));
  }
  std::vector<CounterexampleRow> rows;
  for (int m = 0; m <= m_max; ++m) {
    for (std::uint64_t n : {pow4(m), 2 * pow4(m)}) {
      CounterexampleRow r;
      r.m = m;
      r.n = n;
      r.prefix_sum = counterexample_prefix_sum(n);
      r.cesaro = static_cast<double>(r.prefix_sum) / static_cast<double>(n);
      r.log_cesaro = counterexample_weighted_sum(n) / std::log(2.0 + static_cast<double>(n));
      rows.push_back(r);
    }
  }
  return rows;
}

double vp_volume(int d, double p) {
  if (d < 1) throw ValidationError("dimension must be >= 1");
  if (!(p >= 1.0)) throw ValidationError("p must lie in [1, inf]");
  if (std::isinf(p)) return std::ldexp(1.0, d);
  return std::exp(d * std::log(2.0) + d * std::lgamma(1.0 + 1.0 / p) - std::lgamma(1.0 + d / p));
}

double arcsine_ids(double E) {
  if (E <= -2.0) return 0.0;
  if (E >= 2.0) return 1.0;
  return 0.5 + std::asin(E / 2.0) / std::numbers::pi;
}

double arcsine_expectation(const std::function<double(double)>& g, int nodes) {
  // E = 2 cos(theta) turns the arcsine density into d(theta)/pi on (0, pi).
  long double s = 0.0L;
  for (int i = 0; i < nodes; ++i) {
    const double theta = std::numbers::pi * (i + 0.5) / nodes;
    s += g(2.0 * std::cos(theta));
  }
  return static_cast<double>(s / nodes);
}

double two_band_expectation(double v, const std::function<double(double)>& g, int nodes) {
  long double s = 0.0L;
  for (int i = 0; i < nodes; ++i) {
    const double q = 2.0 * std::numbers::pi * (i + 0.5) / nodes;
    const double c = std::cos(q / 2.0);
    const double root = std::sqrt(v * v / 4.0 + 4.0 * c * c);
    s += g(v / 2.0 + root) + g(v / 2.0 - root);
  }
  return static_cast<double>(s / (2.0L * nodes));
}

}  // namespace doslab::ref
