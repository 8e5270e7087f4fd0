#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "doslab/hamiltonians.hpp"

namespace doslab::spectral {

using ham::TruncatedOperator;
using ham::WeightFunction;

/// Values ordered by |value| non-increasing; ties go to the larger signed
/// value, then to the smaller original index.
struct EigenSequence {
  std::vector<double> values;
  std::vector<std::size_t> original_index;
  std::string source;

  std::size_t size() const noexcept { return values.size(); }
};

EigenSequence order_eigenvalues(std::vector<double> values, std::string source = {});

/// Eigenvalues in ascending order with orthonormal eigenvectors as columns.
struct EigenDecomposition {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;  // empty when only values were requested
};

/// Dense symmetric eigensolve (LAPACK dsyevd). Reads the lower triangle.
EigenDecomposition eigh(const Eigen::MatrixXd& a, bool with_vectors = true);

EigenDecomposition eigh(const TruncatedOperator& op, bool with_vectors = true);

EigenSequence symmetric_eigenvalues(const TruncatedOperator& op);
EigenSequence symmetric_eigenvalues(const Eigen::MatrixXd& a, std::string source = {});

/// Scalar function descriptor applied through the spectral theorem.
struct ScalarFunction {
  enum class Kind { bump, polynomial, gaussian, table };
  Kind kind = Kind::polynomial;
  double center = 0.0;
  double width = 1.0;                // bump half-width or Gaussian sigma
  double amplitude = 1.0;            // bump and Gaussian height
  std::vector<double> coefficients;  // polynomial, constant term first
  std::vector<double> xs, ys;        // table, linear interpolation on [xs.front(), xs.back()]

  static ScalarFunction bump(double center, double half_width, double amplitude = 1.0);
  static ScalarFunction gaussian(double center, double sigma, double amplitude = 1.0);
  static ScalarFunction polynomial(std::vector<double> coefficients);
  static ScalarFunction constant(double c) { return polynomial({c}); }
  static ScalarFunction identity() { return polynomial({0.0, 1.0}); }
  static ScalarFunction table(std::vector<double> xs, std::vector<double> ys);

  /// Throws ValidationError outside the domain of a table.
  double operator()(double t) const;
  void validate() const;
  std::string describe() const;
};

std::string to_string(ScalarFunction::Kind k);

/// g(H) = U g(Lambda) U^T, symmetrized.
TruncatedOperator apply_function(const TruncatedOperator& H, const ScalarFunction& g);
Eigen::MatrixXd apply_function(const EigenDecomposition& eig, const ScalarFunction& g);

/// Diagonal of g(H) from an eigendecomposition: sum_j U_ij^2 g(E_j).
Eigen::VectorXd function_diagonal(const EigenDecomposition& eig, const ScalarFunction& g);

/// Eigenvalues of T M_w via the similar symmetric matrix M_w^(1/2) T M_w^(1/2).
EigenSequence product_eigenvalues(const Eigen::MatrixXd& T, const Eigen::VectorXd& w);
EigenSequence product_eigenvalues(const TruncatedOperator& T, const WeightFunction& w);

/// Same spectrum for T = g(H) from the eigendecomposition of H. When g is
/// nonnegative on the spectrum only the support of g enters (r x r problem
/// padded with zeros); otherwise the full matrix is formed.
EigenSequence function_product_eigenvalues(const EigenDecomposition& eig, const ScalarFunction& g,
                                           const Eigen::VectorXd& w);

/// Partial sums S(n) = sum_{k<=n} value(k) and Lambda(n) = S(n) / log(2+n) on
/// the grid n = 1, 2, 4, ... plus the final index (n = 0 is included too).
struct CesaroSeries {
  std::vector<std::uint64_t> n;
  std::vector<double> S;
  std::vector<double> Lambda;

  std::size_t size() const noexcept { return n.size(); }
  /// Position of n = 2^j in the grid, or npos.
  std::size_t find_dyadic(unsigned j) const;
};

CesaroSeries log_cesaro(std::span<const double> values);
CesaroSeries log_cesaro(const EigenSequence& seq);

/// Values value_l repeated multiplicity_l times (in the given order), summed
/// without materializing the sequence.
CesaroSeries log_cesaro_levels(std::span<const double> values, std::span<const std::uint64_t> multiplicity);

struct DyadicWindow {
  unsigned j_lo = 0;
  unsigned j_hi = 0;
  std::size_t points() const noexcept { return j_hi >= j_lo ? j_hi - j_lo + 1 : 0; }
};

inline constexpr unsigned kMinWindowPoints = 8;

/// j_hi = floor(log2 n_max), j_lo = max(0, min(j_hi - 7, j_hi / 2)).
DyadicWindow default_window(std::uint64_t n_max);

struct SlopeFit {
  DyadicWindow window;
  std::uint64_t n0 = 0;
  std::uint64_t n_max = 0;
  double slope = 0.0;  // Dixmier estimate
  double intercept = 0.0;
  std::vector<std::uint64_t> n;
  std::vector<double> S;
  std::vector<double> Lambda;
  std::vector<double> residuals;  // S(n) - slope log(2+n) - intercept
  double max_abs_residual = 0.0;
  double residual_growth_slope = 0.0;  // fit of |r_n| against log(2+n)
  double scale = 0.0;                  // max |S(n)| / log(2+n) over the window
  double lambda_tail = 0.0;            // Lambda at n_max
};

SlopeFit slope_dixmier_estimate(const CesaroSeries& series, DyadicWindow window);

struct WeightedCesaro {
  std::vector<double> ratios;  // sum_{k<=n} a_k x_k / sum_{k<=n} a_k
  double sup_k_a = 0.0;        // max (k+1) a_k over the input
};

/// Requires a positive and non-increasing.
WeightedCesaro weighted_cesaro(std::span<const double> a, std::span<const double> x);

struct BoundedDeviation {
  std::vector<std::uint64_t> n;   // dyadic grid plus final index
  std::vector<double> deviation;  // |sum_{k<=n} a_k x_k - L sum_{k<=n} a_k|
  double max_deviation = 0.0;
  double growth_slope = 0.0;      // fit of deviation against log(2+n) over the upper half of the grid
  double hypothesis_sum = 0.0;    // sum a_k |sigma_k - L|, sigma = running means of x
};

BoundedDeviation weighted_cesaro_bounded(std::span<const double> a, std::span<const double> x, double L);

struct ModulatedProfile {
  std::vector<double> t;
  std::vector<double> profile;      // t^(1/2) ||T (1 + t M_V)^(-1)||_HS
  std::vector<double> running_sup;
};

ModulatedProfile modulated_norm_profile(const Eigen::MatrixXd& T, const Eigen::VectorXd& V,
                                        std::span<const double> t_grid);

struct SubsequenceComparison {
  std::vector<double> full_means;  // b_n = (1/(1+n)) sum_{k=1}^n x_k, n = 1..N
  std::vector<double> sub_means;   // b_{k_i}
  double max_tail_discrepancy = 0.0;  // max |b_n - b_{k_{i_n}}| over n in [N/2, N]
  double tail_ratio_max = 0.0;        // max k_{i+1}/k_i over the tail of the index list
  bool unbounded_warning = false;
};

/// values[k-1] holds x_k; indices are 1-based and strictly increasing.
SubsequenceComparison subsequence_equivalence_check(std::span<const double> values,
                                                    std::span<const std::uint64_t> indices);

struct ModulatedGap {
  std::vector<std::uint64_t> n;
  std::vector<double> gap;  // |sum_{k<=n} lambda(k, T W) - sum_{k<=n} diag_k w_k|
  double growth_slope = 0.0;  // fit of gap against log(2+n) over the window
  double scale = 0.0;         // max |S(n)| / log(2+n) of the eigenvalue sums
  double relative_growth = 0.0;
};

/// Gap between eigenvalue partial sums of T W and the diagonal partial sums in
/// the basis ordered by w (ties by index), on the dyadic window.
ModulatedGap modulated_gap(const EigenSequence& product, const Eigen::VectorXd& diag,
                           const Eigen::VectorXd& w, DyadicWindow window);

/// Least-squares slope and intercept of y against x.
std::pair<double, double> linear_fit(std::span<const double> x, std::span<const double> y);

}  // namespace doslab::spectral
