#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "doslab/spectral_core.hpp"

namespace doslab::ergodic {

using ham::HamiltonianSpec;
using metric::Coords;
using metric::DiscreteSpace;
using spectral::ScalarFunction;

struct ShiftGapReport {
  std::vector<double> gaps;  // |w(x) - w(x - n)| over B(0, R), non-increasing
  double statistic = 0.0;    // sup_k k^((d+1)/d) gaps[k-1]
  std::size_t argmax = 0;    // 1-based k attaining the sup
};

/// w(x) = (1 + |x|_2)^(-d) on the l2 ball of radius R in Z^d.
ShiftGapReport shift_weight_gap(int d, const Coords& shift, double R,
                                std::uint64_t budget = default_point_budget());
/// Same for the dimension of a lattice space; other spaces are rejected.
ShiftGapReport shift_weight_gap(const DiscreteSpace& space, const Coords& shift, double R,
                                std::uint64_t budget = default_point_budget());

struct EquivarianceRow {
  double radius = 0.0;
  std::uint64_t count = 0;
  double nu = 0.0;
  double nu_shifted = 0.0;
  double diff = 0.0;
};

struct EquivarianceReport {
  std::vector<EquivarianceRow> rows;
  double max_diff = 0.0;
  bool exactly_zero = false;
  bool decreasing = false;     // diffs strictly decreasing along the sorted radii
  double trend_exponent = 0.0;  // log-log slope of diff against radius (positive diffs only)
};

/// |nu_r(H) - nu_r(U_n H U_n*)| where the shifted operator evaluates the
/// potential at x + n. One truncation of radius max(radii) + margin is used.
EquivarianceReport equivariance_check(const DiscreteSpace& space, const HamiltonianSpec& spec, const Coords& shift,
                                      const ScalarFunction& g, std::vector<double> radii, double margin,
                                      const metric::EnumerationOptions& opts = {});

enum class Shape { cube, ball_l1, ball_l2, ball_linf, dyadic_interval };
std::string to_string(Shape s);
Shape shape_from_string(const std::string& s);

/// A finite subset of Z^d: cube/ball of `radius` around `center`, or the
/// interval [0, 2^radius) for dyadic_interval (d = 1, center ignored).
struct FolnerSet {
  Shape shape = Shape::cube;
  int dim = 1;
  Coords center;
  std::int64_t radius = 0;

  void validate() const;
  /// Lexicographically ordered points.
  std::vector<Coords> points(std::uint64_t budget = default_point_budget()) const;
  std::uint64_t size() const;
  /// radius, or 2^radius for dyadic intervals.
  std::int64_t extent() const;
};

/// F_n for n = 1, 2, ... with F_n of radius n (or [0, 2^n)).
struct FolnerSequence {
  Shape shape = Shape::cube;
  int dim = 1;

  FolnerSet at(std::size_t n) const;
};

struct FolnerRow {
  std::size_t n = 0;
  std::uint64_t size = 0;
  std::vector<double> deviation;  // |F_n sym-diff (F_n + e_j)| / |F_n| per generator
  double max_deviation = 0.0;
  double temper_ratio = 0.0;      // |U_{k<=n} (F_{n+1} - F_k)| / |F_{n+1}|
};

struct FolnerReport {
  std::vector<FolnerRow> rows;
  double C = 0.0;  // max temper ratio
  bool nested = true;
};

FolnerReport folner_tempered_check(const FolnerSequence& seq, std::size_t n_max,
                                   std::uint64_t budget = default_point_budget());

struct ErgodicOptions {
  std::size_t realizations = 100;
  std::uint64_t seed = 0;
  double margin = 20.0;
  std::size_t batches = 20;  // contiguous blocks for the per-realization SEM
  unsigned threads = 1;
};

struct SetStatistics {
  std::vector<double> averages;  // Folner average per realization
  std::vector<double> sem;       // batch-means SEM per realization
  double mean = 0.0;             // cross-realization mean
  double cross_sem = 0.0;        // cross-realization std / sqrt(count)
  std::vector<double> z;         // (average - mean) / sem
  std::size_t within_3sem = 0;
};

struct ErgodicReport {
  std::vector<FolnerSet> sets;
  std::vector<std::uint64_t> seeds;
  std::vector<SetStatistics> per_set;
  // Sets 0 and 1 compared per realization when two sets are given.
  std::vector<double> pair_diff;
  std::vector<double> pair_tolerance;  // 3 sqrt(sem_0^2 + sem_1^2)
  std::size_t pair_agree = 0;
};

/// Minimum margin for sets of maximal radius R_F: max(10, ceil(0.02 R_F)).
double minimum_margin(double R_F);

/// Folner averages of <delta_x, f(H_xi) delta_x> for iid potentials, one
/// realization per derived seed; H is truncated to the bounding box of all
/// sets enlarged by the margin.
ErgodicReport ergodic_average(const DiscreteSpace& lattice, const HamiltonianSpec& spec, const ScalarFunction& f,
                              const std::vector<FolnerSet>& sets, const ErgodicOptions& options);

}  // namespace doslab::ergodic
