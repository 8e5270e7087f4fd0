#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "doslab/metric_spaces.hpp"

namespace doslab::ham {

using metric::Coords;
using metric::DiscreteSpace;
using metric::Point;
using metric::RadiiLadder;

struct Hopping {
  enum class Kind { none, adjacency, laplacian, kernel };
  Kind kind = Kind::adjacency;
  // Finite-range lattice kernel: amplitude[i] couples x and x + offsets[i].
  std::vector<Coords> offsets;
  std::vector<double> amplitudes;

  void validate() const;
};

struct Potential {
  enum class Kind { zero, periodic, iid_uniform, table, counterexample };
  Kind kind = Kind::zero;
  std::vector<std::int64_t> period;  // periodic: one period per lattice axis
  std::vector<double> values;        // periodic: row-major over the period box
  double a = 0.0;                    // iid_uniform on [a, b]
  double b = 1.0;
  std::uint64_t seed = 0;
  std::vector<std::pair<Point, double>> table;  // table: missing points are 0
  // The operator sees V(x + shift); lattice spaces only.
  Coords shift;

  void validate() const;
};

std::string to_string(Hopping::Kind k);
std::string to_string(Potential::Kind k);

struct HamiltonianSpec {
  Hopping hopping;
  Potential potential;

  void validate() const { hopping.validate(); potential.validate(); }
  /// Same operator with the potential evaluated at x + n (U_n H U_n* for
  /// translation invariant hopping).
  HamiltonianSpec shifted(const Coords& n) const;
};

/// Site key used for random fields.
std::uint64_t site_key(const Point& x);

double potential_value(const Potential& v, const Point& x);

/// Dense symmetric matrix of H restricted to an ordered point list.
struct TruncatedOperator {
  std::vector<Point> points;
  std::vector<double> distances;
  std::vector<std::uint32_t> levels;  // ladder level of each point
  double radius = 0.0;
  // When diagonal_only is set, `diag` holds the operator and `matrix` is empty.
  bool diagonal_only = false;
  Eigen::VectorXd diag;
  Eigen::MatrixXd matrix;

  std::size_t size() const noexcept { return points.size(); }
  Eigen::MatrixXd dense() const;
};

/// H on B(x0, R_outer) with plain truncation.
TruncatedOperator build_truncated(const DiscreteSpace& space, const HamiltonianSpec& spec,
                                  double R_outer, const metric::EnumerationOptions& opts = {});

/// H on an explicit finite list of lattice or graph points (distances and
/// levels are left empty).
TruncatedOperator build_on_points(const DiscreteSpace& space, const HamiltonianSpec& spec,
                                  std::vector<Point> points);

struct WeightFunction {
  enum class Provenance { default_weight, lattice_power, custom };
  Provenance provenance = Provenance::custom;
  int d = 0;         // lattice_power only
  double p = 2.0;    // lattice_power only
  // w at ladder level k (level 0 is the base point); strictly decreasing.
  std::vector<double> profile;

  double at_level(std::size_t level) const;
  /// Closed form (1 + r)^(-d) for lattice_power weights.
  double at_distance(double r) const;
  /// Fills the profile from ladder radii (lattice_power only).
  WeightFunction bound_to(const RadiiLadder& ladder) const;
  void validate() const;
};

std::string to_string(WeightFunction::Provenance p);

/// w_k = 1 / (1 + N_k), with N_0 = 1 so the base point gets 1/2.
WeightFunction default_weight(const DiscreteSpace& space, const RadiiLadder& ladder);

/// w(x) = (1 + |x|_p)^(-d); the profile is filled by bound_to().
WeightFunction lattice_weight(const DiscreteSpace& space);
WeightFunction lattice_weight(int d, double p);

/// Validated custom profile.
WeightFunction custom_weight(std::vector<double> profile);

struct WeakL1Row {
  std::size_t level = 0;
  double w = 0.0;
  std::uint64_t count = 0;  // |{x : w(x) >= w_level}| = N_level
  double product = 0.0;
};

struct WeakL1Report {
  double C_estimate = 0.0;
  std::vector<WeakL1Row> rows;
  // Slope of log(w_k N_k) against log N_k over the tail half of the ladder;
  // a clearly positive value means the products keep growing.
  double tail_growth_exponent = 0.0;
  bool nonmembership_trend = false;
};

inline constexpr double kWeakL1GrowthFlag = 0.05;

WeakL1Report weak_l1_bound(const WeightFunction& w, const RadiiLadder& ladder);

/// Weight of every point of a truncation, via its ladder level.
Eigen::VectorXd weights_on(const TruncatedOperator& op, const WeightFunction& w);

}  // namespace doslab::ham
