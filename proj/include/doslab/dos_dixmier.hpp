#pragma once

#include <optional>
#include <string>
#include <vector>

#include "doslab/spectral_core.hpp"

namespace doslab::dos {

using ham::HamiltonianSpec;
using ham::TruncatedOperator;
using ham::WeightFunction;
using metric::DiscreteSpace;
using metric::RadiiLadder;
using spectral::DyadicWindow;
using spectral::ScalarFunction;
using spectral::SlopeFit;

struct DosRow {
  std::size_t k = 0;
  double radius = 0.0;
  std::uint64_t count = 0;
  double value = 0.0;  // Tr(g(H) chi_B) / |B|
};

struct DosEstimate {
  std::vector<DosRow> rows;
  double tail_mean = 0.0;    // mean over the last quarter of rows
  double tail_spread = 0.0;  // max - min over the same rows
  double margin = 0.0;
  double outer_radius = 0.0;
  std::vector<std::string> warnings;
};

/// DOS values for ladder levels 1..k_count from the diagonal of g(H) on a
/// truncation whose point levels follow `ladder`.
DosEstimate dos_from_diagonal(const TruncatedOperator& op, const Eigen::VectorXd& gdiag,
                              const RadiiLadder& ladder, std::size_t k_count, double margin);

/// Builds H on B(x0, r_K + margin) and evaluates the DOS approximant at the
/// radii of `ladder`.
DosEstimate dos_approximant(const DiscreteSpace& space, const HamiltonianSpec& spec,
                            const ScalarFunction& g, const RadiiLadder& ladder, double margin,
                            const metric::EnumerationOptions& opts = {});

/// DOS values over the superlevel sets {x : w(x) >= eps_n}, one per distinct
/// weight value (descending). Entry 0 is the base point alone.
std::vector<double> dos_along_weight_levels(const TruncatedOperator& op, const Eigen::VectorXd& gdiag,
                                            const Eigen::VectorXd& weights);

struct IdsTable {
  std::vector<double> energies;   // distinct eigenvalues, ascending
  std::vector<double> fractions;  // cumulative fraction at each energy
  std::size_t ball_size = 0;
  double margin = 0.0;

  /// Fraction of spectral weight at energies <= E.
  double operator()(double E) const;
};

/// margin = 0: eigenvalue counting on B(x0, r). margin > 0: cumulative local
/// trace sum_{x in B(r)} <delta_x, chi_(-inf,E](H) delta_x> / |B(r)| with H on
/// B(x0, r + margin).
IdsTable ids_histogram(const DiscreteSpace& space, const HamiltonianSpec& spec, double r, double margin,
                       const metric::EnumerationOptions& opts = {});

enum class Measurability { strong, weak, not_established };
std::string to_string(Measurability m);

struct MeasurabilityThresholds {
  double residual_growth = 0.05;  // strong if growth slope / scale <= this
  double slope_drift = 0.08;      // not established above this half-window slope difference / scale
  double lambda_spread = 0.25;    // not established above this spread of (S - b)/log(2+n) / scale
};

struct MeasurabilityReport {
  Measurability verdict = Measurability::not_established;
  double relative_residual_growth = 0.0;
  double slope_drift = 0.0;
  double lambda_spread = 0.0;
  double lambda_limit = 0.0;  // slope, the Lambda limit under measurability
  MeasurabilityThresholds thresholds;
};

MeasurabilityReport measurability_diagnostic(const SlopeFit& fit, const MeasurabilityThresholds& t = {});

struct DixmierEstimate {
  SlopeFit fit;
  MeasurabilityReport measurability;
  std::uint64_t n_max = 0;  // eigenvalues above ||T|| * w_min
  double T_norm = 0.0;
  double w_min = 0.0;
  std::size_t dimension = 0;
};

/// Window for a truncated product: n_max = #{k : |lambda(k)| >= ||T|| w_min}.
DyadicWindow truncation_window(const spectral::EigenSequence& seq, double T_norm, double w_min);

DixmierEstimate dixmier_lhs(const DiscreteSpace& space, const HamiltonianSpec& spec, const ScalarFunction& g,
                            const WeightFunction& w, double R_outer,
                            std::optional<DyadicWindow> window = std::nullopt,
                            const metric::EnumerationOptions& opts = {});

/// Slope fit of the eigenvalue sums of M_w: w_k with multiplicity S_k.
SlopeFit weight_dixmier_trace(const WeightFunction& w, const RadiiLadder& ladder,
                              std::optional<DyadicWindow> window = std::nullopt);

struct TheoremOptions {
  double c_tail_fraction = 0.2;
  double c_threshold = 0.05;
  double dos_spread_limit = 0.05;  // relative to max(|tail mean|, gap_floor)
  double gap_floor = 1e-3;
  std::optional<DyadicWindow> window;
  MeasurabilityThresholds measurability;
};

struct TheoremCheck {
  double lhs = 0.0;           // Dixmier slope of g(H) M_w
  double weight_trace = 0.0;  // Dixmier slope of M_w on the same window
  double rhs_limit = 0.0;     // DOS tail mean
  double product = 0.0;
  double relative_gap = 0.0;
  double gap_floor = 1e-3;
  double R_outer = 0.0;
  double margin = 0.0;
  std::size_t dimension = 0;
  DixmierEstimate lhs_estimate;
  SlopeFit weight_fit;
  DosEstimate dos;
  metric::CRatioReport condition_c;
  spectral::ModulatedGap modulated;
  ham::WeakL1Report weak_l1;
};

/// Refuses (ValidationError) when condition (C) fails on the ladder or the
/// DOS tail spread exceeds the divergence threshold.
TheoremCheck main_theorem_check(const DiscreteSpace& space, const HamiltonianSpec& spec, const ScalarFunction& g,
                                const WeightFunction& w, double R_outer, double margin,
                                const TheoremOptions& options = {},
                                const metric::EnumerationOptions& opts = {});

}  // namespace doslab::dos
