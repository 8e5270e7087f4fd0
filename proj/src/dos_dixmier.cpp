#include "doslab/dos_dixmier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace doslab::dos {

namespace {

void tail_statistics(DosEstimate& est) {
  if (est.rows.empty()) return;
  const std::size_t n = est.rows.size();
  const std::size_t len = std::max<std::size_t>(1, (n + 3) / 4);
  double lo = est.rows[n - len].value, hi = lo, sum = 0.0;
  for (std::size_t i = n - len; i < n; ++i) {
    lo = std::min(lo, est.rows[i].value);
    hi = std::max(hi, est.rows[i].value);
    sum += est.rows[i].value;
  }
  est.tail_mean = sum / static_cast<double>(len);
  est.tail_spread = hi - lo;
}

Eigen::VectorXd g_of_diagonal(const TruncatedOperator& op, const ScalarFunction& g) {
  Eigen::VectorXd out(op.diag.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = g(op.diag(i));
  return out;
}

double inner_limit(double r) { return r * (1.0 + 1e-9) + 1e-12; }

}  // namespace

DosEstimate dos_from_diagonal(const TruncatedOperator& op, const Eigen::VectorXd& gdiag,
                              const RadiiLadder& ladder, std::size_t k_count, double margin) {
  if (k_count > ladder.size()) throw ValidationError("requested more radii than the ladder holds");
  if (op.levels.size() != op.size() || gdiag.size() != static_cast<Eigen::Index>(op.size())) {
    throw ValidationError("operator and diagonal do not match");
  }
  std::size_t max_level = 0;
  for (auto l : op.levels) max_level = std::max<std::size_t>(max_level, l);
  std::vector<long double> level_sum(std::max(max_level, k_count) + 1, 0.0L);
  std::vector<std::uint64_t> level_count(level_sum.size(), 0);
  for (std::size_t i = 0; i < op.size(); ++i) {
    level_sum[op.levels[i]] += gdiag(static_cast<Eigen::Index>(i));
    ++level_count[op.levels[i]];
  }
  DosEstimate est;
  est.margin = margin;
  est.outer_radius = op.radius;
  if (margin <= 0.0) {
    est.warnings.push_back("margin 0: DOS values include truncation boundary effects");
  }
  long double acc = level_sum[0];
  std::uint64_t count = level_count[0];
  for (std::size_t k = 1; k <= k_count; ++k) {
    acc += level_sum[k];
    count += level_count[k];
    if (count != ladder.ball_counts[k - 1]) {
      throw ValidationError("ball count at level " + std::to_string(k) + " does not match the ladder");
    }
    est.rows.push_back({k, ladder.radii[k - 1], count, static_cast<double>(acc / static_cast<long double>(count))});
  }
  tail_statistics(est);
  return est;
}

DosEstimate dos_approximant(const DiscreteSpace& space, const HamiltonianSpec& spec, const ScalarFunction& g,
                            const RadiiLadder& ladder, double margin, const metric::EnumerationOptions& opts) {
  if (!(margin >= 0.0)) throw ValidationError("margin must be nonnegative");
  if (ladder.size() == 0) throw ValidationError("empty ladder");
  const double outer = ladder.radii.back() + margin;
  const auto op = ham::build_truncated(space, spec, outer, opts);
  const RadiiLadder full = metric::radii_ladder_to_radius(space, outer, opts);
  Eigen::VectorXd gdiag = op.diagonal_only ? g_of_diagonal(op, g)
                                           : spectral::function_diagonal(spectral::eigh(op, true), g);
  return dos_from_diagonal(op, gdiag, full, ladder.size(), margin);
}

double IdsTable::operator()(double E) const {
  const auto it = std::upper_bound(energies.begin(), energies.end(), E);
  if (it == energies.begin()) return 0.0;
  return fractions[static_cast<std::size_t>(it - energies.begin()) - 1];
}

IdsTable ids_histogram(const DiscreteSpace& space, const HamiltonianSpec& spec, double r, double margin,
                       const metric::EnumerationOptions& opts) {
  if (!(margin >= 0.0)) throw ValidationError("margin must be nonnegative");
  const auto op = ham::build_truncated(space, spec, r + margin, opts);
  std::vector<std::size_t> inner;
  for (std::size_t i = 0; i < op.size(); ++i) {
    if (op.distances[i] <= inner_limit(r)) inner.push_back(i);
  }
  IdsTable table;
  table.ball_size = inner.size();
  table.margin = margin;
  std::vector<std::pair<double, double>> mass;  // (energy, weight)
  const double inv = 1.0 / static_cast<double>(inner.size());
  if (op.diagonal_only) {
    for (auto i : inner) mass.emplace_back(op.diag(static_cast<Eigen::Index>(i)), inv);
  } else if (margin == 0.0) {
    const auto eig = spectral::eigh(op, false);
    for (Eigen::Index j = 0; j < eig.values.size(); ++j) mass.emplace_back(eig.values(j), inv);
  } else {
    const auto eig = spectral::eigh(op, true);
    for (Eigen::Index j = 0; j < eig.values.size(); ++j) {
      double m = 0.0;
      for (auto i : inner) m += eig.vectors(static_cast<Eigen::Index>(i), j) * eig.vectors(static_cast<Eigen::Index>(i), j);
      mass.emplace_back(eig.values(j), m * inv);
    }
  }
  std::sort(mass.begin(), mass.end());
  long double acc = 0.0L;
  for (const auto& [E, m] : mass) {
    acc += m;
    if (!table.energies.empty() && table.energies.back() == E) {
      table.fractions.back() = static_cast<double>(acc);
    } else {
      table.energies.push_back(E);
      table.fractions.push_back(static_cast<double>(acc));
    }
  }
  return table;
}

std::vector<double> dos_along_weight_levels(const TruncatedOperator& op, const Eigen::VectorXd& gdiag,
                                            const Eigen::VectorXd& weights) {
  std::vector<std::size_t> order(op.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return weights(a) > weights(b); });
  std::vector<double> out;
  long double acc = 0.0L;
  for (std::size_t i = 0; i < order.size(); ++i) {
    acc += gdiag(static_cast<Eigen::Index>(order[i]));
    const bool level_end = i + 1 == order.size() || weights(order[i + 1]) != weights(order[i]);
    if (level_end) out.push_back(static_cast<double>(acc / static_cast<long double>(i + 1)));
  }
  return out;
}

std::string to_string(Measurability m) {
  switch (m) {
    case Measurability::strong: return "strong-measurable";
    case Measurability::weak: return "weak-measurable";
    case Measurability::not_established: return "not-established";
  }
  return "unknown";
}

MeasurabilityReport measurability_diagnostic(const SlopeFit& fit, const MeasurabilityThresholds& t) {
  MeasurabilityReport rep;
  rep.thresholds = t;
  rep.lambda_limit = fit.slope;
  const double scale = fit.scale > 0.0 ? fit.scale : 1.0;
  if (fit.scale == 0.0) {
    // Identically vanishing partial sums.
    rep.verdict = Measurability::strong;
    return rep;
  }
  rep.relative_residual_growth = fit.residual_growth_slope / scale;
  std::vector<double> x(fit.n.size());
  double lo = 0.0, hi = 0.0;
  for (std::size_t i = 0; i < fit.n.size(); ++i) {
    x[i] = std::log(2.0 + static_cast<double>(fit.n[i]));
    const double corrected = (fit.S[i] - fit.intercept) / x[i];
    lo = i == 0 ? corrected : std::min(lo, corrected);
    hi = i == 0 ? corrected : std::max(hi, corrected);
  }
  rep.lambda_spread = (hi - lo) / scale;
  const std::size_t half = fit.n.size() / 2;
  const std::span<const double> xs(x), ys(fit.S);
  const double first = spectral::linear_fit(xs.subspan(0, half + 1), ys.subspan(0, half + 1)).first;
  const double second = spectral::linear_fit(xs.subspan(half), ys.subspan(half)).first;
  rep.slope_drift = std::fabs(first - second) / scale;
  if (rep.slope_drift > t.slope_drift || rep.lambda_spread > t.lambda_spread) {
    rep.verdict = Measurability::not_established;
  } else if (rep.relative_residual_growth <= t.residual_growth) {
    rep.verdict = Measurability::strong;
  } else {
    rep.verdict = Measurability::weak;
  }
  return rep;
}

DyadicWindow truncation_window(const spectral::EigenSequence& seq, double T_norm, double w_min) {
  const double cut = T_norm * w_min;
  std::uint64_t n_max = 0;
  for (double v : seq.values) {
    if (std::fabs(v) >= cut && std::fabs(v) > 0.0) ++n_max;
  }
  if (n_max < 2) throw ValidationError("too few eigenvalues above the truncation level ||T|| w_min");
  // n_max counts terms; the last usable index is n_max - 1.
  return spectral::default_window(n_max - 1);
}

namespace {

struct LhsParts {
  DixmierEstimate estimate;
  spectral::EigenSequence product;
  Eigen::VectorXd gdiag;
  Eigen::VectorXd weights;
};

LhsParts compute_lhs(const TruncatedOperator& op, const ScalarFunction& g, const WeightFunction& w,
                     std::optional<DyadicWindow> window, const MeasurabilityThresholds& thresholds) {
  LhsParts parts;
  parts.weights = ham::weights_on(op, w);
  double T_norm = 0.0;
  if (op.diagonal_only) {
    parts.gdiag = g_of_diagonal(op, g);
    std::vector<double> v(op.size());
    for (std::size_t i = 0; i < op.size(); ++i) {
      v[i] = parts.gdiag(static_cast<Eigen::Index>(i)) * parts.weights(static_cast<Eigen::Index>(i));
    }
    T_norm = parts.gdiag.cwiseAbs().maxCoeff();
    parts.product = spectral::order_eigenvalues(std::move(v), "diagonal product");
  } else {
    const auto eig = spectral::eigh(op, true);
    for (Eigen::Index j = 0; j < eig.values.size(); ++j) T_norm = std::max(T_norm, std::fabs(g(eig.values(j))));
    parts.gdiag = spectral::function_diagonal(eig, g);
    parts.product = spectral::function_product_eigenvalues(eig, g, parts.weights);
  }
  auto& est = parts.estimate;
  est.T_norm = T_norm;
  est.w_min = parts.weights.minCoeff();
  est.dimension = op.size();
  const DyadicWindow win = window ? *window : truncation_window(parts.product, T_norm, est.w_min);
  for (double v : parts.product.values) {
    if (std::fabs(v) >= T_norm * est.w_min && std::fabs(v) > 0.0) ++est.n_max;
  }
  est.fit = spectral::slope_dixmier_estimate(spectral::log_cesaro(parts.product), win);
  est.measurability = measurability_diagnostic(est.fit, thresholds);
  return parts;
}

ham::WeakL1Report certify_weight(const WeightFunction& bound, const RadiiLadder& ladder) {
  auto rep = ham::weak_l1_bound(bound, ladder);
  if (rep.nonmembership_trend) {
    throw ValidationError("weight is not certified weak-l1 on the ball: tail growth exponent " +
                          std::to_string(rep.tail_growth_exponent));
  }
  return rep;
}

}  // namespace

DixmierEstimate dixmier_lhs(const DiscreteSpace& space, const HamiltonianSpec& spec, const ScalarFunction& g,
                            const WeightFunction& w, double R_outer, std::optional<DyadicWindow> window,
                            const metric::EnumerationOptions& opts) {
  const RadiiLadder ladder = metric::radii_ladder_to_radius(space, R_outer, opts);
  const WeightFunction bound = w.bound_to(ladder);
  certify_weight(bound, ladder);
  const auto op = ham::build_truncated(space, spec, R_outer, opts);
  return compute_lhs(op, g, bound, window, {}).estimate;
}

SlopeFit weight_dixmier_trace(const WeightFunction& w, const RadiiLadder& ladder, std::optional<DyadicWindow> window) {
  if (ladder.size() == 0) throw ValidationError("empty ladder");
  const WeightFunction bound = w.bound_to(ladder);
  if (bound.profile.size() < ladder.size() + 1) throw ValidationError("weight profile does not cover the ladder");
  bound.validate();
  std::vector<double> values(bound.profile.begin(), bound.profile.begin() + static_cast<std::ptrdiff_t>(ladder.size() + 1));
  std::vector<std::uint64_t> mult(ladder.size() + 1);
  mult[0] = 1;
  for (std::size_t k = 0; k < ladder.size(); ++k) mult[k + 1] = ladder.shell_counts[k];
  const auto series = spectral::log_cesaro_levels(values, mult);
  const DyadicWindow win = window ? *window : spectral::default_window(ladder.ball_counts.back() - 1);
  return spectral::slope_dixmier_estimate(series, win);
}

TheoremCheck main_theorem_check(const DiscreteSpace& space, const HamiltonianSpec& spec, const ScalarFunction& g,
                                const WeightFunction& w, double R_outer, double margin,
                                const TheoremOptions& options, const metric::EnumerationOptions& opts) {
  if (!(margin >= 0.0) || !(margin < R_outer)) throw ValidationError("margin must lie in [0, R_outer)");
  TheoremCheck check;
  check.R_outer = R_outer;
  check.margin = margin;
  check.gap_floor = options.gap_floor;

  const RadiiLadder ladder = metric::radii_ladder_to_radius(space, R_outer, opts);
  check.condition_c = metric::condition_c_report(ladder, options.c_tail_fraction, options.c_threshold);
  if (check.condition_c.verdict == metric::Verdict::fail) {
    throw ValidationError("condition (C) fails on the ball ladder (tail ratio " +
                          std::to_string(check.condition_c.tail_ratio) + "); the identity does not apply");
  }
  const WeightFunction bound = w.bound_to(ladder);
  check.weak_l1 = certify_weight(bound, ladder);

  const auto op = ham::build_truncated(space, spec, R_outer, opts);
  check.dimension = op.size();
  auto parts = compute_lhs(op, g, bound, options.window, options.measurability);
  check.lhs_estimate = parts.estimate;
  check.lhs = parts.estimate.fit.slope;
  const DyadicWindow win = parts.estimate.fit.window;

  // Weight trace over the same ball and window.
  std::vector<double> wsorted(parts.weights.data(), parts.weights.data() + parts.weights.size());
  std::sort(wsorted.begin(), wsorted.end(), std::greater<>());
  check.weight_fit = spectral::slope_dixmier_estimate(spectral::log_cesaro(std::span<const double>(wsorted)), win);
  check.weight_trace = check.weight_fit.slope;

  // DOS along the radii that keep the full margin inside the ball.
  std::size_t k_inner = 0;
  while (k_inner < ladder.size() && ladder.radii[k_inner] <= inner_limit(R_outer - margin)) ++k_inner;
  if (k_inner == 0) throw ValidationError("no ladder radius fits inside R_outer - margin");
  check.dos = dos_from_diagonal(op, parts.gdiag, ladder, k_inner, margin);
  const double spread_scale = std::max(std::fabs(check.dos.tail_mean), options.gap_floor);
  if (check.dos.tail_spread > options.dos_spread_limit * spread_scale) {
    throw ValidationError("DOS limit not numerically established: tail spread " +
                          std::to_string(check.dos.tail_spread) + " exceeds " +
                          std::to_string(options.dos_spread_limit * spread_scale));
  }
  check.rhs_limit = check.dos.tail_mean;
  check.product = check.weight_trace * check.rhs_limit;
  check.relative_gap = std::fabs(check.lhs - check.product) / std::max(std::fabs(check.product), options.gap_floor);
  check.modulated = spectral::modulated_gap(parts.product, parts.gdiag, parts.weights, win);
  return check;
}

}  // namespace doslab::dos
