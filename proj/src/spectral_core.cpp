#include "doslab/spectral_core.hpp"

#include "doslab/backend.hpp"

#include <lapacke.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

namespace doslab::spectral {

namespace {

std::vector<std::uint64_t> dyadic_grid(std::uint64_t last) {
  std::vector<std::uint64_t> grid{0};
  for (std::uint64_t n = 1; n <= last && n != 0; n <<= 1) grid.push_back(n);
  if (grid.back() != last) grid.push_back(last);
  return grid;
}

double log2p(std::uint64_t n) { return std::log(2.0 + static_cast<double>(n)); }

}  // namespace

std::pair<double, double> linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("linear fit needs at least two points");
  const double m = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / m;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw ValidationError("linear fit needs distinct abscissae");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

// ------------------------------------------------------------ eigensolves

EigenSequence order_eigenvalues(std::vector<double> values, std::string source) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const double fa = std::fabs(values[a]);
    const double fb = std::fabs(values[b]);
    if (fa != fb) return fa > fb;
    if (values[a] != values[b]) return values[a] > values[b];
    return a < b;
  });
  EigenSequence seq;
  seq.source = std::move(source);
  seq.values.reserve(values.size());
  for (auto i : idx) seq.values.push_back(values[i]);
  seq.original_index = std::move(idx);
  return seq;
}

EigenDecomposition eigh(const Eigen::MatrixXd& a, bool with_vectors) {
  constexpr Eigen::Index kTwoStageMin = 256;
  const auto n = a.rows();
  if (n != a.cols() || n < 1) throw ValidationError("eigensolve needs a nonempty square matrix");
  if (!a.allFinite()) throw ValidationError("matrix has non-finite entries");
  if (with_vectors) verify_eigensolver();
  EigenDecomposition out;
  Eigen::MatrixXd work = a;
  out.values.resize(n);
  // Values only: the two-stage reduction runs mostly in BLAS3 and is several
  // times faster for large n.
  const bool two_stage = !with_vectors && n >= kTwoStageMin;
  const lapack_int info =
      two_stage ? LAPACKE_dsyevd_2stage(LAPACK_COL_MAJOR, 'N', 'L', static_cast<lapack_int>(n), work.data(),
                                        static_cast<lapack_int>(n), out.values.data())
                : LAPACKE_dsyevd(LAPACK_COL_MAJOR, with_vectors ? 'V' : 'N', 'L', static_cast<lapack_int>(n),
                                 work.data(), static_cast<lapack_int>(n), out.values.data());
  if (info != 0) {
    std::ostringstream os;
    os << (two_stage ? "dsyevd_2stage" : "dsyevd") << " failed with info = " << info << " (dimension " << n << ", max |entry| "
       << a.cwiseAbs().maxCoeff() << ")";
    throw SolverError(os.str());
  }
  if (with_vectors) out.vectors = std::move(work);
  return out;
}

namespace {

// Ordering that makes `a` tridiagonal (every row has at most two off-diagonal
// neighbours and the nonzero pattern has no cycle); empty when there is none.
std::vector<Eigen::Index> path_order(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  std::vector<std::array<Eigen::Index, 2>> nb(static_cast<std::size_t>(n), {-1, -1});
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) {
      if (a(i, j) == 0.0) continue;
      for (auto [u, v] : {std::pair{i, j}, std::pair{j, i}}) {
        auto& slot = nb[static_cast<std::size_t>(u)];
        if (slot[0] < 0) slot[0] = v;
        else if (slot[1] < 0) slot[1] = v;
        else return {};
      }
    }
  }
  std::vector<Eigen::Index> order;
  order.reserve(static_cast<std::size_t>(n));
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  auto walk = [&](Eigen::Index start) {
    Eigen::Index prev = -1, cur = start;
    while (cur >= 0 && !seen[static_cast<std::size_t>(cur)]) {
      seen[static_cast<std::size_t>(cur)] = 1;
      order.push_back(cur);
      const auto& s = nb[static_cast<std::size_t>(cur)];
      const Eigen::Index next = s[0] != prev ? s[0] : s[1];
      prev = cur;
      cur = next;
    }
  };
  for (Eigen::Index v = 0; v < n; ++v) {
    if (!seen[static_cast<std::size_t>(v)] && nb[static_cast<std::size_t>(v)][1] < 0) walk(v);
  }
  if (static_cast<Eigen::Index>(order.size()) != n) return {};  // a cycle remains
  return order;
}

EigenDecomposition tridiagonal_eigh(const Eigen::MatrixXd& a, const std::vector<Eigen::Index>& order,
                                    bool with_vectors) {
  if (with_vectors) verify_eigensolver();
  const auto n = static_cast<Eigen::Index>(order.size());
  // dstemr wants an off-diagonal of length n.
  Eigen::VectorXd d(n), e = Eigen::VectorXd::Zero(n);
  for (Eigen::Index k = 0; k < n; ++k) d(k) = a(order[k], order[k]);
  for (Eigen::Index k = 0; k + 1 < n; ++k) e(k) = a(order[k + 1], order[k]);
  Eigen::VectorXd w(n);
  Eigen::MatrixXd z;
  if (with_vectors) z.resize(n, n);
  std::vector<lapack_int> isuppz(2 * static_cast<std::size_t>(n));
  lapack_int m = 0;
  lapack_logical tryrac = 1;
  const lapack_int info = LAPACKE_dstemr(LAPACK_COL_MAJOR, with_vectors ? 'V' : 'N', 'A', static_cast<lapack_int>(n),
                                         d.data(), e.data(), 0.0, 0.0, 0, 0, &m, w.data(),
                                         with_vectors ? z.data() : nullptr, static_cast<lapack_int>(n),
                                         static_cast<lapack_int>(n), isuppz.data(), &tryrac);
  if (info != 0 || m != static_cast<lapack_int>(n)) {
    throw SolverError("dstemr failed with info = " + std::to_string(info) + " (dimension " + std::to_string(n) + ")");
  }
  EigenDecomposition out;
  out.values = std::move(w);
  if (with_vectors) {
    out.vectors.resize(n, n);
    // Column by column keeps both reads and writes within one column.
    for (Eigen::Index c = 0; c < n; ++c) {
      const double* src = z.col(c).data();
      double* dst = out.vectors.col(c).data();
      for (Eigen::Index k = 0; k < n; ++k) dst[order[k]] = src[k];
    }
  }
  return out;
}

}  // namespace

EigenDecomposition eigh(const TruncatedOperator& op, bool with_vectors) {
  if (op.size() == 0) throw ValidationError("eigensolve of an empty operator");
  if (!op.diagonal_only) {
    if (!op.matrix.allFinite()) throw ValidationError("matrix has non-finite entries");
    const auto order = path_order(op.matrix);
    if (!order.empty()) return tridiagonal_eigh(op.matrix, order, with_vectors);
    return eigh(op.matrix, with_vectors);
  }
  EigenDecomposition out;
  const auto n = static_cast<Eigen::Index>(op.size());
  std::vector<Eigen::Index> order(op.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return op.diag(a) < op.diag(b); });
  out.values.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) out.values(k) = op.diag(order[k]);
  if (with_vectors) {
    if (op.size() > 20000) throw BudgetExceeded("eigenvectors of a diagonal operator", op.size(), 20000);
    out.vectors = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k) out.vectors(order[k], k) = 1.0;
  }
  return out;
}

EigenSequence symmetric_eigenvalues(const Eigen::MatrixXd& a, std::string source) {
  const auto eig = eigh(a, false);
  return order_eigenvalues({eig.values.data(), eig.values.data() + eig.values.size()}, std::move(source));
}

EigenSequence symmetric_eigenvalues(const TruncatedOperator& op) {
  if (op.diagonal_only) {
    return order_eigenvalues({op.diag.data(), op.diag.data() + op.diag.size()}, "diagonal operator");
  }
  const auto eig = eigh(op, false);
  return order_eigenvalues({eig.values.data(), eig.values.data() + eig.values.size()}, "lapack");
}

// --------------------------------------------------------- scalar functions

ScalarFunction ScalarFunction::bump(double center, double half_width, double amplitude) {
  ScalarFunction g;
  g.kind = Kind::bump;
  g.center = center;
  g.width = half_width;
  g.amplitude = amplitude;
  g.validate();
  return g;
}

ScalarFunction ScalarFunction::gaussian(double center, double sigma, double amplitude) {
  ScalarFunction g;
  g.kind = Kind::gaussian;
  g.center = center;
  g.width = sigma;
  g.amplitude = amplitude;
  g.validate();
  return g;
}

ScalarFunction ScalarFunction::polynomial(std::vector<double> coefficients) {
  ScalarFunction g;
  g.kind = Kind::polynomial;
  g.coefficients = std::move(coefficients);
  g.validate();
  return g;
}

ScalarFunction ScalarFunction::table(std::vector<double> xs, std::vector<double> ys) {
  ScalarFunction g;
  g.kind = Kind::table;
  g.xs = std::move(xs);
  g.ys = std::move(ys);
  g.validate();
  return g;
}

void ScalarFunction::validate() const {
  switch (kind) {
    case Kind::bump:
    case Kind::gaussian:
      if (!(width > 0.0) || !std::isfinite(width) || !std::isfinite(center) || !std::isfinite(amplitude)) {
        throw ValidationError("function width must be positive and parameters finite");
      }
      break;
    case Kind::polynomial:
      if (coefficients.empty()) throw ValidationError("polynomial needs at least one coefficient");
      break;
    case Kind::table:
      if (xs.size() != ys.size() || xs.size() < 2) throw ValidationError("table needs >= 2 matching abscissae and values");
      for (std::size_t i = 1; i < xs.size(); ++i) {
        if (!(xs[i] > xs[i - 1])) throw ValidationError("table abscissae must be strictly increasing");
      }
      break;
  }
}

double ScalarFunction::operator()(double t) const {
  switch (kind) {
    case Kind::bump: {
      const double u = (t - center) / width;
      if (std::fabs(u) >= 1.0) return 0.0;
      return amplitude * std::exp(1.0 - 1.0 / (1.0 - u * u));
    }
    case Kind::gaussian: {
      const double u = (t - center) / width;
      return amplitude * std::exp(-0.5 * u * u);
    }
    case Kind::polynomial: {
      double v = 0.0;
      for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) v = v * t + *it;
      return v;
    }
    case Kind::table: {
      const double tol = 1e-12 * std::max(1.0, std::fabs(t));
      if (t < xs.front() - tol || t > xs.back() + tol) {
        throw ValidationError("table function undefined at " + std::to_string(t) + " (domain [" +
                              std::to_string(xs.front()) + ", " + std::to_string(xs.back()) + "])");
      }
      const double tc = std::clamp(t, xs.front(), xs.back());
      auto it = std::upper_bound(xs.begin(), xs.end(), tc);
      if (it == xs.end()) return ys.back();
      const auto i = static_cast<std::size_t>(it - xs.begin());
      const double f = (tc - xs[i - 1]) / (xs[i] - xs[i - 1]);
      return ys[i - 1] + f * (ys[i] - ys[i - 1]);
    }
  }
  return 0.0;
}

std::string to_string(ScalarFunction::Kind k) {
  switch (k) {
    case ScalarFunction::Kind::bump: return "bump";
    case ScalarFunction::Kind::polynomial: return "polynomial";
    case ScalarFunction::Kind::gaussian: return "gaussian";
    case ScalarFunction::Kind::table: return "table";
  }
  return "unknown";
}

std::string ScalarFunction::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << to_string(kind);
  switch (kind) {
    case Kind::bump:
    case Kind::gaussian: os << "(center=" << center << ",width=" << width << ",amplitude=" << amplitude << ")"; break;
    case Kind::polynomial:
      os << "(";
      for (std::size_t i = 0; i < coefficients.size(); ++i) os << (i ? "," : "") << coefficients[i];
      os << ")";
      break;
    case Kind::table: os << "(points=" << xs.size() << ")"; break;
  }
  return os.str();
}

Eigen::MatrixXd apply_function(const EigenDecomposition& eig, const ScalarFunction& g) {
  if (eig.vectors.size() == 0) throw ValidationError("apply_function needs eigenvectors");
  Eigen::VectorXd gv(eig.values.size());
  for (Eigen::Index j = 0; j < gv.size(); ++j) gv(j) = g(eig.values(j));
  const Eigen::MatrixXd scaled = eig.vectors * gv.asDiagonal();
  Eigen::MatrixXd G = scaled * eig.vectors.transpose();
  const Eigen::MatrixXd Gt = G.transpose();
  G = (G + Gt) * 0.5;
  return G;
}

TruncatedOperator apply_function(const TruncatedOperator& H, const ScalarFunction& g) {
  TruncatedOperator out = H;
  if (H.diagonal_only) {
    for (Eigen::Index i = 0; i < out.diag.size(); ++i) out.diag(i) = g(H.diag(i));
    return out;
  }
  out.matrix = apply_function(eigh(H.matrix, true), g);
  out.diag = out.matrix.diagonal();
  return out;
}

Eigen::VectorXd function_diagonal(const EigenDecomposition& eig, const ScalarFunction& g) {
  if (eig.vectors.size() == 0) throw ValidationError("function_diagonal needs eigenvectors");
  Eigen::VectorXd gv(eig.values.size());
  for (Eigen::Index j = 0; j < gv.size(); ++j) gv(j) = g(eig.values(j));
  return eig.vectors.array().square().matrix() * gv;
}

EigenSequence product_eigenvalues(const Eigen::MatrixXd& T, const Eigen::VectorXd& w) {
  if (T.rows() != T.cols() || T.rows() != w.size()) throw ValidationError("operator and weight sizes differ");
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (!(w(i) > 0.0)) throw ValidationError("weights must be strictly positive");
  }
  const Eigen::VectorXd s = w.cwiseSqrt();
  Eigen::MatrixXd M(T.rows(), T.cols());
  for (Eigen::Index j = 0; j < T.cols(); ++j) {
    for (Eigen::Index i = 0; i < T.rows(); ++i) M(i, j) = T(i, j) * (s(i) * s(j));
  }
  return symmetric_eigenvalues(M, "similarity W^1/2 T W^1/2");
}

EigenSequence product_eigenvalues(const TruncatedOperator& T, const WeightFunction& w) {
  const Eigen::VectorXd wv = ham::weights_on(T, w);
  if (T.diagonal_only) {
    std::vector<double> v(T.size());
    for (std::size_t i = 0; i < T.size(); ++i) v[i] = T.diag(i) * wv(i);
    return order_eigenvalues(std::move(v), "diagonal product");
  }
  return product_eigenvalues(T.matrix, wv);
}

EigenSequence function_product_eigenvalues(const EigenDecomposition& eig, const ScalarFunction& g,
                                           const Eigen::VectorXd& w) {
  const auto n = eig.values.size();
  if (w.size() != n) throw ValidationError("weight size differs from operator size");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(w(i) > 0.0)) throw ValidationError("weights must be strictly positive");
  }
  Eigen::VectorXd gv(n);
  double gmax = 0.0;
  bool nonneg = true;
  for (Eigen::Index j = 0; j < n; ++j) {
    gv(j) = g(eig.values(j));
    gmax = std::max(gmax, std::fabs(gv(j)));
    nonneg = nonneg && gv(j) >= 0.0;
  }
  std::vector<Eigen::Index> support;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (gv(j) > 1e-15 * gmax) support.push_back(j);
  }
  if (nonneg) {
    const auto r = static_cast<Eigen::Index>(support.size());
    std::vector<double> values(static_cast<std::size_t>(n), 0.0);
    if (r > 0) {
      // G W is similar to W^(1/2) G W^(1/2) = C C^T with C = W^(1/2) U_S g^(1/2);
      // its nonzero spectrum is that of the r x r Gram matrix C^T C.
      const Eigen::VectorXd wh = w.cwiseSqrt();
      Eigen::MatrixXd C(n, r);
      for (Eigen::Index c = 0; c < r; ++c) {
        C.col(c) = wh.cwiseProduct(eig.vectors.col(support[c])) * std::sqrt(gv(support[c]));
      }
      Eigen::MatrixXd K = Eigen::MatrixXd::Zero(r, r);
      K.selfadjointView<Eigen::Lower>().rankUpdate(C.transpose());
      K.triangularView<Eigen::StrictlyUpper>() = K.transpose();
      const auto small = eigh(K, false);
      for (Eigen::Index c = 0; c < r; ++c) values[c] = small.values(c);
    }
    return order_eigenvalues(std::move(values), "gram similarity");
  }
  return product_eigenvalues(apply_function(eig, g), w);
}

// ---------------------------------------------------------- Cesaro series

std::size_t CesaroSeries::find_dyadic(unsigned j) const {
  if (j >= 64) return static_cast<std::size_t>(-1);
  const std::uint64_t target = std::uint64_t{1} << j;
  const auto it = std::lower_bound(n.begin(), n.end(), target);
  if (it == n.end() || *it != target) return static_cast<std::size_t>(-1);
  return static_cast<std::size_t>(it - n.begin());
}

CesaroSeries log_cesaro(std::span<const double> values) {
  if (values.empty()) throw ValidationError("log-Cesaro series of an empty sequence");
  CesaroSeries s;
  s.n = dyadic_grid(values.size() - 1);
  long double acc = 0.0L;
  std::size_t next = 0;
  for (std::uint64_t k = 0; k < values.size() && next < s.n.size(); ++k) {
    acc += values[k];
    if (k == s.n[next]) {
      s.S.push_back(static_cast<double>(acc));
      s.Lambda.push_back(static_cast<double>(acc) / log2p(k));
      ++next;
    }
  }
  return s;
}

CesaroSeries log_cesaro(const EigenSequence& seq) { return log_cesaro(std::span<const double>(seq.values)); }

CesaroSeries log_cesaro_levels(std::span<const double> values, std::span<const std::uint64_t> multiplicity) {
  if (values.size() != multiplicity.size() || values.empty()) {
    throw ValidationError("levels and multiplicities must be nonempty and of equal length");
  }
  std::uint64_t total = 0;
  for (auto m : multiplicity) {
    if (m == 0) throw ValidationError("level multiplicity must be >= 1");
    total += m;
  }
  CesaroSeries s;
  s.n = dyadic_grid(total - 1);
  long double acc = 0.0L;  // sum over completed levels
  std::uint64_t consumed = 0;
  std::size_t level = 0;
  for (auto n : s.n) {
    // Terms 0..n, i.e. n + 1 of them.
    while (level < values.size() && consumed + multiplicity[level] <= n + 1) {
      acc += static_cast<long double>(values[level]) * static_cast<long double>(multiplicity[level]);
      consumed += multiplicity[level];
      ++level;
    }
    long double partial = acc;
    if (consumed < n + 1) partial += static_cast<long double>(values[level]) * static_cast<long double>(n + 1 - consumed);
    s.S.push_back(static_cast<double>(partial));
    s.Lambda.push_back(static_cast<double>(partial) / log2p(n));
  }
  return s;
}

DyadicWindow default_window(std::uint64_t n_max) {
  if (n_max < 1) throw ValidationError("window needs n_max >= 1");
  const auto j_hi = static_cast<int>(std::bit_width(n_max)) - 1;
  const int j_lo = std::max(0, std::min(j_hi - 7, j_hi / 2));
  return {static_cast<unsigned>(j_lo), static_cast<unsigned>(j_hi)};
}

SlopeFit slope_dixmier_estimate(const CesaroSeries& series, DyadicWindow window) {
  if (window.points() < kMinWindowPoints) {
    throw ValidationError("dyadic window [2^" + std::to_string(window.j_lo) + ", 2^" +
                          std::to_string(window.j_hi) + "] has fewer than " +
                          std::to_string(kMinWindowPoints) + " points");
  }
  SlopeFit fit;
  fit.window = window;
  std::vector<double> x;
  for (unsigned j = window.j_lo; j <= window.j_hi; ++j) {
    const auto pos = series.find_dyadic(j);
    if (pos == static_cast<std::size_t>(-1)) {
      throw ValidationError("window point 2^" + std::to_string(j) + " lies outside the series");
    }
    fit.n.push_back(series.n[pos]);
    fit.S.push_back(series.S[pos]);
    fit.Lambda.push_back(series.Lambda[pos]);
    x.push_back(log2p(series.n[pos]));
  }
  fit.n0 = fit.n.front();
  fit.n_max = fit.n.back();
  std::tie(fit.slope, fit.intercept) = linear_fit(x, fit.S);
  std::vector<double> absr;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = fit.S[i] - fit.slope * x[i] - fit.intercept;
    fit.residuals.push_back(r);
    absr.push_back(std::fabs(r));
    fit.max_abs_residual = std::max(fit.max_abs_residual, std::fabs(r));
    fit.scale = std::max(fit.scale, std::fabs(fit.S[i]) / x[i]);
  }
  fit.residual_growth_slope = linear_fit(x, absr).first;
  fit.lambda_tail = fit.Lambda.back();
  return fit;
}

// -------------------------------------------------------- Toeplitz tools

WeightedCesaro weighted_cesaro(std::span<const double> a, std::span<const double> x) {
  if (a.size() != x.size() || a.empty()) throw ValidationError("weights and values must be nonempty and equal in length");
  WeightedCesaro out;
  long double num = 0.0L, den = 0.0L;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (!(a[k] > 0.0)) throw ValidationError("weights must be positive");
    if (k > 0 && a[k] > a[k - 1]) throw ValidationError("weights must be non-increasing (index " + std::to_string(k) + ")");
    num += static_cast<long double>(a[k]) * x[k];
    den += a[k];
    out.ratios.push_back(static_cast<double>(num / den));
    out.sup_k_a = std::max(out.sup_k_a, static_cast<double>(k + 1) * a[k]);
  }
  return out;
}

BoundedDeviation weighted_cesaro_bounded(std::span<const double> a, std::span<const double> x, double L) {
  if (a.size() != x.size() || a.empty()) throw ValidationError("weights and values must be nonempty and equal in length");
  BoundedDeviation out;
  out.n = dyadic_grid(a.size() - 1);
  long double dev = 0.0L, running = 0.0L;
  std::size_t next = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dev += static_cast<long double>(a[k]) * (x[k] - L);
    running += x[k];
    const double sigma = static_cast<double>(running / static_cast<long double>(k + 1));
    out.hypothesis_sum += a[k] * std::fabs(sigma - L);
    if (next < out.n.size() && k == out.n[next]) {
      out.deviation.push_back(std::fabs(static_cast<double>(dev)));
      out.max_deviation = std::max(out.max_deviation, out.deviation.back());
      ++next;
    }
  }
  const std::size_t half = out.n.size() / 2;
  if (out.n.size() - half >= 2) {
    std::vector<double> lx, ly;
    for (std::size_t i = half; i < out.n.size(); ++i) {
      lx.push_back(log2p(out.n[i]));
      ly.push_back(out.deviation[i]);
    }
    out.growth_slope = linear_fit(lx, ly).first;
  }
  return out;
}

ModulatedProfile modulated_norm_profile(const Eigen::MatrixXd& T, const Eigen::VectorXd& V,
                                        std::span<const double> t_grid) {
  if (T.cols() != V.size()) throw ValidationError("operator and weight sizes differ");
  for (Eigen::Index i = 0; i < V.size(); ++i) {
    if (!(V(i) > 0.0)) throw ValidationError("V must be positive");
  }
  // ||T D||_HS^2 = sum_j |T e_j|^2 d_j^2 for diagonal D.
  const Eigen::VectorXd col2 = T.colwise().squaredNorm().transpose();
  ModulatedProfile out;
  double sup = 0.0;
  for (double t : t_grid) {
    if (!(t > 0.0)) throw ValidationError("t grid must be positive");
    long double hs2 = 0.0L;
    for (Eigen::Index j = 0; j < V.size(); ++j) {
      const double d = 1.0 / (1.0 + t * V(j));
      hs2 += col2(j) * d * d;
    }
    const double value = std::sqrt(t) * std::sqrt(static_cast<double>(hs2));
    sup = std::max(sup, value);
    out.t.push_back(t);
    out.profile.push_back(value);
    out.running_sup.push_back(sup);
  }
  return out;
}

SubsequenceComparison subsequence_equivalence_check(std::span<const double> values,
                                                    std::span<const std::uint64_t> indices) {
  if (values.empty()) throw ValidationError("empty value list");
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 1) throw ValidationError("indices are 1-based");
    if (i > 0 && indices[i] <= indices[i - 1]) throw ValidationError("indices must be strictly increasing");
  }
  const std::size_t N = values.size();
  SubsequenceComparison out;
  out.full_means.resize(N);
  long double acc = 0.0L;
  for (std::size_t n = 1; n <= N; ++n) {
    acc += values[n - 1];
    out.full_means[n - 1] = static_cast<double>(acc / static_cast<long double>(n + 1));
  }
  std::vector<std::uint64_t> used;
  for (auto k : indices) {
    if (k > N) break;
    used.push_back(k);
    out.sub_means.push_back(out.full_means[k - 1]);
  }
  std::size_t pos = 0;
  for (std::size_t n = N / 2 == 0 ? 1 : N / 2; n <= N; ++n) {
    while (pos + 1 < used.size() && used[pos + 1] <= n) ++pos;
    if (used.empty() || used[pos] > n) continue;
    out.max_tail_discrepancy =
        std::max(out.max_tail_discrepancy, std::fabs(out.full_means[n - 1] - out.full_means[used[pos] - 1]));
  }
  for (std::size_t i = 0; i + 1 < used.size(); ++i) {
    if (used[i] >= N / 4) {
      out.tail_ratio_max = std::max(out.tail_ratio_max, static_cast<double>(used[i + 1]) / static_cast<double>(used[i]));
    }
  }
  double first = 0.0, second = 0.0;
  for (std::size_t k = 0; k < N; ++k) {
    double& m = k < N / 2 ? first : second;
    m = std::max(m, std::fabs(values[k]));
  }
  out.unbounded_warning = second > 2.0 * first + 1e-300;
  return out;
}

ModulatedGap modulated_gap(const EigenSequence& product, const Eigen::VectorXd& diag,
                           const Eigen::VectorXd& w, DyadicWindow window) {
  const auto n = static_cast<std::size_t>(diag.size());
  if (w.size() != diag.size() || product.size() != n) throw ValidationError("sizes differ in modulated gap");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return w(a) > w(b); });
  std::vector<double> dw(n);
  for (std::size_t k = 0; k < n; ++k) dw[k] = diag(order[k]) * w(order[k]);
  const auto lhs = log_cesaro(std::span<const double>(product.values));
  const auto rhs = log_cesaro(std::span<const double>(dw));
  if (window.points() < 2) throw ValidationError("modulated gap window too short");
  ModulatedGap out;
  std::vector<double> x;
  for (unsigned j = window.j_lo; j <= window.j_hi; ++j) {
    const auto pos = lhs.find_dyadic(j);
    if (pos == static_cast<std::size_t>(-1)) throw ValidationError("window lies outside the sequence");
    out.n.push_back(lhs.n[pos]);
    out.gap.push_back(std::fabs(lhs.S[pos] - rhs.S[pos]));
    x.push_back(log2p(lhs.n[pos]));
    out.scale = std::max(out.scale, std::fabs(lhs.S[pos]) / x.back());
  }
  out.growth_slope = linear_fit(x, out.gap).first;
  out.relative_growth = out.scale > 0.0 ? out.growth_slope / out.scale : 0.0;
  return out;
}

}  // namespace doslab::spectral
