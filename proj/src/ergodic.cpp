#include "doslab/ergodic.hpp"

#include "doslab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <thread>
#include <unordered_set>

namespace doslab::ergodic {

namespace {

double norm2(const Coords& x) {
  double s = 0.0;
  for (auto v : x) s += static_cast<double>(v) * static_cast<double>(v);
  return std::sqrt(s);
}

// Visits every point of the l2 ball of radius R around the origin in
// lexicographic order.
void for_each_l2(int d, double R, const std::function<void(const Coords&)>& visit) {
  Coords x(static_cast<std::size_t>(d), 0);
  const double R2 = R * R;
  std::function<void(int, double)> rec = [&](int axis, double used) {
    const auto lim = static_cast<std::int64_t>(std::floor(std::sqrt(std::max(0.0, R2 - used)) + 1e-9));
    for (std::int64_t v = -lim; v <= lim; ++v) {
      const double u = used + static_cast<double>(v) * static_cast<double>(v);
      if (u > R2) continue;
      x[static_cast<std::size_t>(axis)] = v;
      if (axis + 1 == d) visit(x);
      else rec(axis + 1, u);
    }
  };
  rec(0, 0.0);
}

double ball_volume_bound(int d, double R) { return std::pow(2.0 * R + 1.0, d); }

struct Box {
  Coords lo;
  std::vector<std::int64_t> side;

  std::uint64_t volume() const {
    std::uint64_t v = 1;
    for (auto s : side) v *= static_cast<std::uint64_t>(s);
    return v;
  }
  bool inside(const Coords& x) const {
    for (std::size_t a = 0; a < lo.size(); ++a) {
      if (x[a] < lo[a] || x[a] >= lo[a] + side[a]) return false;
    }
    return true;
  }
  std::uint64_t index(const Coords& x) const {
    std::uint64_t id = 0;
    for (std::size_t a = 0; a < lo.size(); ++a) {
      id = id * static_cast<std::uint64_t>(side[a]) + static_cast<std::uint64_t>(x[a] - lo[a]);
    }
    return id;
  }
};

Box bounding_box(const std::vector<Coords>& pts) {
  Box b;
  const std::size_t d = pts.front().size();
  Coords hi = pts.front();
  b.lo = pts.front();
  for (const auto& p : pts) {
    for (std::size_t a = 0; a < d; ++a) {
      b.lo[a] = std::min(b.lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  }
  b.side.resize(d);
  for (std::size_t a = 0; a < d; ++a) b.side[a] = hi[a] - b.lo[a] + 1;
  return b;
}

struct Bitmap {
  Box box;
  std::vector<char> bits;

  explicit Bitmap(const std::vector<Coords>& pts) : box(bounding_box(pts)), bits(box.volume(), 0) {
    for (const auto& p : pts) bits[box.index(p)] = 1;
  }
  bool contains(const Coords& x) const { return box.inside(x) && bits[box.index(x)]; }
};

// Closed interval [lo, hi] of a one-dimensional set.
std::pair<std::int64_t, std::int64_t> interval_of(const FolnerSet& s) {
  if (s.shape == Shape::dyadic_interval) return {0, (std::int64_t{1} << s.radius) - 1};
  const std::int64_t c = s.center.empty() ? 0 : s.center[0];
  return {c - s.radius, c + s.radius};
}

std::uint64_t union_length(std::vector<std::pair<std::int64_t, std::int64_t>> iv) {
  std::sort(iv.begin(), iv.end());
  std::uint64_t total = 0;
  std::int64_t cur_lo = iv.front().first, cur_hi = iv.front().second;
  for (std::size_t i = 1; i < iv.size(); ++i) {
    if (iv[i].first <= cur_hi + 1) {
      cur_hi = std::max(cur_hi, iv[i].second);
    } else {
      total += static_cast<std::uint64_t>(cur_hi - cur_lo + 1);
      cur_lo = iv[i].first;
      cur_hi = iv[i].second;
    }
  }
  return total + static_cast<std::uint64_t>(cur_hi - cur_lo + 1);
}

// Marks every b - a with a in `small`, b in `big` into `out` (a box covering all differences).
void mark_differences(const std::vector<Coords>& big, const std::vector<Coords>& small, const Box& out_box,
                      std::vector<char>& out) {
  Coords diff(big.front().size());
  for (const auto& a : small) {
    for (const auto& b : big) {
      for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = b[i] - a[i];
      out[out_box.index(diff)] = 1;
    }
  }
}

Box difference_box(const Box& big, const Box& small) {
  Box b;
  b.lo.resize(big.lo.size());
  b.side.resize(big.lo.size());
  for (std::size_t a = 0; a < big.lo.size(); ++a) {
    b.lo[a] = big.lo[a] - (small.lo[a] + small.side[a] - 1);
    b.side[a] = big.side[a] + small.side[a] - 1;
  }
  return b;
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

bool within(double diff, double tol, double scale) {
  return std::fabs(diff) <= tol || std::fabs(diff) <= 1e-12 * std::max(1.0, std::fabs(scale));
}

}  // namespace

// ------------------------------------------------------------ weight shift

ShiftGapReport shift_weight_gap(int d, const Coords& shift, double R, std::uint64_t budget) {
  if (d < 1) throw ValidationError("dimension must be >= 1");
  if (shift.size() != static_cast<std::size_t>(d)) throw ValidationError("shift has wrong dimension");
  if (!(R >= 0.0) || !std::isfinite(R)) throw ValidationError("radius must be finite and >= 0");
  const double bound = ball_volume_bound(d, R);
  if (bound > static_cast<double>(budget)) {
    throw BudgetExceeded("shift weight gap ball", static_cast<std::uint64_t>(std::min(bound, 1.8e19)), budget);
  }
  ShiftGapReport out;
  const double dd = static_cast<double>(d);
  Coords y(shift.size());
  for_each_l2(d, R, [&](const Coords& x) {
    for (std::size_t a = 0; a < x.size(); ++a) y[a] = x[a] - shift[a];
    out.gaps.push_back(std::fabs(std::pow(1.0 + norm2(x), -dd) - std::pow(1.0 + norm2(y), -dd)));
  });
  std::sort(out.gaps.begin(), out.gaps.end(), std::greater<>());
  const double power = (dd + 1.0) / dd;
  for (std::size_t k = 1; k <= out.gaps.size(); ++k) {
    const double v = std::pow(static_cast<double>(k), power) * out.gaps[k - 1];
    if (v > out.statistic) {
      out.statistic = v;
      out.argmax = k;
    }
  }
  return out;
}

ShiftGapReport shift_weight_gap(const DiscreteSpace& space, const Coords& shift, double R, std::uint64_t budget) {
  if (!space.is_lattice()) throw ValidationError("shift weight gap needs a lattice space, got " + space.describe());
  return shift_weight_gap(space.lattice_info().dim, shift, R, budget);
}

// ------------------------------------------------------------ equivariance

EquivarianceReport equivariance_check(const DiscreteSpace& space, const HamiltonianSpec& spec, const Coords& shift,
                                      const ScalarFunction& g, std::vector<double> radii, double margin,
                                      const metric::EnumerationOptions& opts) {
  if (!space.is_lattice()) throw ValidationError("equivariance check needs a lattice space");
  if (shift.size() != static_cast<std::size_t>(space.lattice_info().dim)) {
    throw ValidationError("shift has wrong dimension");
  }
  if (radii.empty()) throw ValidationError("at least one radius is required");
  if (!(margin >= 0.0)) throw ValidationError("margin must be >= 0");
  std::sort(radii.begin(), radii.end());
  spec.validate();
  g.validate();
  const double R_outer = radii.back() + margin;
  const auto op = ham::build_truncated(space, spec, R_outer, opts);
  const auto op_shift = ham::build_on_points(space, spec.shifted(shift), op.points);
  auto diagonal = [&](const ham::TruncatedOperator& h) -> Eigen::VectorXd {
    if (h.diagonal_only) return h.diag.unaryExpr([&](double t) { return g(t); });
    return spectral::function_diagonal(spectral::eigh(h, true), g);
  };
  const Eigen::VectorXd a = diagonal(op);
  const Eigen::VectorXd b = diagonal(op_shift);

  EquivarianceReport rep;
  std::size_t i = 0;
  double sa = 0.0, sb = 0.0;
  for (double r : radii) {
    while (i < op.size() && op.distances[i] <= r) {
      sa += a(static_cast<Eigen::Index>(i));
      sb += b(static_cast<Eigen::Index>(i));
      ++i;
    }
    EquivarianceRow row;
    row.radius = r;
    row.count = i;
    row.nu = sa / static_cast<double>(i);
    row.nu_shifted = sb / static_cast<double>(i);
    row.diff = std::fabs(row.nu - row.nu_shifted);
    rep.rows.push_back(row);
    rep.max_diff = std::max(rep.max_diff, row.diff);
  }
  rep.exactly_zero = rep.max_diff == 0.0;
  rep.decreasing = rep.rows.size() > 1;
  for (std::size_t k = 1; k < rep.rows.size(); ++k) {
    if (!(rep.rows[k].diff < rep.rows[k - 1].diff)) rep.decreasing = false;
  }
  std::vector<double> lx, ly;
  for (const auto& r : rep.rows) {
    if (r.diff > 0.0 && r.radius > 0.0) {
      lx.push_back(std::log(r.radius));
      ly.push_back(std::log(r.diff));
    }
  }
  if (lx.size() >= 2) rep.trend_exponent = spectral::linear_fit(lx, ly).first;
  return rep;
}

// ------------------------------------------------------------ Folner sets

std::string to_string(Shape s) {
  switch (s) {
    case Shape::cube: return "cube";
    case Shape::ball_l1: return "ball_l1";
    case Shape::ball_l2: return "ball_l2";
    case Shape::ball_linf: return "ball_linf";
    case Shape::dyadic_interval: return "dyadic_interval";
  }
  return "unknown";
}

Shape shape_from_string(const std::string& s) {
  for (auto sh : {Shape::cube, Shape::ball_l1, Shape::ball_l2, Shape::ball_linf, Shape::dyadic_interval}) {
    if (to_string(sh) == s) return sh;
  }
  throw ValidationError("unknown Folner shape '" + s + "'");
}

void FolnerSet::validate() const {
  if (dim < 1) throw ValidationError("Folner set dimension must be >= 1");
  if (radius < 0) throw ValidationError("Folner set radius must be >= 0");
  if (!center.empty() && center.size() != static_cast<std::size_t>(dim)) {
    throw ValidationError("Folner set center has wrong dimension");
  }
  if (shape == Shape::dyadic_interval && (dim != 1 || radius > 62)) {
    throw ValidationError("dyadic intervals need dim = 1 and exponent <= 62");
  }
}

std::uint64_t FolnerSet::size() const {
  validate();
  if (shape == Shape::dyadic_interval) return std::uint64_t{1} << radius;
  if (shape == Shape::cube || shape == Shape::ball_linf) {
    std::uint64_t n = 1;
    for (int a = 0; a < dim; ++a) n *= static_cast<std::uint64_t>(2 * radius + 1);
    return n;
  }
  return points().size();
}

std::vector<Coords> FolnerSet::points(std::uint64_t budget) const {
  validate();
  const double bound = shape == Shape::dyadic_interval ? std::ldexp(1.0, static_cast<int>(radius))
                                                       : ball_volume_bound(dim, static_cast<double>(radius));
  if (bound > static_cast<double>(budget)) {
    throw BudgetExceeded("Folner set points", static_cast<std::uint64_t>(std::min(bound, 1.8e19)), budget);
  }
  std::vector<Coords> pts;
  if (shape == Shape::dyadic_interval) {
    for (std::int64_t v = 0; v < (std::int64_t{1} << radius); ++v) pts.push_back({v});
    return pts;
  }
  const Coords c = center.empty() ? Coords(static_cast<std::size_t>(dim), 0) : center;
  Coords x(static_cast<std::size_t>(dim));
  const double r2 = static_cast<double>(radius) * static_cast<double>(radius);
  std::function<void(int, std::int64_t, double)> rec = [&](int axis, std::int64_t l1, double l2) {
    for (std::int64_t v = -radius; v <= radius; ++v) {
      const std::int64_t n1 = l1 + (v < 0 ? -v : v);
      const double n2 = l2 + static_cast<double>(v) * static_cast<double>(v);
      if (shape == Shape::ball_l1 && n1 > radius) continue;
      if (shape == Shape::ball_l2 && n2 > r2) continue;
      x[static_cast<std::size_t>(axis)] = c[static_cast<std::size_t>(axis)] + v;
      if (axis + 1 == dim) pts.push_back(x);
      else rec(axis + 1, n1, n2);
    }
  };
  rec(0, 0, 0.0);
  return pts;
}

std::int64_t FolnerSet::extent() const {
  return shape == Shape::dyadic_interval ? (std::int64_t{1} << radius) : radius;
}

FolnerSet FolnerSequence::at(std::size_t n) const {
  FolnerSet s;
  s.shape = shape;
  s.dim = dim;
  s.radius = static_cast<std::int64_t>(n);
  s.validate();
  return s;
}

FolnerReport folner_tempered_check(const FolnerSequence& seq, std::size_t n_max, std::uint64_t budget) {
  if (n_max < 3) throw ValidationError("n_max must be >= 3");
  FolnerReport rep;
  if (seq.dim == 1) {
    // Every set is an interval: exact interval arithmetic.
    std::vector<std::pair<std::int64_t, std::int64_t>> iv;
    for (std::size_t n = 1; n <= n_max + 1; ++n) iv.push_back(interval_of(seq.at(n)));
    for (std::size_t n = 1; n < iv.size(); ++n) {
      if (iv[n].first > iv[n - 1].first || iv[n].second < iv[n - 1].second) rep.nested = false;
    }
    for (std::size_t n = 1; n <= n_max; ++n) {
      FolnerRow row;
      row.n = n;
      const auto [lo, hi] = iv[n - 1];
      row.size = static_cast<std::uint64_t>(hi - lo + 1);
      row.deviation = {2.0 / static_cast<double>(row.size)};
      row.max_deviation = row.deviation[0];
      const auto [blo, bhi] = iv[n];
      std::vector<std::pair<std::int64_t, std::int64_t>> diffs;
      for (std::size_t k = 1; k <= n; ++k) diffs.push_back({blo - iv[k - 1].second, bhi - iv[k - 1].first});
      row.temper_ratio = static_cast<double>(union_length(diffs)) / static_cast<double>(bhi - blo + 1);
      rep.C = std::max(rep.C, row.temper_ratio);
      rep.rows.push_back(std::move(row));
    }
    return rep;
  }

  std::vector<std::vector<Coords>> sets;
  for (std::size_t n = 1; n <= n_max + 1; ++n) sets.push_back(seq.at(n).points(budget));
  std::vector<Bitmap> maps;
  for (const auto& s : sets) maps.emplace_back(s);
  for (std::size_t n = 1; n < sets.size(); ++n) {
    for (const auto& x : sets[n - 1]) {
      if (!maps[n].contains(x)) {
        rep.nested = false;
        break;
      }
    }
  }
  const int d = seq.dim;
  for (std::size_t n = 1; n <= n_max; ++n) {
    const auto& F = sets[n - 1];
    const auto& bm = maps[n - 1];
    FolnerRow row;
    row.n = n;
    row.size = F.size();
    Coords y(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
      std::uint64_t out = 0;
      for (const auto& x : F) {
        y = x;
        y[static_cast<std::size_t>(j)] -= 1;
        if (!bm.contains(y)) ++out;
        y[static_cast<std::size_t>(j)] += 2;
        if (!bm.contains(y)) ++out;
      }
      row.deviation.push_back(static_cast<double>(out) / static_cast<double>(F.size()));
    }
    row.max_deviation = *std::max_element(row.deviation.begin(), row.deviation.end());

    // Nested sets: F_{n+1} - F_k is contained in F_{n+1} - F_n for every k <= n.
    const auto& big = sets[n];
    const std::size_t k_first = rep.nested ? n : 1;
    Box box = difference_box(maps[n].box, maps[n - 1].box);
    for (std::size_t k = k_first; k <= n; ++k) {
      const Box bk = difference_box(maps[n].box, maps[k - 1].box);
      Coords hi(static_cast<std::size_t>(d));
      for (int a = 0; a < d; ++a) {
        const auto ax = static_cast<std::size_t>(a);
        hi[ax] = std::max(box.lo[ax] + box.side[ax], bk.lo[ax] + bk.side[ax]);
        box.lo[ax] = std::min(box.lo[ax], bk.lo[ax]);
        box.side[ax] = hi[ax] - box.lo[ax];
      }
    }
    if (static_cast<double>(box.volume()) > static_cast<double>(budget)) {
      throw BudgetExceeded("difference set bitmap", box.volume(), budget);
    }
    std::vector<char> marks(box.volume(), 0);
    for (std::size_t k = k_first; k <= n; ++k) mark_differences(big, sets[k - 1], box, marks);
    const auto count = static_cast<std::uint64_t>(std::count(marks.begin(), marks.end(), char{1}));
    row.temper_ratio = static_cast<double>(count) / static_cast<double>(big.size());
    rep.C = std::max(rep.C, row.temper_ratio);
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

// ------------------------------------------------------------ ergodic averages

double minimum_margin(double R_F) { return std::max(10.0, std::ceil(0.02 * R_F)); }

ErgodicReport ergodic_average(const DiscreteSpace& lattice, const HamiltonianSpec& spec, const ScalarFunction& f,
                              const std::vector<FolnerSet>& sets, const ErgodicOptions& options) {
  if (!lattice.is_lattice()) throw ValidationError("ergodic averages need a lattice space");
  const int d = lattice.lattice_info().dim;
  if (sets.empty()) throw ValidationError("at least one Folner set is required");
  if (options.realizations < 2) throw ValidationError("at least two realizations are required");
  if (options.batches < 2) throw ValidationError("at least two batches are required");
  if (spec.potential.kind != ham::Potential::Kind::iid_uniform) {
    throw ValidationError("ergodic averages need an iid potential");
  }
  spec.validate();
  f.validate();
  double R_F = 0.0;
  for (const auto& s : sets) {
    if (s.dim != d) throw ValidationError("Folner set dimension differs from the lattice");
    R_F = std::max(R_F, static_cast<double>(s.extent()));
  }
  if (!(options.margin >= minimum_margin(R_F))) {
    throw ValidationError("margin " + std::to_string(options.margin) + " is below the minimum " +
                          std::to_string(minimum_margin(R_F)) + " for sets of extent " + std::to_string(R_F));
  }

  ErgodicReport rep;
  rep.sets = sets;
  std::vector<std::vector<Coords>> set_points;
  std::vector<Coords> all;
  for (const auto& s : sets) {
    set_points.push_back(s.points());
    all.insert(all.end(), set_points.back().begin(), set_points.back().end());
  }
  Box box = bounding_box(all);
  const auto pad = static_cast<std::int64_t>(std::ceil(options.margin));
  for (std::size_t a = 0; a < box.lo.size(); ++a) {
    box.lo[a] -= pad;
    box.side[a] += 2 * pad;
  }
  if (box.volume() > 20000) throw BudgetExceeded("ergodic truncation box", box.volume(), 20000);
  std::vector<metric::Point> pts;
  pts.reserve(box.volume());
  Coords x(static_cast<std::size_t>(d));
  std::function<void(std::size_t)> fill = [&](std::size_t axis) {
    for (std::int64_t v = 0; v < box.side[axis]; ++v) {
      x[axis] = box.lo[axis] + v;
      if (axis + 1 == x.size()) pts.emplace_back(x);
      else fill(axis + 1);
    }
  };
  fill(0);
  std::vector<std::vector<std::uint64_t>> set_index;
  for (const auto& sp : set_points) {
    std::vector<std::uint64_t> idx;
    idx.reserve(sp.size());
    for (const auto& p : sp) idx.push_back(box.index(p));
    set_index.push_back(std::move(idx));
  }

  const std::size_t R = options.realizations;
  for (std::size_t i = 0; i < R; ++i) rep.seeds.push_back(derive_seed(options.seed, i));
  // averages[i][s], sems[i][s]
  std::vector<std::vector<double>> averages(R), sems(R);
  auto run = [&](std::size_t i) {
    HamiltonianSpec si = spec;
    si.potential.seed = rep.seeds[i];
    const auto op = ham::build_on_points(lattice, si, pts);
    const Eigen::VectorXd diag = op.diagonal_only ? Eigen::VectorXd(op.diag.unaryExpr([&](double t) { return f(t); }))
                                                  : spectral::function_diagonal(spectral::eigh(op, true), f);
    for (const auto& idx : set_index) {
      double sum = 0.0;
      for (auto j : idx) sum += diag(static_cast<Eigen::Index>(j));
      averages[i].push_back(sum / static_cast<double>(idx.size()));
      const std::size_t B = std::min(options.batches, idx.size());
      std::vector<double> means;
      for (std::size_t b = 0; b < B; ++b) {
        const std::size_t lo = b * idx.size() / B, hi = (b + 1) * idx.size() / B;
        double s = 0.0;
        for (std::size_t k = lo; k < hi; ++k) s += diag(static_cast<Eigen::Index>(idx[k]));
        means.push_back(s / static_cast<double>(hi - lo));
      }
      sems[i].push_back(B >= 2 ? sample_std(means) / std::sqrt(static_cast<double>(B)) : 0.0);
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(R)));
  if (threads == 1) {
    for (std::size_t i = 0; i < R; ++i) run(i);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = t; i < R; i += threads) run(i);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  for (std::size_t s = 0; s < sets.size(); ++s) {
    SetStatistics st;
    for (std::size_t i = 0; i < R; ++i) {
      st.averages.push_back(averages[i][s]);
      st.sem.push_back(sems[i][s]);
    }
    st.mean = std::accumulate(st.averages.begin(), st.averages.end(), 0.0) / static_cast<double>(R);
    st.cross_sem = sample_std(st.averages) / std::sqrt(static_cast<double>(R));
    for (std::size_t i = 0; i < R; ++i) {
      const double dev = st.averages[i] - st.mean;
      double z = 0.0;
      if (st.sem[i] > 0.0) z = dev / st.sem[i];
      else if (!within(dev, 0.0, st.mean)) z = dev > 0 ? INFINITY : -INFINITY;
      st.z.push_back(z);
      if (std::fabs(z) <= 3.0) ++st.within_3sem;
    }
    rep.per_set.push_back(std::move(st));
  }
  if (sets.size() >= 2) {
    const auto& a = rep.per_set[0];
    const auto& b = rep.per_set[1];
    for (std::size_t i = 0; i < R; ++i) {
      const double diff = std::fabs(a.averages[i] - b.averages[i]);
      const double tol = 3.0 * std::hypot(a.sem[i], b.sem[i]);
      rep.pair_diff.push_back(diff);
      rep.pair_tolerance.push_back(tol);
      if (within(diff, tol, a.mean)) ++rep.pair_agree;
    }
  }
  return rep;
}

}  // namespace doslab::ergodic
