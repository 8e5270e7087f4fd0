#include "doslab/hamiltonians.hpp"

#include "doslab/reference_models.hpp"
#include "doslab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace doslab::ham {

namespace {

using metric::NodeId;
using metric::SpaceKind;

Coords negated(const Coords& c) {
  Coords n(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) n[i] = -c[i];
  return n;
}

std::int64_t floor_mod(std::int64_t x, std::int64_t m) {
  const std::int64_t r = x % m;
  return r < 0 ? r + m : r;
}

Point apply_shift(const Point& x, const Coords& shift) {
  if (shift.empty()) return x;
  if (const auto* c = std::get_if<Coords>(&x)) {
    if (c->size() != shift.size()) throw ValidationError("potential shift has wrong dimension");
    Coords y = *c;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += shift[i];
    return y;
  }
  return static_cast<NodeId>(static_cast<std::int64_t>(std::get<NodeId>(x)) + shift[0]);
}

class PotentialEvaluator {
public:
  explicit PotentialEvaluator(const Potential& v) : v_(v) {
    if (v.kind == Potential::Kind::table) {
      for (const auto& [pt, val] : v.table) table_[pt] = val;
    }
  }

  double operator()(const Point& x0) const {
    const Point x = apply_shift(x0, v_.shift);
    switch (v_.kind) {
      case Potential::Kind::zero: return 0.0;
      case Potential::Kind::periodic: {
        std::size_t flat = 0;
        if (const auto* c = std::get_if<Coords>(&x)) {
          if (c->size() != v_.period.size()) throw ValidationError("periodic potential has wrong dimension");
          for (std::size_t i = 0; i < c->size(); ++i) {
            flat = flat * static_cast<std::size_t>(v_.period[i]) +
                   static_cast<std::size_t>(floor_mod((*c)[i], v_.period[i]));
          }
        } else {
          flat = static_cast<std::size_t>(std::get<NodeId>(x) % static_cast<NodeId>(v_.period[0]));
        }
        return v_.values[flat];
      }
      case Potential::Kind::iid_uniform:
        return v_.a + (v_.b - v_.a) * uniform01(v_.seed, site_key(x));
      case Potential::Kind::table: {
        const auto it = table_.find(x);
        return it == table_.end() ? 0.0 : it->second;
      }
      case Potential::Kind::counterexample: {
        std::int64_t n = 0;
        if (const auto* c = std::get_if<Coords>(&x)) {
          if (c->size() != 1) throw ValidationError("counterexample potential lives on a one-dimensional space");
          n = (*c)[0];
        } else {
          n = static_cast<std::int64_t>(std::get<NodeId>(x));
        }
        return n >= 1 ? ref::counterexample_lambda(static_cast<std::uint64_t>(n)) : 0.0;
      }
    }
    return 0.0;
  }

private:
  const Potential& v_;
  std::unordered_map<Point, double, metric::PointHash> table_;
};

NodeId f2_neighbor(NodeId id, int g) {
  auto word = metric::f2::decode(id);
  if (!word.empty() && word.back() == (g ^ 1)) {
    word.pop_back();
  } else {
    word.push_back(g);
  }
  return metric::f2::encode(word);
}

// Calls f(j, amplitude) for every hopping partner j of point i inside the list.
template <class Index, class F>
void for_each_hop(const DiscreteSpace& space, const Hopping& hop, const Point& x, const Index& index,
                  F&& f) {
  auto visit = [&](const Point& y, double amp) {
    const auto it = index.find(y);
    if (it != index.end()) f(it->second, amp);
  };
  const double sign = hop.kind == Hopping::Kind::laplacian ? -1.0 : 1.0;
  switch (space.kind()) {
    case SpaceKind::lattice: {
      const auto& c = std::get<Coords>(x);
      if (hop.kind == Hopping::Kind::kernel) {
        for (std::size_t k = 0; k < hop.offsets.size(); ++k) {
          Coords y = c;
          for (std::size_t i = 0; i < y.size(); ++i) y[i] += hop.offsets[k][i];
          visit(y, hop.amplitudes[k]);
        }
      } else {
        for (std::size_t i = 0; i < c.size(); ++i) {
          for (int s : {-1, 1}) {
            Coords y = c;
            y[i] += s;
            visit(y, sign);
          }
        }
      }
      break;
    }
    case SpaceKind::cayley_f2:
      for (int g = 0; g < metric::f2::kGenerators; ++g) visit(f2_neighbor(std::get<NodeId>(x), g), sign);
      break;
    default: {
      const auto& graph = space.graph();
      const auto gi = *graph.find(std::get<NodeId>(x));
      for (auto nb : graph.neighbors(gi)) visit(Point{graph.id(nb)}, sign);
    }
  }
}

double full_degree(const DiscreteSpace& space, const Point& x) {
  switch (space.kind()) {
    case SpaceKind::lattice: return 2.0 * space.lattice_info().dim;
    case SpaceKind::cayley_f2: return metric::f2::kGenerators;
    default: return static_cast<double>(space.graph().degree(*space.graph().find(std::get<NodeId>(x))));
  }
}

void fill_operator(const DiscreteSpace& space, const HamiltonianSpec& spec, TruncatedOperator& op) {
  spec.validate();
  if (spec.hopping.kind == Hopping::Kind::kernel) {
    if (!space.is_lattice()) throw ValidationError("custom hopping kernels need a lattice space");
    for (const auto& o : spec.hopping.offsets) {
      if (static_cast<int>(o.size()) != space.lattice_info().dim) {
        throw ValidationError("kernel offset has wrong dimension");
      }
    }
  }
  if (!spec.potential.shift.empty() && !space.is_lattice() && spec.potential.shift.size() != 1) {
    throw ValidationError("potential shift must have one component on graph spaces");
  }
  for (const auto& x : op.points) {
    if (!space.contains(x)) throw ValidationError("point " + metric::to_string(x) + " is not in the space");
  }
  const std::size_t n = op.points.size();
  const PotentialEvaluator V(spec.potential);
  op.diag.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) op.diag(i) = V(op.points[i]);
  if (spec.hopping.kind == Hopping::Kind::none) {
    op.diagonal_only = true;
    op.matrix.resize(0, 0);
    return;
  }
  std::unordered_map<Point, std::uint32_t, metric::PointHash> index;
  index.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) index.emplace(op.points[i], i);
  op.diagonal_only = false;
  op.matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::uint32_t i = 0; i < n; ++i) {
    op.matrix(i, i) = op.diag(i);
    if (spec.hopping.kind == Hopping::Kind::laplacian) op.matrix(i, i) += full_degree(space, op.points[i]);
    for_each_hop(space, spec.hopping, op.points[i], index, [&](std::uint32_t j, double amp) {
      op.matrix(j, i) += amp;
    });
  }
  op.diag = op.matrix.diagonal();
}

}  // namespace

std::string to_string(Hopping::Kind k) {
  switch (k) {
    case Hopping::Kind::none: return "none";
    case Hopping::Kind::adjacency: return "adjacency";
    case Hopping::Kind::laplacian: return "laplacian";
    case Hopping::Kind::kernel: return "kernel";
  }
  return "unknown";
}

std::string to_string(Potential::Kind k) {
  switch (k) {
    case Potential::Kind::zero: return "zero";
    case Potential::Kind::periodic: return "periodic";
    case Potential::Kind::iid_uniform: return "iid_uniform";
    case Potential::Kind::table: return "table";
    case Potential::Kind::counterexample: return "counterexample";
  }
  return "unknown";
}

void Hopping::validate() const {
  if (kind != Kind::kernel) return;
  if (offsets.size() != amplitudes.size()) throw ValidationError("kernel offsets and amplitudes differ in length");
  if (offsets.empty()) throw ValidationError("kernel needs at least one offset");
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    if (!std::isfinite(amplitudes[i])) throw ValidationError("kernel amplitude is not finite");
    if (offsets[i].size() != offsets[0].size()) throw ValidationError("kernel offsets have mixed dimensions");
    for (std::size_t j = 0; j < i; ++j) {
      if (offsets[j] == offsets[i]) throw ValidationError("duplicate kernel offset");
    }
    const Coords neg = negated(offsets[i]);
    const auto it = std::find(offsets.begin(), offsets.end(), neg);
    if (it == offsets.end()) {
      throw ValidationError("kernel is not symmetric: offset " + metric::to_string(offsets[i]) +
                            " has no mirror");
    }
    if (amplitudes[static_cast<std::size_t>(it - offsets.begin())] != amplitudes[i]) {
      throw ValidationError("kernel is not symmetric: amplitude mismatch at offset " +
                            metric::to_string(offsets[i]));
    }
  }
}

void Potential::validate() const {
  switch (kind) {
    case Kind::periodic: {
      if (period.empty()) throw ValidationError("periodic potential needs a period");
      std::size_t cells = 1;
      for (auto p : period) {
        if (p < 1) throw ValidationError("potential periods must be >= 1");
        cells *= static_cast<std::size_t>(p);
      }
      if (values.size() != cells) throw ValidationError("periodic potential needs one value per cell of the period box");
      for (double v : values) {
        if (!std::isfinite(v)) throw ValidationError("potential value is not finite");
      }
      break;
    }
    case Kind::iid_uniform:
      if (!(std::isfinite(a) && std::isfinite(b) && a <= b)) throw ValidationError("iid potential needs finite a <= b");
      break;
    case Kind::table:
      for (const auto& e : table) {
        if (!std::isfinite(e.second)) throw ValidationError("potential value is not finite");
      }
      break;
    default: break;
  }
}

HamiltonianSpec HamiltonianSpec::shifted(const Coords& n) const {
  HamiltonianSpec s = *this;
  if (s.potential.shift.empty()) {
    s.potential.shift = n;
  } else {
    if (s.potential.shift.size() != n.size()) throw ValidationError("shift has wrong dimension");
    for (std::size_t i = 0; i < n.size(); ++i) s.potential.shift[i] += n[i];
  }
  return s;
}

std::uint64_t site_key(const Point& x) {
  if (const auto* c = std::get_if<Coords>(&x)) {
    std::uint64_t h = mix64(c->size());
    for (auto v : *c) h = mix64(h ^ static_cast<std::uint64_t>(v));
    return h;
  }
  return std::get<NodeId>(x);
}

double potential_value(const Potential& v, const Point& x) { return PotentialEvaluator(v)(x); }

Eigen::MatrixXd TruncatedOperator::dense() const {
  if (diagonal_only) return diag.asDiagonal();
  return matrix;
}

TruncatedOperator build_truncated(const DiscreteSpace& space, const HamiltonianSpec& spec,
                                  double R_outer, const metric::EnumerationOptions& opts) {
  auto ball = metric::ball_points(space, R_outer, opts);
  TruncatedOperator op;
  op.radius = R_outer;
  op.points.reserve(ball.size());
  op.distances.reserve(ball.size());
  op.levels.reserve(ball.size());
  for (auto& e : ball) {
    op.points.push_back(std::move(e.point));
    op.distances.push_back(e.distance);
    op.levels.push_back(e.level);
  }
  if (spec.hopping.kind != Hopping::Kind::none) {
    const double bytes = 8.0 * static_cast<double>(op.size()) * static_cast<double>(op.size());
    if (op.size() > 20000) {
      throw BudgetExceeded("dense truncated operator", static_cast<std::uint64_t>(bytes / 8.0),
                           std::uint64_t{20000} * 20000);
    }
  }
  fill_operator(space, spec, op);
  return op;
}

TruncatedOperator build_on_points(const DiscreteSpace& space, const HamiltonianSpec& spec,
                                  std::vector<Point> points) {
  TruncatedOperator op;
  op.points = std::move(points);
  fill_operator(space, spec, op);
  return op;
}

// ---------------------------------------------------------------- weights

std::string to_string(WeightFunction::Provenance p) {
  switch (p) {
    case WeightFunction::Provenance::default_weight: return "default";
    case WeightFunction::Provenance::lattice_power: return "lattice_power";
    case WeightFunction::Provenance::custom: return "custom";
  }
  return "unknown";
}

double WeightFunction::at_level(std::size_t level) const {
  if (level >= profile.size()) {
    throw ValidationError("weight profile covers " + std::to_string(profile.size()) +
                          " levels, level " + std::to_string(level) + " requested");
  }
  return profile[level];
}

double WeightFunction::at_distance(double r) const {
  if (provenance != Provenance::lattice_power) throw ValidationError("closed form only exists for lattice weights");
  return std::pow(1.0 + r, -static_cast<double>(d));
}

WeightFunction WeightFunction::bound_to(const RadiiLadder& ladder) const {
  if (provenance != Provenance::lattice_power) return *this;
  WeightFunction w = *this;
  w.profile.resize(ladder.size() + 1);
  w.profile[0] = 1.0;
  for (std::size_t k = 0; k < ladder.size(); ++k) w.profile[k + 1] = at_distance(ladder.radii[k]);
  return w;
}

void WeightFunction::validate() const {
  if (profile.empty()) throw ValidationError("weight profile is empty");
  for (std::size_t k = 0; k < profile.size(); ++k) {
    if (!(profile[k] > 0.0) || !std::isfinite(profile[k])) throw ValidationError("weights must be positive and finite");
    if (k > 0 && !(profile[k] < profile[k - 1])) {
      throw ValidationError("weight profile is not strictly decreasing at level " + std::to_string(k));
    }
  }
}

WeightFunction default_weight(const DiscreteSpace&, const RadiiLadder& ladder) {
  WeightFunction w;
  w.provenance = WeightFunction::Provenance::default_weight;
  w.profile.resize(ladder.size() + 1);
  for (std::size_t k = 0; k <= ladder.size(); ++k) {
    w.profile[k] = 1.0 / (1.0 + static_cast<double>(ladder.count_at_level(k)));
  }
  return w;
}

WeightFunction lattice_weight(int d, double p) {
  if (d < 1) throw ValidationError("lattice weight needs d >= 1");
  WeightFunction w;
  w.provenance = WeightFunction::Provenance::lattice_power;
  w.d = d;
  w.p = p;
  return w;
}

WeightFunction lattice_weight(const DiscreteSpace& space) {
  if (!space.is_lattice()) throw ValidationError("lattice weight applied to a non-lattice space");
  return lattice_weight(space.lattice_info().dim, space.lattice_info().p);
}

WeightFunction custom_weight(std::vector<double> profile) {
  WeightFunction w;
  w.provenance = WeightFunction::Provenance::custom;
  w.profile = std::move(profile);
  w.validate();
  return w;
}

WeakL1Report weak_l1_bound(const WeightFunction& w, const RadiiLadder& ladder) {
  const WeightFunction bound = w.bound_to(ladder);
  if (bound.profile.size() < ladder.size() + 1) throw ValidationError("weight profile does not cover the ladder");
  bound.validate();
  WeakL1Report rep;
  for (std::size_t k = 0; k <= ladder.size(); ++k) {
    WeakL1Row row;
    row.level = k;
    row.w = bound.profile[k];
    row.count = ladder.count_at_level(k);
    row.product = row.w * static_cast<double>(row.count);
    rep.C_estimate = std::max(rep.C_estimate, row.product);
    rep.rows.push_back(row);
  }
  const std::size_t first = std::max<std::size_t>(1, ladder.size() / 2);
  if (ladder.size() >= first + 1) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    double m = 0;
    for (std::size_t k = first; k <= ladder.size(); ++k) {
      const double x = std::log(static_cast<double>(rep.rows[k].count));
      const double y = std::log(rep.rows[k].product);
      sx += x; sy += y; sxx += x * x; sxy += x * y; m += 1;
    }
    const double den = m * sxx - sx * sx;
    rep.tail_growth_exponent = den > 0 ? (m * sxy - sx * sy) / den : 0.0;
  }
  rep.nonmembership_trend = rep.tail_growth_exponent > kWeakL1GrowthFlag;
  return rep;
}

Eigen::VectorXd weights_on(const TruncatedOperator& op, const WeightFunction& w) {
  if (op.levels.size() != op.size()) throw ValidationError("operator carries no ladder levels");
  Eigen::VectorXd v(static_cast<Eigen::Index>(op.size()));
  for (std::size_t i = 0; i < op.size(); ++i) {
    if (w.provenance == WeightFunction::Provenance::lattice_power && w.profile.empty()) {
      v(i) = w.at_distance(op.distances[i]);
    } else {
      v(i) = w.at_level(op.levels[i]);
    }
    if (!(v(i) > 0.0)) throw ValidationError("weight must be positive on the ball");
  }
  return v;
}

}  // namespace doslab::ham
