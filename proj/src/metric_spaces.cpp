#include "doslab/metric_spaces.hpp"

#include "doslab/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <numeric>
#include <queue>
#include <sstream>

namespace doslab {

std::uint64_t default_point_budget() {
  if (const char* env = std::getenv("DOSLAB_BUDGET")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return v;
  }
  return kBuiltinPointBudget;
}

}  // namespace doslab

namespace doslab::metric {

namespace {

bool is_exact_norm(double p) { return p == 1.0 || p == 2.0 || std::isinf(p); }

// Exact integer key of a lattice offset: l1 sum, squared l2 sum or l_inf max.
std::int64_t exact_key(std::span<const std::int64_t> v, double p) {
  std::int64_t key = 0;
  if (p == 1.0) {
    for (auto x : v) key += std::llabs(x);
  } else if (p == 2.0) {
    for (auto x : v) key += x * x;
  } else {
    for (auto x : v) key = std::max<std::int64_t>(key, std::llabs(x));
  }
  return key;
}

double key_to_distance(std::int64_t key, double p) {
  return p == 2.0 ? std::sqrt(static_cast<double>(key)) : static_cast<double>(key);
}

// Largest exact key whose distance does not exceed `radius`.
std::int64_t key_limit(double radius, double p) {
  if (p == 2.0) {
    const double r2 = radius * radius;
    return static_cast<std::int64_t>(std::floor(r2 + 1e-9 * std::max(1.0, r2)));
  }
  return static_cast<std::int64_t>(std::floor(radius + 1e-9 * std::max(1.0, radius)));
}

// Permutation- and sign-invariant generic l_p distance.
double generic_norm(std::span<const std::int64_t> v, double p) {
  std::vector<double> a(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) a[i] = std::fabs(static_cast<double>(v[i]));
  std::sort(a.begin(), a.end());
  double s = 0.0;
  for (double x : a) s += std::pow(x, p);
  return std::pow(s, 1.0 / p);
}

bool same_radius(double a, double b) { return std::fabs(a - b) <= 1e-9 * std::max(1.0, std::fabs(b)); }

std::uint64_t checked_box_size(int dim, std::int64_t half_width, std::uint64_t budget) {
  const double side = 2.0 * static_cast<double>(half_width) + 1.0;
  const double total = std::pow(side, dim);
  if (total > static_cast<double>(budget)) {
    throw BudgetExceeded("lattice enumeration box of half-width " + std::to_string(half_width),
                         total > 1.8e19 ? std::numeric_limits<std::uint64_t>::max()
                                        : static_cast<std::uint64_t>(total),
                         budget);
  }
  return static_cast<std::uint64_t>(total);
}

// Visits every offset in [-m, m]^dim in lexicographic order.
template <class F>
void for_each_offset(int dim, std::int64_t m, F&& f) {
  std::vector<std::int64_t> v(dim, -m);
  while (true) {
    f(std::span<const std::int64_t>(v));
    int i = dim - 1;
    while (i >= 0 && v[i] == m) {
      v[i] = -m;
      --i;
    }
    if (i < 0) break;
    ++v[i];
  }
}

// (radius, count) per realized radius <= half_width, including radius 0.
std::vector<std::pair<double, std::uint64_t>> lattice_levels(const LatticeInfo& info,
                                                             std::int64_t half_width,
                                                             std::uint64_t budget,
                                                             double max_distance = -1.0) {
  checked_box_size(info.dim, half_width, budget);
  // The box of half-width floor(r) holds every point at distance <= r.
  if (max_distance < 0.0) max_distance = static_cast<double>(half_width);
  std::vector<std::pair<double, std::uint64_t>> out;
  if (info.dim == 1) {
    // Every p-norm is |x|; each integer distance is realized twice.
    const auto r = std::min<std::int64_t>(half_width, key_limit(max_distance, 1.0));
    out.emplace_back(0.0, 1);
    for (std::int64_t k = 1; k <= r; ++k) out.emplace_back(static_cast<double>(k), 2);
    return out;
  }
  if (is_exact_norm(info.p)) {
    const std::int64_t limit = key_limit(max_distance, info.p);
    std::vector<std::uint64_t> hist(static_cast<std::size_t>(limit) + 1, 0);
    for_each_offset(info.dim, half_width, [&](std::span<const std::int64_t> v) {
      const std::int64_t k = exact_key(v, info.p);
      if (k <= limit) ++hist[static_cast<std::size_t>(k)];
    });
    for (std::size_t k = 0; k < hist.size(); ++k) {
      if (hist[k] > 0) out.emplace_back(key_to_distance(static_cast<std::int64_t>(k), info.p), hist[k]);
    }
    return out;
  }
  std::vector<double> dists;
  const double limit = max_distance * (1.0 + 1e-9);
  for_each_offset(info.dim, half_width, [&](std::span<const std::int64_t> v) {
    const double d = generic_norm(v, info.p);
    if (d <= limit) dists.push_back(d);
  });
  std::sort(dists.begin(), dists.end());
  for (double d : dists) {
    if (!out.empty() && same_radius(d, out.back().first)) {
      ++out.back().second;
    } else {
      out.emplace_back(d, 1);
    }
  }
  return out;
}

RadiiLadder ladder_from_levels(const std::vector<std::pair<double, std::uint64_t>>& levels,
                               std::size_t k_max) {
  RadiiLadder ladder;
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    total += levels[i].second;
    if (i == 0) continue;  // radius 0: the base point
    if (ladder.size() == k_max) break;
    ladder.push(levels[i].first, total);
  }
  return ladder;
}

std::size_t common_prefix(const std::vector<int>& a, const std::vector<int>& b) {
  std::size_t i = 0;
  while (i < a.size() && i < b.size() && a[i] == b[i]) ++i;
  return i;
}

std::uint64_t pow3(std::size_t k) {
  std::uint64_t r = 1;
  for (std::size_t i = 0; i < k; ++i) r *= 3;
  return r;
}

// |B(e, len - 1)| in F2, i.e. the first id of a word of length len.
std::uint64_t f2_offset(std::size_t len) { return len == 0 ? 0 : 2 * pow3(len - 1) - 1; }

}  // namespace

std::size_t PointHash::operator()(const Point& p) const noexcept {
  if (const auto* c = std::get_if<Coords>(&p)) {
    std::uint64_t h = 0x51ed270b27a1d2c5ULL;
    for (auto x : *c) h = mix64(h ^ static_cast<std::uint64_t>(x));
    return static_cast<std::size_t>(h);
  }
  return static_cast<std::size_t>(mix64(std::get<NodeId>(p)));
}

std::string to_string(const Point& p) {
  if (const auto* c = std::get_if<Coords>(&p)) {
    std::string s = "(";
    for (std::size_t i = 0; i < c->size(); ++i) {
      if (i) s += ",";
      s += std::to_string((*c)[i]);
    }
    return s + ")";
  }
  return std::to_string(std::get<NodeId>(p));
}

std::string to_string(SpaceKind kind) {
  switch (kind) {
    case SpaceKind::lattice: return "lattice";
    case SpaceKind::graph: return "graph";
    case SpaceKind::cayley_f2: return "cayley_f2";
    case SpaceKind::percolation_cluster: return "percolation_cluster";
  }
  return "unknown";
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "unknown";
}

// ---------------------------------------------------------------- Graph

Graph::Graph(std::vector<NodeId> ids, const std::vector<std::pair<NodeId, NodeId>>& edges)
    : ids_(std::move(ids)) {
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
  if (ids_.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw ValidationError("graph too large for 32-bit vertex indices");
  }
  index_.reserve(ids_.size());
  for (std::uint32_t i = 0; i < ids_.size(); ++i) index_.emplace(ids_[i], i);

  std::vector<std::pair<std::uint32_t, std::uint32_t>> arcs;
  arcs.reserve(2 * edges.size());
  for (const auto& [u, v] : edges) {
    if (u == v) continue;
    const auto iu = find(u);
    const auto iv = find(v);
    if (!iu || !iv) throw ValidationError("edge references a vertex outside the graph");
    arcs.emplace_back(*iu, *iv);
    arcs.emplace_back(*iv, *iu);
  }
  std::sort(arcs.begin(), arcs.end());
  arcs.erase(std::unique(arcs.begin(), arcs.end()), arcs.end());
  offsets_.assign(ids_.size() + 1, 0);
  for (const auto& a : arcs) ++offsets_[a.first + 1];
  std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
  targets_.resize(arcs.size());
  for (std::size_t i = 0; i < arcs.size(); ++i) targets_[i] = arcs[i].second;
}

std::optional<std::uint32_t> Graph::find(NodeId id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::span<const std::uint32_t> Graph::neighbors(std::uint32_t index) const {
  return {targets_.data() + offsets_[index], targets_.data() + offsets_[index + 1]};
}

std::vector<std::int32_t> Graph::bfs(std::uint32_t source) const {
  std::vector<std::int32_t> dist(ids_.size(), -1);
  std::vector<std::uint32_t> frontier{source};
  std::vector<std::uint32_t> next;
  dist[source] = 0;
  std::int32_t level = 0;
  while (!frontier.empty()) {
    ++level;
    next.clear();
    for (auto u : frontier) {
      for (auto v : neighbors(u)) {
        if (dist[v] < 0) {
          dist[v] = level;
          next.push_back(v);
        }
      }
    }
    frontier.swap(next);
  }
  return dist;
}

Coords BoxGeometry::coords_of(NodeId id) const {
  Coords c(dim);
  for (int i = dim - 1; i >= 0; --i) {
    c[i] = static_cast<std::int64_t>(id % static_cast<NodeId>(side));
    id /= static_cast<NodeId>(side);
  }
  return c;
}

NodeId BoxGeometry::id_of(const Coords& c) const {
  NodeId id = 0;
  for (int i = 0; i < dim; ++i) id = id * static_cast<NodeId>(side) + static_cast<NodeId>(c[i]);
  return id;
}

// -------------------------------------------------------- DiscreteSpace

DiscreteSpace DiscreteSpace::lattice(int dim, double p, Coords base) {
  if (dim < 1) throw ValidationError("lattice dimension must be >= 1");
  if (!(p >= 1.0)) throw ValidationError("lattice norm index p must lie in [1, inf]");
  if (base.empty()) base.assign(dim, 0);
  if (static_cast<int>(base.size()) != dim) throw ValidationError("base point has wrong dimension");
  DiscreteSpace s;
  s.kind_ = SpaceKind::lattice;
  s.lattice_ = LatticeInfo{dim, p, base};
  s.base_ = std::move(base);
  return s;
}

DiscreteSpace DiscreteSpace::graph(std::shared_ptr<const Graph> g, NodeId base, SpaceKind kind,
                                   std::optional<BoxGeometry> box) {
  if (kind != SpaceKind::graph && kind != SpaceKind::percolation_cluster) {
    throw ValidationError("graph spaces must have graph or percolation_cluster kind");
  }
  const auto idx = g->find(base);
  if (!idx) throw ValidationError("base node " + std::to_string(base) + " is not in the graph");
  DiscreteSpace s;
  s.kind_ = kind;
  s.base_ = base;
  s.base_index_ = *idx;
  s.base_dist_ = std::make_shared<const std::vector<std::int32_t>>(g->bfs(*idx));
  s.graph_ = std::move(g);
  s.box_ = box;
  return s;
}

DiscreteSpace DiscreteSpace::free_group() {
  DiscreteSpace s;
  s.kind_ = SpaceKind::cayley_f2;
  s.base_ = NodeId{0};
  return s;
}

const LatticeInfo& DiscreteSpace::lattice_info() const {
  if (kind_ != SpaceKind::lattice) throw ValidationError("space is not a lattice");
  return lattice_;
}

const Graph& DiscreteSpace::graph() const {
  if (!graph_) throw ValidationError("space is not a graph");
  return *graph_;
}

std::optional<std::size_t> DiscreteSpace::size() const {
  if (graph_) return graph_->size();
  return std::nullopt;
}

std::uint32_t DiscreteSpace::base_index() const {
  if (!graph_) throw ValidationError("space is not a graph");
  return base_index_;
}

const std::vector<std::int32_t>& DiscreteSpace::base_distances() const {
  if (!base_dist_) throw ValidationError("space is not a graph");
  return *base_dist_;
}

bool DiscreteSpace::contains(const Point& x) const {
  switch (kind_) {
    case SpaceKind::lattice: {
      const auto* c = std::get_if<Coords>(&x);
      return c && static_cast<int>(c->size()) == lattice_.dim;
    }
    case SpaceKind::cayley_f2: return std::holds_alternative<NodeId>(x);
    default: {
      const auto* id = std::get_if<NodeId>(&x);
      return id && graph_->find(*id).has_value();
    }
  }
}

double DiscreteSpace::distance(const Point& x, const Point& y) const {
  if (!contains(x) || !contains(y)) throw ValidationError("point does not belong to the space");
  switch (kind_) {
    case SpaceKind::lattice: {
      const auto& a = std::get<Coords>(x);
      const auto& b = std::get<Coords>(y);
      std::vector<std::int64_t> v(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i] - b[i];
      if (is_exact_norm(lattice_.p)) return key_to_distance(exact_key(v, lattice_.p), lattice_.p);
      return generic_norm(v, lattice_.p);
    }
    case SpaceKind::cayley_f2: {
      const auto a = f2::decode(std::get<NodeId>(x));
      const auto b = f2::decode(std::get<NodeId>(y));
      return static_cast<double>(a.size() + b.size() - 2 * common_prefix(a, b));
    }
    default: {
      const auto ix = *graph_->find(std::get<NodeId>(x));
      const auto iy = *graph_->find(std::get<NodeId>(y));
      if (ix == base_index_) return (*base_dist_)[iy];
      if (iy == base_index_) return (*base_dist_)[ix];
      const auto d = graph_->bfs(ix)[iy];
      if (d < 0) throw ValidationError("points lie in different components");
      return d;
    }
  }
}

double DiscreteSpace::distance_to_base(const Point& x) const { return distance(base_, x); }

std::string DiscreteSpace::describe() const {
  std::ostringstream os;
  os << to_string(kind_);
  switch (kind_) {
    case SpaceKind::lattice:
      os << "(d=" << lattice_.dim << ",p=" << (std::isinf(lattice_.p) ? std::string("inf")
                                                                       : std::to_string(lattice_.p))
         << ",base=" << to_string(base_) << ")";
      break;
    case SpaceKind::cayley_f2: os << "(generators=2)"; break;
    default:
      os << "(vertices=" << graph_->size() << ",base=" << to_string(base_);
      if (box_) os << ",box_dim=" << box_->dim << ",box_side=" << box_->side;
      os << ")";
  }
  return os.str();
}

// ---------------------------------------------------------------- F2 codec

namespace f2 {

namespace {
int inverse(int g) { return g ^ 1; }
}  // namespace

std::size_t word_length(NodeId id) {
  std::size_t len = 0;
  while (f2_offset(len + 1) <= id) ++len;
  return len;
}

std::vector<int> decode(NodeId id) {
  const std::size_t len = word_length(id);
  std::vector<int> word(len);
  if (len == 0) return word;
  std::uint64_t rank = id - f2_offset(len);
  std::vector<int> digits(len);
  for (std::size_t i = len; i-- > 1;) {
    digits[i] = static_cast<int>(rank % 3);
    rank /= 3;
  }
  digits[0] = static_cast<int>(rank);
  word[0] = digits[0];
  for (std::size_t i = 1; i < len; ++i) {
    // The allowed letters are those != inverse(previous), in increasing order.
    int choice = digits[i];
    int letter = 0;
    for (;; ++letter) {
      if (letter == inverse(word[i - 1])) continue;
      if (choice-- == 0) break;
    }
    word[i] = letter;
  }
  return word;
}

NodeId encode(std::span<const int> word) {
  const std::size_t len = word.size();
  if (len == 0) return 0;
  std::uint64_t rank = static_cast<std::uint64_t>(word[0]);
  for (std::size_t i = 1; i < len; ++i) {
    if (word[i] == inverse(word[i - 1])) throw ValidationError("word is not reduced");
    const int digit = word[i] - (word[i] > inverse(word[i - 1]) ? 1 : 0);
    rank = rank * 3 + static_cast<std::uint64_t>(digit);
  }
  return f2_offset(len) + rank;
}

}  // namespace f2

// ---------------------------------------------------------- ball_points

std::vector<BallEntry> ball_points(const DiscreteSpace& space, double radius,
                                   const EnumerationOptions& opts) {
  if (!(radius >= 0.0)) throw ValidationError("radius must be nonnegative");
  std::vector<BallEntry> out;
  switch (space.kind()) {
    case SpaceKind::lattice: {
      const auto& info = space.lattice_info();
      const auto m = static_cast<std::int64_t>(std::floor(radius + 1e-9 * std::max(1.0, radius)));
      checked_box_size(info.dim, m, opts.budget);
      struct Item {
        std::int64_t key;
        double dist;
        Coords c;
      };
      std::vector<Item> items;
      const bool exact = is_exact_norm(info.p);
      const std::int64_t limit = exact ? key_limit(radius, info.p) : 0;
      const double dlimit = radius * (1.0 + 1e-9) + 1e-12;
      for_each_offset(info.dim, m, [&](std::span<const std::int64_t> v) {
        Coords c(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) c[i] = info.base[i] + v[i];
        if (exact) {
          const auto k = exact_key(v, info.p);
          if (k <= limit) items.push_back({k, key_to_distance(k, info.p), std::move(c)});
        } else {
          const double d = generic_norm(v, info.p);
          if (d <= dlimit) items.push_back({0, d, std::move(c)});
        }
      });
      std::sort(items.begin(), items.end(), [&](const Item& a, const Item& b) {
        if (exact ? a.key != b.key : a.dist != b.dist) return exact ? a.key < b.key : a.dist < b.dist;
        return a.c < b.c;
      });
      out.reserve(items.size());
      std::uint32_t level = 0;
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) {
          const bool fresh = exact ? items[i].key != items[i - 1].key
                                   : !same_radius(items[i].dist, items[i - 1].dist);
          if (fresh) ++level;
        }
        out.push_back({std::move(items[i].c), items[i].dist, level});
      }
      return out;
    }
    case SpaceKind::cayley_f2: {
      const auto len = static_cast<std::size_t>(std::floor(radius + 1e-9));
      if (len > 39) throw BudgetExceeded("free-group ball", std::numeric_limits<std::uint64_t>::max(), opts.budget);
      const std::uint64_t count = f2_offset(len + 1);
      if (count > opts.budget) throw BudgetExceeded("free-group ball", count, opts.budget);
      out.reserve(count);
      for (NodeId id = 0; id < count; ++id) {
        const auto l = f2::word_length(id);
        out.push_back({id, static_cast<double>(l), static_cast<std::uint32_t>(l)});
      }
      return out;
    }
    default: {
      const auto& g = space.graph();
      const auto& dist = space.base_distances();
      const auto r = static_cast<std::int64_t>(std::floor(radius + 1e-9));
      std::vector<std::uint32_t> idx;
      for (std::uint32_t i = 0; i < g.size(); ++i) {
        if (dist[i] >= 0 && dist[i] <= r) idx.push_back(i);
      }
      if (idx.size() > opts.budget) throw BudgetExceeded("graph ball", idx.size(), opts.budget);
      std::sort(idx.begin(), idx.end(), [&](auto a, auto b) {
        return dist[a] != dist[b] ? dist[a] < dist[b] : a < b;
      });
      out.reserve(idx.size());
      for (auto i : idx) {
        out.push_back({g.id(i), static_cast<double>(dist[i]), static_cast<std::uint32_t>(dist[i])});
      }
      return out;
    }
  }
}

// ----------------------------------------------------------- RadiiLadder

void RadiiLadder::push(double radius, std::uint64_t count) {
  const std::uint64_t prev = ball_counts.empty() ? 1 : ball_counts.back();
  radii.push_back(radius);
  ball_counts.push_back(count);
  shell_counts.push_back(count - prev);
}

void RadiiLadder::validate() const {
  if (radii.size() != ball_counts.size() || radii.size() != shell_counts.size()) {
    throw ValidationError("ladder columns have different lengths");
  }
  std::uint64_t prev_count = 1;
  double prev_radius = 0.0;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (!(radii[k] > prev_radius)) throw ValidationError("ladder radii must be strictly increasing");
    if (ball_counts[k] <= prev_count) throw ValidationError("ladder counts must be strictly increasing");
    if (shell_counts[k] != ball_counts[k] - prev_count) throw ValidationError("shell counts inconsistent");
    prev_radius = radii[k];
    prev_count = ball_counts[k];
  }
}

RadiiLadder radii_ladder(const DiscreteSpace& space, std::size_t k_max,
                         const EnumerationOptions& opts) {
  if (k_max < 1) throw ValidationError("k_max must be >= 1");
  switch (space.kind()) {
    case SpaceKind::lattice: {
      const auto& info = space.lattice_info();
      std::int64_t m = static_cast<std::int64_t>(k_max);
      if (info.dim > 1 && !(info.p == 1.0 || std::isinf(info.p))) {
        m = static_cast<std::int64_t>(std::ceil(std::sqrt(static_cast<double>(k_max)))) + 1;
      }
      RadiiLadder best;
      while (true) {
        std::vector<std::pair<double, std::uint64_t>> levels;
        try {
          levels = lattice_levels(info, m, opts.budget);
        } catch (const BudgetExceeded& e) {
          throw PartialLadderError(std::string("point budget exceeded: ") + e.what(), best);
        }
        best = ladder_from_levels(levels, k_max);
        if (best.size() >= k_max) return best;
        m *= 2;
      }
    }
    case SpaceKind::cayley_f2: {
      // Shell sizes by breadth-first expansion aggregated over the last letter.
      RadiiLadder ladder;
      std::array<std::uint64_t, 4> by_last{1, 1, 1, 1};
      std::uint64_t total = 1;
      for (std::size_t k = 1; k <= k_max; ++k) {
        std::array<std::uint64_t, 4> next{};
        if (k == 1) {
          next = {1, 1, 1, 1};
        } else {
          for (int g = 0; g < 4; ++g) {
            for (int prev = 0; prev < 4; ++prev) {
              if (prev != (g ^ 1)) next[g] += by_last[prev];
            }
          }
        }
        by_last = next;
        const std::uint64_t shell = next[0] + next[1] + next[2] + next[3];
        if (total + shell > opts.budget) {
          throw PartialLadderError("point budget exceeded at radius " + std::to_string(k), ladder);
        }
        total += shell;
        ladder.push(static_cast<double>(k), total);
      }
      return ladder;
    }
    default: {
      const auto& dist = space.base_distances();
      std::vector<std::uint64_t> layer;
      for (auto d : dist) {
        if (d < 0) continue;
        if (static_cast<std::size_t>(d) >= layer.size()) layer.resize(d + 1, 0);
        ++layer[d];
      }
      RadiiLadder ladder;
      std::uint64_t total = layer.empty() ? 0 : layer[0];
      for (std::size_t k = 1; k < layer.size() && ladder.size() < k_max; ++k) {
        total += layer[k];
        if (total > opts.budget) {
          throw PartialLadderError("point budget exceeded at radius " + std::to_string(k), ladder);
        }
        ladder.push(static_cast<double>(k), total);
      }
      if (ladder.size() < k_max) {
        throw PartialLadderError("finite space exhausted before k_max radii", ladder);
      }
      return ladder;
    }
  }
}

RadiiLadder radii_ladder_to_radius(const DiscreteSpace& space, double radius,
                                   const EnumerationOptions& opts) {
  if (!(radius >= 0.0)) throw ValidationError("radius must be nonnegative");
  switch (space.kind()) {
    case SpaceKind::lattice: {
      const auto& info = space.lattice_info();
      const auto m = static_cast<std::int64_t>(std::floor(radius + 1e-9 * std::max(1.0, radius)));
      const auto levels = lattice_levels(info, m, opts.budget, radius);
      RadiiLadder ladder = ladder_from_levels(levels, levels.size());
      while (!ladder.radii.empty() && ladder.radii.back() > radius * (1.0 + 1e-9) + 1e-12) {
        ladder.radii.pop_back();
        ladder.ball_counts.pop_back();
        ladder.shell_counts.pop_back();
      }
      return ladder;
    }
    case SpaceKind::cayley_f2:
      return radii_ladder(space, static_cast<std::size_t>(std::floor(radius + 1e-9)), opts);
    default: {
      const auto& dist = space.base_distances();
      const auto r = static_cast<std::int64_t>(std::floor(radius + 1e-9));
      std::vector<std::uint64_t> layer(static_cast<std::size_t>(r) + 1, 0);
      for (auto d : dist) {
        if (d >= 0 && d <= r) ++layer[d];
      }
      RadiiLadder ladder;
      std::uint64_t total = layer[0];
      for (std::size_t k = 1; k < layer.size() && layer[k] > 0; ++k) {
        total += layer[k];
        ladder.push(static_cast<double>(k), total);
      }
      if (total > opts.budget) throw BudgetExceeded("graph ball", total, opts.budget);
      return ladder;
    }
  }
}

std::vector<std::uint64_t> coordination_sequence(const RadiiLadder& ladder) {
  std::vector<std::uint64_t> s(ladder.size());
  std::uint64_t prev = 1;
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    s[k] = ladder.ball_counts[k] - prev;
    prev = ladder.ball_counts[k];
  }
  return s;
}

// ------------------------------------------------------- condition (C)

CRatioReport condition_c_report(const RadiiLadder& ladder, double tail_fraction,
                                double threshold) {
  if (ladder.size() < 10) throw ValidationError("condition (C) report needs a ladder with >= 10 entries");
  if (!(tail_fraction > 0.0 && tail_fraction < 1.0)) throw ValidationError("tail_fraction must lie in (0,1)");
  if (!(threshold > 0.0 && threshold < 1.0)) throw ValidationError("threshold must lie in (0,1)");
  CRatioReport rep;
  rep.threshold = threshold;
  rep.tail_fraction = tail_fraction;
  const std::size_t n = ladder.size() - 1;
  rep.ratios.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    rep.ratios[k] = static_cast<double>(ladder.ball_counts[k + 1]) /
                    static_cast<double>(ladder.ball_counts[k]);
  }
  const auto tail_len = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(n))));
  rep.tail_begin = n - std::min(tail_len, n);
  rep.tail_end = n;
  rep.max_tail_deviation = 0.0;
  rep.min_tail_deviation = std::numeric_limits<double>::infinity();
  for (std::size_t i = rep.tail_begin; i < rep.tail_end; ++i) {
    const double dev = std::fabs(rep.ratios[i] - 1.0);
    rep.max_tail_deviation = std::max(rep.max_tail_deviation, dev);
    rep.min_tail_deviation = std::min(rep.min_tail_deviation, dev);
  }
  rep.tail_ratio = rep.ratios.back();

  // Dyadic sub-windows in the 1-based ratio index k: [K/8,K/4), [K/4,K/2), [K/2,K).
  const std::size_t K = ladder.size();
  const std::array<std::size_t, 4> edges{std::max<std::size_t>(1, K / 8), K / 4, K / 2, K};
  for (std::size_t w = 0; w < 3; ++w) {
    double m = 0.0;
    for (std::size_t k = edges[w]; k < edges[w + 1]; ++k) {
      m = std::max(m, std::fabs(rep.ratios[k - 1] - 1.0));
    }
    rep.subwindow_max[w] = m;
  }
  rep.trend_nonincreasing =
      rep.subwindow_max[0] >= rep.subwindow_max[1] && rep.subwindow_max[1] >= rep.subwindow_max[2];

  if (rep.max_tail_deviation <= threshold && rep.trend_nonincreasing) {
    rep.verdict = Verdict::pass;
  } else if (rep.min_tail_deviation > threshold &&
             rep.subwindow_max[2] > 0.75 * rep.subwindow_max[1]) {
    rep.verdict = Verdict::fail;
  } else {
    rep.verdict = Verdict::inconclusive;
  }
  return rep;
}

// ------------------------------------------------------- quasi-polynomial

double QuasiPolyFit::evaluate(std::size_t k) const {
  const auto& c = coefficients[k % period];
  double v = 0.0;
  for (double a : c) v = v * static_cast<double>(k) + a;
  return v;
}

QuasiPolyFit quasi_poly_fit(std::span<const double> coord, std::size_t period, std::size_t degree) {
  if (period < 1) throw ValidationError("period must be >= 1");
  if (coord.size() < period * (degree + 2)) {
    throw ValidationError("quasi-polynomial fit underdetermined: need at least period*(degree+2) terms");
  }
  QuasiPolyFit fit;
  fit.period = period;
  fit.degree = degree;
  fit.fit_first_k = period * (degree + 1) + 1;
  fit.fit_last_k = coord.size();
  fit.coefficients.assign(period, std::vector<double>(degree + 1, 0.0));
  const double scale = static_cast<double>(fit.fit_last_k);
  for (std::size_t r = 0; r < period; ++r) {
    std::vector<std::size_t> ks;
    for (std::size_t k = fit.fit_first_k; k <= fit.fit_last_k; ++k) {
      if (k % period == r) ks.push_back(k);
    }
    if (ks.size() < degree + 1) {
      throw ValidationError("quasi-polynomial fit underdetermined for residue class " + std::to_string(r));
    }
    Eigen::MatrixXd A(ks.size(), degree + 1);
    Eigen::VectorXd b(ks.size());
    for (std::size_t i = 0; i < ks.size(); ++i) {
      const double x = static_cast<double>(ks[i]) / scale;
      for (std::size_t j = 0; j <= degree; ++j) A(i, j) = std::pow(x, static_cast<double>(degree - j));
      b(i) = coord[ks[i] - 1];
    }
    const Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
    for (std::size_t j = 0; j <= degree; ++j) {
      fit.coefficients[r][j] = c(j) / std::pow(scale, static_cast<double>(degree - j));
    }
  }
  for (std::size_t k = fit.fit_first_k; k <= fit.fit_last_k; ++k) {
    fit.max_residual = std::max(fit.max_residual, std::fabs(coord[k - 1] - fit.evaluate(k)));
  }
  return fit;
}

QuasiPolyFit quasi_poly_fit(std::span<const std::uint64_t> coord, std::size_t period,
                            std::size_t degree) {
  std::vector<double> v(coord.begin(), coord.end());
  return quasi_poly_fit(std::span<const double>(v), period, degree);
}

// ------------------------------------------------------------- ingestion

DiscreteSpace ingest_graph(std::istream& in, NodeId base) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::string a, b, extra;
    if (!(ls >> a >> b) || (ls >> extra)) throw ParseError("expected exactly two node ids", lineno);
    auto parse_id = [&](const std::string& tok) {
      if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos) {
        throw ParseError("'" + tok + "' is not a nonnegative integer", lineno);
      }
      try {
        return static_cast<NodeId>(std::stoull(tok));
      } catch (const std::exception&) {
        throw ParseError("'" + tok + "' is out of range", lineno);
      }
    };
    edges.emplace_back(parse_id(a), parse_id(b));
  }

  std::unordered_map<NodeId, std::vector<NodeId>> adj;
  for (const auto& [u, v] : edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  if (!adj.contains(base)) {
    throw ValidationError("base node " + std::to_string(base) + " does not occur in the edge list");
  }
  std::unordered_map<NodeId, bool> seen{{base, true}};
  std::vector<NodeId> component{base};
  std::queue<NodeId> q;
  q.push(base);
  while (!q.empty()) {
    const NodeId u = q.front();
    q.pop();
    for (NodeId v : adj[u]) {
      if (seen.emplace(v, true).second) {
        component.push_back(v);
        q.push(v);
      }
    }
  }
  std::vector<std::pair<NodeId, NodeId>> kept;
  for (const auto& e : edges) {
    if (seen.contains(e.first)) kept.push_back(e);
  }
  auto g = std::make_shared<const Graph>(std::move(component), kept);
  return DiscreteSpace::graph(std::move(g), base);
}

DiscreteSpace ingest_graph_file(const std::string& path, NodeId base) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open edge list '" + path + "'");
  return ingest_graph(in, base);
}

DiscreteSpace path_graph(NodeId first, NodeId last, NodeId base) {
  if (last < first) throw ValidationError("path graph needs first <= last");
  std::vector<NodeId> ids;
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId i = first; i <= last; ++i) {
    ids.push_back(i);
    if (i > first) edges.emplace_back(i - 1, i);
  }
  return DiscreteSpace::graph(std::make_shared<const Graph>(std::move(ids), edges), base);
}

}  // namespace doslab::metric
