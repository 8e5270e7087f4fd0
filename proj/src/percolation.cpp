#include "doslab/percolation.hpp"

#include "doslab/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

namespace doslab::perc {

namespace {

constexpr char kMagic[8] = {'D', 'L', 'P', 'E', 'R', 'C', '0', '1'};

std::vector<std::uint64_t> strides(int d, std::int64_t L) {
  std::vector<std::uint64_t> s(d, 1);
  for (int a = d - 2; a >= 0; --a) s[a] = s[a + 1] * static_cast<std::uint64_t>(L);
  return s;
}

std::uint32_t find_root(std::vector<std::uint32_t>& parent, std::uint32_t x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw Error("truncated percolation sample");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

// Axis coordinate of a vertex id.
std::int64_t coord(std::uint64_t id, const std::vector<std::uint64_t>& s, std::int64_t L, int axis) {
  return static_cast<std::int64_t>((id / s[axis]) % static_cast<std::uint64_t>(L));
}

}  // namespace

std::uint64_t PercolationSample::vertex_count() const {
  std::uint64_t n = 1;
  for (int i = 0; i < d; ++i) n *= static_cast<std::uint64_t>(L);
  return n;
}

bool PercolationSample::edge_exists(std::uint64_t edge) const {
  const auto s = strides(d, L);
  const std::uint64_t v = edge / static_cast<std::uint64_t>(d);
  const int axis = static_cast<int>(edge % static_cast<std::uint64_t>(d));
  return v < vertex_count() && coord(v, s, L, axis) < L - 1;
}

std::uint64_t PercolationSample::open_edge_count() const {
  std::uint64_t c = 0;
  for (auto w : open_bits) c += static_cast<std::uint64_t>(std::popcount(w));
  return c;
}

PercolationSample percolate_bonds(int d, std::int64_t L, double p, std::uint64_t seed, std::uint64_t budget) {
  if (d < 2) throw ValidationError("bond percolation needs d >= 2");
  if (L < 1) throw ValidationError("box side must be >= 1");
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("p must lie in [0, 1]");
  const double edges = static_cast<double>(d) * std::pow(static_cast<double>(L), d);
  if (edges > static_cast<double>(budget) || edges > 4.0e9) {
    throw BudgetExceeded("percolation box edges", static_cast<std::uint64_t>(std::min(edges, 1.8e19)), budget);
  }
  PercolationSample s;
  s.d = d;
  s.L = L;
  s.p = p;
  s.seed = seed;
  const std::uint64_t n = s.vertex_count();
  const auto st = strides(d, L);
  s.open_bits.assign((n * static_cast<std::uint64_t>(d) + 63) / 64, 0);
  for (std::uint64_t v = 0; v < n; ++v) {
    for (int a = 0; a < d; ++a) {
      if (coord(v, st, L, a) == L - 1) continue;
      const std::uint64_t e = v * static_cast<std::uint64_t>(d) + static_cast<std::uint64_t>(a);
      if (uniform01(seed, e) < p) s.open_bits[e >> 6] |= 1ULL << (e & 63);
    }
  }
  label_clusters(s);
  return s;
}

void label_clusters(PercolationSample& s) {
  const std::uint64_t n = s.vertex_count();
  if (n > 0xffffffffULL) throw ValidationError("box too large for 32-bit labels");
  const auto st = strides(s.d, s.L);
  std::vector<std::uint32_t> parent(n);
  for (std::uint32_t v = 0; v < n; ++v) parent[v] = v;
  for (std::uint64_t v = 0; v < n; ++v) {
    for (int a = 0; a < s.d; ++a) {
      const std::uint64_t e = v * static_cast<std::uint64_t>(s.d) + static_cast<std::uint64_t>(a);
      if (!s.is_open(e)) continue;
      const std::uint32_t ra = find_root(parent, static_cast<std::uint32_t>(v));
      const std::uint32_t rb = find_root(parent, static_cast<std::uint32_t>(v + st[a]));
      // Linking the larger root under the smaller keeps every root the minimum of its set.
      if (ra < rb) parent[rb] = ra;
      else if (rb < ra) parent[ra] = rb;
    }
  }
  s.labels.resize(n);
  for (std::uint32_t v = 0; v < n; ++v) s.labels[v] = find_root(parent, v);
}

std::vector<ClusterSummary> cluster_sizes(const PercolationSample& s) {
  std::vector<std::uint64_t> count(s.labels.size(), 0);
  for (auto l : s.labels) ++count[l];
  std::vector<ClusterSummary> out;
  for (std::uint32_t v = 0; v < count.size(); ++v) {
    if (count[v] > 0) out.push_back({v, count[v]});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.size != b.size ? a.size > b.size : a.label < b.label;
  });
  return out;
}

DiscreteSpace largest_cluster(const PercolationSample& s) {
  if (s.labels.size() != s.vertex_count()) throw ValidationError("sample has no cluster labels");
  const auto clusters = cluster_sizes(s);
  const std::uint32_t label = clusters.front().label;
  const auto st = strides(s.d, s.L);
  std::vector<metric::NodeId> ids;
  std::vector<std::pair<metric::NodeId, metric::NodeId>> edges;
  metric::NodeId base = 0;
  std::int64_t best = -1;
  for (std::uint64_t v = 0; v < s.labels.size(); ++v) {
    if (s.labels[v] != label) continue;
    ids.push_back(v);
    std::int64_t dist2 = 0;
    for (int a = 0; a < s.d; ++a) {
      const std::int64_t twice = 2 * coord(v, st, s.L, a) - (s.L - 1);
      dist2 += twice * twice;
      const std::uint64_t e = v * static_cast<std::uint64_t>(s.d) + static_cast<std::uint64_t>(a);
      if (s.is_open(e)) edges.emplace_back(v, v + st[a]);
    }
    if (best < 0 || dist2 < best) {
      best = dist2;
      base = v;
    }
  }
  auto g = std::make_shared<const metric::Graph>(std::move(ids), edges);
  return DiscreteSpace::graph(std::move(g), base, metric::SpaceKind::percolation_cluster, s.geometry());
}

GrowthTable chemical_ball_growth(const DiscreteSpace& cluster, std::int64_t t_max) {
  if (!cluster.is_graph_like()) throw ValidationError("growth table needs a graph space");
  if (t_max < 1) throw ValidationError("t_max must be >= 1");
  if (cluster.box() && t_max > cluster.box()->side / 2) {
    throw ValidationError("t_max = " + std::to_string(t_max) + " exceeds half the box side (" +
                          std::to_string(cluster.box()->side / 2) + ")");
  }
  GrowthTable table;
  table.d = cluster.box() ? cluster.box()->dim : 2;
  std::vector<std::uint64_t> layer(static_cast<std::size_t>(t_max) + 1, 0);
  for (auto dist : cluster.base_distances()) {
    if (dist >= 0 && dist <= t_max) ++layer[dist];
  }
  std::uint64_t total = layer[0];
  for (std::int64_t t = 1; t <= t_max; ++t) {
    total += layer[t];
    table.rows.push_back({t, total, static_cast<double>(total) / std::pow(static_cast<double>(t), table.d)});
  }
  const std::int64_t lo = (t_max + 1) / 2;
  double mn = 0, mx = 0, sum = 0;
  std::size_t m = 0;
  for (const auto& r : table.rows) {
    if (r.t < lo) continue;
    mn = m == 0 ? r.normalized : std::min(mn, r.normalized);
    mx = m == 0 ? r.normalized : std::max(mx, r.normalized);
    sum += r.normalized;
    ++m;
  }
  table.plateau_mean = sum / static_cast<double>(m);
  table.plateau_statistic = table.plateau_mean > 0.0 ? (mx - mn) / table.plateau_mean : 0.0;
  return table;
}

void write_sample(std::ostream& out, const PercolationSample& s) {
  out.write(kMagic, 8);
  put_u64(out, static_cast<std::uint64_t>(s.d));
  put_u64(out, static_cast<std::uint64_t>(s.L));
  put_u64(out, static_cast<std::uint64_t>(std::llround(std::ldexp(s.p, 53))));
  put_u64(out, s.seed);
  for (auto w : s.open_bits) put_u64(out, w);
  if (!out) throw Error("failed to write percolation sample");
}

PercolationSample read_sample(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw Error("not a percolation sample (bad magic)");
  PercolationSample s;
  s.d = static_cast<int>(get_u64(in));
  s.L = static_cast<std::int64_t>(get_u64(in));
  s.p = std::ldexp(static_cast<double>(get_u64(in)), -53);
  s.seed = get_u64(in);
  if (s.d < 2 || s.d > 16 || s.L < 1) throw Error("percolation sample header is invalid");
  const double edges = s.d * std::pow(static_cast<double>(s.L), s.d);
  if (edges > 4.0e9) throw Error("percolation sample header is invalid");
  s.open_bits.resize((s.edge_count() + 63) / 64);
  for (auto& w : s.open_bits) w = get_u64(in);
  label_clusters(s);
  return s;
}

}  // namespace doslab::perc
