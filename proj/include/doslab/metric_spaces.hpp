#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "doslab/error.hpp"

namespace doslab::metric {

using Coords = std::vector<std::int64_t>;
using NodeId = std::uint64_t;

// A point is either a lattice coordinate vector or a graph node id; a single
// space only ever produces one of the two alternatives.
using Point = std::variant<Coords, NodeId>;

struct PointHash {
  std::size_t operator()(const Point& p) const noexcept;
};

std::string to_string(const Point& p);

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class SpaceKind { lattice, graph, cayley_f2, percolation_cluster };

std::string to_string(SpaceKind kind);

/// Undirected simple graph in CSR form. Node ids are kept in ascending order so
/// that index order coincides with canonical point order.
class Graph {
public:
  Graph(std::vector<NodeId> ids, const std::vector<std::pair<NodeId, NodeId>>& edges);

  std::size_t size() const noexcept { return ids_.size(); }
  NodeId id(std::uint32_t index) const { return ids_[index]; }
  const std::vector<NodeId>& ids() const noexcept { return ids_; }
  std::optional<std::uint32_t> find(NodeId id) const;
  std::span<const std::uint32_t> neighbors(std::uint32_t index) const;
  std::size_t degree(std::uint32_t index) const { return offsets_[index + 1] - offsets_[index]; }

  /// Hop distances from `source`; -1 marks unreachable vertices.
  std::vector<std::int32_t> bfs(std::uint32_t source) const;

private:
  std::vector<NodeId> ids_;
  std::unordered_map<NodeId, std::uint32_t> index_;
  std::vector<std::uint64_t> offsets_;
  std::vector<std::uint32_t> targets_;
};

/// Side length and dimension of the box a percolation cluster was cut from.
struct BoxGeometry {
  int dim = 2;
  std::int64_t side = 0;

  Coords coords_of(NodeId id) const;
  NodeId id_of(const Coords& c) const;
};

struct LatticeInfo {
  int dim = 1;
  double p = 2.0;  // kInfinity for the sup norm
  Coords base;
};

/// Countable metric space with a base point. Immutable after construction;
/// copies share the underlying graph.
class DiscreteSpace {
public:
  static DiscreteSpace lattice(int dim, double p, Coords base = {});
  static DiscreteSpace graph(std::shared_ptr<const Graph> g, NodeId base,
                             SpaceKind kind = SpaceKind::graph,
                             std::optional<BoxGeometry> box = std::nullopt);
  static DiscreteSpace free_group();

  SpaceKind kind() const noexcept { return kind_; }
  const Point& base_point() const noexcept { return base_; }
  bool is_lattice() const noexcept { return kind_ == SpaceKind::lattice; }
  bool is_graph_like() const noexcept {
    return kind_ == SpaceKind::graph || kind_ == SpaceKind::percolation_cluster;
  }

  const LatticeInfo& lattice_info() const;
  const Graph& graph() const;
  const std::optional<BoxGeometry>& box() const noexcept { return box_; }

  /// Number of points for finite (graph) spaces.
  std::optional<std::size_t> size() const;

  double distance(const Point& x, const Point& y) const;
  double distance_to_base(const Point& x) const;
  bool contains(const Point& x) const;

  /// Graph index of the base point and BFS distances from it (graph kinds only).
  std::uint32_t base_index() const;
  const std::vector<std::int32_t>& base_distances() const;

  std::string describe() const;

private:
  DiscreteSpace() = default;

  SpaceKind kind_ = SpaceKind::lattice;
  Point base_;
  LatticeInfo lattice_;
  std::shared_ptr<const Graph> graph_;
  std::shared_ptr<const std::vector<std::int32_t>> base_dist_;
  std::uint32_t base_index_ = 0;
  std::optional<BoxGeometry> box_;
};

struct BallEntry {
  Point point;
  double distance = 0.0;
  std::uint32_t level = 0;  // 0 for the base point, k for radius r_k
};

struct EnumerationOptions {
  std::uint64_t budget = default_point_budget();
};

/// Points of B(x0, radius) sorted by (distance, canonical point order).
std::vector<BallEntry> ball_points(const DiscreteSpace& space, double radius,
                                   const EnumerationOptions& opts = {});

struct RadiiLadder {
  std::vector<double> radii;               // r_1 < r_2 < ...
  std::vector<std::uint64_t> ball_counts;  // N_k = |B(x0, r_k)|
  std::vector<std::uint64_t> shell_counts; // S_k = N_k - N_{k-1}, N_0 := 1

  std::size_t size() const noexcept { return radii.size(); }
  /// Ball count at level k where level 0 is the base point alone.
  std::uint64_t count_at_level(std::size_t level) const {
    return level == 0 ? 1 : ball_counts[level - 1];
  }
  void push(double radius, std::uint64_t count);
  void validate() const;
};

class PartialLadderError : public Error {
public:
  PartialLadderError(const std::string& what, RadiiLadder prefix)
      : Error(what + " (completed " + std::to_string(prefix.size()) + " radii)"),
        prefix_(std::move(prefix)) {}
  const RadiiLadder& prefix() const noexcept { return prefix_; }

private:
  RadiiLadder prefix_;
};

/// First k_max distinct realized radii with cumulative counts.
RadiiLadder radii_ladder(const DiscreteSpace& space, std::size_t k_max,
                         const EnumerationOptions& opts = {});

/// All realized radii r_k <= radius.
RadiiLadder radii_ladder_to_radius(const DiscreteSpace& space, double radius,
                                   const EnumerationOptions& opts = {});

/// S_k = N_k - N_{k-1} with N_0 := 1 (the base point alone).
std::vector<std::uint64_t> coordination_sequence(const RadiiLadder& ladder);

enum class Verdict { pass, fail, inconclusive };
std::string to_string(Verdict v);

struct CRatioReport {
  std::vector<double> ratios;  // rho_k = N_{k+1}/N_k, k = 1..K-1
  std::size_t tail_begin = 0;  // index into ratios
  std::size_t tail_end = 0;    // one past the last index
  double max_tail_deviation = 0.0;
  double min_tail_deviation = 0.0;
  double tail_ratio = 0.0;              // last ratio
  std::array<double, 3> subwindow_max{};  // max |rho-1| on [K/8,K/4), [K/4,K/2), [K/2,K)
  bool trend_nonincreasing = false;
  double threshold = 0.0;
  double tail_fraction = 0.0;
  Verdict verdict = Verdict::inconclusive;
};

/// Finite-sample verdict for the ball-ratio condition. Pass requires the tail
/// deviation to be within `threshold` and the dyadic sub-window maxima to be
/// non-increasing; fail requires every tail deviation above `threshold` with the
/// last sub-window maximum above 3/4 of the previous one.
CRatioReport condition_c_report(const RadiiLadder& ladder, double tail_fraction,
                                double threshold);

struct QuasiPolyFit {
  std::size_t period = 1;
  std::size_t degree = 0;
  // One coefficient set per residue class of k mod period, highest degree first.
  std::vector<std::vector<double>> coefficients;
  double max_residual = 0.0;
  std::size_t fit_first_k = 0;  // first (1-based) k used by the fit
  std::size_t fit_last_k = 0;

  double evaluate(std::size_t k) const;
};

/// Least-squares polynomial per residue class of S_k (k = 1..len) over the
/// tail, excluding the first period*(degree+1) entries as transient.
QuasiPolyFit quasi_poly_fit(std::span<const std::uint64_t> coord, std::size_t period,
                            std::size_t degree);
QuasiPolyFit quasi_poly_fit(std::span<const double> coord, std::size_t period,
                            std::size_t degree);

/// Whitespace-separated "u v" edge list; blank lines and lines starting with
/// '#' are skipped. The connected component of `base` becomes the space.
DiscreteSpace ingest_graph(std::istream& in, NodeId base);
DiscreteSpace ingest_graph_file(const std::string& path, NodeId base);

/// Path graph on ids first..last (used to model a truncated copy of N).
DiscreteSpace path_graph(NodeId first, NodeId last, NodeId base);

// Free-group word codec (shortlex ids); exposed for tests.
namespace f2 {
inline constexpr int kGenerators = 4;  // a, a^-1, b, b^-1
std::vector<int> decode(NodeId id);
NodeId encode(std::span<const int> word);
std::size_t word_length(NodeId id);
}  // namespace f2

}  // namespace doslab::metric
