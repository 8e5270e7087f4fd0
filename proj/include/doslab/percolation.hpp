#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "doslab/metric_spaces.hpp"

namespace doslab::perc {

using metric::DiscreteSpace;

/// Bond percolation on the box [0, L)^d. Vertex ids are row-major with the
/// first coordinate most significant; edge id = vertex_id * d + axis for the
/// edge from a vertex to its +e_axis neighbour. Edge e is open iff
/// uniform01(seed, e) < p, which couples all p for a fixed seed.
struct PercolationSample {
  int d = 2;
  std::int64_t L = 0;
  double p = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> open_bits;  // one bit per edge id
  std::vector<std::uint32_t> labels;     // smallest vertex id of the cluster

  std::uint64_t vertex_count() const;
  std::uint64_t edge_count() const { return vertex_count() * static_cast<std::uint64_t>(d); }
  bool edge_exists(std::uint64_t edge) const;
  bool is_open(std::uint64_t edge) const { return (open_bits[edge >> 6] >> (edge & 63)) & 1ULL; }
  std::uint64_t open_edge_count() const;
  metric::BoxGeometry geometry() const { return {d, L}; }
};

PercolationSample percolate_bonds(int d, std::int64_t L, double p, std::uint64_t seed,
                                  std::uint64_t budget = default_point_budget());

/// Recomputes cluster labels from the open-edge bitmask (union-find).
void label_clusters(PercolationSample& sample);

struct ClusterSummary {
  std::uint32_t label = 0;
  std::uint64_t size = 0;
};

/// Clusters by decreasing size, ties by smaller label.
std::vector<ClusterSummary> cluster_sizes(const PercolationSample& sample);

/// Largest cluster as a graph space with chemical distance; base point is the
/// cluster vertex closest to the box centre (ties: lexicographically smallest).
DiscreteSpace largest_cluster(const PercolationSample& sample);

struct GrowthRow {
  std::int64_t t = 0;
  std::uint64_t ball_count = 0;
  double normalized = 0.0;  // ball_count / t^d
};

struct GrowthTable {
  int d = 2;
  std::vector<GrowthRow> rows;  // t = 1..t_max
  double plateau_statistic = 0.0;  // (max - min) / mean of normalized over [t_max/2, t_max]
  double plateau_mean = 0.0;
};

/// BFS layer counts of the cluster around its base point. Requires
/// t_max <= L/2 so balls stay clear of the box boundary on average.
GrowthTable chemical_ball_growth(const DiscreteSpace& cluster, std::int64_t t_max);

/// Compact binary: magic "DLPERC01", then little-endian u64 fields d, L,
/// p * 2^53 and seed, then the open-edge bitmask words.
void write_sample(std::ostream& out, const PercolationSample& sample);
PercolationSample read_sample(std::istream& in);

}  // namespace doslab::perc
