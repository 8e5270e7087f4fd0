#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "doslab/dos_dixmier.hpp"
#include "doslab/ergodic.hpp"

namespace doslab::cli {

using nlohmann::json;
using metric::DiscreteSpace;

/// Read-only view of a JSON object that records which keys were consumed.
/// finish() rejects any key that was not read, reporting its full path.
class Node {
public:
  Node(const json& j, std::string path);

  const std::string& path() const noexcept { return path_; }
  bool has(const std::string& key) const;

  double number(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  std::int64_t integer(const std::string& key) const;
  std::int64_t integer(const std::string& key, std::int64_t fallback) const;
  std::uint64_t unsigned_integer(const std::string& key) const;
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) const;
  std::string string(const std::string& key) const;
  std::string string(const std::string& key, const std::string& fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<std::int64_t> integers(const std::string& key) const;

  Node child(const std::string& key) const;
  /// Elements of an array of objects.
  std::vector<Node> children(const std::string& key) const;
  const json& raw(const std::string& key) const;

  void finish() const;

private:
  const json& at(const std::string& key) const;
  std::string sub(const std::string& key) const { return path_ + "." + key; }

  const json* j_;
  std::string path_;
  mutable std::set<std::string> used_;
};

/// Throws ValidationError with the offending path.
[[noreturn]] void fail(const std::string& path, const std::string& what);

DiscreteSpace space_from(const Node& n);
ham::HamiltonianSpec hamiltonian_from(const Node& n);
spectral::ScalarFunction function_from(const Node& n);
/// The weight may depend on a ladder (default weights).
ham::WeightFunction weight_from(const Node& n, const DiscreteSpace& space, const metric::RadiiLadder& ladder);
spectral::DyadicWindow window_from(const Node& n);
ergodic::FolnerSet folner_set_from(const Node& n);
double norm_from(const Node& n, const std::string& key, double fallback);

}  // namespace doslab::cli
