#include "config.hpp"

#include <cmath>
#include <limits>

namespace doslab::cli {

void fail(const std::string& path, const std::string& what) { throw ValidationError(path + ": " + what); }

Node::Node(const json& j, std::string path) : j_(&j), path_(std::move(path)) {
  if (!j.is_object()) fail(path_, "expected an object");
}

bool Node::has(const std::string& key) const { return j_->contains(key); }

const json& Node::at(const std::string& key) const {
  const auto it = j_->find(key);
  if (it == j_->end()) fail(sub(key), "required key is missing");
  used_.insert(key);
  return *it;
}

const json& Node::raw(const std::string& key) const { return at(key); }

double Node::number(const std::string& key) const {
  const json& v = at(key);
  if (!v.is_number()) fail(sub(key), "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(sub(key), "expected a finite number");
  return d;
}

double Node::number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

std::int64_t Node::integer(const std::string& key) const {
  const json& v = at(key);
  if (!v.is_number_integer()) fail(sub(key), "expected an integer");
  if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
    fail(sub(key), "integer out of range");
  }
  return v.get<std::int64_t>();
}

std::int64_t Node::integer(const std::string& key, std::int64_t fallback) const {
  return has(key) ? integer(key) : fallback;
}

std::uint64_t Node::unsigned_integer(const std::string& key) const {
  const json& v = at(key);
  if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    fail(sub(key), "expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::uint64_t Node::unsigned_integer(const std::string& key, std::uint64_t fallback) const {
  return has(key) ? unsigned_integer(key) : fallback;
}

std::string Node::string(const std::string& key) const {
  const json& v = at(key);
  if (!v.is_string()) fail(sub(key), "expected a string");
  return v.get<std::string>();
}

std::string Node::string(const std::string& key, const std::string& fallback) const {
  return has(key) ? string(key) : fallback;
}

bool Node::boolean(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const json& v = at(key);
  if (!v.is_boolean()) fail(sub(key), "expected true or false");
  return v.get<bool>();
}

std::vector<double> Node::numbers(const std::string& key) const {
  const json& v = at(key);
  if (!v.is_array()) fail(sub(key), "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) fail(sub(key) + "[" + std::to_string(i) + "]", "expected a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

std::vector<std::int64_t> Node::integers(const std::string& key) const {
  const json& v = at(key);
  if (!v.is_array()) fail(sub(key), "expected an array of integers");
  std::vector<std::int64_t> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number_integer()) fail(sub(key) + "[" + std::to_string(i) + "]", "expected an integer");
    out.push_back(v[i].get<std::int64_t>());
  }
  return out;
}

Node Node::child(const std::string& key) const {
  const json& v = at(key);
  if (!v.is_object()) fail(sub(key), "expected an object");
  return Node(v, sub(key));
}

std::vector<Node> Node::children(const std::string& key) const {
  const json& v = at(key);
  if (!v.is_array()) fail(sub(key), "expected an array of objects");
  std::vector<Node> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string p = sub(key) + "[" + std::to_string(i) + "]";
    if (!v[i].is_object()) fail(p, "expected an object");
    out.emplace_back(v[i], p);
  }
  return out;
}

void Node::finish() const {
  for (const auto& item : j_->items()) {
    if (!used_.count(item.key())) fail(sub(item.key()), "unknown key");
  }
}

// ------------------------------------------------------------ builders

double norm_from(const Node& n, const std::string& key, double fallback) {
  if (!n.has(key)) return fallback;
  const json& v = n.raw(key);
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "infinity") return metric::kInfinity;
    fail(n.path() + "." + key, "expected a number >= 1 or \"inf\"");
  }
  if (!v.is_number() || v.get<double>() < 1.0) fail(n.path() + "." + key, "expected a number >= 1 or \"inf\"");
  return v.get<double>();
}

DiscreteSpace space_from(const Node& n) {
  const std::string kind = n.string("kind");
  DiscreteSpace space = [&] {
    if (kind == "lattice") {
      const auto dim = n.integer("dim", 1);
      if (dim < 1 || dim > 8) fail(n.path() + ".dim", "expected 1..8");
      const double p = norm_from(n, "p", 2.0);
      metric::Coords base = n.has("base") ? n.integers("base") : metric::Coords{};
      return DiscreteSpace::lattice(static_cast<int>(dim), p, std::move(base));
    }
    if (kind == "f2") return DiscreteSpace::free_group();
    if (kind == "graph") {
      const auto path = n.string("path");
      return metric::ingest_graph_file(path, n.unsigned_integer("base", 0));
    }
    if (kind == "path") {
      const auto first = n.unsigned_integer("first");
      const auto last = n.unsigned_integer("last");
      return metric::path_graph(first, last, n.unsigned_integer("base", first + (last - first) / 2));
    }
    fail(n.path() + ".kind", "expected lattice, f2, graph or path");
  }();
  n.finish();
  return space;
}

ham::HamiltonianSpec hamiltonian_from(const Node& n) {
  ham::HamiltonianSpec spec;
  if (n.has("hopping")) {
    const Node h = n.child("hopping");
    const auto kind = h.string("kind", "adjacency");
    using K = ham::Hopping::Kind;
    if (kind == "none") spec.hopping.kind = K::none;
    else if (kind == "adjacency") spec.hopping.kind = K::adjacency;
    else if (kind == "laplacian") spec.hopping.kind = K::laplacian;
    else if (kind == "kernel") spec.hopping.kind = K::kernel;
    else fail(h.path() + ".kind", "expected none, adjacency, laplacian or kernel");
    if (spec.hopping.kind == K::kernel) {
      const json& offs = h.raw("offsets");
      if (!offs.is_array()) fail(h.path() + ".offsets", "expected an array of integer vectors");
      for (std::size_t i = 0; i < offs.size(); ++i) {
        const std::string p = h.path() + ".offsets[" + std::to_string(i) + "]";
        if (!offs[i].is_array()) fail(p, "expected an integer vector");
        metric::Coords c;
        for (const auto& x : offs[i]) {
          if (!x.is_number_integer()) fail(p, "expected an integer vector");
          c.push_back(x.get<std::int64_t>());
        }
        spec.hopping.offsets.push_back(std::move(c));
      }
      spec.hopping.amplitudes = h.numbers("amplitudes");
    }
    h.finish();
  }
  if (n.has("potential")) {
    const Node v = n.child("potential");
    const auto kind = v.string("kind", "zero");
    using K = ham::Potential::Kind;
    auto& pot = spec.potential;
    if (kind == "zero") {
      pot.kind = K::zero;
    } else if (kind == "periodic") {
      pot.kind = K::periodic;
      pot.period = v.integers("period");
      pot.values = v.numbers("values");
    } else if (kind == "iid_uniform") {
      pot.kind = K::iid_uniform;
      pot.a = v.number("a", 0.0);
      pot.b = v.number("b", 1.0);
      pot.seed = v.unsigned_integer("seed", 0);
    } else if (kind == "table") {
      pot.kind = K::table;
      for (const auto& e : v.children("entries")) {
        const json& pt = e.raw("point");
        metric::Point p;
        if (pt.is_array()) {
          p = metric::Point{e.integers("point")};
        } else if (pt.is_number_unsigned() || (pt.is_number_integer() && pt.get<std::int64_t>() >= 0)) {
          p = metric::Point{pt.get<std::uint64_t>()};
        } else {
          fail(e.path() + ".point", "expected an integer vector or a node id");
        }
        pot.table.emplace_back(std::move(p), e.number("value"));
        e.finish();
      }
    } else if (kind == "counterexample") {
      pot.kind = K::counterexample;
    } else {
      fail(v.path() + ".kind", "expected zero, periodic, iid_uniform, table or counterexample");
    }
    if (v.has("shift")) pot.shift = v.integers("shift");
    v.finish();
  }
  n.finish();
  try {
    spec.validate();
  } catch (const ValidationError& e) {
    fail(n.path(), e.what());
  }
  return spec;
}

spectral::ScalarFunction function_from(const Node& n) {
  using spectral::ScalarFunction;
  const auto kind = n.string("kind");
  ScalarFunction g = [&] {
    try {
      if (kind == "bump") return ScalarFunction::bump(n.number("center", 0.0), n.number("width"), n.number("amplitude", 1.0));
      if (kind == "gaussian") {
        return ScalarFunction::gaussian(n.number("center", 0.0), n.number("width"), n.number("amplitude", 1.0));
      }
      if (kind == "polynomial") return ScalarFunction::polynomial(n.numbers("coefficients"));
      if (kind == "table") return ScalarFunction::table(n.numbers("xs"), n.numbers("ys"));
    } catch (const ValidationError& e) {
      fail(n.path(), e.what());
    }
    fail(n.path() + ".kind", "expected bump, gaussian, polynomial or table");
  }();
  n.finish();
  return g;
}

ham::WeightFunction weight_from(const Node& n, const DiscreteSpace& space, const metric::RadiiLadder& ladder) {
  const auto kind = n.string("kind", "lattice");
  ham::WeightFunction w;
  if (kind == "lattice") {
    if (!space.is_lattice()) fail(n.path() + ".kind", "lattice weights need a lattice space");
    w = ham::lattice_weight(space);
  } else if (kind == "default") {
    w = ham::default_weight(space, ladder);
  } else if (kind == "custom") {
    try {
      w = ham::custom_weight(n.numbers("profile"));
    } catch (const ValidationError& e) {
      fail(n.path() + ".profile", e.what());
    }
  } else {
    fail(n.path() + ".kind", "expected lattice, default or custom");
  }
  n.finish();
  return w;
}

spectral::DyadicWindow window_from(const Node& n) {
  spectral::DyadicWindow w;
  const auto lo = n.integer("j_lo");
  const auto hi = n.integer("j_hi");
  if (lo < 0 || hi < lo || hi > 62) fail(n.path(), "expected 0 <= j_lo <= j_hi <= 62");
  w.j_lo = static_cast<unsigned>(lo);
  w.j_hi = static_cast<unsigned>(hi);
  n.finish();
  return w;
}

ergodic::FolnerSet folner_set_from(const Node& n) {
  ergodic::FolnerSet s;
  try {
    s.shape = ergodic::shape_from_string(n.string("shape"));
  } catch (const ValidationError& e) {
    fail(n.path() + ".shape", e.what());
  }
  s.dim = static_cast<int>(n.integer("dim", 1));
  if (n.has("center")) s.center = n.integers("center");
  s.radius = n.integer("radius");
  n.finish();
  try {
    s.validate();
  } catch (const ValidationError& e) {
    fail(n.path(), e.what());
  }
  return s;
}

}  // namespace doslab::cli
