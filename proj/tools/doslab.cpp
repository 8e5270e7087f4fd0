#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "config.hpp"
#include "doslab/backend.hpp"
#include "doslab/csv.hpp"
#include "doslab/percolation.hpp"
#include "doslab/reference_models.hpp"

#ifndef DOSLAB_VERSION
#define DOSLAB_VERSION "0.0.0"
#endif

namespace doslab::cli {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitTolerance = 2;

struct Context {
  std::string command;
  json config = json::object();
  std::string out;
  unsigned threads = 1;
  std::uint64_t budget = default_point_budget();

  metric::EnumerationOptions enumeration() const { return {budget}; }

  json meta() const {
    json m;
    m["tool"] = "doslab";
    m["version"] = DOSLAB_VERSION;
    m["command"] = command;
    m["config_hash"] = io::hex64(io::fnv1a64(json{{"command", command}, {"config", config}}.dump()));
    return m;
  }

  // Path next to the main artifact: "<out without .json/.csv><suffix>".
  std::optional<std::string> sibling(const std::string& suffix) const {
    if (out.empty()) return std::nullopt;
    std::string stem = out;
    for (const char* ext : {".json", ".csv"}) {
      const std::string e(ext);
      if (stem.size() > e.size() && stem.compare(stem.size() - e.size(), e.size(), e) == 0) {
        stem.resize(stem.size() - e.size());
        break;
      }
    }
    return stem + suffix;
  }
};

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  return f;
}

void emit_json(const Context& ctx, json body, const std::string& path) {
  body["meta"] = ctx.meta();
  const std::string text = body.dump(2) + "\n";
  if (path.empty()) {
    std::cout << text;
  } else {
    auto f = open_out(path);
    f << text;
  }
}

// CSV to --out (or stdout) and the summary with metadata to "<out>.meta.json".
template <class Rows>
void emit_csv(const Context& ctx, const std::string& path, std::vector<std::string> header, Rows&& rows,
              json summary = json::object()) {
  auto write = [&](std::ostream& os) {
    io::CsvWriter w(os, std::move(header));
    rows(w);
  };
  if (path.empty()) {
    write(std::cout);
    return;
  }
  {
    auto f = open_out(path);
    write(f);
  }
  emit_json(ctx, json{{"summary", summary}}, path + ".meta.json");
}

json to_json(const spectral::DyadicWindow& w) { return {{"j_lo", w.j_lo}, {"j_hi", w.j_hi}}; }

json to_json(const spectral::SlopeFit& f) {
  return {{"window", to_json(f.window)},
          {"n0", f.n0},
          {"n_max", f.n_max},
          {"slope", f.slope},
          {"intercept", f.intercept},
          {"max_abs_residual", f.max_abs_residual},
          {"residual_growth_slope", f.residual_growth_slope},
          {"scale", f.scale},
          {"lambda_tail", f.lambda_tail}};
}

json to_json(const dos::MeasurabilityReport& m) {
  return {{"verdict", dos::to_string(m.verdict)},
          {"relative_residual_growth", m.relative_residual_growth},
          {"slope_drift", m.slope_drift},
          {"lambda_spread", m.lambda_spread},
          {"lambda_limit", m.lambda_limit}};
}

json to_json(const metric::CRatioReport& c) {
  return {{"verdict", metric::to_string(c.verdict)},
          {"tail_ratio", c.tail_ratio},
          {"max_tail_deviation", c.max_tail_deviation},
          {"min_tail_deviation", c.min_tail_deviation},
          {"subwindow_max", c.subwindow_max},
          {"trend_nonincreasing", c.trend_nonincreasing},
          {"threshold", c.threshold},
          {"tail_fraction", c.tail_fraction},
          {"ratio_count", c.ratios.size()}};
}

json to_json(const ham::WeakL1Report& r) {
  return {{"C_estimate", r.C_estimate},
          {"tail_growth_exponent", r.tail_growth_exponent},
          {"nonmembership_trend", r.nonmembership_trend}};
}

void write_series_csv(const Context& ctx, const std::optional<std::string>& path, const spectral::SlopeFit& f) {
  if (!path) return;
  emit_csv(ctx, *path, {"n", "S", "Lambda"}, [&](io::CsvWriter& w) {
    for (std::size_t i = 0; i < f.n.size(); ++i) {
      w.field(f.n[i]).field(f.S[i]).field(f.Lambda[i]);
      w.end_row();
    }
  });
}

void write_dos_rows(io::CsvWriter& w, const dos::DosEstimate& est) {
  for (const auto& r : est.rows) {
    w.field(r.k).field(r.radius).field(r.count).field(r.value);
    w.end_row();
  }
}

json dos_summary(const dos::DosEstimate& est) {
  return {{"tail_mean", est.tail_mean},
          {"tail_spread", est.tail_spread},
          {"margin", est.margin},
          {"outer_radius", est.outer_radius},
          {"warnings", est.warnings}};
}

metric::RadiiLadder ladder_from(const Node& root, const DiscreteSpace& space, const Context& ctx) {
  if (root.has("k_max")) {
    return metric::radii_ladder(space, root.unsigned_integer("k_max"), ctx.enumeration());
  }
  return metric::radii_ladder_to_radius(space, root.number("radius"), ctx.enumeration());
}

DiscreteSpace space_of(const Node& root) { return space_from(root.child("space")); }

ham::HamiltonianSpec hamiltonian_of(const Node& root) {
  if (!root.has("hamiltonian")) return {};
  return hamiltonian_from(root.child("hamiltonian"));
}

// ------------------------------------------------------------ commands

int cmd_ladder(const Context& ctx, const Node& root) {
  const auto space = space_of(root);
  const auto ladder = ladder_from(root, space, ctx);
  root.finish();
  emit_csv(
      ctx, ctx.out, {"k", "r_k", "ball_count", "shell_count", "ratio"},
      [&](io::CsvWriter& w) {
        for (std::size_t k = 1; k <= ladder.size(); ++k) {
          const double ratio = static_cast<double>(ladder.count_at_level(k)) /
                               static_cast<double>(ladder.count_at_level(k - 1));
          w.field(k).field(ladder.radii[k - 1]).field(ladder.ball_counts[k - 1]).field(ladder.shell_counts[k - 1]);
          w.field(ratio);
          w.end_row();
        }
      },
      {{"space", space.describe()}, {"levels", ladder.size()}});
  return kExitOk;
}

int cmd_check_c(const Context& ctx, const Node& root) {
  const auto space = space_of(root);
  const auto ladder = ladder_from(root, space, ctx);
  const double tail = root.number("tail_fraction", 0.2);
  const double threshold = root.number("threshold", 0.01);
  root.finish();
  const auto rep = metric::condition_c_report(ladder, tail, threshold);
  emit_json(ctx, {{"space", space.describe()}, {"levels", ladder.size()}, {"condition_c", to_json(rep)}}, ctx.out);
  return kExitOk;
}

int cmd_percolate(const Context& ctx, const Node& root) {
  const Node p = root.child("percolation");
  const int d = static_cast<int>(p.integer("d", 2));
  const auto L = p.integer("L");
  const double prob = p.number("p");
  const auto seed = p.unsigned_integer("seed", 0);
  const auto t_max = p.integer("t_max");
  const double tail = p.number("tail_fraction", 0.2);
  const double threshold = p.number("threshold", 0.05);
  const std::string sample_path = p.string("sample", "");
  p.finish();
  root.finish();
  const auto sample = perc::percolate_bonds(d, L, prob, seed, ctx.budget);
  if (!sample_path.empty()) {
    auto f = open_out(sample_path);
    perc::write_sample(f, sample);
  }
  const auto cluster = perc::largest_cluster(sample);
  const auto growth = perc::chemical_ball_growth(cluster, t_max);
  const auto ladder = metric::radii_ladder_to_radius(cluster, static_cast<double>(t_max), ctx.enumeration());
  const auto c = metric::condition_c_report(ladder, tail, threshold);
  const double size = static_cast<double>(*cluster.size());
  json summary = {{"cluster_size", *cluster.size()},
                  {"cluster_fraction", size / static_cast<double>(sample.vertex_count())},
                  {"open_edges", sample.open_edge_count()},
                  {"plateau_statistic", growth.plateau_statistic},
                  {"plateau_mean", growth.plateau_mean},
                  {"condition_c", to_json(c)}};
  emit_csv(
      ctx, ctx.out, {"t", "ball_count", "normalized"},
      [&](io::CsvWriter& w) {
        for (const auto& r : growth.rows) {
          w.field(r.t).field(r.ball_count).field(r.normalized);
          w.end_row();
        }
      },
      summary);
  return kExitOk;
}

int cmd_dos(const Context& ctx, const Node& root) {
  const auto space = space_of(root);
  const auto spec = hamiltonian_of(root);
  const auto g = function_from(root.child("g"));
  const auto ladder = ladder_from(root, space, ctx);
  const double margin = root.number("margin", 0.0);
  root.finish();
  const auto est = dos::dos_approximant(space, spec, g, ladder, margin, ctx.enumeration());
  emit_csv(ctx, ctx.out, {"k", "radius", "count", "value"}, [&](io::CsvWriter& w) { write_dos_rows(w, est); },
           dos_summary(est));
  return kExitOk;
}

int cmd_ids(const Context& ctx, const Node& root) {
  const auto space = space_of(root);
  const auto spec = hamiltonian_of(root);
  const double r = root.number("radius");
  const double margin = root.number("margin", 0.0);
  double e_min = -3.0, e_max = 3.0;
  std::int64_t count = 121;
  if (root.has("energies")) {
    const Node e = root.child("energies");
    e_min = e.number("min");
    e_max = e.number("max");
    count = e.integer("count");
    e.finish();
    if (count < 2 || !(e_max > e_min)) fail(e.path(), "expected count >= 2 and max > min");
  }
  const bool arcsine = root.boolean("compare_arcsine", false);
  root.finish();
  const auto table = dos::ids_histogram(space, spec, r, margin, ctx.enumeration());
  std::vector<double> es, vs;
  double sup_err = 0.0;
  for (std::int64_t i = 0; i < count; ++i) {
    const double E = e_min + (e_max - e_min) * static_cast<double>(i) / static_cast<double>(count - 1);
    es.push_back(E);
    vs.push_back(table(E));
    if (arcsine && std::fabs(E) <= 1.9) sup_err = std::max(sup_err, std::fabs(vs.back() - ref::arcsine_ids(E)));
  }
  json summary = {{"ball_size", table.ball_size}, {"margin", table.margin}, {"distinct_energies", table.energies.size()}};
  if (arcsine) summary["arcsine_sup_error"] = sup_err;
  emit_csv(
      ctx, ctx.out, {"energy", "ids"},
      [&](io::CsvWriter& w) {
        for (std::size_t i = 0; i < es.size(); ++i) {
          w.field(es[i]).field(vs[i]);
          w.end_row();
        }
      },
      summary);
  return kExitOk;
}

int cmd_dixmier(const Context& ctx, const Node& root) {
  const auto space = space_of(root);
  const auto spec = hamiltonian_of(root);
  const auto g = function_from(root.child("g"));
  const double R_outer = root.number("R_outer");
  const auto ladder = metric::radii_ladder_to_radius(space, R_outer, ctx.enumeration());
  const auto w = root.has("weight") ? weight_from(root.child("weight"), space, ladder) : ham::lattice_weight(space);
  std::optional<spectral::DyadicWindow> window;
  if (root.has("window")) window = window_from(root.child("window"));
  root.finish();
  const auto est = dos::dixmier_lhs(space, spec, g, w, R_outer, window, ctx.enumeration());
  write_series_csv(ctx, ctx.sibling(".series.csv"), est.fit);
  emit_json(ctx,
            {{"fit", to_json(est.fit)},
             {"measurability", to_json(est.measurability)},
             {"n_max", est.n_max},
             {"T_norm", est.T_norm},
             {"w_min", est.w_min},
             {"dimension", est.dimension}},
            ctx.out);
  return kExitOk;
}

int cmd_theorem(const Context& ctx, const Node& root) {
  const auto space = space_of(root);
  const auto spec = hamiltonian_of(root);
  const auto g = function_from(root.child("g"));
  const double R_outer = root.number("R_outer");
  const double margin = root.number("margin");
  const auto ladder = metric::radii_ladder_to_radius(space, R_outer, ctx.enumeration());
  const auto w = root.has("weight") ? weight_from(root.child("weight"), space, ladder) : ham::lattice_weight(space);
  dos::TheoremOptions opt;
  if (root.has("options")) {
    const Node o = root.child("options");
    opt.c_tail_fraction = o.number("c_tail_fraction", opt.c_tail_fraction);
    opt.c_threshold = o.number("c_threshold", opt.c_threshold);
    opt.dos_spread_limit = o.number("dos_spread_limit", opt.dos_spread_limit);
    opt.gap_floor = o.number("gap_floor", opt.gap_floor);
    o.finish();
  }
  if (root.has("window")) opt.window = window_from(root.child("window"));
  double tol_gap = 0.10, tol_mod = 0.05;
  if (root.has("tolerance")) {
    const Node t = root.child("tolerance");
    tol_gap = t.number("relative_gap", tol_gap);
    tol_mod = t.number("modulated_growth", tol_mod);
    t.finish();
  }
  root.finish();
  const auto check = dos::main_theorem_check(space, spec, g, w, R_outer, margin, opt, ctx.enumeration());
  const bool gap_ok = check.relative_gap <= tol_gap;
  const bool mod_ok = std::fabs(check.modulated.relative_growth) <= tol_mod;
  write_series_csv(ctx, ctx.sibling(".lhs.csv"), check.lhs_estimate.fit);
  write_series_csv(ctx, ctx.sibling(".weight.csv"), check.weight_fit);
  if (const auto p = ctx.sibling(".dos.csv")) {
    emit_csv(ctx, *p, {"k", "radius", "count", "value"}, [&](io::CsvWriter& wr) { write_dos_rows(wr, check.dos); });
  }
  emit_json(ctx,
            {{"lhs", check.lhs},
             {"weight_trace", check.weight_trace},
             {"rhs_limit", check.rhs_limit},
             {"product", check.product},
             {"relative_gap", check.relative_gap},
             {"gap_floor", check.gap_floor},
             {"R_outer", check.R_outer},
             {"margin", check.margin},
             {"dimension", check.dimension},
             {"lhs_fit", to_json(check.lhs_estimate.fit)},
             {"measurability", to_json(check.lhs_estimate.measurability)},
             {"weight_fit", to_json(check.weight_fit)},
             {"dos", dos_summary(check.dos)},
             {"condition_c", to_json(check.condition_c)},
             {"modulated", {{"growth_slope", check.modulated.growth_slope},
                            {"scale", check.modulated.scale},
                            {"relative_growth", check.modulated.relative_growth}}},
             {"weak_l1", to_json(check.weak_l1)},
             {"tolerance", {{"relative_gap", tol_gap}, {"modulated_growth", tol_mod}}},
             {"pass", gap_ok && mod_ok}},
            ctx.out);
  return gap_ok && mod_ok ? kExitOk : kExitTolerance;
}

int cmd_counterexample(const Context& ctx, const Node& root) {
  const auto m_max = root.integer("m_max", 12);
  root.finish();
  if (m_max < 0) fail("$.m_max", "expected a non-negative integer");
  const auto rows = ref::counterexample_report(static_cast<int>(m_max));
  emit_csv(ctx, ctx.out, {"m", "n", "cesaro", "log_cesaro"}, [&](io::CsvWriter& w) {
    for (const auto& r : rows) {
      w.field(r.m).field(r.n).field(r.cesaro).field(r.log_cesaro);
      w.end_row();
    }
  });
  return kExitOk;
}

int cmd_vp(const Context& ctx, const Node& root) {
  const auto d = root.integer("dim", 1);
  if (d < 1 || d > 8) fail("$.dim", "expected 1..8");
  const double p = norm_from(root, "p", 2.0);
  const double R = root.number("radius");
  std::optional<spectral::DyadicWindow> window;
  if (root.has("window")) window = window_from(root.child("window"));
  double tol = 0.05;
  if (root.has("tolerance")) {
    const Node t = root.child("tolerance");
    tol = t.number("relative_error", tol);
    t.finish();
  }
  root.finish();
  const auto space = DiscreteSpace::lattice(static_cast<int>(d), p);
  const auto ladder = metric::radii_ladder_to_radius(space, R, ctx.enumeration());
  const auto fit = dos::weight_dixmier_trace(ham::lattice_weight(space), ladder, window);
  const double expected = ref::vp_volume(static_cast<int>(d), p);
  const double rel = std::fabs(fit.slope - expected) / expected;
  write_series_csv(ctx, ctx.sibling(".series.csv"), fit);
  emit_json(ctx,
            {{"dim", d},
             {"p", std::isinf(p) ? json("inf") : json(p)},
             {"radius", R},
             {"levels", ladder.size()},
             {"fit", to_json(fit)},
             {"expected", expected},
             {"relative_error", rel},
             {"tolerance", tol},
             {"pass", rel <= tol}},
            ctx.out);
  return rel <= tol ? kExitOk : kExitTolerance;
}

int cmd_equivariance(const Context& ctx, const Node& root) {
  const auto space = space_of(root);
  const auto spec = hamiltonian_of(root);
  const auto g = function_from(root.child("g"));
  const auto shift = root.integers("shift");
  const auto radii = root.numbers("radii");
  const double margin = root.number("margin", 0.0);
  std::optional<double> tol;
  if (root.has("tolerance")) {
    const Node t = root.child("tolerance");
    tol = t.number("max_diff");
    t.finish();
  }
  json gap_json;
  if (root.has("weight_gap")) {
    const Node wg = root.child("weight_gap");
    const auto wshift = wg.integers("shift");
    const auto wradii = wg.numbers("radii");
    wg.finish();
    gap_json = json::array();
    for (double R : wradii) {
      const auto rep = ergodic::shift_weight_gap(space, wshift, R, ctx.budget);
      gap_json.push_back({{"radius", R}, {"statistic", rep.statistic}, {"argmax", rep.argmax}});
    }
  }
  root.finish();
  const auto rep = ergodic::equivariance_check(space, spec, shift, g, radii, margin, ctx.enumeration());
  const bool ok = !tol || rep.max_diff <= *tol;
  json summary = {{"max_diff", rep.max_diff},
                  {"exactly_zero", rep.exactly_zero},
                  {"decreasing", rep.decreasing},
                  {"trend_exponent", rep.trend_exponent},
                  {"pass", ok}};
  if (!gap_json.is_null()) summary["weight_gap"] = gap_json;
  emit_csv(
      ctx, ctx.out, {"radius", "count", "nu", "nu_shifted", "diff"},
      [&](io::CsvWriter& w) {
        for (const auto& r : rep.rows) {
          w.field(r.radius).field(r.count).field(r.nu).field(r.nu_shifted).field(r.diff);
          w.end_row();
        }
      },
      summary);
  return ok ? kExitOk : kExitTolerance;
}

int cmd_ergodic(const Context& ctx, const Node& root) {
  const auto space = space_of(root);
  const auto spec = hamiltonian_of(root);
  const auto f = function_from(root.child("g"));
  std::vector<ergodic::FolnerSet> sets;
  for (const auto& s : root.children("sets")) sets.push_back(folner_set_from(s));
  ergodic::ErgodicOptions opt;
  opt.realizations = root.unsigned_integer("realizations", opt.realizations);
  opt.seed = root.unsigned_integer("seed", opt.seed);
  opt.batches = root.unsigned_integer("batches", opt.batches);
  opt.threads = ctx.threads;
  double R_F = 0.0;
  for (const auto& s : sets) R_F = std::max(R_F, static_cast<double>(s.extent()));
  opt.margin = root.number("margin", ergodic::minimum_margin(R_F));
  std::optional<double> min_fraction;
  if (root.has("tolerance")) {
    const Node t = root.child("tolerance");
    min_fraction = t.number("min_within_fraction");
    t.finish();
  }
  root.finish();
  const auto rep = ergodic::ergodic_average(space, spec, f, sets, opt);
  bool ok = true;
  json per_set = json::array();
  for (std::size_t s = 0; s < rep.per_set.size(); ++s) {
    const auto& st = rep.per_set[s];
    const double frac = static_cast<double>(st.within_3sem) / static_cast<double>(opt.realizations);
    if (min_fraction && frac < *min_fraction) ok = false;
    per_set.push_back({{"shape", ergodic::to_string(sets[s].shape)},
                       {"radius", sets[s].radius},
                       {"center", sets[s].center},
                       {"size", sets[s].size()},
                       {"mean", st.mean},
                       {"cross_sem", st.cross_sem},
                       {"within_3sem", st.within_3sem}});
  }
  json body = {{"realizations", opt.realizations},
               {"seed", opt.seed},
               {"margin", opt.margin},
               {"batches", opt.batches},
               {"seeds", rep.seeds},
               {"sets", per_set}};
  if (!rep.pair_diff.empty()) {
    body["pair_agree"] = rep.pair_agree;
    if (min_fraction &&
        static_cast<double>(rep.pair_agree) / static_cast<double>(opt.realizations) < *min_fraction) {
      ok = false;
    }
  }
  body["pass"] = ok;
  if (const auto p = ctx.sibling(".realizations.csv")) {
    emit_csv(ctx, *p, {"realization", "seed", "set", "average", "sem", "z"}, [&](io::CsvWriter& w) {
      for (std::size_t i = 0; i < rep.seeds.size(); ++i) {
        for (std::size_t s = 0; s < rep.per_set.size(); ++s) {
          const auto& st = rep.per_set[s];
          w.field(i).field(rep.seeds[i]).field(s).field(st.averages[i]).field(st.sem[i]).field(st.z[i]);
          w.end_row();
        }
      }
    });
  }
  emit_json(ctx, body, ctx.out);
  return ok ? kExitOk : kExitTolerance;
}

int cmd_folner(const Context& ctx, const Node& root) {
  ergodic::FolnerSequence seq;
  try {
    seq.shape = ergodic::shape_from_string(root.string("shape"));
  } catch (const ValidationError& e) {
    fail("$.shape", e.what());
  }
  seq.dim = static_cast<int>(root.integer("dim", 1));
  const auto n_max = root.unsigned_integer("n_max");
  root.finish();
  const auto rep = ergodic::folner_tempered_check(seq, n_max, ctx.budget);
  emit_csv(
      ctx, ctx.out, {"n", "size", "max_deviation", "temper_ratio"},
      [&](io::CsvWriter& w) {
        for (const auto& r : rep.rows) {
          w.field(r.n).field(r.size).field(r.max_deviation).field(r.temper_ratio);
          w.end_row();
        }
      },
      {{"C", rep.C}, {"nested", rep.nested}, {"shape", ergodic::to_string(seq.shape)}, {"dim", seq.dim}});
  return kExitOk;
}

json space_shorthand(const std::string& s) {
  if (s == "f2") return {{"kind", "f2"}};
  if (s.size() >= 2 && s[0] == 'z') {
    try {
      std::size_t used = 0;
      const int d = std::stoi(s.substr(1), &used);
      if (used == s.size() - 1) return {{"kind", "lattice"}, {"dim", d}};
    } catch (const std::exception&) {
    }
  }
  throw ValidationError("--space: expected f2 or z<d> (for example z2)");
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path + "'");
  try {
    json j = json::parse(in);
    if (!j.is_object()) throw ValidationError("$: config must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw ValidationError("config '" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Density of states and Dixmier trace experiments on discrete metric spaces"};
  app.require_subcommand(1);
  app.set_version_flag("--version", DOSLAB_VERSION);

  std::string config_path, out_path;
  unsigned threads = 1;
  std::optional<std::uint64_t> seed, budget;
  app.add_option("--config", config_path, "JSON experiment config");
  app.add_option("--out", out_path, "output path (stdout when omitted)");
  app.add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 256u));
  app.add_option("--seed", seed, "master seed");
  app.add_option("--budget", budget, "point budget per enumeration")->check(CLI::PositiveNumber);

  std::string space_flag;
  std::optional<std::uint64_t> kmax, mmax, nmax;
  std::optional<double> radius;

  auto* space_cmd = app.add_subcommand("space", "ball enumeration and condition (C)")->require_subcommand(1);
  auto* ladder_cmd = space_cmd->add_subcommand("ladder", "radii ladder CSV");
  auto* checkc_cmd = space_cmd->add_subcommand("check-c", "condition (C) verdict");
  for (auto* c : {ladder_cmd, checkc_cmd}) {
    c->add_option("--space", space_flag, "f2 or z<d>");
    c->add_option("--kmax", kmax, "number of radii");
    c->add_option("--radius", radius, "largest radius");
  }
  auto* perc_cmd = app.add_subcommand("percolate", "bond percolation cluster growth");
  auto* dos_cmd = app.add_subcommand("dos", "DOS approximants along a ladder");
  auto* ids_cmd = app.add_subcommand("ids", "integrated density of states");
  auto* dix_cmd = app.add_subcommand("dixmier", "Dixmier trace estimate of g(H) M_w");
  auto* thm_cmd = app.add_subcommand("theorem-check", "compare both sides of the DOS formula");
  auto* ce_cmd = app.add_subcommand("counterexample", "Cesaro means of the block sequence");
  ce_cmd->add_option("--mmax", mmax, "largest m");
  auto* vp_cmd = app.add_subcommand("vp-trace", "Dixmier trace of the lattice weight");
  auto* eq_cmd = app.add_subcommand("equivariance", "translation equivariance of the DOS");
  auto* erg_cmd = app.add_subcommand("ergodic", "Folner averages over random potentials");
  auto* fol_cmd = app.add_subcommand("folner", "Folner and temperedness table");
  fol_cmd->add_option("--nmax", nmax, "largest n");
  for (auto* c : {dos_cmd, ids_cmd, dix_cmd, thm_cmd, eq_cmd}) c->add_option("--space", space_flag, "f2 or z<d>");
  for (auto* c : app.get_subcommands({})) c->fallthrough();
  for (auto* c : {ladder_cmd, checkc_cmd}) c->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitError;
  }

  try {
    Context ctx;
    ctx.out = out_path;
    ctx.threads = threads;
    if (budget) ctx.budget = *budget;
    ctx.config = load_config(config_path);
    json& cfg = ctx.config;
    if (!space_flag.empty()) cfg["space"] = space_shorthand(space_flag);
    if (kmax) {
      cfg.erase("radius");
      cfg["k_max"] = *kmax;
    }
    if (radius) {
      cfg.erase("k_max");
      cfg["radius"] = *radius;
    }
    if (mmax) cfg["m_max"] = *mmax;
    if (nmax) cfg["n_max"] = *nmax;

    using Handler = int (*)(const Context&, const Node&);
    Handler handler = nullptr;
    if (ladder_cmd->parsed()) ctx.command = "space ladder", handler = cmd_ladder;
    else if (checkc_cmd->parsed()) ctx.command = "space check-c", handler = cmd_check_c;
    else if (perc_cmd->parsed()) ctx.command = "percolate", handler = cmd_percolate;
    else if (dos_cmd->parsed()) ctx.command = "dos", handler = cmd_dos;
    else if (ids_cmd->parsed()) ctx.command = "ids", handler = cmd_ids;
    else if (dix_cmd->parsed()) ctx.command = "dixmier", handler = cmd_dixmier;
    else if (thm_cmd->parsed()) ctx.command = "theorem-check", handler = cmd_theorem;
    else if (ce_cmd->parsed()) ctx.command = "counterexample", handler = cmd_counterexample;
    else if (vp_cmd->parsed()) ctx.command = "vp-trace", handler = cmd_vp;
    else if (eq_cmd->parsed()) ctx.command = "equivariance", handler = cmd_equivariance;
    else if (erg_cmd->parsed()) ctx.command = "ergodic", handler = cmd_ergodic;
    else if (fol_cmd->parsed()) ctx.command = "folner", handler = cmd_folner;
    if (!handler) throw ValidationError("no subcommand given");

    if (seed) {
      if (ctx.command == "percolate" && cfg.contains("percolation") && cfg["percolation"].is_object()) {
        cfg["percolation"]["seed"] = *seed;
      } else if (ctx.command == "ergodic") {
        cfg["seed"] = *seed;
      } else if (cfg.contains("hamiltonian") && cfg["hamiltonian"].is_object() &&
                 cfg["hamiltonian"].contains("potential") && cfg["hamiltonian"]["potential"].is_object()) {
        cfg["hamiltonian"]["potential"]["seed"] = *seed;
      }
    }
    const json frozen = cfg;
    Node root(frozen, "$");
    (void)root.string("description", "");
    return handler(ctx, root);
  } catch (const std::exception& e) {
    std::cerr << "doslab: error: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace doslab::cli

int main(int argc, char** argv) {
  doslab::ensure_blas_environment(argc, argv);
  return doslab::cli::run(argc, argv);
}
