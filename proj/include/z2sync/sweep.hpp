#pragma once

#include "z2sync/certificates.hpp"
#include "z2sync/conditions.hpp"
#include "z2sync/instance_io.hpp"
#include "z2sync/instances.hpp"
#include "z2sync/solver.hpp"
#include "z2sync/types.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace z2sync {

struct AdversarySpec {
  double strength = 0.0;
  double density = 0.0;
};

// A parsed sweep specification: a model template, named grid axes, and the
// solver/trial bookkeeping. See parse_sweep_spec for the file schema.
struct SweepSpec {
  std::string model;  // gaussian | erbern | sbm
  std::map<std::string, std::string> base;
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;  // name-sorted
  int trials_per_cell = 1;
  int starts = 1;
  std::uint64_t master_seed = 0;
  SolverConfig solver;
  std::optional<AdversarySpec> adversary;
};

// One grid cell: axis name -> canonical value string, sorted by axis name.
using CellCoords = std::vector<std::pair<std::string, std::string>>;

struct TrialRecord {
  CellCoords coords;
  int trial = 0;
  bool recovered = false;
  bool certified_global = false;
  double objective = 0.0;
  double grad_residual = 0.0;
  double s_min_eig = 0.0;
  double condition_margin = 0.0;
  double rank1_gap = 0.0;
  double correlation = 0.0;
  std::string status;
  long long wall_ms = 0;
};

struct SweepResult {
  SweepSpec spec;
  std::vector<CellCoords> cells;
  std::vector<TrialRecord> records;  // cell-major, trial-minor
};

struct CellSummary {
  CellCoords coords;
  int trials = 0;
  int recovered = 0;
  double frequency = 0.0;
  double wilson_lo = 0.0;
  double wilson_hi = 0.0;
};

// Wilson 95% score interval for `successes` out of `trials`.
inline std::pair<double, double> wilson_interval(int successes, int trials) {
  require(trials >= 1 && successes >= 0 && successes <= trials, "wilson_interval: bad counts");
  const double z = 1.959963984540054;
  const double nf = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / nf;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nf;
  const double center = (phat + z2 / (2.0 * nf)) / denom;
  const double half =
      z * std::sqrt(phat * (1.0 - phat) / nf + z2 / (4.0 * nf * nf)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

namespace detail {

inline const std::vector<std::string>& allowed_axes() {
  static const std::vector<std::string> names = {"n", "r", "sigma", "p",
                                                 "q", "delta", "a", "b", "centering"};
  return names;
}

inline bool axis_allowed(const std::string& name) {
  for (const auto& a : allowed_axes())
    if (a == name) return true;
  return false;
}

// Canonical value string: numbers re-formatted %.17g so "16" and "16.0" hash
// identically; centering tokens validated verbatim.
inline std::string canonical_value(const std::string& axis, const std::string& token) {
  if (axis == "centering") {
    require(token == "mean" || token == "knownpq",
            "sweep: centering must be 'mean' or 'knownpq'");
    return token;
  }
  return format_double(parse_double(token, axis));
}

inline std::string cell_key(const CellCoords& coords) {
  std::string key;
  for (const auto& [name, value] : coords) {
    if (!key.empty()) key += ",";
    key += name + "=" + value;
  }
  return key;
}

struct ResolvedCell {
  Index n = 0;
  Index r = 0;
  double sigma = 0.0;
  double p = 0.0;
  double q = 0.0;
  double delta = 0.0;
  SbmCentering centering = SbmCentering::kMeanEstimate;
};

inline ResolvedCell resolve_cell(const SweepSpec& spec, const CellCoords& coords) {
  std::map<std::string, std::string> merged = spec.base;
  for (const auto& [name, value] : coords) merged[name] = value;

  auto get = [&](const std::string& key) -> std::optional<std::string> {
    auto it = merged.find(key);
    if (it == merged.end()) return std::nullopt;
    return it->second;
  };
  auto get_double = [&](const std::string& key) -> std::optional<double> {
    auto raw = get(key);
    if (!raw) return std::nullopt;
    return parse_double(*raw, key);
  };

  ResolvedCell cell;
  auto n_raw = get_double("n");
  require(n_raw.has_value(), "sweep: n missing (base params or grid axis)");
  cell.n = static_cast<Index>(*n_raw);
  require(cell.n >= 2, "sweep: n must be >= 2");
  auto r_raw = get_double("r");
  require(r_raw.has_value(), "sweep: r missing (base params or grid axis)");
  cell.r = static_cast<Index>(*r_raw);
  require(cell.r >= 2, "sweep: r must be >= 2");

  const double logn = std::log(static_cast<double>(cell.n));
  auto p_from_a = [&](double a) { return a * logn / static_cast<double>(cell.n); };

  if (spec.model == "gaussian") {
    auto sigma = get_double("sigma");
    require(sigma.has_value(), "sweep: sigma missing for gaussian model");
    cell.sigma = *sigma;
  } else if (spec.model == "erbern") {
    auto p = get_double("p");
    auto a = get_double("a");
    require(p.has_value() || a.has_value(), "sweep: p or a missing for erbern model");
    cell.p = p ? *p : p_from_a(*a);
    auto delta = get_double("delta");
    require(delta.has_value(), "sweep: delta missing for erbern model");
    cell.delta = *delta;
  } else if (spec.model == "sbm") {
    auto p = get_double("p");
    auto a = get_double("a");
    require(p.has_value() || a.has_value(), "sweep: p or a missing for sbm model");
    cell.p = p ? *p : p_from_a(*a);
    auto q = get_double("q");
    auto b = get_double("b");
    require(q.has_value() || b.has_value(), "sweep: q or b missing for sbm model");
    cell.q = q ? *q : p_from_a(*b);
    auto centering = get("centering");
    cell.centering = (centering && *centering == "knownpq") ? SbmCentering::kKnownPQ
                                                            : SbmCentering::kMeanEstimate;
  } else {
    throw std::invalid_argument("sweep: unknown model '" + spec.model + "'");
  }
  return cell;
}

inline std::string format_bool(bool b) { return b ? "1" : "0"; }

}  // namespace detail

// Parses the sweep spec file: one `key value...` pair per line, '#' comments.
// Keys: model, trials, starts, master_seed, solver.<field>,
// adversary.strength, adversary.density, grid <axis> <v1> <v2> ...,
// and base model parameters (n, r, sigma, p, q, delta, a, b, centering).
inline SweepSpec parse_sweep_spec(const std::string& text) {
  SweepSpec spec;
  std::optional<double> adv_strength, adv_density;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto tokens = detail::split_tokens(line);
    if (tokens.empty()) continue;
    const std::string& key = tokens[0];
    auto value = [&]() -> const std::string& {
      require(tokens.size() == 2, "sweep spec: '" + key + "' expects exactly one value");
      return tokens[1];
    };
    if (key == "model") {
      spec.model = value();
      require(spec.model == "gaussian" || spec.model == "erbern" || spec.model == "sbm",
              "sweep spec: model must be gaussian, erbern, or sbm");
    } else if (key == "trials") {
      spec.trials_per_cell = static_cast<int>(detail::parse_u64(value(), key));
      require(spec.trials_per_cell >= 1, "sweep spec: trials must be >= 1");
    } else if (key == "starts") {
      spec.starts = static_cast<int>(detail::parse_u64(value(), key));
      require(spec.starts >= 1, "sweep spec: starts must be >= 1");
    } else if (key == "master_seed") {
      spec.master_seed = detail::parse_u64(value(), key);
    } else if (key == "grid") {
      require(tokens.size() >= 3, "sweep spec: grid needs an axis name and >= 1 value");
      const std::string& axis = tokens[1];
      require(detail::axis_allowed(axis), "sweep spec: unknown grid axis '" + axis + "'");
      for (const auto& existing : spec.axes)
        require(existing.first != axis, "sweep spec: duplicate grid axis '" + axis + "'");
      std::vector<std::string> values;
      for (std::size_t i = 2; i < tokens.size(); ++i)
        values.push_back(detail::canonical_value(axis, tokens[i]));
      spec.axes.emplace_back(axis, std::move(values));
    } else if (key == "solver.max_iters") {
      spec.solver.max_iters = static_cast<int>(detail::parse_u64(value(), key));
    } else if (key == "solver.grad_tol") {
      spec.solver.grad_tol = detail::parse_double(value(), key);
    } else if (key == "solver.curvature_tol") {
      spec.solver.curvature_tol = detail::parse_double(value(), key);
    } else if (key == "solver.escape_step") {
      spec.solver.escape_step = detail::parse_double(value(), key);
    } else if (key == "solver.max_escapes") {
      spec.solver.max_escapes = static_cast<int>(detail::parse_u64(value(), key));
    } else if (key == "solver.armijo_c") {
      spec.solver.armijo_c = detail::parse_double(value(), key);
    } else if (key == "solver.backtrack") {
      spec.solver.backtrack = detail::parse_double(value(), key);
    } else if (key == "adversary.strength") {
      adv_strength = detail::parse_double(value(), key);
    } else if (key == "adversary.density") {
      adv_density = detail::parse_double(value(), key);
    } else if (detail::axis_allowed(key)) {
      spec.base[key] = detail::canonical_value(key, value());
    } else {
      throw std::invalid_argument("sweep spec: unknown key '" + key + "'");
    }
  }
  require(!spec.model.empty(), "sweep spec: model missing");
  require(!spec.axes.empty(), "sweep spec: at least one grid axis required");
  require(adv_strength.has_value() == adv_density.has_value(),
          "sweep spec: adversary needs both strength and density");
  if (adv_strength) spec.adversary = AdversarySpec{*adv_strength, *adv_density};
  std::sort(spec.axes.begin(), spec.axes.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return spec;
}

// Cartesian product of the (name-sorted) axes; cells ordered by coordinate
// tuple, numeric axes comparing numerically.
inline std::vector<CellCoords> expand_grid(const SweepSpec& spec) {
  std::vector<CellCoords> cells;
  CellCoords current;
  auto recurse = [&](auto&& self, std::size_t depth) -> void {
    if (depth == spec.axes.size()) {
      cells.push_back(current);
      return;
    }
    for (const auto& value : spec.axes[depth].second) {
      current.emplace_back(spec.axes[depth].first, value);
      self(self, depth + 1);
      current.pop_back();
    }
  };
  recurse(recurse, 0);

  auto value_less = [](const std::string& axis, const std::string& x, const std::string& y) {
    if (axis == "centering") return x < y;
    return detail::parse_double(x, axis) < detail::parse_double(y, axis);
  };
  std::sort(cells.begin(), cells.end(), [&](const CellCoords& a, const CellCoords& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].second == b[i].second) continue;
      return value_less(a[i].first, a[i].second, b[i].second);
    }
    return false;
  });
  return cells;
}

// Generates, (optionally) perturbs, solves, certifies, and scores one trial.
// Pure function of (spec, cell, trial): all randomness comes from seeds
// derived from (master_seed, fnv1a64(cell key), trial), so records are
// independent of grid layout and trial count.
inline TrialRecord run_trial(const SweepSpec& spec, const CellCoords& cell, int trial) {
  const auto resolved = detail::resolve_cell(spec, cell);
  const std::uint64_t cell_hash = detail::fnv1a64(detail::cell_key(cell));
  const std::uint64_t trial_u = static_cast<std::uint64_t>(trial);

  const auto t0 = std::chrono::steady_clock::now();

  const std::uint64_t gen_seed =
      derive_seed(spec.master_seed, cell_hash, trial_u, streams::kTrialGen);
  ProblemInstance inst = [&] {
    if (spec.model == "gaussian") return gen_gaussian(resolved.n, resolved.sigma, gen_seed);
    if (spec.model == "erbern")
      return gen_er_bernoulli(resolved.n, resolved.p, resolved.delta, gen_seed);
    return gen_sbm(resolved.n, resolved.p, resolved.q, resolved.centering, gen_seed);
  }();

  // The matching deterministic condition, evaluated on the base instance
  // (monotone perturbations only improve it).
  double condition_margin = std::numeric_limits<double>::quiet_NaN();
  try {
    const int cond_r = static_cast<int>(resolved.r);
    if (spec.model == "sbm") {
      condition_margin = check_sbm_determ(*inst.graph, *inst.truth, resolved.p, resolved.q,
                                          cond_r, resolved.centering)
                             .margin;
    } else {
      const Graph graph = inst.graph ? *inst.graph : complete_graph(inst.n());
      condition_margin =
          check_z2_determ(graph, implied_noise(inst), *inst.truth, cond_r).margin;
    }
  } catch (const std::invalid_argument&) {
    // Condition undefined at these parameters (e.g. r = 3 with noise).
  }

  if (spec.adversary) {
    const std::uint64_t adv_seed =
        derive_seed(spec.master_seed, cell_hash, trial_u, streams::kTrialAdversary);
    inst = apply_monotone_adversary(inst, spec.adversary->strength, spec.adversary->density,
                                    adv_seed);
  }

  const std::uint64_t solve_seed =
      derive_seed(spec.master_seed, cell_hash, trial_u, streams::kTrialSolve);
  const MultiStartResult multi =
      multi_start(inst.cost, resolved.r, spec.solver, spec.starts, solve_seed);
  const SolveResult& best = multi.results[multi.best_index];

  const double certify_tol = std::max(spec.solver.grad_tol, spec.solver.curvature_tol);
  const CriticalityReport cert = certify(inst.cost, best.point, certify_tol);
  const RecoveryReport recovery = check_exact_recovery(best.point, *inst.truth);

  const auto t1 = std::chrono::steady_clock::now();

  TrialRecord record;
  record.coords = cell;
  record.trial = trial;
  record.recovered = recovery.is_exact;
  record.certified_global = cert.is_global;
  record.objective = best.objective_value;
  record.grad_residual = best.grad_residual;
  record.s_min_eig = cert.s_min_eig;
  record.condition_margin = condition_margin;
  record.rank1_gap = recovery.rank1_gap;
  record.correlation = recovery.correlation;
  record.status = to_string(best.status);
  record.wall_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
  return record;
}

inline std::vector<std::string> csv_fixed_columns() {
  return {"trial",      "recovered",        "certified_global", "objective",
          "grad_residual", "s_min_eig",     "condition_margin", "rank1_gap",
          "correlation", "status",          "wall_ms"};
}

inline std::string csv_header(const SweepSpec& spec) {
  std::string header;
  for (const auto& [name, values] : spec.axes) header += "axis_" + name + ",";
  const auto fixed = csv_fixed_columns();
  for (std::size_t i = 0; i < fixed.size(); ++i) {
    header += fixed[i];
    if (i + 1 < fixed.size()) header += ",";
  }
  return header;
}

inline std::string csv_row(const TrialRecord& record) {
  std::string row;
  for (const auto& [name, value] : record.coords) row += value + ",";
  row += std::to_string(record.trial) + ",";
  row += detail::format_bool(record.recovered) + ",";
  row += detail::format_bool(record.certified_global) + ",";
  row += detail::format_double(record.objective) + ",";
  row += detail::format_double(record.grad_residual) + ",";
  row += detail::format_double(record.s_min_eig) + ",";
  row += detail::format_double(record.condition_margin) + ",";
  row += detail::format_double(record.rank1_gap) + ",";
  row += detail::format_double(record.correlation) + ",";
  row += record.status + ",";
  row += std::to_string(record.wall_ms);
  return row;
}

inline std::string emit_csv(const SweepResult& result) {
  std::string out = csv_header(result.spec) + "\n";
  for (const auto& record : result.records) out += csv_row(record) + "\n";
  return out;
}

inline void emit_csv(const SweepResult& result, const std::string& path) {
  detail::write_file(path, emit_csv(result));
}

// Parses records back from the CSV (used by `verify` and tests). The first
// `n_axes` columns are axis values in header order.
inline std::vector<TrialRecord> parse_csv_records(const std::string& text,
                                                  std::vector<std::string>* axis_names = nullptr) {
  std::vector<TrialRecord> records;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("csv", "empty file");
  std::vector<std::string> header;
  {
    std::istringstream hs(line);
    std::string col;
    while (std::getline(hs, col, ',')) header.push_back(col);
  }
  std::size_t n_axes = 0;
  while (n_axes < header.size() && header[n_axes].rfind("axis_", 0) == 0) ++n_axes;
  if (header.size() != n_axes + csv_fixed_columns().size())
    throw FormatError("csv", "unexpected column count");
  if (axis_names) {
    axis_names->clear();
    for (std::size_t i = 0; i < n_axes; ++i) axis_names->push_back(header[i].substr(5));
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() != header.size()) throw FormatError("csv", "bad row width");
    TrialRecord record;
    for (std::size_t i = 0; i < n_axes; ++i)
      record.coords.emplace_back(header[i].substr(5), fields[i]);
    std::size_t k = n_axes;
    record.trial = static_cast<int>(detail::parse_u64(fields[k++], "trial"));
    record.recovered = fields[k++] == "1";
    record.certified_global = fields[k++] == "1";
    record.objective = detail::parse_double(fields[k++], "objective");
    record.grad_residual = detail::parse_double(fields[k++], "grad_residual");
    record.s_min_eig = detail::parse_double(fields[k++], "s_min_eig");
    record.condition_margin = detail::parse_double(fields[k++], "condition_margin");
    record.rank1_gap = detail::parse_double(fields[k++], "rank1_gap");
    record.correlation = detail::parse_double(fields[k++], "correlation");
    record.status = fields[k++];
    record.wall_ms = static_cast<long long>(detail::parse_u64(fields[k++], "wall_ms"));
    records.push_back(std::move(record));
  }
  return records;
}

struct SweepRunOptions {
  int jobs = 1;
  std::string checkpoint_dir;  // per-cell CSV fragments, enables --resume
  bool resume = false;
};

inline std::string checkpoint_name(std::size_t cell_index, std::uint64_t cell_hash) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "cell_%04zu_%016llx.csv", cell_index,
                static_cast<unsigned long long>(cell_hash));
  return buffer;
}

// Runs all cells x trials. Completed cells are flushed to the checkpoint
// directory immediately, so an interrupted sweep resumes at cell
// granularity. Records are deterministic and independent of `jobs`.
inline SweepResult run_sweep(const SweepSpec& spec, const SweepRunOptions& options = {}) {
  require(options.jobs >= 1, "run_sweep: jobs must be >= 1");
  SweepResult result;
  result.spec = spec;
  result.cells = expand_grid(spec);
  const int trials = spec.trials_per_cell;

  namespace fs = std::filesystem;
  const bool checkpointing = !options.checkpoint_dir.empty();
  if (checkpointing) fs::create_directories(options.checkpoint_dir);

  for (std::size_t ci = 0; ci < result.cells.size(); ++ci) {
    const CellCoords& cell = result.cells[ci];
    const std::uint64_t cell_hash = detail::fnv1a64(detail::cell_key(cell));
    const fs::path checkpoint =
        checkpointing ? fs::path(options.checkpoint_dir) / checkpoint_name(ci, cell_hash)
                      : fs::path();

    if (checkpointing && options.resume && fs::exists(checkpoint)) {
      try {
        auto loaded = parse_csv_records(detail::read_file(checkpoint.string()));
        bool usable = static_cast<int>(loaded.size()) == trials;
        for (std::size_t t = 0; usable && t < loaded.size(); ++t)
          usable = loaded[t].coords == cell && loaded[t].trial == static_cast<int>(t);
        if (usable) {
          for (auto& record : loaded) result.records.push_back(std::move(record));
          continue;
        }
      } catch (const FormatError&) {
        // Unusable checkpoint: recompute the cell.
      }
    }

    std::vector<TrialRecord> cell_records(static_cast<std::size_t>(trials));
    if (options.jobs == 1) {
      for (int t = 0; t < trials; ++t) cell_records[static_cast<std::size_t>(t)] =
          run_trial(spec, cell, t);
    } else {
      std::atomic<int> next{0};
      auto worker = [&] {
        while (true) {
          const int t = next.fetch_add(1);
          if (t >= trials) return;
          cell_records[static_cast<std::size_t>(t)] = run_trial(spec, cell, t);
        }
      };
      std::vector<std::thread> pool;
      const int threads = std::min(options.jobs, trials);
      pool.reserve(static_cast<std::size_t>(threads));
      for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }

    if (checkpointing) {
      std::string fragment = csv_header(spec) + "\n";
      for (const auto& record : cell_records) fragment += csv_row(record) + "\n";
      detail::write_file(checkpoint.string(), fragment);
    }
    for (auto& record : cell_records) result.records.push_back(std::move(record));
  }
  return result;
}

inline std::vector<CellSummary> summarize(const SweepResult& result) {
  std::vector<CellSummary> out;
  const int trials = result.spec.trials_per_cell;
  for (std::size_t ci = 0; ci < result.cells.size(); ++ci) {
    CellSummary summary;
    summary.coords = result.cells[ci];
    summary.trials = trials;
    for (int t = 0; t < trials; ++t) {
      const auto& record = result.records[ci * static_cast<std::size_t>(trials) +
                                          static_cast<std::size_t>(t)];
      if (record.recovered) ++summary.recovered;
    }
    summary.frequency = static_cast<double>(summary.recovered) / static_cast<double>(trials);
    const auto [lo, hi] = wilson_interval(summary.recovered, trials);
    summary.wilson_lo = lo;
    summary.wilson_hi = hi;
    out.push_back(std::move(summary));
  }
  return out;
}

inline void emit_summary(const SweepResult& result, std::ostream& os) {
  const auto summaries = summarize(result);
  os << "cell | recovered/trials | frequency | wilson95\n";
  for (const auto& summary : summaries) {
    os << detail::cell_key(summary.coords) << " | " << summary.recovered << "/"
       << summary.trials << " | " << std::fixed << std::setprecision(3) << summary.frequency
       << " | [" << summary.wilson_lo << ", " << summary.wilson_hi << "]\n";
  }
  os.flags(std::ios::fmtflags{});
}

inline std::string summary_csv(const SweepResult& result) {
  std::string out;
  for (const auto& [name, values] : result.spec.axes) out += "axis_" + name + ",";
  out += "trials,recovered,frequency,wilson_lo,wilson_hi\n";
  for (const auto& summary : summarize(result)) {
    for (const auto& [name, value] : summary.coords) out += value + ",";
    out += std::to_string(summary.trials) + "," + std::to_string(summary.recovered) + "," +
           detail::format_double(summary.frequency) + "," +
           detail::format_double(summary.wilson_lo) + "," +
           detail::format_double(summary.wilson_hi) + "\n";
  }
  return out;
}

struct VerifyOutcome {
  int checked = 0;
  int mismatches = 0;
  std::vector<std::string> messages;
};

// Re-runs a sample of recorded trials from the sweep directory (spec.sweep +
// results.csv) and compares against the stored rows. Everything except
// wall_ms must reproduce byte-for-byte, since trials are pure functions of
// (spec, cell, trial).
inline VerifyOutcome verify_sweep_dir(const std::string& dir, int trials_per_cell_to_check = 1) {
  namespace fs = std::filesystem;
  const SweepSpec spec = parse_sweep_spec(detail::read_file((fs::path(dir) / "spec.sweep").string()));
  const auto records = parse_csv_records(detail::read_file((fs::path(dir) / "results.csv").string()));
  const auto cells = expand_grid(spec);
  const int trials = spec.trials_per_cell;
  require(records.size() == cells.size() * static_cast<std::size_t>(trials),
          "verify: results.csv row count does not match spec grid");

  VerifyOutcome outcome;
  auto compare_field = [&](const std::string& what, const std::string& stored,
                           const std::string& fresh, const CellCoords& cell, int trial) {
    if (stored == fresh) return;
    ++outcome.mismatches;
    outcome.messages.push_back("cell " + detail::cell_key(cell) + " trial " +
                               std::to_string(trial) + ": " + what + " stored=" + stored +
                               " recomputed=" + fresh);
  };

  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    const int check_count = std::min(trials_per_cell_to_check, trials);
    for (int t = 0; t < check_count; ++t) {
      const auto& stored = records[ci * static_cast<std::size_t>(trials) +
                                   static_cast<std::size_t>(t)];
      require(stored.coords == cells[ci] && stored.trial == t,
              "verify: results.csv is not in canonical order");
      const TrialRecord fresh = run_trial(spec, cells[ci], t);
      ++outcome.checked;
      compare_field("recovered", detail::format_bool(stored.recovered),
                    detail::format_bool(fresh.recovered), cells[ci], t);
      compare_field("certified_global", detail::format_bool(stored.certified_global),
                    detail::format_bool(fresh.certified_global), cells[ci], t);
      compare_field("objective", detail::format_double(stored.objective),
                    detail::format_double(fresh.objective), cells[ci], t);
      compare_field("grad_residual", detail::format_double(stored.grad_residual),
                    detail::format_double(fresh.grad_residual), cells[ci], t);
      compare_field("s_min_eig", detail::format_double(stored.s_min_eig),
                    detail::format_double(fresh.s_min_eig), cells[ci], t);
      compare_field("condition_margin", detail::format_double(stored.condition_margin),
                    detail::format_double(fresh.condition_margin), cells[ci], t);
      compare_field("rank1_gap", detail::format_double(stored.rank1_gap),
                    detail::format_double(fresh.rank1_gap), cells[ci], t);
      compare_field("correlation", detail::format_double(stored.correlation),
                    detail::format_double(fresh.correlation), cells[ci], t);
      compare_field("status", stored.status, fresh.status, cells[ci], t);
    }
  }
  return outcome;
}

}  // namespace z2sync
