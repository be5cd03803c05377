// Command-line driver: generate/solve/certify/oracle single instances and
// run seeded Monte Carlo recovery sweeps. See README for formats.

#include "z2sync/z2sync.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

using json = nlohmann::json;
using namespace z2sync;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInvariant = 2;
constexpr int kExitIo = 3;

void write_report(const json& report, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << report.dump(2) << "\n";
    return;
  }
  detail::write_file(path, report.dump(2) + "\n");
}

json instance_summary(const ProblemInstance& inst, const std::string& path) {
  json j;
  j["file"] = path;
  j["n"] = inst.n();
  j["seed"] = inst.seed;
  if (const auto* g = std::get_if<GaussianParams>(&inst.params)) {
    j["model"] = "gaussian";
    j["sigma"] = g->sigma;
  } else if (const auto* e = std::get_if<ErBernoulliParams>(&inst.params)) {
    j["model"] = "erbern";
    j["p"] = e->p;
    j["delta"] = e->delta;
  } else if (const auto* s = std::get_if<SbmParams>(&inst.params)) {
    j["model"] = "sbm";
    j["p"] = s->p;
    j["q"] = s->q;
    j["centering"] = s->centering == SbmCentering::kMeanEstimate ? "mean" : "knownpq";
  } else {
    j["model"] = "raw";
  }
  j["has_truth"] = inst.truth.has_value();
  j["has_graph"] = inst.graph.has_value();
  return j;
}

json criticality_json(const CriticalityReport& cert) {
  json j;
  j["grad_residual"] = cert.grad_residual;
  j["s_min_eig"] = cert.s_min_eig;
  j["s_y_residual"] = cert.s_y_residual;
  j["is_first_order"] = cert.is_first_order;
  j["is_second_order"] = cert.is_second_order;
  j["is_global"] = cert.is_global;
  j["tolerance"] = cert.tolerance;
  j["cost_op_norm"] = cert.cost_op_norm;
  return j;
}

json recovery_json(const RecoveryReport& rec) {
  json j;
  j["is_exact"] = rec.is_exact;
  j["rel_residual"] = rec.rel_residual;
  j["rank1_gap"] = rec.rank1_gap;
  j["top_singular"] = rec.top_singular;
  j["correlation"] = rec.correlation;
  std::string labels;
  for (Index i = 0; i < rec.labels.size(); ++i) labels.push_back(rec.labels[i] > 0 ? '+' : '-');
  j["labels"] = labels;
  return j;
}

Index default_rank(Index n) {
  Index r = 4;
  while ((Index{1} << r) < n) ++r;  // ceil(log2 n), floored at 4
  return std::max<Index>(4, r);
}

int run(int argc, char** argv) {
  CLI::App app{"Z2 synchronization and binary graph clustering via the rank-r "
               "Burer-Monteiro relaxation"};
  app.require_subcommand(1);

  // ---- gen ----
  auto* gen = app.add_subcommand("gen", "Generate a random problem instance");
  std::string gen_model, gen_out, gen_centering = "mean";
  std::int64_t gen_n = 0;
  double gen_sigma = 1.0, gen_p = 0.5, gen_q = 0.1, gen_delta = 1.0;
  std::uint64_t gen_seed = 0;
  gen->add_option("--model", gen_model, "gaussian | erbern | sbm")->required();
  gen->add_option("--n", gen_n, "problem size")->required();
  gen->add_option("--sigma", gen_sigma, "gaussian noise level");
  gen->add_option("--p", gen_p, "edge probability (erbern) / within-cluster probability (sbm)");
  gen->add_option("--q", gen_q, "between-cluster probability (sbm)");
  gen->add_option("--delta", gen_delta, "sign correctness bias (erbern)");
  gen->add_option("--centering", gen_centering, "sbm centering: mean | knownpq");
  gen->add_option("--seed", gen_seed, "RNG seed")->required();
  gen->add_option("--out", gen_out, "output instance file")->required();

  // ---- solve ----
  auto* solve_cmd = app.add_subcommand("solve", "Solve an instance and report");
  std::string solve_in, solve_report, solve_save_y;
  std::int64_t solve_r = 0;
  int solve_starts = 1;
  std::uint64_t solve_seed = 0;
  SolverConfig solve_cfg;
  solve_cmd->add_option("--in", solve_in, "instance file")->required();
  solve_cmd->add_option("--r", solve_r, "factor rank (default max(4, ceil(log2 n)))");
  solve_cmd->add_option("--starts", solve_starts, "number of random starts");
  solve_cmd->add_option("--seed", solve_seed, "solver seed");
  solve_cmd->add_option("--max-iters", solve_cfg.max_iters, "iteration budget");
  solve_cmd->add_option("--grad-tol", solve_cfg.grad_tol, "relative first-order tolerance");
  solve_cmd->add_option("--curv-tol", solve_cfg.curvature_tol, "relative curvature tolerance");
  solve_cmd->add_option("--report", solve_report, "JSON report path ('-' for stdout)");
  solve_cmd->add_option("--save-y", solve_save_y, "write the best factor point to this file");

  // ---- certify ----
  auto* certify_cmd = app.add_subcommand("certify", "Certify a factor point against an instance");
  std::string cert_in, cert_y, cert_report;
  double cert_tol = 1e-8;
  certify_cmd->add_option("--in", cert_in, "instance file")->required();
  certify_cmd->add_option("--y", cert_y, "factor file")->required();
  certify_cmd->add_option("--tol", cert_tol, "certification tolerance scale");
  certify_cmd->add_option("--report", cert_report, "JSON report path ('-' for stdout)");

  // ---- oracle ----
  auto* oracle_cmd = app.add_subcommand("oracle", "Brute-force optimum (n <= 22)");
  std::string oracle_in;
  oracle_cmd->add_option("--in", oracle_in, "instance file")->required();

  // ---- conditions ----
  auto* cond_cmd = app.add_subcommand("conditions", "Evaluate recovery conditions");
  std::string cond_in, cond_report;
  std::int64_t cond_r = 0;
  double cond_eps = 1.0 / 12.0;
  cond_cmd->add_option("--in", cond_in, "instance file")->required();
  cond_cmd->add_option("--r", cond_r, "rank used in the conditions")->required();
  cond_cmd->add_option("--eps", cond_eps, "epsilon for the asymptotic conditions");
  cond_cmd->add_option("--report", cond_report, "JSON report path ('-' for stdout)");

  // ---- adversary ----
  auto* adv_cmd = app.add_subcommand("adversary", "Apply a monotone adversary perturbation");
  std::string adv_in, adv_out;
  double adv_strength = 1.0, adv_density = 0.2;
  std::uint64_t adv_seed = 0;
  adv_cmd->add_option("--in", adv_in, "instance file")->required();
  adv_cmd->add_option("--strength", adv_strength, "maximum perturbation magnitude")->required();
  adv_cmd->add_option("--density", adv_density, "fraction of pairs perturbed")->required();
  adv_cmd->add_option("--seed", adv_seed, "adversary seed")->required();
  adv_cmd->add_option("--out", adv_out, "output instance file")->required();

  // ---- sweep ----
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a Monte Carlo recovery sweep");
  std::string sweep_spec_path, sweep_out;
  int sweep_jobs = 1;
  bool sweep_resume = false;
  sweep_cmd->add_option("--spec", sweep_spec_path, "sweep spec file")->required();
  sweep_cmd->add_option("--out", sweep_out, "output directory")->required();
  sweep_cmd->add_option("--jobs", sweep_jobs, "concurrent trials");
  sweep_cmd->add_flag("--resume", sweep_resume, "reuse completed per-cell checkpoints");

  // ---- verify ----
  auto* verify_cmd = app.add_subcommand("verify", "Re-run recorded trials and compare");
  std::string verify_dir;
  int verify_trials = 1;
  verify_cmd->add_option("--dir", verify_dir, "sweep output directory")->required();
  verify_cmd->add_option("--trials", verify_trials, "trials to re-run per cell");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) {
      ProblemInstance inst = [&] {
        if (gen_model == "gaussian") return gen_gaussian(gen_n, gen_sigma, gen_seed);
        if (gen_model == "erbern") return gen_er_bernoulli(gen_n, gen_p, gen_delta, gen_seed);
        if (gen_model == "sbm") {
          const SbmCentering centering = gen_centering == "knownpq"
                                             ? SbmCentering::kKnownPQ
                                             : SbmCentering::kMeanEstimate;
          return gen_sbm(gen_n, gen_p, gen_q, centering, gen_seed);
        }
        throw std::invalid_argument("gen: unknown model '" + gen_model + "'");
      }();
      save_instance(inst, gen_out);
      std::cout << "wrote " << gen_out << " (n=" << inst.n() << ")\n";
      return kExitOk;
    }

    if (*solve_cmd) {
      const ProblemInstance inst = load_instance(solve_in);
      const Index r = solve_r > 0 ? solve_r : default_rank(inst.n());
      const auto multi = multi_start(inst.cost, r, solve_cfg, solve_starts, solve_seed);
      const SolveResult& best = multi.results[multi.best_index];
      const auto cert = certify(inst.cost, best.point,
                                std::max(solve_cfg.grad_tol, solve_cfg.curvature_tol));

      json j;
      j["instance"] = instance_summary(inst, solve_in);
      j["r"] = r;
      j["starts"] = solve_starts;
      j["seed"] = solve_seed;
      j["best_index"] = multi.best_index;
      j["results"] = json::array();
      for (const auto& result : multi.results) {
        json jr;
        jr["status"] = to_string(result.status);
        jr["iterations"] = result.iterations;
        jr["escapes"] = result.escapes;
        jr["objective"] = result.objective_value;
        jr["grad_residual"] = result.grad_residual;
        jr["min_curvature_estimate"] = result.min_curvature_estimate;
        j["results"].push_back(jr);
      }
      j["certificate"] = criticality_json(cert);
      if (inst.truth) j["recovery"] = recovery_json(check_exact_recovery(best.point, *inst.truth));
      if (!solve_save_y.empty()) save_factor(best.point, solve_save_y);
      write_report(j, solve_report);
      return kExitOk;
    }

    if (*certify_cmd) {
      const ProblemInstance inst = load_instance(cert_in);
      const FactorPoint y = load_factor(cert_y);
      require(y.n() == inst.n(), "certify: factor and instance sizes differ");
      const auto cert = certify(inst.cost, y, cert_tol);
      json j;
      j["instance"] = instance_summary(inst, cert_in);
      j["certificate"] = criticality_json(cert);
      if (inst.truth) j["recovery"] = recovery_json(check_exact_recovery(y, *inst.truth));
      write_report(j, cert_report);
      return kExitOk;
    }

    if (*oracle_cmd) {
      const ProblemInstance inst = load_instance(oracle_in);
      const auto bf = brute_force_opt(inst.cost);
      std::cout << "optimum " << detail::format_double(bf.value) << "\n";
      std::cout << "argmax " << detail::sign_string(bf.argmax) << "\n";
      if (inst.truth) {
        const double corr =
            std::abs(static_cast<double>(bf.argmax.entries().dot(inst.truth->entries()))) /
            static_cast<double>(inst.n());
        std::cout << "truth_correlation " << detail::format_double(corr) << "\n";
      }
      return kExitOk;
    }

    if (*cond_cmd) {
      const ProblemInstance inst = load_instance(cond_in);
      require(inst.truth.has_value(), "conditions: instance has no ground truth");
      const int r = static_cast<int>(cond_r);
      json j;
      j["instance"] = instance_summary(inst, cond_in);
      j["r"] = r;
      j["eps"] = cond_eps;
      const double n = static_cast<double>(inst.n());
      if (const auto* s = std::get_if<SbmParams>(&inst.params)) {
        const auto det = check_sbm_determ(*inst.graph, *inst.truth, s->p, s->q, r, s->centering);
        json jd;
        jd["dz_min"] = det.dz_min;
        jd["a_centered_opnorm"] = det.a_centered_opnorm;
        jd["lhs"] = det.lhs;
        jd["rhs"] = det.rhs;
        jd["satisfied"] = det.satisfied;
        jd["margin"] = det.margin;
        j["sbm_deterministic"] = jd;
        const auto asym = sbm_condition(inst.n(), s->p, s->q, r, cond_eps);
        j["sbm_asymptotic"] = {{"value", asym.value},
                               {"satisfied", asym.satisfied},
                               {"gamma", asym.gamma}};
      } else {
        const Graph graph = inst.graph ? *inst.graph : complete_graph(inst.n());
        const NoiseMatrix delta = implied_noise(inst);
        const auto det = check_z2_determ(graph, delta, *inst.truth, r);
        json jd;
        jd["lambda2"] = det.lambda2;
        jd["rho_delta"] = det.rho_delta_max;
        jd["delta_opnorm"] = det.delta_opnorm;
        jd["lhs"] = det.lhs;
        jd["rhs"] = det.rhs;
        jd["satisfied"] = det.satisfied;
        jd["margin"] = det.margin;
        jd["proof_margin"] = det.proof_margin;
        j["z2_deterministic"] = jd;
        if (const auto* g = std::get_if<GaussianParams>(&inst.params)) {
          j["gaussian_sigma_threshold"] = gaussian_sigma_threshold(inst.n(), r, cond_eps);
          j["sigma"] = g->sigma;
        } else if (const auto* e = std::get_if<ErBernoulliParams>(&inst.params)) {
          const double a = e->p * n / std::log(n);
          const auto bern = bern_condition(a, e->delta, r, std::min(cond_eps, 1.0 / 3.0));
          j["bern_condition"] = {{"np_over_logn", a},
                                 {"value", bern.value},
                                 {"satisfied", bern.satisfied},
                                 {"simple_satisfied", bern.simple_satisfied}};
          // Concentration diagnostic ||C - EC|| / sqrt(n p): reported as a
          // ratio only; the paper fixes no constant.
          Matrix centered = inst.cost.entries();
          const double mean = e->delta * e->p;
          for (Index ii = 0; ii < inst.n(); ++ii)
            for (Index jj = 0; jj < inst.n(); ++jj)
              if (ii != jj)
                centered(ii, jj) -= mean * static_cast<double>((*inst.truth)[ii] *
                                                               (*inst.truth)[jj]);
          j["concentration_ratio"] =
              e->p > 0.0 ? operator_norm(centered) / std::sqrt(n * e->p) : 0.0;
        }
      }
      write_report(j, cond_report);
      return kExitOk;
    }

    if (*adv_cmd) {
      const ProblemInstance inst = load_instance(adv_in);
      const ProblemInstance bumped =
          apply_monotone_adversary(inst, adv_strength, adv_density, adv_seed);
      save_instance(bumped, adv_out);
      std::cout << "wrote " << adv_out << "\n";
      return kExitOk;
    }

    if (*sweep_cmd) {
      namespace fs = std::filesystem;
      const std::string spec_text = detail::read_file(sweep_spec_path);
      const SweepSpec spec = parse_sweep_spec(spec_text);
      fs::create_directories(sweep_out);
      detail::write_file((fs::path(sweep_out) / "spec.sweep").string(), spec_text);

      SweepRunOptions options;
      options.jobs = sweep_jobs;
      options.checkpoint_dir = (fs::path(sweep_out) / "cells").string();
      options.resume = sweep_resume;
      const SweepResult result = run_sweep(spec, options);

      emit_csv(result, (fs::path(sweep_out) / "results.csv").string());
      detail::write_file((fs::path(sweep_out) / "summary.csv").string(), summary_csv(result));
      emit_summary(result, std::cout);
      std::cout << "wrote " << (fs::path(sweep_out) / "results.csv").string() << "\n";
      return kExitOk;
    }

    if (*verify_cmd) {
      const auto outcome = verify_sweep_dir(verify_dir, verify_trials);
      for (const auto& message : outcome.messages) std::cerr << "mismatch: " << message << "\n";
      std::cout << "verified " << outcome.checked << " trial(s), " << outcome.mismatches
                << " mismatch(es)\n";
      return outcome.mismatches == 0 ? kExitOk : kExitInvariant;
    }
  } catch (const FormatError& e) {
    std::cerr << "error: malformed file: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvariant;
  }
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
