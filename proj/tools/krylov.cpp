// Command-line harness: solve, perfmodel, genmatrix.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "krylov/cli.hpp"
#include "krylov/errors.hpp"

namespace {

using namespace krylov;

int cmd_solve(const CLI::App& sub, const std::string& config, const cli::RunSpec& flag_spec,
              const std::map<std::string, std::string>& flags) {
  cli::RunSpec spec;
  spec.seed = cli::seed_from_env(0);
  if (!config.empty()) cli::apply_config(spec, cli::read_config(config));
  // `flags` holds only options given on the command line; they override the config file.
  cli::apply_config(spec, flags);
  if (sub.count("--diagnostics") > 0) spec.diagnostics = flag_spec.diagnostics;
  if (sub.count("--true-residual") > 0) spec.true_residual = flag_spec.true_residual;

  const cli::BatchResult batch = cli::run(spec);
  cli::print_summary(std::cout, batch);
  return batch.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pipelined conjugate gradient solvers and diagnostics"};
  app.require_subcommand(1);

  // solve: string-valued options are routed through apply_config so the
  // config file and the flags share one parser.
  auto* solve = app.add_subcommand("solve", "Run solver variants and write CSV traces");
  std::string config;
  std::map<std::string, std::string> flags;
  cli::RunSpec flag_spec;
  solve->add_option("--config", config, "key=value config file; flags override it");
  const std::pair<const char*, const char*> string_flags[] = {
      {"problem", "laplace2d:N | mm:PATH | diag:LO..HI | diag:d0,d1,..."},
      {"variant", "comma list of cg, dlanczos, pcg_ghysels, plcg_original, plcg_stable"},
      {"l", "pipeline lengths, e.g. 1,2,3 or 1..5"},
      {"tau", "relative tolerance"},
      {"max_iters", "maximum iterations"},
      {"shifts", "explicit shifts (comma list) or auto"},
      {"spectrum", "analytic:LO,HI | power:ITERS"},
      {"precon", "none | jacobi | block_jacobi:B"},
      {"rhs", "aones | ones | random"},
      {"output", "output directory"},
      {"checkpoint_interval", "diagnostic checkpoint interval"},
      {"max_restarts", "restart budget per solve"},
      {"seed", "seed for power method and random rhs (default KRYLOV_SEED or 0)"},
      {"jobs", "worker threads"},
  };
  for (const auto& [name, help] : string_flags) {
    std::string dashed = name;
    for (char& c : dashed) {
      if (c == '_') c = '-';
    }
    // Both --max_iters and --max-iters are accepted.
    const std::string names = dashed == name ? "--" + dashed : "--" + std::string(name) + ",--" + dashed;
    solve->add_option_function<std::string>(names, [&flags, key = std::string(name)](const std::string& v) {
      flags[key] = v;
    }, help);
  }
  solve->add_flag("--diagnostics", flag_spec.diagnostics, "archive the basis and record orth_loss/lanczos_dev");
  solve->add_flag("--true-residual", flag_spec.true_residual, "compute ||b - A x|| on every trace row");

  auto* perf = app.add_subcommand("perfmodel", "Evaluate the analytic cost model");
  double glred = -1.0;
  double spmv_t = -1.0;
  double prec = 0.0;
  std::string l_text = "1..5";
  std::string nodes_text;
  std::size_t iters = 100;
  MachineModel model;
  perf->add_option("--glred", glred, "seconds per global reduction (fixed)");
  perf->add_option("--spmv", spmv_t, "seconds per spmv (fixed)");
  perf->add_option("--prec", prec, "seconds per preconditioner application");
  perf->add_option("--l", l_text, "pipeline lengths");
  perf->add_option("--nodes", nodes_text, "node counts for a speedup table, e.g. 1,2,4,8");
  perf->add_option("--iters", iters, "iterations per modeled solve");
  perf->add_option("--c0", model.glred_base, "reduction latency at one node (s)");
  perf->add_option("--c1", model.glred_log, "reduction latency per doubling of nodes (s)");
  perf->add_option("--t1", model.spmv_single, "spmv time on one node (s)");
  perf->add_option("--exponent", model.spmv_exponent, "spmv strong-scaling exponent");

  auto* gen = app.add_subcommand("genmatrix", "Write a generated problem in Matrix Market format");
  std::string gen_problem = "laplace2d:10";
  std::string gen_out;
  gen->add_option("--problem", gen_problem, "problem spec");
  gen->add_option("--output", gen_out, "output .mtx path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  try {
    if (*solve) return cmd_solve(*solve, config, flag_spec, flags);
    if (*perf) {
      const auto l_values = cli::parse_counts(l_text);
      if (!nodes_text.empty()) {
        model.prec = prec;
        cli::print_speedup_table(std::cout, model, l_values, cli::parse_counts(nodes_text), iters);
        return cli::kExitOk;
      }
      if (glred < 0.0 || spmv_t < 0.0) {
        std::cerr << "perfmodel: give --glred and --spmv, or --nodes\n";
        return cli::kExitUsage;
      }
      cli::print_iteration_table(std::cout, glred, spmv_t, prec, l_values);
      return cli::kExitOk;
    }
    if (*gen) {
      write_matrix_market(gen_out, cli::build_problem(gen_problem));
      return cli::kExitOk;
    }
  } catch (const DefinitenessError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kExitNumeric;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kExitUsage;
  }
  return cli::kExitUsage;
}
