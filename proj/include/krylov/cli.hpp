#pragma once

// Batch harness behind the command-line tool: problem construction, run
// specification, CSV traces and summaries.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "krylov/diagnostics.hpp"
#include "krylov/perfmodel.hpp"
#include "krylov/solvers.hpp"
#include "krylov/spectral.hpp"

namespace krylov::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumeric = 2;

/// "laplace2d:N", "mm:PATH", "diag:LO..HI" or "diag:d0,d1,...".
/// Throws ContractError on an unknown or malformed spec.
CsrMatrix build_problem(std::string_view spec);

/// "1..5" (inclusive) or "1,2,3". Throws ContractError on malformed input.
std::vector<std::size_t> parse_counts(std::string_view text);
std::vector<double> parse_doubles(std::string_view text);
std::vector<Variant> parse_variants(std::string_view text);

/// "analytic:LO,HI" or "power:ITERS". Power estimates pair with lambda_min = 0.
SpectrumEstimate estimate_spectrum(const CsrMatrix& a, std::string_view spec, std::uint64_t seed);

/// "none", "jacobi" or "block_jacobi:B".
std::shared_ptr<const Preconditioner> build_precon(const CsrMatrix& a, std::string_view spec);

/// Right-hand side: "aones" (b = A 1), "ones", or "random" (uniform(-1,1), seeded).
Vector build_rhs(const CsrMatrix& a, std::string_view spec, std::uint64_t seed);

struct RunSpec {
  std::string problem = "laplace2d:100";
  std::vector<Variant> variants{Variant::plcg_stable};
  std::vector<std::size_t> l_values{1};
  double tau = 1e-10;
  std::size_t max_iters = 1000;
  std::optional<std::vector<double>> shifts;  // explicit; otherwise Chebyshev from spectrum
  std::string spectrum = "power:50";
  std::string precon = "none";
  std::string rhs = "aones";
  std::filesystem::path output = "out";
  bool diagnostics = false;
  bool true_residual = false;
  std::size_t checkpoint_interval = 10;
  std::size_t max_restarts = 10;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;

  /// Throws ContractError unless variants and l_values are nonempty and l >= 1.
  void validate() const;
};

/// Key=value lines; '#' starts a comment, blank lines are skipped.
/// Throws ParseError naming the line on a line without '='.
std::map<std::string, std::string> read_config(const std::filesystem::path& path);

/// Applies config keys (problem, variant, l, tau, max_iters, shifts, spectrum,
/// precon, rhs, output, diagnostics, true_residual, checkpoint_interval,
/// max_restarts, seed, jobs). Throws ContractError on an unknown key.
void apply_config(RunSpec& spec, const std::map<std::string, std::string>& kv);

/// KRYLOV_SEED when set and numeric, else `fallback`.
std::uint64_t seed_from_env(std::uint64_t fallback);

/// CSV with header iter,recursive_resnorm,true_resnorm,orth_loss,lanczos_dev,event.
/// Floats are shortest round-trip decimals; absent values are NA.
std::string format_csv(const IterationTrace& trace);
void emit_csv(const IterationTrace& trace, const std::filesystem::path& path);
/// Inverse of format_csv. Throws ParseError on malformed rows.
IterationTrace parse_csv(std::string_view text);

struct RunSummary {
  Variant variant = Variant::cg;
  std::size_t l = 1;
  std::optional<SolveStatus> status;  // empty when the run threw
  std::string error;                  // exception message when it threw
  bool numeric_failure = false;       // definiteness, NaN or unrecovered breakdown
  std::size_t iterations = 0;
  std::size_t restarts = 0;
  std::size_t trace_rows = 0;
  double final_recursive_rel = 0.0;
  double final_true_rel = 0.0;
  OperationCounts ops;
  std::filesystem::path csv;
};

struct BatchResult {
  std::vector<RunSummary> runs;
  int exit_code = kExitOk;
};

/// Runs every (variant, l) pair; non-pipelined variants run once regardless of
/// l_values. A failing run is recorded and the batch continues. Writes one CSV
/// per run and summary.csv into spec.output.
BatchResult run(const RunSpec& spec);

void print_summary(std::ostream& os, const BatchResult& batch);
std::string format_summary_csv(const BatchResult& batch);

/// Perf-model table for fixed reduction and spmv times.
void print_iteration_table(std::ostream& os, double glred, double spmv, double prec,
                           const std::vector<std::size_t>& l_values);
/// Speedup over single-node CG for CG, p-CG and p(l)-CG at each node count.
void print_speedup_table(std::ostream& os, const MachineModel& model,
                         const std::vector<std::size_t>& l_values,
                         const std::vector<std::size_t>& nodes, std::size_t iters);

}  // namespace krylov::cli
