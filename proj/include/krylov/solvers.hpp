#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "krylov/diagnostics.hpp"
#include "krylov/pipeline.hpp"
#include "krylov/precon.hpp"
#include "krylov/sparsekit.hpp"

namespace krylov {

enum class Variant { cg, dlanczos, pcg_ghysels, plcg_original, plcg_stable };

std::string to_string(Variant v);
std::optional<Variant> parse_variant(std::string_view name);
bool is_pipelined(Variant v) noexcept;

enum class SolveStatus { converged, max_iterations, breakdown_unrecovered };
std::string to_string(SolveStatus s);

// Relative square-root floor: column c breaks down when its root argument is
// at or below this fraction of ||z_c||^2, i.e. when z_c lies within about
// 1e-7 radians of the span of earlier basis vectors.
inline constexpr double kDefaultBreakdownFloor = 64.0 * kUnitRoundoff;

struct SolverConfig {
  Variant variant = Variant::plcg_stable;
  std::size_t l = 1;             // pipeline length; ignored by non-pipelined variants
  std::size_t max_iters = 1000;  // m, counted in solution iterates
  double tau = 1e-10;            // relative tolerance on |zeta| / ||r0||
  std::vector<double> shifts;    // sigma_0..sigma_{l-1}; pipelined variants only
  std::shared_ptr<const Preconditioner> precon;
  std::size_t max_restarts = 10;
  double breakdown_floor = kDefaultBreakdownFloor;

  // Instrumentation.
  bool record_diagnostics = false;     // keep a BasisArchive and fill checkpoints
  std::size_t checkpoint_interval = 10;
  bool trace_true_residual = false;    // ||b - A x_k|| on every trace row
  bool full_dot_products = false;      // compute every Gram entry instead of l+1 per iteration

  /// Forces a breakdown when Gram column c is finalized (first cycle only).
  std::optional<std::size_t> inject_breakdown_at_column;
  /// Called with every iterate x_k as its trace row is written.
  std::function<void(std::size_t, std::span<const double>)> on_iterate;
  /// Called with every search direction p_t of the D-Lanczos and pipelined
  /// variants as it is formed; t counts from the start of the current cycle.
  std::function<void(std::size_t, std::span<const double>)> on_direction;

  /// Throws ContractError on tau <= 0, l == 0, or a shift count != l.
  void validate() const;
};

/// Algorithmic work in one loop iteration.
struct IterationOps {
  std::size_t spmv = 0;
  std::size_t dots = 0;
  std::size_t axpy = 0;  // vector terms combined minus one; scalings are free
  std::size_t precon = 0;
  bool steady = false;   // every recurrence, dot product and update is active
};

struct OperationCounts {
  std::size_t spmv = 0;
  std::size_t dots = 0;
  std::size_t axpy = 0;
  std::size_t precon = 0;
  std::size_t setup_spmv = 0;       // initial residual (and w0 = A r0 for p-CG)
  std::size_t restart_spmv = 0;     // residual checks and pipeline rebuilds
  std::size_t diagnostic_spmv = 0;  // trace and archive only
  std::size_t live_vectors_high_water = 0;  // work vectors; x and b excluded
  std::vector<IterationOps> per_iteration;
};

struct RestartRecord {
  std::size_t iteration = 0;      // trace row where the breakdown occurred
  double root_argument = 0.0;
  double pre_true_resnorm = 0.0;  // ||b - A x|| before the restart
  double post_true_resnorm = 0.0; // ||b - A x|| the new cycle starts from
};

struct Checkpoint {
  std::size_t iteration = 0;  // trace row
  double orth_loss = 0.0;
  double lanczos_dev = 0.0;
  std::size_t lanczos_columns = 0;
  double gram_residual = 0.0;     // ||G^T G - Z^T Z||_F, pipelined variants
  double z_frobenius_sq = 0.0;    // ||Z||_F^2 over the same columns
  std::size_t gram_columns = 0;
};

struct SolveResult {
  Vector x;
  SolveStatus status = SolveStatus::max_iterations;
  std::size_t iterations = 0;
  std::size_t restarts = 0;
  double r0_norm = 0.0;                 // in the norm the stopping test uses
  double final_recursive_resnorm = 0.0;
  double final_true_resnorm = 0.0;      // ||b - A x||_2 at exit
  IterationTrace trace;
  OperationCounts ops;
  std::vector<RestartRecord> restart_log;
  std::vector<Checkpoint> checkpoints;
  std::optional<BasisArchive> archive;  // its operator refers to the solved matrix
  TridiagFactors tridiag;  // last cycle
  LuFactors lu;            // last cycle
};

/// Solves A x = b from x0 with the configured variant. A must be symmetric;
/// a configured preconditioner routes to solve_preconditioned.
SolveResult solve(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                  const SolverConfig& cfg);

/// Left-preconditioned stable p(l)-CG; cfg.precon must be set.
SolveResult solve_preconditioned(const CsrMatrix& a, std::span<const double> b,
                                 std::span<const double> x0, const SolverConfig& cfg);

inline const OperationCounts& op_counters(const SolveResult& r) { return r.ops; }

}  // namespace krylov
