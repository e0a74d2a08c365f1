#include "krylov/solvers.hpp"

#include "krylov/errors.hpp"
#include "solver_internal.hpp"

namespace krylov {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::cg: return "cg";
    case Variant::dlanczos: return "dlanczos";
    case Variant::pcg_ghysels: return "pcg_ghysels";
    case Variant::plcg_original: return "plcg_original";
    case Variant::plcg_stable: return "plcg_stable";
  }
  return "unknown";
}

std::optional<Variant> parse_variant(std::string_view name) {
  for (Variant v : {Variant::cg, Variant::dlanczos, Variant::pcg_ghysels, Variant::plcg_original,
                    Variant::plcg_stable}) {
    if (name == to_string(v)) return v;
  }
  return std::nullopt;
}

bool is_pipelined(Variant v) noexcept { return v == Variant::plcg_original || v == Variant::plcg_stable; }

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iterations: return "max_iterations";
    case SolveStatus::breakdown_unrecovered: return "breakdown_unrecovered";
  }
  return "unknown";
}

void SolverConfig::validate() const {
  if (!(tau > 0.0)) throw ContractError("SolverConfig: tau must be positive");
  if (l == 0) throw ContractError("SolverConfig: l must be at least 1");
  if (!(breakdown_floor >= 0.0)) throw ContractError("SolverConfig: breakdown_floor must be >= 0");
  if (is_pipelined(variant) && shifts.size() != l) {
    throw ContractError("SolverConfig: " + std::to_string(shifts.size()) + " shifts given for l = " +
                        std::to_string(l));
  }
  if (precon && variant != Variant::plcg_stable) {
    throw ContractError("SolverConfig: preconditioning is supported for plcg_stable only");
  }
}

namespace {

void check_problem(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0) {
  if (b.size() != a.n() || x0.size() != a.n()) throw ContractError("solve: dimension mismatch");
  if (!a.is_symmetric()) throw ContractError("solve: matrix is not symmetric");
}

SolveResult dispatch(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                     const SolverConfig& cfg) {
  switch (cfg.variant) {
    case Variant::cg: return detail::solve_cg(a, b, x0, cfg);
    case Variant::dlanczos: return detail::solve_dlanczos(a, b, x0, cfg);
    case Variant::pcg_ghysels: return detail::solve_pcg_ghysels(a, b, x0, cfg);
    case Variant::plcg_original:
    case Variant::plcg_stable: return detail::solve_plcg(a, b, x0, cfg);
  }
  throw ContractError("solve: unknown variant");
}

}  // namespace

SolveResult solve(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                  const SolverConfig& cfg) {
  cfg.validate();
  check_problem(a, b, x0);
  return dispatch(a, b, x0, cfg);
}

SolveResult solve_preconditioned(const CsrMatrix& a, std::span<const double> b,
                                 std::span<const double> x0, const SolverConfig& cfg) {
  if (!cfg.precon) throw ContractError("solve_preconditioned: no preconditioner configured");
  if (cfg.variant != Variant::plcg_stable) {
    throw ContractError("solve_preconditioned: variant must be plcg_stable");
  }
  if (cfg.precon->n() != a.n()) throw ContractError("solve_preconditioned: preconditioner size mismatch");
  return solve(a, b, x0, cfg);
}

}  // namespace krylov
