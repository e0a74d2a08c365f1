#pragma once

#include <cstddef>
#include <vector>

#include "krylov/solvers.hpp"

namespace krylov {

/// Analytic per-iteration cost of the CG variants on p nodes. Local axpy and
/// dot-product flops are neglected; only reductions, spmv and an optional
/// preconditioner application are timed.
struct MachineModel {
  double glred_base = 5e-6;   // c0, seconds
  double glred_log = 2e-6;    // c1, seconds per doubling of the node count
  double spmv_single = 200e-6;  // spmv seconds on one node
  double spmv_exponent = 1.0;   // t_spmv(p) = spmv_single / p^exponent
  double prec = 0.0;            // additive preconditioner seconds per iteration at one node, scaled like spmv

  double t_glred(std::size_t nodes) const;
  double t_spmv(std::size_t nodes) const;
  double t_prec(std::size_t nodes) const;
  /// Throws ContractError on nonpositive times or a negative exponent.
  void validate() const;
};

/// Table formulas: CG and D-Lanczos 2 glred + spmv; p-CG and p(1)-CG
/// max(glred, spmv); p(l)-CG max(glred / l, spmv). The preconditioner adds to
/// the spmv term.
double iteration_time(double glred, double spmv, Variant variant, std::size_t l, double prec = 0.0);
double iteration_time(const MachineModel& model, Variant variant, std::size_t l, std::size_t nodes = 1);

struct SpeedupPoint {
  std::size_t nodes = 1;
  double total_time = 0.0;  // iters * iteration_time
  double speedup = 0.0;     // single-node CG total over this total
};

/// Throws ContractError unless node_range is nonempty, ascending and >= 1.
std::vector<SpeedupPoint> speedup_curve(const MachineModel& model, Variant variant, std::size_t l,
                                        const std::vector<std::size_t>& node_range, std::size_t iters);

}  // namespace krylov
