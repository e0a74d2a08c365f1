#include "krylov/perfmodel.hpp"

#include <algorithm>
#include <cmath>

#include "krylov/errors.hpp"

namespace krylov {

double MachineModel::t_glred(std::size_t nodes) const {
  return glred_base + glred_log * std::log2(static_cast<double>(std::max<std::size_t>(nodes, 1)));
}

double MachineModel::t_spmv(std::size_t nodes) const {
  return spmv_single / std::pow(static_cast<double>(std::max<std::size_t>(nodes, 1)), spmv_exponent);
}

double MachineModel::t_prec(std::size_t nodes) const {
  return prec / std::pow(static_cast<double>(std::max<std::size_t>(nodes, 1)), spmv_exponent);
}

void MachineModel::validate() const {
  if (!(glred_base >= 0.0) || !(glred_log >= 0.0) || !(spmv_single > 0.0) || !(spmv_exponent >= 0.0) ||
      !(prec >= 0.0)) {
    throw ContractError("MachineModel: times must be nonnegative and spmv time positive");
  }
}

double iteration_time(double glred, double spmv, Variant variant, std::size_t l, double prec) {
  if (!(glred >= 0.0) || !(spmv >= 0.0) || !(prec >= 0.0)) {
    throw ContractError("iteration_time: times must be nonnegative");
  }
  const double work = spmv + prec;
  switch (variant) {
    case Variant::cg:
    case Variant::dlanczos: return 2.0 * glred + work;
    case Variant::pcg_ghysels: return std::max(glred, work);
    case Variant::plcg_original:
    case Variant::plcg_stable:
      if (l == 0) throw ContractError("iteration_time: l must be at least 1");
      return std::max(glred / static_cast<double>(l), work);
  }
  throw ContractError("iteration_time: unknown variant");
}

double iteration_time(const MachineModel& model, Variant variant, std::size_t l, std::size_t nodes) {
  model.validate();
  return iteration_time(model.t_glred(nodes), model.t_spmv(nodes), variant, l, model.t_prec(nodes));
}

std::vector<SpeedupPoint> speedup_curve(const MachineModel& model, Variant variant, std::size_t l,
                                        const std::vector<std::size_t>& node_range, std::size_t iters) {
  if (node_range.empty()) throw ContractError("speedup_curve: empty node range");
  if (node_range.front() == 0 || !std::is_sorted(node_range.begin(), node_range.end())) {
    throw ContractError("speedup_curve: node range must be ascending and start at 1 or more");
  }
  const double iters_d = static_cast<double>(iters);
  const double reference = iters_d * iteration_time(model, Variant::cg, 1, 1);
  std::vector<SpeedupPoint> out;
  out.reserve(node_range.size());
  for (std::size_t p : node_range) {
    SpeedupPoint pt;
    pt.nodes = p;
    pt.total_time = iters_d * iteration_time(model, variant, l, p);
    pt.speedup = reference / pt.total_time;
    out.push_back(pt);
  }
  return out;
}

}  // namespace krylov
