#pragma once

// Storage accounting and trace bookkeeping shared by the solver kernels.

#include <cmath>
#include <deque>
#include <stdexcept>
#include <string>
#include <vector>

#include "krylov/diagnostics.hpp"
#include "krylov/errors.hpp"
#include "krylov/solvers.hpp"

namespace krylov::detail {

/// Owns every work vector of a solve so the high-water mark is exact.
class VectorPool {
 public:
  explicit VectorPool(std::size_t n) : n_(n) {}

  std::span<double> acquire() {
    storage_.emplace_back(n_, 0.0);
    high_water_ = std::max(high_water_, storage_.size());
    return storage_.back();
  }
  std::size_t high_water() const noexcept { return high_water_; }

 private:
  std::size_t n_;
  std::deque<Vector> storage_;  // deque keeps element addresses stable
  std::size_t high_water_ = 0;
};

/// Fixed ring of vectors indexed by absolute basis index; slot j % size.
/// Each slot remembers which index it holds so stale reads fail loudly.
class VectorRing {
 public:
  VectorRing() = default;
  VectorRing(VectorPool& pool, std::size_t slots) {
    for (std::size_t s = 0; s < slots; ++s) slots_.push_back(pool.acquire());
    tags_.assign(slots, kEmpty);
  }

  std::size_t size() const noexcept { return slots_.size(); }

  /// Marks the slot for `index` as holding it and returns it for writing.
  std::span<double> claim(std::size_t index) {
    const std::size_t s = index % slots_.size();
    tags_[s] = index;
    return slots_[s];
  }
  std::span<double> get(std::size_t index) {
    const std::size_t s = index % slots_.size();
    if (tags_[s] != index) {
      throw std::logic_error("VectorRing: index " + std::to_string(index) + " no longer held");
    }
    return slots_[s];
  }
  bool holds(std::size_t index) const {
    return tags_[index % slots_.size()] == index;
  }
  /// Raw slot access for scratch use; invalidates the slot's tag.
  std::span<double> scratch(std::size_t slot) {
    tags_[slot] = kEmpty;
    return slots_[slot];
  }
  void reset() { tags_.assign(slots_.size(), kEmpty); }

 private:
  static constexpr std::size_t kEmpty = static_cast<std::size_t>(-1);
  std::vector<std::span<double>> slots_;
  std::vector<std::size_t> tags_;
};

/// Per-solve bookkeeping: operation counts, trace rows, checkpoints.
class Recorder {
 public:
  Recorder(const CsrMatrix& a, std::span<const double> b, const SolverConfig& cfg, SolveResult& res)
      : a_(a), b_(b), cfg_(cfg), res_(res) {}

  void begin_iteration() { cur_ = IterationOps{}; }
  void end_iteration(bool steady) {
    cur_.steady = steady;
    res_.ops.per_iteration.push_back(cur_);
  }
  void spmv() {
    ++cur_.spmv;
    ++res_.ops.spmv;
  }
  void dots(std::size_t k = 1) {
    cur_.dots += k;
    res_.ops.dots += k;
  }
  void axpy(std::size_t k = 1) {
    cur_.axpy += k;
    res_.ops.axpy += k;
  }
  void precon() {
    ++cur_.precon;
    ++res_.ops.precon;
  }
  void setup_spmv(std::size_t k = 1) { res_.ops.setup_spmv += k; }
  void restart_spmv(std::size_t k = 1) { res_.ops.restart_spmv += k; }

  void set_reference(double r0) { res_.r0_norm = r0; }
  double reference() const noexcept { return res_.r0_norm; }
  bool converged(double resnorm) const { return std::abs(resnorm) / res_.r0_norm < cfg_.tau; }

  BasisArchive* archive() { return res_.archive ? &*res_.archive : nullptr; }

  /// Writes trace row k for iterate x with recursive residual norm `recursive`.
  TraceRow& row(std::size_t k, double recursive, std::span<const double> x,
                TraceEvent events = TraceEvent::none) {
    if (!std::isfinite(recursive)) throw NumericError("non-finite recursive residual", k);
    TraceRow& r = res_.trace.upsert(k);
    r.recursive_resnorm = std::abs(recursive);
    r.events = r.events | events;
    if (cfg_.trace_true_residual) {
      r.true_resnorm = true_residual(a_, b_, x);
      ++res_.ops.diagnostic_spmv;
    }
    if (archive() && cfg_.checkpoint_interval > 0 && k % cfg_.checkpoint_interval == 0) checkpoint(k);
    if (cfg_.on_iterate) cfg_.on_iterate(k, x);
    res_.final_recursive_resnorm = r.recursive_resnorm;
    res_.iterations = k;
    return r;
  }

  void mark(std::size_t k, TraceEvent events) {
    TraceRow& r = res_.trace.row(k);
    r.events = r.events | events;
  }

  /// Records archive metrics on row k (skipped when row k was already checkpointed).
  void checkpoint(std::size_t k) {
    BasisArchive* ar = archive();
    if (!ar || ar->empty()) return;
    if (!res_.checkpoints.empty() && res_.checkpoints.back().iteration == k) {
      res_.checkpoints.pop_back();
    }
    Checkpoint cp;
    cp.iteration = k;
    cp.orth_loss = ar->orthogonality_loss();
    cp.lanczos_dev = ar->lanczos_deviation();
    cp.lanczos_columns = ar->lanczos_columns();
    cp.gram_residual = ar->gram_residual();
    cp.z_frobenius_sq = ar->z_frobenius_sq();
    cp.gram_columns = ar->gram_columns();
    res_.checkpoints.push_back(cp);
    TraceRow& r = res_.trace.row(k);
    r.orth_loss = cp.orth_loss;
    r.lanczos_dev = cp.lanczos_dev;
  }

  /// Final bookkeeping shared by every variant.
  void finish(std::span<const double> x, SolveStatus status) {
    res_.status = status;
    res_.x.assign(x.begin(), x.end());
    res_.final_true_resnorm = true_residual(a_, b_, x);
    ++res_.ops.diagnostic_spmv;
    if (status == SolveStatus::converged && !res_.trace.rows.empty()) {
      res_.trace.rows.back().events = res_.trace.rows.back().events | TraceEvent::converged;
    }
    if (archive() && !res_.trace.rows.empty()) checkpoint(res_.trace.rows.back().iteration);
    if (archive()) res_.ops.diagnostic_spmv += archive()->diagnostic_spmv();
  }

  const SolverConfig& cfg() const noexcept { return cfg_; }
  SolveResult& result() noexcept { return res_; }

 private:
  const CsrMatrix& a_;
  std::span<const double> b_;
  const SolverConfig& cfg_;
  SolveResult& res_;
  IterationOps cur_;
};

inline void require_finite(double v, const char* what, std::size_t iteration) {
  if (!std::isfinite(v)) throw NumericError(std::string("non-finite ") + what, iteration);
}

SolveResult solve_cg(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                     const SolverConfig& cfg);
SolveResult solve_dlanczos(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                           const SolverConfig& cfg);
SolveResult solve_pcg_ghysels(const CsrMatrix& a, std::span<const double> b,
                              std::span<const double> x0, const SolverConfig& cfg);
SolveResult solve_plcg(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                       const SolverConfig& cfg);

}  // namespace krylov::detail
