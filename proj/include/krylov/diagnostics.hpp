#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "krylov/sparsekit.hpp"

namespace krylov {

enum class TraceEvent : unsigned { none = 0, breakdown = 1, restart = 2, converged = 4 };

constexpr TraceEvent operator|(TraceEvent a, TraceEvent b) {
  return static_cast<TraceEvent>(static_cast<unsigned>(a) | static_cast<unsigned>(b));
}
constexpr bool has_event(TraceEvent set, TraceEvent e) {
  return (static_cast<unsigned>(set) & static_cast<unsigned>(e)) != 0;
}
/// "breakdown;restart", "converged", or "" for none.
std::string to_string(TraceEvent events);

struct TraceRow {
  std::size_t iteration = 0;
  double recursive_resnorm = 0.0;
  std::optional<double> true_resnorm;
  std::optional<double> orth_loss;
  std::optional<double> lanczos_dev;
  TraceEvent events = TraceEvent::none;
};

/// One row per solution iterate x_k. Norms are absolute.
struct IterationTrace {
  std::vector<TraceRow> rows;

  bool empty() const noexcept { return rows.empty(); }
  TraceRow& row(std::size_t iteration);
  /// Appends a row for `iteration`, or returns the existing last row when it
  /// already has that index (a restart re-enters the same iterate).
  TraceRow& upsert(std::size_t iteration);
};

/// ||b - A x||_2 computed from scratch.
double true_residual(const CsrMatrix& a, std::span<const double> b, std::span<const double> x);

/// |true - recursive| per row; rows without a true residual yield NaN.
std::vector<double> residual_gap(const IterationTrace& trace);

/// First row index whose gap exceeds its recursive norm, the point where the
/// recursive residual stops describing the iterate.
std::optional<std::size_t> stagnation_row(const IterationTrace& trace);

/// Full history of the computed basis for finite-precision diagnostics.
///
/// Holds v_j (the orthonormal basis), T entries (gamma_j, delta_j), z_j (the
/// l-th auxiliary basis), optional u_j = M z_j and the Gram band columns.
/// Each restart opens a new cycle; metrics combine cycles as documented on
/// each accessor. Orthogonality and Gram matrices are built incrementally.
class BasisArchive {
 public:
  using Operator = std::function<void(std::span<const double>, std::span<double>)>;

  BasisArchive() = default;
  /// `op` applies the iteration operator (A, or M^{-1}A when preconditioned).
  /// `m_op`, if set, applies M so orthogonality is measured in the M inner product.
  BasisArchive(std::size_t n, Operator op, Operator m_op = {});

  void start_cycle();
  void append_v(std::span<const double> v);
  void append_tcol(double gamma, double delta);
  void append_z(std::span<const double> z, std::span<const double> u = {});
  /// Column c of G with entries g_{j,c} for j = first_row..c.
  void set_gram_column(std::size_t c, std::size_t first_row, std::span<const double> entries);

  bool empty() const noexcept;
  std::size_t cycles() const noexcept { return cycles_.size(); }
  /// Lanczos columns with both v_{j+1} and T column j available, summed over cycles.
  std::size_t lanczos_columns() const noexcept;
  std::size_t basis_size() const noexcept;
  std::size_t diagnostic_spmv() const noexcept { return diagnostic_spmv_; }

  /// Max over cycles of ||I - V^T V||_inf (M inner product when m_op is set).
  double orthogonality_loss() const;
  /// sqrt of the sum over cycles of ||A V_k - V_{k+1} T_{k+1,k}||_F^2.
  double lanczos_deviation() const;
  /// sqrt of the sum over cycles of ||G^T G - Z^T Z||_F^2 over finalized columns.
  double gram_residual() const;
  /// Sum over cycles of ||Z||_F^2 over finalized columns.
  double z_frobenius_sq() const;
  /// Finalized Gram columns in the current cycle.
  std::size_t gram_columns() const;

  struct Cycle {
    std::vector<Vector> v;
    std::vector<double> gamma;
    std::vector<double> delta;
    std::vector<Vector> z;
    std::vector<Vector> u;
    // Lower triangle of V^T V (or V^T M V), row-major packed.
    std::vector<std::vector<double>> vgram;
    std::vector<std::vector<double>> zgram;
    std::vector<std::vector<double>> g_columns;  // g_columns[c][j - first_row]
    std::vector<std::size_t> g_first_row;
    std::vector<double> dev_sq;  // per Lanczos column
    std::vector<Vector> mv;      // M v_j, kept only when m_op is set
  };
  const std::vector<Cycle>& cycle_data() const noexcept { return cycles_; }

 private:
  void update_deviation(Cycle& cyc);

  std::size_t n_ = 0;
  Operator op_;
  Operator m_op_;
  std::vector<Cycle> cycles_;
  std::size_t diagnostic_spmv_ = 0;
};

/// Assembles ||A V_k - V_{k+1} T_{k+1,k}||_F directly from the archived basis,
/// independently of the incremental accumulation. Single-cycle archives only.
double lanczos_deviation(const CsrMatrix& a, const BasisArchive& archive);

/// ||I - V^T V||_inf for the given columns.
double orthogonality_loss(std::span<const Vector> v);
/// Direct ||I - V^T V||_inf of the archive, max over cycles.
double orthogonality_loss(const BasisArchive& archive);

}  // namespace krylov
