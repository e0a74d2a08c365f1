#pragma once

// Scalar machinery shared by the pipelined CG variants: the banded Gram
// factor G (Z = V G), the Lanczos tridiagonal T and its LU factorization.

#include <cstddef>
#include <span>
#include <vector>

namespace krylov {

/// Banded upper-triangular G, keeping g_{j,c} for c - 2l <= j <= c.
class GramBand {
 public:
  explicit GramBand(std::size_t l);

  std::size_t l() const noexcept { return l_; }
  std::size_t bandwidth() const noexcept { return 2 * l_ + 1; }
  std::size_t columns() const noexcept { return data_.size() / bandwidth(); }
  std::size_t first_row(std::size_t c) const noexcept { return c >= 2 * l_ ? c - 2 * l_ : 0; }

  /// Appends zero columns until column c exists.
  void ensure_column(std::size_t c);
  void clear() { data_.clear(); }

  /// g_{j,c}; zero for j < 0, j > c or outside the band.
  double operator()(std::ptrdiff_t j, std::ptrdiff_t c) const;
  /// Mutable entry; throws ContractError outside the band or past columns().
  double& at(std::size_t j, std::size_t c);

  /// Entries g_{first_row(c)..c, c}.
  std::vector<double> column(std::size_t c) const;

 private:
  std::size_t l_;
  std::vector<double> data_;  // column-major, bandwidth() slots per column
};

struct GramStep {
  bool breakdown = false;
  double root_argument = 0.0;
  double raw_diagonal = 0.0;  // ||z_c||^2 before the Cholesky update
};

/// Fills g_{j,c} = g_{c-l, j+l} for first_row(c) <= j <= c-l-1, the entries a
/// symmetric operator makes redundant. Needs columns up to c-1 finalized.
void gram_fill_symmetric(GramBand& g, std::size_t c);

/// Turns the raw dot products of column c into the Cholesky column:
///   g_{j,c} <- (g_{j,c} - sum_{k<j} g_{k,j} g_{k,c}) / g_{j,j},  j = c-l+1..c-1
///   g_{c,c} <- sqrt(g_{c,c} - sum_{k<c} g_{k,c}^2)
/// Entries j <= c-l already hold final values. Breakdown is signalled, and
/// g_{c,c} left untouched, when the root argument is <= floor_rel * raw
/// diagonal. A NaN root argument is reported as breakdown with that value.
GramStep gram_finalize(GramBand& g, std::size_t c, double floor_rel);

/// Lanczos tridiagonal entries: gamma on the diagonal, delta off it.
struct TridiagFactors {
  std::vector<double> gamma;
  std::vector<double> delta;
  void clear() {
    gamma.clear();
    delta.clear();
  }
};

/// Column t of T from column t+1 of G. Uses the shifted form for t < l and
/// the gamma_{t-l}, delta_{t-l} form otherwise. With `with_delta` false only
/// gamma_t is produced (delta_t is stored as NaN), as after a breakdown.
void tridiag_update(const GramBand& g, TridiagFactors& tf, std::size_t t,
                    std::span<const double> shifts, bool with_delta = true);

/// LU factorization T = L U with unit lower bidiagonal L.
struct LuFactors {
  std::vector<double> eta;
  std::vector<double> lambda;  // lambda[0] unused (0)
  std::vector<double> zeta;
  void clear() {
    eta.clear();
    lambda.clear();
    zeta.clear();
  }
};

/// Row t: eta_0 = gamma_0, zeta_0 = r0_norm; for t >= 1
///   lambda_t = delta_{t-1}/eta_{t-1}, eta_t = gamma_t - lambda_t delta_{t-1},
///   zeta_t = -lambda_t zeta_{t-1}.
void lu_advance(LuFactors& lu, const TridiagFactors& tf, std::size_t t, double r0_norm);

}  // namespace krylov
