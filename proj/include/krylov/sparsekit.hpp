#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <span>
#include <vector>

namespace krylov {

using Vector = std::vector<double>;

// Unit roundoff used by every tolerance formula in the library.
inline constexpr double kUnitRoundoff = std::numeric_limits<double>::epsilon() / 2.0;

/// Square sparse matrix in compressed-sparse-row form.
///
/// Columns are sorted strictly ascending within each row. The constructor
/// validates the structure; symmetry is not required here but is checked by
/// every solver entry point via is_symmetric().
class CsrMatrix {
 public:
  CsrMatrix() = default;
  CsrMatrix(std::size_t n, std::vector<std::size_t> row_offsets,
            std::vector<std::size_t> col_indices, std::vector<double> values);

  /// Builds from unsorted (row, col, value) triplets; duplicates are summed.
  struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
  };
  static CsrMatrix from_triplets(std::size_t n, std::vector<Triplet> triplets);

  std::size_t n() const noexcept { return n_; }
  std::size_t nnz() const noexcept { return values_.size(); }
  std::size_t max_row_nnz() const noexcept { return max_row_nnz_; }

  std::span<const std::size_t> row_offsets() const noexcept { return row_offsets_; }
  std::span<const std::size_t> col_indices() const noexcept { return col_indices_; }
  std::span<const double> values() const noexcept { return values_; }

  /// Entry (i, j), zero when not stored.
  double at(std::size_t i, std::size_t j) const;

  /// Structural and bitwise numeric symmetry.
  bool is_symmetric() const;

  double frobenius_norm() const;

  bool operator==(const CsrMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<std::size_t> col_indices_;
  std::vector<double> values_;
  std::size_t max_row_nnz_ = 0;
};

// Dense kernels. All reductions are sequential in ascending index order so
// results are bit-reproducible.

/// y = A x.
Vector spmv(const CsrMatrix& a, std::span<const double> x);
void spmv_into(const CsrMatrix& a, std::span<const double> x, std::span<double> y);

/// y = A x + beta w. `y` may alias `w` but not `x`.
void spmv_add(const CsrMatrix& a, std::span<const double> x, double beta,
              std::span<const double> w, std::span<double> y);

/// Returns alpha x + y.
Vector axpy(double alpha, std::span<const double> x, std::span<const double> y);
void axpy_inplace(double alpha, std::span<const double> x, std::span<double> y);

double dot(std::span<const double> x, std::span<const double> y);
double nrm2(std::span<const double> x);

// Problem generators.

/// 5-point Laplacian on a grid_n x grid_n interior grid, homogeneous
/// Dirichlet boundary eliminated. Spectrum lies in (0, 8).
CsrMatrix laplace2d(std::size_t grid_n);
CsrMatrix identity(std::size_t n);
CsrMatrix diagonal(std::span<const double> d);
/// 1D Laplacian tridiag(-1, 2, -1).
CsrMatrix laplace1d(std::size_t n);

// Matrix Market coordinate format.

CsrMatrix read_matrix_market(const std::filesystem::path& path);
/// Writes symmetric storage (lower triangle) when the matrix is symmetric,
/// general storage otherwise. Values use shortest round-trip decimals.
void write_matrix_market(const std::filesystem::path& path, const CsrMatrix& a);

}  // namespace krylov
