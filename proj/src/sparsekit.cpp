#include "krylov/sparsekit.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "krylov/errors.hpp"

namespace krylov {

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw ContractError(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                        " vs " + std::to_string(b) + ")");
  }
}

}  // namespace

CsrMatrix::CsrMatrix(std::size_t n, std::vector<std::size_t> row_offsets,
                     std::vector<std::size_t> col_indices, std::vector<double> values)
    : n_(n),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values)) {
  if (row_offsets_.size() != n_ + 1) throw ContractError("CsrMatrix: row_offsets must have n+1 entries");
  if (row_offsets_.front() != 0) throw ContractError("CsrMatrix: row_offsets[0] must be 0");
  if (row_offsets_.back() != values_.size() || col_indices_.size() != values_.size()) {
    throw ContractError("CsrMatrix: row_offsets[n] must equal the number of stored values");
  }
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t begin = row_offsets_[i];
    const std::size_t end = row_offsets_[i + 1];
    if (end < begin) throw ContractError("CsrMatrix: row_offsets must be nondecreasing");
    for (std::size_t k = begin; k < end; ++k) {
      if (col_indices_[k] >= n_) throw ContractError("CsrMatrix: column index out of range");
      if (k > begin && col_indices_[k] <= col_indices_[k - 1]) {
        throw ContractError("CsrMatrix: column indices must be strictly increasing within a row");
      }
      if (!std::isfinite(values_[k])) throw ContractError("CsrMatrix: non-finite value");
    }
    max_row_nnz_ = std::max(max_row_nnz_, end - begin);
  }
}

CsrMatrix CsrMatrix::from_triplets(std::size_t n, std::vector<Triplet> triplets) {
  for (const auto& t : triplets) {
    if (t.row >= n || t.col >= n) throw ContractError("from_triplets: index out of range");
  }
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<std::size_t> offsets(n + 1, 0);
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  cols.reserve(triplets.size());
  vals.reserve(triplets.size());
  for (std::size_t k = 0; k < triplets.size(); ++k) {
    const auto& t = triplets[k];
    if (!cols.empty() && k > 0 && triplets[k - 1].row == t.row && triplets[k - 1].col == t.col) {
      vals.back() += t.value;
      continue;
    }
    cols.push_back(t.col);
    vals.push_back(t.value);
    ++offsets[t.row + 1];
  }
  for (std::size_t i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
  return CsrMatrix(n, std::move(offsets), std::move(cols), std::move(vals));
}

double CsrMatrix::at(std::size_t i, std::size_t j) const {
  if (i >= n_ || j >= n_) throw ContractError("CsrMatrix::at: index out of range");
  const auto first = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i]);
  const auto last = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i + 1]);
  const auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return 0.0;
  return values_[static_cast<std::size_t>(it - col_indices_.begin())];
}

bool CsrMatrix::is_symmetric() const {
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      const std::size_t j = col_indices_[k];
      if (j == i) continue;
      const auto first = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[j]);
      const auto last = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[j + 1]);
      const auto it = std::lower_bound(first, last, i);
      if (it == last || *it != i) return false;
      if (values_[static_cast<std::size_t>(it - col_indices_.begin())] != values_[k]) return false;
    }
  }
  return true;
}

double CsrMatrix::frobenius_norm() const { return nrm2(values_); }

Vector spmv(const CsrMatrix& a, std::span<const double> x) {
  Vector y(a.n());
  spmv_into(a, x, y);
  return y;
}

void spmv_into(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
  require_same_length(x.size(), a.n(), "spmv");
  require_same_length(y.size(), a.n(), "spmv");
  const auto offsets = a.row_offsets();
  const auto cols = a.col_indices();
  const auto vals = a.values();
  for (std::size_t i = 0; i < a.n(); ++i) {
    double sum = 0.0;
    for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) sum += vals[k] * x[cols[k]];
    y[i] = sum;
  }
}

void spmv_add(const CsrMatrix& a, std::span<const double> x, double beta,
              std::span<const double> w, std::span<double> y) {
  require_same_length(x.size(), a.n(), "spmv_add");
  require_same_length(w.size(), a.n(), "spmv_add");
  require_same_length(y.size(), a.n(), "spmv_add");
  const auto offsets = a.row_offsets();
  const auto cols = a.col_indices();
  const auto vals = a.values();
  for (std::size_t i = 0; i < a.n(); ++i) {
    double sum = 0.0;
    for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) sum += vals[k] * x[cols[k]];
    y[i] = sum + beta * w[i];
  }
}

Vector axpy(double alpha, std::span<const double> x, std::span<const double> y) {
  require_same_length(x.size(), y.size(), "axpy");
  Vector out(y.begin(), y.end());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] += alpha * x[i];
  return out;
}

void axpy_inplace(double alpha, std::span<const double> x, std::span<double> y) {
  require_same_length(x.size(), y.size(), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double dot(std::span<const double> x, std::span<const double> y) {
  require_same_length(x.size(), y.size(), "dot");
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sum += x[i] * y[i];
  return sum;
}

double nrm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

CsrMatrix laplace2d(std::size_t grid_n) {
  if (grid_n == 0) throw ContractError("laplace2d: grid_n must be at least 1");
  const std::size_t n = grid_n * grid_n;
  std::vector<std::size_t> offsets(n + 1, 0);
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  cols.reserve(5 * n);
  vals.reserve(5 * n);
  for (std::size_t iy = 0; iy < grid_n; ++iy) {
    for (std::size_t ix = 0; ix < grid_n; ++ix) {
      const std::size_t row = iy * grid_n + ix;
      auto push = [&](std::size_t col, double v) {
        cols.push_back(col);
        vals.push_back(v);
      };
      if (iy > 0) push(row - grid_n, -1.0);
      if (ix > 0) push(row - 1, -1.0);
      push(row, 4.0);
      if (ix + 1 < grid_n) push(row + 1, -1.0);
      if (iy + 1 < grid_n) push(row + grid_n, -1.0);
      offsets[row + 1] = cols.size();
    }
  }
  return CsrMatrix(n, std::move(offsets), std::move(cols), std::move(vals));
}

CsrMatrix identity(std::size_t n) {
  const std::vector<double> ones(n, 1.0);
  return diagonal(ones);
}

CsrMatrix diagonal(std::span<const double> d) {
  const std::size_t n = d.size();
  std::vector<std::size_t> offsets(n + 1);
  std::vector<std::size_t> cols(n);
  for (std::size_t i = 0; i < n; ++i) {
    offsets[i + 1] = i + 1;
    cols[i] = i;
  }
  return CsrMatrix(n, std::move(offsets), std::move(cols), Vector(d.begin(), d.end()));
}

CsrMatrix laplace1d(std::size_t n) {
  std::vector<CsrMatrix::Triplet> t;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) t.push_back({i, i - 1, -1.0});
    t.push_back({i, i, 2.0});
    if (i + 1 < n) t.push_back({i, i + 1, -1.0});
  }
  return CsrMatrix::from_triplets(n, std::move(t));
}

}  // namespace krylov
