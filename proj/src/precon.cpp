#include "krylov/precon.hpp"

#include <algorithm>
#include <cmath>

#include "krylov/errors.hpp"

namespace krylov {

std::string to_string(PreconKind kind) {
  switch (kind) {
    case PreconKind::identity: return "identity";
    case PreconKind::jacobi: return "jacobi";
    case PreconKind::block_jacobi: return "block_jacobi";
  }
  return "unknown";
}

Preconditioner Preconditioner::build(const CsrMatrix& a, PreconKind kind, std::size_t block_size) {
  Preconditioner m;
  m.kind_ = kind;
  m.n_ = a.n();
  if (kind == PreconKind::identity) return m;
  if (kind == PreconKind::jacobi) block_size = 1;
  if (block_size == 0) throw ContractError("Preconditioner: block_size must be at least 1");
  m.block_size_ = block_size;

  const auto offsets = a.row_offsets();
  const auto cols = a.col_indices();
  const auto vals = a.values();
  m.factor_offsets_.push_back(0);
  for (std::size_t start = 0; start < m.n_; start += block_size) {
    const std::size_t size = std::min(block_size, m.n_ - start);
    const std::size_t block = m.block_starts_.size();
    m.block_starts_.push_back(start);

    // Gather the dense diagonal block.
    std::vector<double> blk(size * size, 0.0);
    for (std::size_t r = 0; r < size; ++r) {
      const std::size_t row = start + r;
      for (std::size_t k = offsets[row]; k < offsets[row + 1]; ++k) {
        const std::size_t col = cols[k];
        if (col >= start && col < start + size) blk[r * size + (col - start)] = vals[k];
      }
    }

    // In-place lower Cholesky; a 1x1 block keeps the raw diagonal so apply is w / d.
    if (size == 1 && !(blk[0] > 0.0)) throw BuildError("diagonal block is not positive definite", block);
    for (std::size_t j = 0; j < size && size > 1; ++j) {
      double d = blk[j * size + j];
      for (std::size_t k = 0; k < j; ++k) d -= blk[j * size + k] * blk[j * size + k];
      if (!(d > 0.0)) throw BuildError("diagonal block is not positive definite", block);
      const double ljj = std::sqrt(d);
      blk[j * size + j] = ljj;
      for (std::size_t i = j + 1; i < size; ++i) {
        double s = blk[i * size + j];
        for (std::size_t k = 0; k < j; ++k) s -= blk[i * size + k] * blk[j * size + k];
        blk[i * size + j] = s / ljj;
      }
      for (std::size_t i = 0; i < j; ++i) blk[i * size + j] = 0.0;
    }
    m.factors_.insert(m.factors_.end(), blk.begin(), blk.end());
    m.factor_offsets_.push_back(m.factors_.size());
  }
  return m;
}

Vector Preconditioner::apply(std::span<const double> w) const {
  Vector out(w.size());
  apply_into(w, out);
  return out;
}

void Preconditioner::apply_into(std::span<const double> w, std::span<double> out) const {
  if (w.size() != n_ || out.size() != n_) throw ContractError("Preconditioner::apply: dimension mismatch");
  if (kind_ == PreconKind::identity) {
    std::copy(w.begin(), w.end(), out.begin());
    return;
  }
  for (std::size_t b = 0; b < block_starts_.size(); ++b) {
    const std::size_t start = block_starts_[b];
    const std::size_t size = std::min(block_size_, n_ - start);
    const double* l = factors_.data() + factor_offsets_[b];
    if (size == 1) {
      out[start] = w[start] / l[0];
      continue;
    }
    // L y = w, then L^T x = y.
    for (std::size_t i = 0; i < size; ++i) {
      double s = w[start + i];
      for (std::size_t k = 0; k < i; ++k) s -= l[i * size + k] * out[start + k];
      out[start + i] = s / l[i * size + i];
    }
    for (std::size_t ii = size; ii-- > 0;) {
      double s = out[start + ii];
      for (std::size_t k = ii + 1; k < size; ++k) s -= l[k * size + ii] * out[start + k];
      out[start + ii] = s / l[ii * size + ii];
    }
  }
}

Vector Preconditioner::multiply(std::span<const double> w) const {
  if (w.size() != n_) throw ContractError("Preconditioner::multiply: dimension mismatch");
  Vector out(w.begin(), w.end());
  if (kind_ == PreconKind::identity) return out;
  for (std::size_t b = 0; b < block_starts_.size(); ++b) {
    const std::size_t start = block_starts_[b];
    const std::size_t size = std::min(block_size_, n_ - start);
    const double* l = factors_.data() + factor_offsets_[b];
    if (size == 1) {
      out[start] = w[start] * l[0];
      continue;
    }
    // y = L^T w, then out = L y.
    std::vector<double> y(size, 0.0);
    for (std::size_t i = 0; i < size; ++i) {
      for (std::size_t k = i; k < size; ++k) y[i] += l[k * size + i] * w[start + k];
    }
    for (std::size_t i = 0; i < size; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k <= i; ++k) s += l[i * size + k] * y[k];
      out[start + i] = s;
    }
  }
  return out;
}

}  // namespace krylov
