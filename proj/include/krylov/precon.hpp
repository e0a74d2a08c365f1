#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "krylov/sparsekit.hpp"

namespace krylov {

enum class PreconKind { identity, jacobi, block_jacobi };

std::string to_string(PreconKind kind);

/// Block-diagonal SPD preconditioner. apply() returns M^{-1} w.
///
/// Each diagonal block of A is factored with a dense Cholesky factorization.
/// Jacobi is the block_size == 1 case, stored as a plain diagonal.
class Preconditioner {
 public:
  /// Throws BuildError when a diagonal block is not positive definite.
  static Preconditioner build(const CsrMatrix& a, PreconKind kind, std::size_t block_size = 1);

  PreconKind kind() const noexcept { return kind_; }
  std::size_t n() const noexcept { return n_; }
  std::size_t block_size() const noexcept { return block_size_; }
  std::size_t block_count() const noexcept { return block_starts_.size(); }

  Vector apply(std::span<const double> w) const;
  /// `out` must not alias `w`.
  void apply_into(std::span<const double> w, std::span<double> out) const;

  /// Returns M w, the block diagonal of A applied to w. Diagnostics only.
  Vector multiply(std::span<const double> w) const;

 private:
  Preconditioner() = default;

  PreconKind kind_ = PreconKind::identity;
  std::size_t n_ = 0;
  std::size_t block_size_ = 1;
  std::vector<std::size_t> block_starts_;
  // Row-major lower Cholesky factor of each block, concatenated.
  std::vector<std::size_t> factor_offsets_;
  std::vector<double> factors_;
};

class BuildError : public std::runtime_error {
 public:
  BuildError(const std::string& what, std::size_t block)
      : std::runtime_error(what + " (block " + std::to_string(block) + ")"), block_(block) {}
  std::size_t block() const noexcept { return block_; }

 private:
  std::size_t block_;
};

}  // namespace krylov
