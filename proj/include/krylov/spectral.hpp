#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "krylov/sparsekit.hpp"

namespace krylov {

enum class SpectrumSource { analytic, power_method, user };

struct SpectrumEstimate {
  double lambda_min = 0.0;
  double lambda_max = 1.0;
  SpectrumSource source = SpectrumSource::user;

  /// Throws ContractError unless 0 <= lambda_min <= lambda_max, lambda_max > 0.
  void validate() const;
  bool degenerate() const noexcept { return lambda_min == lambda_max; }
};

struct ShiftSet {
  std::vector<double> sigmas;
  bool degenerate = false;  // spectrum interval had zero width
};

inline constexpr std::size_t kDefaultPowerIterations = 50;

/// Rayleigh quotient (x, Ax)/(x, x) after `iters` normalized power steps from a
/// uniform(-1, 1) start seeded with `seed`. Throws ContractError on A == 0.
double power_method(const CsrMatrix& a, std::size_t iters, std::uint64_t seed);

/// Rayleigh quotient after each step, index k holding the estimate after k+1 steps.
std::vector<double> power_method_history(const CsrMatrix& a, std::size_t iters, std::uint64_t seed);

/// Roots of the Chebyshev polynomial of degree l mapped onto the interval.
ShiftSet chebyshev_shifts(const SpectrumEstimate& spec, std::size_t l);

}  // namespace krylov
