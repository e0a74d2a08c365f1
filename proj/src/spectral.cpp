#include "krylov/spectral.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "krylov/errors.hpp"

namespace krylov {

void SpectrumEstimate::validate() const {
  if (!std::isfinite(lambda_min) || !std::isfinite(lambda_max) || lambda_min < 0.0 ||
      lambda_max <= 0.0 || lambda_min > lambda_max) {
    throw ContractError("spectrum estimate requires 0 <= lambda_min <= lambda_max and lambda_max > 0");
  }
}

std::vector<double> power_method_history(const CsrMatrix& a, std::size_t iters, std::uint64_t seed) {
  if (iters == 0) throw ContractError("power_method: iters must be at least 1");
  if (a.n() == 0) throw ContractError("power_method: empty matrix");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  Vector x(a.n());
  for (double& xi : x) xi = uniform(rng);

  std::vector<double> history;
  history.reserve(iters);
  Vector y(a.n());
  for (std::size_t k = 0; k < iters; ++k) {
    const double xnorm = nrm2(x);
    if (xnorm == 0.0) throw ContractError("power_method: iterate vanished (zero matrix?)");
    for (double& xi : x) xi /= xnorm;
    spmv_into(a, x, y);
    // x is unit length, so the Rayleigh quotient is (x, Ax).
    history.push_back(dot(x, y));
    x.swap(y);
  }
  if (nrm2(x) == 0.0) throw ContractError("power_method: matrix annihilates the start vector (zero matrix?)");
  return history;
}

double power_method(const CsrMatrix& a, std::size_t iters, std::uint64_t seed) {
  return power_method_history(a, iters, seed).back();
}

ShiftSet chebyshev_shifts(const SpectrumEstimate& spec, std::size_t l) {
  if (l == 0) throw ContractError("chebyshev_shifts: l must be at least 1");
  spec.validate();
  ShiftSet out;
  out.degenerate = spec.degenerate();
  out.sigmas.resize(l);
  const double center = (spec.lambda_max + spec.lambda_min) / 2.0;
  const double half_width = (spec.lambda_max - spec.lambda_min) / 2.0;
  for (std::size_t i = 0; i < l; ++i) {
    const double angle = static_cast<double>(2 * i + 1) * std::numbers::pi / static_cast<double>(2 * l);
    out.sigmas[i] = center + half_width * std::cos(angle);
  }
  return out;
}

}  // namespace krylov
