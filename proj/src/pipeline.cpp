#include "krylov/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "krylov/errors.hpp"

namespace krylov {

GramBand::GramBand(std::size_t l) : l_(l) {
  if (l == 0) throw ContractError("GramBand: l must be at least 1");
}

void GramBand::ensure_column(std::size_t c) {
  if (c >= columns()) data_.resize((c + 1) * bandwidth(), 0.0);
}

double GramBand::operator()(std::ptrdiff_t j, std::ptrdiff_t c) const {
  if (j < 0 || c < 0 || j > c) return 0.0;
  const auto uc = static_cast<std::size_t>(c);
  const auto uj = static_cast<std::size_t>(j);
  if (uc >= columns() || uc - uj > 2 * l_) return 0.0;
  return data_[uc * bandwidth() + (uc - uj)];
}

double& GramBand::at(std::size_t j, std::size_t c) {
  if (j > c || c - j > 2 * l_ || c >= columns()) {
    throw ContractError("GramBand: entry (" + std::to_string(j) + ", " + std::to_string(c) +
                        ") outside the band");
  }
  return data_[c * bandwidth() + (c - j)];
}

std::vector<double> GramBand::column(std::size_t c) const {
  if (c >= columns()) throw ContractError("GramBand: column out of range");
  std::vector<double> buf;
  for (std::size_t j = first_row(c); j <= c; ++j) buf.push_back(data_[c * bandwidth() + (c - j)]);
  return buf;
}

void gram_fill_symmetric(GramBand& g, std::size_t c) {
  const std::size_t l = g.l();
  if (c < l + 1) return;
  for (std::size_t j = g.first_row(c); j + l + 1 <= c; ++j) {
    g.at(j, c) = g(static_cast<std::ptrdiff_t>(c - l), static_cast<std::ptrdiff_t>(j + l));
  }
}

GramStep gram_finalize(GramBand& g, std::size_t c, double floor_rel) {
  const std::size_t l = g.l();
  const std::size_t lo = g.first_row(c);
  const std::size_t jstart = c + 1 >= l ? std::max(lo, c + 1 - l) : lo;
  for (std::size_t j = jstart; j < c; ++j) {
    double v = g.at(j, c);
    for (std::size_t k = lo; k < j; ++k) {
      v -= g(static_cast<std::ptrdiff_t>(k), static_cast<std::ptrdiff_t>(j)) * g.at(k, c);
    }
    g.at(j, c) = v / g.at(j, j);
  }
  GramStep step;
  step.raw_diagonal = g.at(c, c);
  double root = step.raw_diagonal;
  for (std::size_t k = lo; k < c; ++k) root -= g.at(k, c) * g.at(k, c);
  step.root_argument = root;
  if (std::isnan(root) || !(root > floor_rel * step.raw_diagonal)) {
    step.breakdown = true;
    return step;
  }
  g.at(c, c) = std::sqrt(root);
  return step;
}

void tridiag_update(const GramBand& g, TridiagFactors& tf, std::size_t t,
                    std::span<const double> shifts, bool with_delta) {
  if (tf.gamma.size() != t || tf.delta.size() != t) {
    throw ContractError("tridiag_update: columns must be added in order");
  }
  const std::size_t l = g.l();
  const auto st = static_cast<std::ptrdiff_t>(t);
  const double gtt = g(st, st);
  const double gnext = g(st, st + 1);
  // The -g_{t-1,t} delta_{t-1} term is absent for t = 0.
  const double trailing = t > 0 ? g(st - 1, st) * tf.delta[t - 1] : 0.0;
  double gamma = 0.0;
  double delta = std::numeric_limits<double>::quiet_NaN();
  if (t < l) {
    if (shifts.size() < l) throw ContractError("tridiag_update: need l shifts");
    gamma = (gnext + shifts[t] * gtt - trailing) / gtt;
    if (with_delta) delta = g(st + 1, st + 1) / gtt;
  } else {
    gamma = (gtt * tf.gamma[t - l] + gnext * tf.delta[t - l] - trailing) / gtt;
    if (with_delta) delta = g(st + 1, st + 1) * tf.delta[t - l] / gtt;
  }
  tf.gamma.push_back(gamma);
  tf.delta.push_back(delta);
}

void lu_advance(LuFactors& lu, const TridiagFactors& tf, std::size_t t, double r0_norm) {
  if (lu.eta.size() != t || tf.gamma.size() <= t) {
    throw ContractError("lu_advance: rows must be added in order after the T column");
  }
  if (t == 0) {
    lu.eta.push_back(tf.gamma[0]);
    lu.lambda.push_back(0.0);
    lu.zeta.push_back(r0_norm);
    return;
  }
  const double lambda = tf.delta[t - 1] / lu.eta[t - 1];
  lu.lambda.push_back(lambda);
  lu.eta.push_back(tf.gamma[t] - lambda * tf.delta[t - 1]);
  lu.zeta.push_back(-lambda * lu.zeta[t - 1]);
}

}  // namespace krylov
