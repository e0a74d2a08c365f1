#include "krylov/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "krylov/errors.hpp"

namespace krylov {

std::string to_string(TraceEvent events) {
  std::string out;
  const auto add = [&out](const char* name) {
    if (!out.empty()) out += ';';
    out += name;
  };
  if (has_event(events, TraceEvent::breakdown)) add("breakdown");
  if (has_event(events, TraceEvent::restart)) add("restart");
  if (has_event(events, TraceEvent::converged)) add("converged");
  return out;
}

TraceRow& IterationTrace::row(std::size_t iteration) {
  for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
    if (it->iteration == iteration) return *it;
  }
  throw ContractError("IterationTrace: no row for iteration " + std::to_string(iteration));
}

TraceRow& IterationTrace::upsert(std::size_t iteration) {
  if (!rows.empty() && rows.back().iteration == iteration) return rows.back();
  if (!rows.empty() && rows.back().iteration > iteration) {
    throw ContractError("IterationTrace: iterations must increase");
  }
  rows.push_back(TraceRow{});
  rows.back().iteration = iteration;
  return rows.back();
}

double true_residual(const CsrMatrix& a, std::span<const double> b, std::span<const double> x) {
  if (b.size() != a.n()) throw ContractError("true_residual: dimension mismatch");
  Vector r(a.n());
  spmv_add(a, x, -1.0, b, r);
  return nrm2(r);
}

std::vector<double> residual_gap(const IterationTrace& trace) {
  std::vector<double> gap;
  gap.reserve(trace.rows.size());
  for (const auto& row : trace.rows) {
    gap.push_back(row.true_resnorm ? std::abs(*row.true_resnorm - row.recursive_resnorm)
                                   : std::numeric_limits<double>::quiet_NaN());
  }
  return gap;
}

std::optional<std::size_t> stagnation_row(const IterationTrace& trace) {
  const auto gap = residual_gap(trace);
  for (std::size_t k = 0; k < gap.size(); ++k) {
    if (!std::isnan(gap[k]) && gap[k] > trace.rows[k].recursive_resnorm) return k;
  }
  return std::nullopt;
}

BasisArchive::BasisArchive(std::size_t n, Operator op, Operator m_op)
    : n_(n), op_(std::move(op)), m_op_(std::move(m_op)) {}

void BasisArchive::start_cycle() { cycles_.emplace_back(); }

void BasisArchive::append_v(std::span<const double> v) {
  if (cycles_.empty()) start_cycle();
  if (v.size() != n_) throw ContractError("BasisArchive: dimension mismatch");
  Cycle& cyc = cycles_.back();
  cyc.v.emplace_back(v.begin(), v.end());
  std::span<const double> left = cyc.v.back();
  if (m_op_) {
    cyc.mv.emplace_back(n_);
    m_op_(v, cyc.mv.back());
    left = cyc.mv.back();
  }
  std::vector<double> row;
  row.reserve(cyc.v.size());
  for (const auto& w : cyc.v) row.push_back(dot(left, w));
  cyc.vgram.push_back(std::move(row));
  update_deviation(cyc);
}

void BasisArchive::append_tcol(double gamma, double delta) {
  if (cycles_.empty()) start_cycle();
  Cycle& cyc = cycles_.back();
  cyc.gamma.push_back(gamma);
  cyc.delta.push_back(delta);
  update_deviation(cyc);
}

void BasisArchive::update_deviation(Cycle& cyc) {
  if (!op_) return;
  while (cyc.dev_sq.size() < cyc.gamma.size() && cyc.dev_sq.size() + 1 < cyc.v.size()) {
    const std::size_t j = cyc.dev_sq.size();
    Vector w(n_);
    op_(cyc.v[j], w);
    ++diagnostic_spmv_;
    const double gj = cyc.gamma[j];
    const double dj = cyc.delta[j];
    const double dprev = j > 0 ? cyc.delta[j - 1] : 0.0;
    double sum = 0.0;
    for (std::size_t e = 0; e < n_; ++e) {
      double d = w[e] - gj * cyc.v[j][e] - dj * cyc.v[j + 1][e];
      if (j > 0) d -= dprev * cyc.v[j - 1][e];
      sum += d * d;
    }
    cyc.dev_sq.push_back(sum);
  }
}

void BasisArchive::append_z(std::span<const double> z, std::span<const double> u) {
  if (cycles_.empty()) start_cycle();
  if (z.size() != n_ || (!u.empty() && u.size() != n_)) {
    throw ContractError("BasisArchive: dimension mismatch");
  }
  Cycle& cyc = cycles_.back();
  cyc.z.emplace_back(z.begin(), z.end());
  if (!u.empty()) cyc.u.emplace_back(u.begin(), u.end());
  std::span<const double> left = u.empty() ? z : cyc.u.back();
  std::vector<double> row;
  row.reserve(cyc.z.size());
  for (const auto& w : cyc.z) row.push_back(dot(left, w));
  cyc.zgram.push_back(std::move(row));
}

void BasisArchive::set_gram_column(std::size_t c, std::size_t first_row, std::span<const double> entries) {
  if (cycles_.empty()) start_cycle();
  Cycle& cyc = cycles_.back();
  if (c != cyc.g_columns.size()) throw ContractError("BasisArchive: Gram columns must arrive in order");
  if (first_row + entries.size() != c + 1) throw ContractError("BasisArchive: Gram column must end at the diagonal");
  cyc.g_columns.emplace_back(entries.begin(), entries.end());
  cyc.g_first_row.push_back(first_row);
}

bool BasisArchive::empty() const noexcept {
  return std::all_of(cycles_.begin(), cycles_.end(), [](const Cycle& c) { return c.v.empty(); });
}

std::size_t BasisArchive::lanczos_columns() const noexcept {
  std::size_t total = 0;
  for (const auto& c : cycles_) total += c.dev_sq.size();
  return total;
}

std::size_t BasisArchive::basis_size() const noexcept {
  std::size_t total = 0;
  for (const auto& c : cycles_) total += c.v.size();
  return total;
}

std::size_t BasisArchive::gram_columns() const {
  return cycles_.empty() ? 0 : cycles_.back().g_columns.size();
}

namespace {

double inf_norm_of_identity_defect(const std::vector<std::vector<double>>& lower) {
  // lower[a][b] holds entry (a, b) for b <= a; the matrix is symmetric.
  const std::size_t k = lower.size();
  double worst = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    double row = 0.0;
    for (std::size_t b = 0; b < k; ++b) {
      const double gab = b <= a ? lower[a][b] : lower[b][a];
      row += std::abs((a == b ? 1.0 : 0.0) - gab);
    }
    worst = std::max(worst, row);
  }
  return worst;
}

double gram_entry(const BasisArchive::Cycle& cyc, std::size_t j, std::size_t c) {
  const std::size_t first = cyc.g_first_row[c];
  if (j < first || j > c) return 0.0;
  return cyc.g_columns[c][j - first];
}

}  // namespace

double BasisArchive::orthogonality_loss() const {
  if (empty()) throw ContractError("orthogonality_loss: archive is empty");
  double worst = 0.0;
  for (const auto& cyc : cycles_) worst = std::max(worst, inf_norm_of_identity_defect(cyc.vgram));
  return worst;
}

double BasisArchive::lanczos_deviation() const {
  if (empty()) throw ContractError("lanczos_deviation: archive is empty");
  double sum = 0.0;
  for (const auto& cyc : cycles_) {
    for (double d : cyc.dev_sq) sum += d;
  }
  return std::sqrt(sum);
}

double BasisArchive::gram_residual() const {
  double sum = 0.0;
  for (const auto& cyc : cycles_) {
    const std::size_t cols = std::min(cyc.g_columns.size(), cyc.zgram.size());
    for (std::size_t a = 0; a < cols; ++a) {
      for (std::size_t b = 0; b <= a; ++b) {
        double gtg = 0.0;
        const std::size_t lo = std::max(cyc.g_first_row[a], cyc.g_first_row[b]);
        for (std::size_t k = lo; k <= b; ++k) gtg += gram_entry(cyc, k, a) * gram_entry(cyc, k, b);
        const double d = gtg - cyc.zgram[a][b];
        sum += (a == b ? 1.0 : 2.0) * d * d;
      }
    }
  }
  return std::sqrt(sum);
}

double BasisArchive::z_frobenius_sq() const {
  double sum = 0.0;
  for (const auto& cyc : cycles_) {
    const std::size_t cols = std::min(cyc.g_columns.size(), cyc.zgram.size());
    for (std::size_t a = 0; a < cols; ++a) sum += cyc.zgram[a][a];
  }
  return sum;
}

double lanczos_deviation(const CsrMatrix& a, const BasisArchive& archive) {
  if (archive.empty()) throw ContractError("lanczos_deviation: archive is empty");
  if (archive.cycles() != 1) throw ContractError("lanczos_deviation: direct route needs a single cycle");
  const auto& cyc = archive.cycle_data().front();
  const std::size_t k = std::min(cyc.gamma.size(), cyc.v.size() - 1);
  double sum = 0.0;
  // Column j of A V_k - V_{k+1} T_{k+1,k}; T has gamma on the diagonal and
  // delta on both off-diagonals.
  for (std::size_t j = 0; j < k; ++j) {
    Vector col = spmv(a, cyc.v[j]);
    for (std::size_t row = (j == 0 ? 0 : j - 1); row <= j + 1; ++row) {
      double t = 0.0;
      if (row + 1 == j) t = cyc.delta[j - 1];
      if (row == j) t = cyc.gamma[j];
      if (row == j + 1) t = cyc.delta[j];
      axpy_inplace(-t, cyc.v[row], col);
    }
    const double norm = nrm2(col);
    sum += norm * norm;
  }
  return std::sqrt(sum);
}

double orthogonality_loss(std::span<const Vector> v) {
  if (v.empty()) throw ContractError("orthogonality_loss: no columns");
  std::vector<std::vector<double>> lower(v.size());
  for (std::size_t a = 0; a < v.size(); ++a) {
    for (std::size_t b = 0; b <= a; ++b) lower[a].push_back(dot(v[a], v[b]));
  }
  return inf_norm_of_identity_defect(lower);
}

double orthogonality_loss(const BasisArchive& archive) {
  if (archive.empty()) throw ContractError("orthogonality_loss: archive is empty");
  double worst = 0.0;
  for (const auto& cyc : archive.cycle_data()) {
    if (!cyc.v.empty()) worst = std::max(worst, orthogonality_loss(cyc.v));
  }
  return worst;
}

}  // namespace krylov
