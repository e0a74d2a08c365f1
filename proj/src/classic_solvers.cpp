// Non-pipelined references: classic CG, D-Lanczos, and Ghysels' p-CG.

#include <cmath>
#include <vector>

#include "krylov/errors.hpp"
#include "solver_internal.hpp"

namespace krylov::detail {
namespace {

void residual_into(const CsrMatrix& a, std::span<const double> x, std::span<const double> b,
                   std::span<double> r) {
  spmv_add(a, x, -1.0, b, r);
  for (double& e : r) e = -e;
}

void check_definite(double v, const char* what, std::size_t iteration) {
  require_finite(v, what, iteration);
  if (!(v > 0.0)) {
    throw DefinitenessError(std::string(what) + " <= 0 at iteration " + std::to_string(iteration) +
                            ": operator is not positive definite");
  }
}

std::optional<BasisArchive> make_archive(const CsrMatrix& a, const SolverConfig& cfg) {
  if (!cfg.record_diagnostics) return std::nullopt;
  return BasisArchive(a.n(), [&a](std::span<const double> in, std::span<double> out) { spmv_into(a, in, out); });
}

// Archives v_k = (-1)^k r_k / ||r_k||, the Lanczos vector CG implicitly builds.
void archive_residual(BasisArchive* ar, std::span<const double> r, double norm, std::size_t k) {
  if (!ar || norm == 0.0) return;
  Vector v(r.begin(), r.end());
  const double s = (k % 2 == 0 ? 1.0 : -1.0) / norm;
  for (double& e : v) e *= s;
  ar->append_v(v);
}

// T column k from CG coefficients: gamma_k = 1/alpha_k + beta_{k-1}/alpha_{k-1},
// delta_k = sqrt(beta_k)/alpha_k.
void archive_cg_column(BasisArchive* ar, const std::vector<double>& alpha, const std::vector<double>& beta,
                       std::size_t k) {
  if (!ar) return;
  double gamma = 1.0 / alpha[k];
  if (k > 0) gamma += beta[k - 1] / alpha[k - 1];
  ar->append_tcol(gamma, std::sqrt(beta[k]) / alpha[k]);
}

}  // namespace

SolveResult solve_cg(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                     const SolverConfig& cfg) {
  SolveResult res;
  res.archive = make_archive(a, cfg);
  Recorder rec(a, b, cfg, res);
  VectorPool pool(a.n());
  auto r = pool.acquire();
  auto p = pool.acquire();
  auto q = pool.acquire();
  res.ops.live_vectors_high_water = pool.high_water();
  Vector x(x0.begin(), x0.end());

  residual_into(a, x, b, r);
  rec.setup_spmv();
  double rho = dot(r, r);
  const double r0 = std::sqrt(rho);
  rec.set_reference(r0);
  archive_residual(rec.archive(), r, r0, 0);
  rec.row(0, r0, x);
  if (r0 == 0.0 || rec.converged(r0)) {
    rec.finish(x, SolveStatus::converged);
    return res;
  }
  std::copy(r.begin(), r.end(), p.begin());
  std::vector<double> alpha;
  std::vector<double> beta;
  for (std::size_t k = 0; k < cfg.max_iters; ++k) {
    rec.begin_iteration();
    spmv_into(a, p, q);
    rec.spmv();
    const double pq = dot(p, q);
    rec.dots();
    check_definite(pq, "(p, A p)", k);
    alpha.push_back(rho / pq);
    axpy_inplace(alpha[k], p, x);
    axpy_inplace(-alpha[k], q, r);
    rec.axpy(2);
    const double rho_new = dot(r, r);
    rec.dots();
    require_finite(rho_new, "residual norm", k + 1);
    beta.push_back(rho_new / rho);
    archive_cg_column(rec.archive(), alpha, beta, k);
    archive_residual(rec.archive(), r, std::sqrt(rho_new), k + 1);
    rec.row(k + 1, std::sqrt(rho_new), x);
    if (rec.converged(std::sqrt(rho_new))) {
      rec.end_iteration(k >= 1);
      rec.finish(x, SolveStatus::converged);
      return res;
    }
    for (std::size_t e = 0; e < p.size(); ++e) p[e] = r[e] + beta[k] * p[e];
    rec.axpy();
    rho = rho_new;
    rec.end_iteration(k >= 1);
  }
  rec.finish(x, SolveStatus::max_iterations);
  return res;
}

SolveResult solve_dlanczos(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                           const SolverConfig& cfg) {
  SolveResult res;
  res.archive = make_archive(a, cfg);
  Recorder rec(a, b, cfg, res);
  VectorPool pool(a.n());
  VectorRing v(pool, 2);
  auto p = pool.acquire();
  res.ops.live_vectors_high_water = pool.high_water();
  Vector x(x0.begin(), x0.end());

  auto v0 = v.claim(0);
  residual_into(a, x, b, v0);
  rec.setup_spmv();
  const double r0 = nrm2(v0);
  rec.set_reference(r0);
  rec.row(0, r0, x);
  if (r0 == 0.0 || rec.converged(r0)) {
    rec.finish(x, SolveStatus::converged);
    return res;
  }
  for (double& e : v0) e /= r0;
  if (rec.archive()) rec.archive()->append_v(v0);

  auto& tf = res.tridiag;
  auto& lu = res.lu;
  lu.zeta.push_back(r0);
  lu.lambda.push_back(0.0);
  // Iteration t builds T column t (gamma_t, delta_t) by the Paige-ordered
  // three-term recurrence, finishes LU row t, and then already forms row t+1
  // (lambda_{t+1}, zeta_{t+1}, x_{t+1}), which needs only delta_t.
  for (std::size_t t = 0; t < cfg.max_iters; ++t) {
    rec.begin_iteration();
    auto vt = v.get(t);
    std::span<double> w;
    if (t == 0) {
      w = v.claim(1);
      spmv_into(a, vt, w);
    } else {
      auto vprev = v.get(t - 1);
      w = v.claim(t + 1);  // aliases vprev
      spmv_add(a, vt, -tf.delta[t - 1], vprev, w);
      rec.axpy();
    }
    rec.spmv();
    const double gamma = dot(w, vt);
    rec.dots();
    check_definite(gamma, "(v, A v)", t);
    axpy_inplace(-gamma, vt, w);
    rec.axpy();
    const double delta = nrm2(w);
    rec.dots();
    require_finite(delta, "delta", t);
    tf.gamma.push_back(gamma);
    tf.delta.push_back(delta);
    if (rec.archive()) rec.archive()->append_tcol(gamma, delta);

    if (t == 0) {
      lu.eta.push_back(gamma);
      for (std::size_t e = 0; e < p.size(); ++e) p[e] = vt[e] / gamma;
      if (cfg.on_direction) cfg.on_direction(0, p);
    } else {
      const double eta = gamma - lu.lambda[t] * tf.delta[t - 1];
      check_definite(eta, "LU pivot eta", t);
      lu.eta.push_back(eta);
      for (std::size_t e = 0; e < p.size(); ++e) p[e] = (vt[e] - tf.delta[t - 1] * p[e]) / eta;
      rec.axpy();
      if (cfg.on_direction) cfg.on_direction(t, p);
    }
    lu.lambda.push_back(delta / lu.eta[t]);
    lu.zeta.push_back(-lu.lambda[t + 1] * lu.zeta[t]);
    axpy_inplace(lu.zeta[t], p, x);
    rec.axpy();
    rec.row(t + 1, lu.zeta[t + 1], x);
    if (rec.converged(lu.zeta[t + 1])) {
      rec.end_iteration(t >= 1);
      rec.finish(x, SolveStatus::converged);
      return res;
    }
    for (double& e : w) e /= delta;
    if (rec.archive()) rec.archive()->append_v(w);
    rec.end_iteration(t >= 1);
  }
  rec.finish(x, SolveStatus::max_iterations);
  return res;
}

SolveResult solve_pcg_ghysels(const CsrMatrix& a, std::span<const double> b,
                              std::span<const double> x0, const SolverConfig& cfg) {
  SolveResult res;
  res.archive = make_archive(a, cfg);
  Recorder rec(a, b, cfg, res);
  VectorPool pool(a.n());
  auto r = pool.acquire();
  auto w = pool.acquire();  // A r
  auto z = pool.acquire();  // A s
  auto s = pool.acquire();  // A p
  auto p = pool.acquire();
  res.ops.live_vectors_high_water = pool.high_water();
  Vector x(x0.begin(), x0.end());

  residual_into(a, x, b, r);
  spmv_into(a, r, w);
  rec.setup_spmv(2);
  std::vector<double> alpha;
  std::vector<double> beta;
  double gamma_old = 0.0;
  for (std::size_t i = 0;; ++i) {
    rec.begin_iteration();
    // One global reduction carries both dot products.
    const double gamma = dot(r, r);
    const double delta = dot(w, r);
    rec.dots(2);
    require_finite(gamma, "residual norm", i);
    const double rnorm = std::sqrt(gamma);
    if (i == 0) rec.set_reference(rnorm);
    if (i > 0) {
      beta.push_back(gamma / gamma_old);
      archive_cg_column(rec.archive(), alpha, beta, i - 1);
    }
    archive_residual(rec.archive(), r, rnorm, i);
    rec.row(i, rnorm, x);
    if (rnorm == 0.0 || rec.converged(rnorm)) {
      rec.end_iteration(i >= 2);
      rec.finish(x, SolveStatus::converged);
      return res;
    }
    if (i >= cfg.max_iters) {
      rec.end_iteration(i >= 2);
      break;
    }
    // Overlapped with the reduction in a distributed run.
    const double b_i = i > 0 ? beta[i - 1] : 0.0;
    if (i == 0) {
      spmv_into(a, w, z);
    } else {
      spmv_add(a, w, b_i, z, z);
      rec.axpy();
    }
    rec.spmv();
    const double pap = i > 0 ? delta - b_i * gamma / alpha[i - 1] : delta;
    check_definite(pap, "(p, A p)", i);
    alpha.push_back(gamma / pap);
    const double al = alpha[i];
    if (i == 0) {
      std::copy(w.begin(), w.end(), s.begin());
      std::copy(r.begin(), r.end(), p.begin());
    } else {
      for (std::size_t e = 0; e < s.size(); ++e) s[e] = w[e] + b_i * s[e];
      for (std::size_t e = 0; e < p.size(); ++e) p[e] = r[e] + b_i * p[e];
      rec.axpy(2);
    }
    axpy_inplace(al, p, x);
    axpy_inplace(-al, s, r);
    axpy_inplace(-al, z, w);
    rec.axpy(3);
    gamma_old = gamma;
    rec.end_iteration(i >= 1);
  }
  rec.finish(x, SolveStatus::max_iterations);
  return res;
}

}  // namespace krylov::detail
