#include <cmath>
#include <random>

#include "doctest.h"
#include "krylov/errors.hpp"
#include "krylov/solvers.hpp"
#include "krylov/spectral.hpp"
#include "oracle.hpp"

using namespace krylov;

namespace {

constexpr Variant kAll[] = {Variant::cg, Variant::dlanczos, Variant::pcg_ghysels, Variant::plcg_original,
                            Variant::plcg_stable};

SolverConfig make_cfg(Variant v, std::size_t l, double lo, double hi, double tau = 1e-10) {
  SolverConfig cfg;
  cfg.variant = v;
  cfg.l = is_pipelined(v) ? l : 1;
  cfg.tau = tau;
  if (is_pipelined(v)) cfg.shifts = chebyshev_shifts({lo, hi, SpectrumSource::analytic}, cfg.l).sigmas;
  return cfg;
}

Vector random_vector(std::size_t n, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector v(n);
  for (double& e : v) e = u(gen);
  return v;
}

Vector a_ones(const CsrMatrix& a) { return spmv(a, Vector(a.n(), 1.0)); }

std::vector<double> history(const SolveResult& r) {
  std::vector<double> h;
  for (const auto& row : r.trace.rows) h.push_back(row.recursive_resnorm);
  return h;
}

// Relative agreement of two residual histories before the first entry below floor * h[0].
void check_histories_agree(const std::vector<double>& ref, const std::vector<double>& got, double tol,
                           double floor) {
  REQUIRE(!ref.empty());
  const double r0 = ref.front();
  std::size_t k = 0;
  for (; k < ref.size() && k < got.size(); ++k) {
    if (ref[k] / r0 < floor) break;
    CHECK(std::abs(got[k] - ref[k]) <= tol * ref[k]);
  }
  CHECK(k < ref.size());  // the reference crossed the floor within the compared range
}

}  // namespace

TEST_CASE("identity operator converges after one step for every variant") {
  const CsrMatrix a = identity(10);
  const Vector b = random_vector(10, 4);
  const Vector x0(10, 0.0);
  for (Variant v : kAll) {
    CAPTURE(to_string(v));
    for (std::size_t l : {1u, 2u, 3u}) {
      if (!is_pipelined(v) && l > 1) continue;
      const SolveResult r = solve(a, b, x0, make_cfg(v, l, 0.0, 2.0));
      CHECK(r.status == SolveStatus::converged);
      CHECK(r.iterations == 1);
      for (std::size_t i = 0; i < 10; ++i) CHECK(std::abs(r.x[i] - b[i]) <= 8 * kUnitRoundoff * std::abs(b[i]) + 1e-300);
    }
  }
  const SolveResult cg = solve(a, b, x0, make_cfg(Variant::cg, 1, 0, 2));
  CHECK(cg.x == b);
}

TEST_CASE("stable p(l)-CG reaches 5e-12 on laplace2d(100)") {
  const CsrMatrix a = laplace2d(100);
  const Vector b = a_ones(a);
  for (std::size_t l : {1u, 2u, 3u}) {
    const SolveResult r = solve(a, b, Vector(a.n(), 0.0), make_cfg(Variant::plcg_stable, l, 0, 8, 1e-12));
    CHECK(r.status == SolveStatus::converged);
    CHECK(r.final_true_resnorm / nrm2(b) <= 5e-12);
  }
}

TEST_CASE("diag(1..20) matches the dense solve for every variant") {
  Vector d;
  for (int i = 1; i <= 20; ++i) d.push_back(i);
  const CsrMatrix a = diagonal(d);
  const Vector b(20, 1.0);
  const Eigen::VectorXd ref = oracle::dense(a).llt().solve(oracle::vec(b));
  for (Variant v : kAll) {
    for (std::size_t l : {1u, 2u, 3u}) {
      if (!is_pipelined(v) && l > 1) continue;
      CAPTURE(to_string(v));
      CAPTURE(l);
      const SolveResult r = solve(a, b, Vector(20, 0.0), make_cfg(v, l, 1, 20));
      CHECK(r.status == SolveStatus::converged);
      CHECK(oracle::max_rel_diff(oracle::vec(r.x), ref) <= 1e-8);
    }
  }
}

TEST_CASE("2x2 system terminates in two steps") {
  const CsrMatrix a = CsrMatrix::from_triplets(2, {{0, 0, 2}, {0, 1, 1}, {1, 0, 1}, {1, 1, 2}});
  const Vector b{1.0, 0.0};
  for (Variant v : kAll) {
    CAPTURE(to_string(v));
    const SolveResult r = solve(a, b, Vector{0, 0}, make_cfg(v, 1, 1, 3, 1e-14));
    CHECK(r.status == SolveStatus::converged);
    CHECK(r.iterations <= 2);
    CHECK(std::abs(r.x[0] - 2.0 / 3.0) <= 1e-14);
    CHECK(std::abs(r.x[1] + 1.0 / 3.0) <= 1e-14);
  }
}

// b = A 1 on laplace2d(10) excites only 15 distinct eigenvalues; the tests that
// need longer runs use a random rhs.
TEST_CASE("D-Lanczos and p-CG follow classic CG on laplace2d(10)") {
  const CsrMatrix a = laplace2d(10);
  const Vector b = random_vector(a.n(), 11);
  const Vector x0(a.n(), 0.0);
  const auto cg = history(solve(a, b, x0, make_cfg(Variant::cg, 1, 0, 8)));
  const auto dl = history(solve(a, b, x0, make_cfg(Variant::dlanczos, 1, 0, 8)));
  const auto pcg = history(solve(a, b, x0, make_cfg(Variant::pcg_ghysels, 1, 0, 8)));
  REQUIRE(cg.size() > 20);
  for (std::size_t k = 0; k <= 20; ++k) {
    CHECK(std::abs(dl[k] - cg[k]) <= 1e-10 * cg[k]);
    CHECK(std::abs(pcg[k] - cg[k]) <= 1e-8 * cg[k]);
  }
}

TEST_CASE("tridiagonal entries match explicit Lanczos") {
  const CsrMatrix a = laplace2d(10);
  const Vector b = random_vector(a.n(), 12);
  const auto lz = oracle::lanczos(oracle::dense(a), oracle::vec(b), 16);
  for (Variant v : {Variant::plcg_stable, Variant::plcg_original, Variant::dlanczos}) {
    CAPTURE(to_string(v));
    SolverConfig cfg = make_cfg(v, 1, 0, 8);
    cfg.max_iters = 15;
    const SolveResult r = solve(a, b, Vector(a.n(), 0.0), cfg);
    REQUIRE(r.tridiag.gamma.size() >= 15);
    for (std::size_t j = 0; j < 15; ++j) {
      CHECK(std::abs(r.tridiag.gamma[j] - lz.gamma[j]) <= 1e-8 * std::abs(lz.gamma[j]));
      CHECK(std::abs(r.tridiag.delta[j] - lz.delta[j]) <= 1e-8 * std::abs(lz.delta[j]));
    }
  }
}

TEST_CASE("stable p(3)-CG basis recurrences against a per-relation oracle") {
  const Eigen::MatrixXd ad = oracle::random_spd(6, 1.0, 5.0, 17);
  const CsrMatrix a = oracle::sparse(ad);
  REQUIRE(a.is_symmetric());
  const Vector b = random_vector(6, 8);
  const std::size_t l = 3;
  const std::vector<double> sigma = chebyshev_shifts({1.0, 5.0, SpectrumSource::analytic}, l).sigmas;
  const auto lz = oracle::lanczos(ad, oracle::vec(b), 5);

  // The four relations for l = 3, evaluated on exact bases built from explicit Lanczos.
  auto z = [&](std::size_t k, std::size_t j) { return oracle::aux_basis(ad, sigma, lz, k, j); };
  REQUIRE(lz.v.size() == 6);
  for (std::size_t t = 1; t <= 4; ++t) {
    const double g = lz.gamma[t];
    const double d = lz.delta[t];
    const double dp = lz.delta[t - 1];
    for (std::size_t k = 0; k < l; ++k) {
      const Eigen::VectorXd rhs = (z(k + 1, t + k + 1) + (sigma[k] - g) * z(k, t + k) - dp * z(k, t + k - 1)) / d;
      CHECK(oracle::max_rel_diff(rhs, z(k, t + k + 1)) <= 1e-10);
    }
    const std::size_t i = t + l;
    const Eigen::VectorXd rhs = (ad * z(l, i) - g * z(l, i) - dp * z(l, i - 1)) / d;
    CHECK(oracle::max_rel_diff(rhs, z(l, i + 1)) <= 1e-10);
  }

  // The solver's archived z^(0) and z^(l) follow the same vectors.
  SolverConfig cfg;
  cfg.variant = Variant::plcg_stable;
  cfg.l = l;
  cfg.shifts = sigma;
  cfg.tau = 1e-300;
  cfg.max_iters = 4;
  cfg.record_diagnostics = true;
  const SolveResult r = solve(a, b, Vector(6, 0.0), cfg);
  REQUIRE(r.archive);
  const auto& cyc = r.archive->cycle_data().front();
  REQUIRE(cyc.v.size() >= 5);
  for (std::size_t j = 0; j < 5; ++j) CHECK(oracle::max_rel_diff(oracle::vec(cyc.v[j]), lz.v[j]) <= 1e-10);
  REQUIRE(cyc.z.size() >= 7);
  for (std::size_t j = 0; j < 7; ++j) {
    CHECK(oracle::max_rel_diff(oracle::vec(cyc.z[j]), z(l, j)) <= 1e-10);
  }
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(std::abs(r.tridiag.gamma[j] - lz.gamma[j]) <= 1e-10 * lz.gamma[j]);
    CHECK(std::abs(r.tridiag.delta[j] - lz.delta[j]) <= 1e-10 * lz.delta[j]);
  }
}

TEST_CASE("z^(0) equals the Lanczos basis on diag(1,2,3,4)") {
  const CsrMatrix a = diagonal(Vector{1, 2, 3, 4});
  const Vector b{1, 1, 1, 1};
  const auto lz = oracle::lanczos(oracle::dense(a), oracle::vec(b), 3);
  for (std::size_t l : {1u, 2u}) {
    SolverConfig cfg = make_cfg(Variant::plcg_stable, l, 1, 4, 1e-300);
    cfg.max_iters = 3;
    cfg.record_diagnostics = true;
    const SolveResult r = solve(a, b, Vector(4, 0.0), cfg);
    const auto& cyc = r.archive->cycle_data().front();
    REQUIRE(cyc.v.size() >= 4);
    for (std::size_t j = 0; j <= 3; ++j) CHECK(oracle::max_rel_diff(oracle::vec(cyc.v[j]), lz.v[j]) <= 1e-12);
  }
}

TEST_CASE("original and stable bases agree early on laplace2d(10), l = 2") {
  const CsrMatrix a = laplace2d(10);
  const Vector b = random_vector(a.n(), 13);
  SolverConfig cfg = make_cfg(Variant::plcg_stable, 2, 0, 8);
  cfg.max_iters = 10;
  cfg.record_diagnostics = true;
  const SolveResult st = solve(a, b, Vector(a.n(), 0.0), cfg);
  cfg.variant = Variant::plcg_original;
  const SolveResult og = solve(a, b, Vector(a.n(), 0.0), cfg);
  const auto& vs = st.archive->cycle_data().front().v;
  const auto& vo = og.archive->cycle_data().front().v;
  REQUIRE(vs.size() >= 11);
  REQUIRE(vo.size() >= 11);
  for (std::size_t j = 0; j <= 10; ++j) {
    CHECK(oracle::max_rel_diff(oracle::vec(vo[j]), oracle::vec(vs[j])) <= 1e-10);
  }
}

TEST_CASE("search directions satisfy P U = V") {
  const CsrMatrix a = laplace2d(10);
  const Vector b = random_vector(a.n(), 14);
  for (auto [v, l] : {std::pair{Variant::dlanczos, std::size_t{1}}, std::pair{Variant::plcg_stable, std::size_t{1}},
                      std::pair{Variant::plcg_stable, std::size_t{2}}, std::pair{Variant::plcg_stable, std::size_t{3}},
                      std::pair{Variant::plcg_original, std::size_t{2}}}) {
    CAPTURE(to_string(v));
    CAPTURE(l);
    SolverConfig cfg = make_cfg(v, l, 0, 8, 1e-300);
    cfg.max_iters = 20;
    cfg.record_diagnostics = true;
    std::vector<Vector> p;
    cfg.on_direction = [&p](std::size_t t, std::span<const double> d) {
      REQUIRE(t == p.size());
      p.emplace_back(d.begin(), d.end());
    };
    const SolveResult r = solve(a, b, Vector(a.n(), 0.0), cfg);
    const auto& vv = r.archive->cycle_data().front().v;
    const std::size_t k = std::min<std::size_t>(p.size(), 20);
    REQUIRE(k == 20);
    double err_sq = 0.0;
    double v_sq = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      Eigen::VectorXd col = r.lu.eta[j] * oracle::vec(p[j]);
      if (j > 0) col += r.tridiag.delta[j - 1] * oracle::vec(p[j - 1]);
      err_sq += (col - oracle::vec(vv[j])).squaredNorm();
      v_sq += oracle::vec(vv[j]).squaredNorm();
    }
    CHECK(std::sqrt(err_sq) <= 50.0 * static_cast<double>(k) * kUnitRoundoff * std::sqrt(v_sq));
  }
}

TEST_CASE("economized and full Gram dot products agree") {
  const CsrMatrix a = laplace2d(12);
  const Vector b = random_vector(a.n(), 15);
  for (Variant v : {Variant::plcg_stable, Variant::plcg_original}) {
    for (std::size_t l : {1u, 2u, 3u}) {
      CAPTURE(to_string(v));
      CAPTURE(l);
      SolverConfig cfg = make_cfg(v, l, 0, 8, 1e-11);
      const auto eco = solve(a, b, Vector(a.n(), 0.0), cfg);
      cfg.full_dot_products = true;
      const auto full = solve(a, b, Vector(a.n(), 0.0), cfg);
      // The stopping test may flip by one iteration on a rounding-level difference.
      CHECK(eco.iterations <= full.iterations + 1);
      CHECK(full.iterations <= eco.iterations + 1);
      // Orthogonality decays faster for l = 3, amplifying the rounding-level
      // difference between the two Gram paths below 1e-8 r0.
      check_histories_agree(history(full), history(eco), 1e-8, l == 3 ? 1e-8 : 1e-10);
      // The symmetric window saves dot products in steady state.
      CHECK(full.ops.dots > eco.ops.dots);
    }
  }
}

// Condition 10 keeps the runs well short of n = 40 iterations, where finite
// termination and loss of orthogonality separate the variants.
TEST_CASE("exact-arithmetic regime: all variants share one residual history") {
  for (unsigned seed : {1u, 2u, 3u}) {
    const Eigen::MatrixXd ad = oracle::random_spd(40, 1.0, 10.0, seed);
    const CsrMatrix a = oracle::sparse(ad);
    const Vector b = random_vector(40, seed + 50);
    SolverConfig base = make_cfg(Variant::cg, 1, 1, 10, 1e-12);
    const auto ref = history(solve(a, b, Vector(40, 0.0), base));
    for (Variant v : kAll) {
      for (std::size_t l : {1u, 2u, 3u}) {
        if (!is_pipelined(v) && l > 1) continue;
        CAPTURE(to_string(v));
        CAPTURE(l);
        const auto h = history(solve(a, b, Vector(40, 0.0), make_cfg(v, l, 1, 10, 1e-12)));
        // p-CG propagates rounding through its extra recurrences at about 1e-6.
        check_histories_agree(ref, h, v == Variant::pcg_ghysels ? 1e-5 : 1e-8, 1e-10);
      }
    }
  }
}

TEST_CASE("operation counts") {
  const CsrMatrix a = laplace2d(20);
  const Vector b = a_ones(a);
  for (Variant v : {Variant::plcg_stable, Variant::plcg_original}) {
    for (std::size_t l = 1; l <= 5; ++l) {
      CAPTURE(to_string(v));
      CAPTURE(l);
      const SolveResult r = solve(a, b, Vector(a.n(), 0.0), make_cfg(v, l, 0, 8, 1e-8));
      const auto& ops = op_counters(r);
      std::size_t steady = 0;
      for (const auto& it : ops.per_iteration) {
        CHECK(it.spmv == 1);
        if (it.steady) {
          ++steady;
          CHECK(it.dots == l + 1);
        }
      }
      CHECK(steady > 0);
      CHECK(ops.spmv == ops.per_iteration.size());
      CHECK(ops.precon == 0);
      const std::size_t ceiling = v == Variant::plcg_stable ? 4 * l + 1 : 3 * l + 2;
      CHECK(ops.live_vectors_high_water <= ceiling);
    }
  }
  for (Variant v : {Variant::cg, Variant::dlanczos, Variant::pcg_ghysels}) {
    CAPTURE(to_string(v));
    const SolveResult r = solve(a, b, Vector(a.n(), 0.0), make_cfg(v, 1, 0, 8, 1e-8));
    const auto& per = r.ops.per_iteration;
    for (std::size_t k = 0; k < per.size(); ++k) {
      // p-CG's last pass only evaluates the stopping test on its fused reduction.
      if (v == Variant::pcg_ghysels && k + 1 == per.size()) {
        CHECK(per[k].spmv == 0);
        continue;
      }
      CHECK(per[k].spmv == 1);
      if (per[k].steady) CHECK(per[k].dots == 2);
    }
  }
}

TEST_CASE("preconditioned form with M = I is bitwise the unpreconditioned solve") {
  const CsrMatrix a = laplace2d(15);
  const Vector b = a_ones(a);
  for (std::size_t l : {1u, 2u, 3u}) {
    CAPTURE(l);
    SolverConfig cfg = make_cfg(Variant::plcg_stable, l, 0, 8, 1e-12);
    std::vector<Vector> plain;
    cfg.on_iterate = [&plain](std::size_t, std::span<const double> x) { plain.emplace_back(x.begin(), x.end()); };
    const SolveResult r0 = solve(a, b, Vector(a.n(), 0.0), cfg);
    std::vector<Vector> pre;
    cfg.on_iterate = [&pre](std::size_t, std::span<const double> x) { pre.emplace_back(x.begin(), x.end()); };
    cfg.precon = std::make_shared<Preconditioner>(Preconditioner::build(a, PreconKind::identity));
    const SolveResult r1 = solve_preconditioned(a, b, Vector(a.n(), 0.0), cfg);
    CHECK(r0.iterations == r1.iterations);
    REQUIRE(plain.size() == pre.size());
    bool identical = true;
    for (std::size_t k = 0; k < plain.size(); ++k) identical = identical && plain[k] == pre[k];
    CHECK(identical);
    // One application per iteration; an iteration ending in breakdown stops before it.
    const auto& per = r1.ops.per_iteration;
    std::size_t skipped = 0;
    for (const auto& it : per) {
      CHECK(it.precon <= 1);
      skipped += it.precon == 0 ? 1 : 0;
    }
    CHECK(skipped <= r1.restarts + 1);
    // The u recurrence replaces the z^(l) one, z^(l) being the M^-1 image of u;
    // the extra cost is the two-slot u ring.
    CHECK(r1.ops.axpy == r0.ops.axpy);
    CHECK(r1.ops.live_vectors_high_water == r0.ops.live_vectors_high_water + 2);
  }
}

TEST_CASE("block Jacobi reduces the iteration count") {
  const CsrMatrix a = laplace2d(30);
  const Vector b = a_ones(a);
  SolverConfig cfg = make_cfg(Variant::plcg_stable, 2, 0, 8, 1e-10);
  const SolveResult plain = solve(a, b, Vector(a.n(), 0.0), cfg);
  auto m = std::make_shared<Preconditioner>(Preconditioner::build(a, PreconKind::block_jacobi, 30));
  cfg.precon = m;
  // Spectrum of M^{-1} A for the shifts.
  cfg.shifts = chebyshev_shifts({0.0, 2.0, SpectrumSource::analytic}, 2).sigmas;
  const SolveResult pre = solve_preconditioned(a, b, Vector(a.n(), 0.0), cfg);
  CHECK(plain.status == SolveStatus::converged);
  CHECK(pre.status == SolveStatus::converged);
  CHECK(pre.iterations < plain.iterations);
  CHECK(pre.final_true_resnorm / nrm2(b) <= 1e-9);
}

TEST_CASE("M-orthogonality of the preconditioned basis") {
  const CsrMatrix a = laplace2d(20);
  const Vector b = a_ones(a);
  for (std::size_t bs : {1u, 20u}) {
    SolverConfig cfg = make_cfg(Variant::plcg_stable, 2, 0, 2, 1e-300);
    cfg.max_iters = 30;
    cfg.record_diagnostics = true;
    cfg.checkpoint_interval = 5;
    cfg.precon = std::make_shared<Preconditioner>(
        Preconditioner::build(a, bs == 1 ? PreconKind::jacobi : PreconKind::block_jacobi, bs));
    const SolveResult r = solve(a, b, Vector(a.n(), 0.0), cfg);
    // Line blocks converge faster, so their basis loses M-orthogonality sooner;
    // the 1e-6 bound is for point Jacobi.
    if (bs == 1) {
      for (const auto& cp : r.checkpoints) CHECK(cp.orth_loss <= 1e-6);
    }
    // Independent assembly of V^T M V.
    const auto& vv = r.archive->cycle_data().front().v;
    Eigen::MatrixXd v(a.n(), vv.size());
    for (std::size_t j = 0; j < vv.size(); ++j) v.col(static_cast<Eigen::Index>(j)) = oracle::vec(vv[j]);
    Eigen::MatrixXd md = oracle::dense(a);
    for (Eigen::Index i = 0; i < md.rows(); ++i) {
      for (Eigen::Index j = 0; j < md.cols(); ++j) {
        if (i / static_cast<Eigen::Index>(bs) != j / static_cast<Eigen::Index>(bs)) md(i, j) = 0.0;
      }
    }
    const Eigen::MatrixXd e = Eigen::MatrixXd::Identity(v.cols(), v.cols()) - v.transpose() * md * v;
    const double loss = e.cwiseAbs().rowwise().sum().maxCoeff();
    if (bs == 1) CHECK(loss <= 1e-6);
    CHECK(std::abs(loss - r.archive->orthogonality_loss()) <= 1e-12 + 1e-6 * loss);
  }
}

TEST_CASE("configuration contract") {
  const CsrMatrix a = laplace2d(4);
  const Vector b = a_ones(a);
  const Vector x0(a.n(), 0.0);
  SolverConfig cfg = make_cfg(Variant::plcg_stable, 2, 0, 8);
  cfg.shifts.pop_back();
  CHECK_THROWS_AS(solve(a, b, x0, cfg), ContractError);
  cfg = make_cfg(Variant::cg, 1, 0, 8);
  cfg.tau = 0.0;
  CHECK_THROWS_AS(solve(a, b, x0, cfg), ContractError);
  cfg = make_cfg(Variant::plcg_stable, 1, 0, 8);
  cfg.l = 0;
  CHECK_THROWS_AS(solve(a, b, x0, cfg), ContractError);
  cfg = make_cfg(Variant::cg, 1, 0, 8);
  CHECK_THROWS_AS(solve(a, Vector{1.0}, x0, cfg), ContractError);
  CHECK_THROWS_AS(solve_preconditioned(a, b, x0, cfg), ContractError);
  cfg.precon = std::make_shared<Preconditioner>(Preconditioner::build(a, PreconKind::jacobi));
  CHECK_THROWS_AS(solve(a, b, x0, cfg), ContractError);
  cfg = make_cfg(Variant::plcg_stable, 1, 0, 8);
  cfg.precon = std::make_shared<Preconditioner>(Preconditioner::build(laplace2d(3), PreconKind::jacobi));
  CHECK_THROWS_AS(solve_preconditioned(a, b, x0, cfg), ContractError);
  // Shifts are ignored by non-pipelined variants.
  cfg = make_cfg(Variant::cg, 1, 0, 8);
  cfg.shifts = {1.0, 2.0, 3.0};
  CHECK_NOTHROW(solve(a, b, x0, cfg));
  CHECK(to_string(Variant::plcg_stable) == "plcg_stable");
  CHECK(parse_variant("pcg_ghysels") == Variant::pcg_ghysels);
  CHECK_FALSE(parse_variant("gmres"));
}

TEST_CASE("zero right-hand side returns x0") {
  const CsrMatrix a = laplace2d(5);
  for (Variant v : kAll) {
    CAPTURE(to_string(v));
    const SolveResult r = solve(a, Vector(a.n(), 0.0), Vector(a.n(), 0.0), make_cfg(v, 2, 0, 8));
    CHECK(r.status == SolveStatus::converged);
    CHECK(r.iterations == 0);
    CHECK(r.x == Vector(a.n(), 0.0));
  }
}

TEST_CASE("indefinite operator and non-finite input") {
  const CsrMatrix neg = diagonal(Vector{-1, -2, -3});
  const Vector b{1, 1, 1};
  for (Variant v : kAll) {
    CAPTURE(to_string(v));
    CHECK_THROWS_AS(solve(neg, b, Vector(3, 0.0), make_cfg(v, 1, 0, 3)), DefinitenessError);
  }
  const CsrMatrix a = laplace2d(3);
  Vector bad = a_ones(a);
  bad[4] = std::nan("");
  for (Variant v : kAll) {
    CAPTURE(to_string(v));
    CHECK_THROWS_AS(solve(a, bad, Vector(a.n(), 0.0), make_cfg(v, 1, 0, 8)), NumericError);
  }
}

TEST_CASE("status, iteration and trace bookkeeping") {
  const CsrMatrix a = laplace2d(20);
  const Vector b = a_ones(a);
  for (Variant v : kAll) {
    CAPTURE(to_string(v));
    SolverConfig cfg = make_cfg(v, 2, 0, 8, 1e-9);
    const SolveResult r = solve(a, b, Vector(a.n(), 0.0), cfg);
    CHECK(r.status == SolveStatus::converged);
    CHECK(r.final_recursive_resnorm / r.r0_norm <= cfg.tau);
    CHECK(r.trace.rows.size() == r.iterations + 1);
    for (std::size_t k = 0; k < r.trace.rows.size(); ++k) CHECK(r.trace.rows[k].iteration == k);
    CHECK(has_event(r.trace.rows.back().events, TraceEvent::converged));

    cfg.max_iters = 7;
    const SolveResult m = solve(a, b, Vector(a.n(), 0.0), cfg);
    CHECK(m.status == SolveStatus::max_iterations);
    CHECK(m.iterations == 7);
    CHECK_FALSE(has_event(m.trace.rows.back().events, TraceEvent::converged));
  }
}

TEST_CASE("injected breakdown restarts and converges") {
  const CsrMatrix a = laplace2d(12);
  const Vector b = random_vector(a.n(), 16);
  const double anorm = a.frobenius_norm();
  for (Variant v : {Variant::plcg_stable, Variant::plcg_original}) {
    for (std::size_t l : {1u, 2u, 3u}) {
      CAPTURE(to_string(v));
      CAPTURE(l);
      SolverConfig cfg = make_cfg(v, l, 0, 8, 1e-10);
      cfg.inject_breakdown_at_column = 9;
      cfg.trace_true_residual = true;
      const SolveResult r = solve(a, b, Vector(a.n(), 0.0), cfg);
      CHECK(r.status == SolveStatus::converged);
      CHECK(r.restarts == 1);
      REQUIRE(r.restart_log.size() == 1);
      const auto& rr = r.restart_log.front();
      CHECK(rr.post_true_resnorm <= rr.pre_true_resnorm + 8 * kUnitRoundoff * anorm * nrm2(r.x));
      bool saw_breakdown = false;
      bool saw_restart = false;
      for (const auto& row : r.trace.rows) {
        saw_breakdown = saw_breakdown || has_event(row.events, TraceEvent::breakdown);
        saw_restart = saw_restart || has_event(row.events, TraceEvent::restart);
      }
      CHECK(saw_breakdown);
      CHECK(saw_restart);
      CHECK(r.final_true_resnorm / nrm2(b) <= 1e-9);
      for (std::size_t k = 0; k < r.trace.rows.size(); ++k) CHECK(r.trace.rows[k].iteration == k);
      CHECK(r.ops.restart_spmv >= 1);
    }
  }
}

TEST_CASE("exhausted restart budget reports breakdown_unrecovered") {
  const CsrMatrix a = laplace2d(12);
  const Vector b = a_ones(a);
  SolverConfig cfg = make_cfg(Variant::plcg_stable, 2, 0, 8, 1e-12);
  cfg.inject_breakdown_at_column = 6;
  cfg.max_restarts = 0;
  const SolveResult r = solve(a, b, Vector(a.n(), 0.0), cfg);
  CHECK(r.status == SolveStatus::breakdown_unrecovered);
  CHECK(r.restarts == 0);
  bool flagged = false;
  for (const auto& row : r.trace.rows) flagged = flagged || has_event(row.events, TraceEvent::breakdown);
  CHECK(flagged);
}
