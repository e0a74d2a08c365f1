// Deep-pipelined CG: the original multi-term basis recurrence and the stable
// form with auxiliary bases z^(k), sharing one scalar engine.
//
// Iteration i performs one spmv on z_i, finalizes Gram column i-l+1 (whose
// dot products were initiated l iterations earlier), extends T and the bases
// by one column, initiates the dot products of column i+1, and advances the
// LU factorization and the iterate to row t = i-l.

#include <algorithm>
#include <cmath>
#include <deque>

#include "krylov/errors.hpp"
#include "solver_internal.hpp"

namespace krylov::detail {
namespace {

void check_definite(double v, const char* what, std::size_t iteration) {
  require_finite(v, what, iteration);
  if (!(v > 0.0)) {
    throw DefinitenessError(std::string(what) + " <= 0 at iteration " + std::to_string(iteration) +
                            ": operator is not positive definite");
  }
}

void residual_into(const CsrMatrix& a, std::span<const double> x, std::span<const double> b,
                   std::span<double> r) {
  spmv_add(a, x, -1.0, b, r);
  for (double& e : r) e = -e;
}

void divide(std::span<double> v, double d) {
  for (double& e : v) e /= d;
}

void copy(std::span<const double> src, std::span<double> dst) { std::copy(src.begin(), src.end(), dst.begin()); }

// out = (partial - gamma cur) / delta, the closing step of every fused
// three-term recurrence. Shared so both stable forms round identically.
void finish_recurrence(std::span<double> out, std::span<const double> partial, double gamma,
                       std::span<const double> cur, double delta) {
  for (std::size_t e = 0; e < out.size(); ++e) out[e] = (partial[e] - gamma * cur[e]) / delta;
}

struct Context {
  const CsrMatrix& a;
  std::span<const double> b;
  const SolverConfig& cfg;
  const Preconditioner* m;
  Recorder& rec;
};

// Stable basis: z^(0) (= v), ..., z^(l-1) in two-slot rings updated in place,
// z^(l) in a ring of max(l, 2) slots for the dot-product window, and with a
// preconditioner the unpreconditioned u = M z^(l) in a two-slot ring. Each
// z^(l)_{i+1} is the M^-1 image of the finished u_{i+1}, so z^(l) = M^-1 u holds
// to one application's rounding; separate recurrences for the two would let
// the discrepancy grow by |gamma / delta| per step.
class StableBasis {
 public:
  StableBasis(Context& ctx, VectorPool& pool) : ctx_(ctx), l_(ctx.cfg.l) {
    for (std::size_t k = 0; k < l_; ++k) {
      const std::size_t slots = (k == 0 && ctx.cfg.full_dot_products) ? std::max<std::size_t>(l_ + 1, 2) : 2;
      zk_.emplace_back(pool, slots);
    }
    zl_ = VectorRing(pool, std::max<std::size_t>(l_, 2));
    if (ctx.m) u_ = VectorRing(pool, 2);
  }

  void reset() {
    for (auto& r : zk_) r.reset();
    zl_.reset();
    if (ctx_.m) u_.reset();
  }

  double start(std::span<const double> x, bool restart) {
    auto& rec = ctx_.rec;
    restart ? rec.restart_spmv() : rec.setup_spmv();
    double rho = 0.0;
    if (!ctx_.m) {
      auto v0 = zk_[0].claim(0);
      residual_into(ctx_.a, x, ctx_.b, v0);
      rho = nrm2(v0);
      if (rho == 0.0) return 0.0;
      divide(v0, rho);
      copy(v0, zl_.claim(0));
      for (std::size_t k = 1; k < l_; ++k) copy(v0, zk_[k].claim(0));
      return rho;
    }
    auto u0 = u_.claim(0);
    residual_into(ctx_.a, x, ctx_.b, u0);
    auto z0 = zl_.claim(0);
    ctx_.m->apply_into(u0, z0);
    const double rho_sq = dot(u0, z0);
    if (rho_sq == 0.0) return 0.0;
    check_definite(rho_sq, "(r0, M^-1 r0)", 0);
    rho = std::sqrt(rho_sq);
    divide(u0, rho);
    divide(z0, rho);
    for (std::size_t k = 0; k < l_; ++k) copy(z0, zk_[k].claim(0));
    return rho;
  }

  void spmv(std::size_t i, const TridiagFactors& tf) {
    auto& rec = ctx_.rec;
    const auto& a = ctx_.a;
    auto zi = zl_.get(i);
    rec.spmv();
    const bool warmup = i < l_;
    const std::size_t t = warmup ? 0 : i - l_;
    if (!ctx_.m) {
      if (warmup) {
        auto out = zl_.claim(i + 1);
        spmv_add(a, zi, -ctx_.cfg.shifts[i], zi, out);
        rec.axpy();
      } else if (t == 0) {
        spmv_into(a, zi, zl_.claim(i + 1));
      } else {
        auto zprev = zl_.get(i - 1);
        auto out = zl_.claim(i + 1);  // may alias zprev
        spmv_add(a, zi, -tf.delta[t - 1], zprev, out);
        rec.axpy();
      }
      return;
    }
    // Preconditioned: the fused partial goes to u; z^(l)_{i+1} follows once u
    // is final, immediately in the warm-up and in update() afterwards.
    if (warmup) {
      auto ui = u_.get(i);
      auto unew = u_.claim(i + 1);
      spmv_add(a, zi, -ctx_.cfg.shifts[i], ui, unew);
      rec.axpy();
      precondition(i + 1);
    } else if (t == 0) {
      spmv_into(a, zi, u_.claim(i + 1));
    } else {
      auto uprev = u_.get(i - 1);
      auto partial = u_.claim(i + 1);  // aliases uprev
      spmv_add(a, zi, -tf.delta[t - 1], uprev, partial);
      rec.axpy();
    }
  }

  // Warm-up copies: z^(k)_j = z^(l)_j for all j <= k.
  void copy_warmup(std::size_t i) {
    if (i + 1 >= l_) return;
    auto src = zl_.get(i + 1);
    for (std::size_t k = i + 1; k < l_; ++k) copy(src, zk_[k].claim(i + 1));
  }

  void update(std::size_t i, const TridiagFactors& tf, const GramBand&) {
    auto& rec = ctx_.rec;
    const std::size_t t = i - l_;
    const double gamma = tf.gamma[t];
    const double delta = tf.delta[t];
    const double dprev = t > 0 ? tf.delta[t - 1] : 0.0;
    for (std::size_t k = 0; k < l_; ++k) {
      auto src = k + 1 < l_ ? zk_[k + 1].get(t + k + 1) : zl_.get(t + k + 1);
      auto cur = zk_[k].get(t + k);
      const double c1 = ctx_.cfg.shifts[k] - gamma;
      if (t > 0) {
        auto prev = zk_[k].get(t + k - 1);
        auto out = zk_[k].claim(t + k + 1);  // may alias prev
        for (std::size_t e = 0; e < out.size(); ++e) out[e] = (src[e] + c1 * cur[e] - dprev * prev[e]) / delta;
        rec.axpy(2);
      } else {
        auto out = zk_[k].claim(t + k + 1);
        for (std::size_t e = 0; e < out.size(); ++e) out[e] = (src[e] + c1 * cur[e]) / delta;
        rec.axpy(1);
      }
    }
    if (!ctx_.m) {
      auto znew = zl_.get(i + 1);
      finish_recurrence(znew, znew, gamma, zl_.get(i), delta);
      rec.axpy();
      return;
    }
    auto unew = u_.get(i + 1);
    finish_recurrence(unew, unew, gamma, u_.get(i), delta);
    rec.axpy();
    precondition(i + 1);
  }

  void dots(std::size_t i, GramBand& g) {
    auto& rec = ctx_.rec;
    const std::size_t c = i + 1;
    g.ensure_column(c);
    auto left = ctx_.m ? std::span<const double>(u_.get(c)) : std::span<const double>(zl_.get(c));
    // (z_c, v_j) for j <= c - l; only the newest one unless full_dot_products.
    if (c >= l_) {
      const std::size_t hi = c - l_;
      const std::size_t lo = ctx_.cfg.full_dot_products ? g.first_row(c) : hi;
      for (std::size_t j = lo; j <= hi; ++j) {
        g.at(j, c) = dot(left, zk_[0].get(j));
        rec.dots();
      }
    }
    for (std::size_t j = c >= l_ ? c - l_ + 1 : 0; j <= c; ++j) {
      g.at(j, c) = dot(left, zl_.get(j));
      rec.dots();
    }
  }

  std::span<double> v(std::size_t j) { return zk_[0].get(j); }
  std::span<double> z(std::size_t j) { return zl_.get(j); }
  std::span<const double> u(std::size_t j) {
    return ctx_.m ? std::span<const double>(u_.get(j)) : std::span<const double>();
  }
  std::span<double> scratch(std::size_t k) {
    if (k < 2) return zl_.scratch(k);
    if (ctx_.m) return u_.scratch(0);
    throw std::logic_error("StableBasis: no scratch slot " + std::to_string(k));
  }

 private:
  void precondition(std::size_t j) {
    ctx_.m->apply_into(u_.get(j), zl_.claim(j));
    ctx_.rec.precon();
  }

  Context& ctx_;
  std::size_t l_;
  std::vector<VectorRing> zk_;
  VectorRing zl_;
  VectorRing u_;
};

// Original basis: v_{c} = (z_c - sum_{j=c-2l}^{c-1} g_{j,c} v_j) / g_{c,c}
// with a 2l-slot V ring and an (l+1)-slot Z ring.
class OriginalBasis {
 public:
  OriginalBasis(Context& ctx, VectorPool& pool) : ctx_(ctx), l_(ctx.cfg.l) {
    v_ = VectorRing(pool, std::max<std::size_t>(2 * l_, 2));
    z_ = VectorRing(pool, l_ + 1);
  }

  void reset() {
    v_.reset();
    z_.reset();
  }

  double start(std::span<const double> x, bool restart) {
    restart ? ctx_.rec.restart_spmv() : ctx_.rec.setup_spmv();
    auto v0 = v_.claim(0);
    residual_into(ctx_.a, x, ctx_.b, v0);
    const double rho = nrm2(v0);
    if (rho == 0.0) return 0.0;
    divide(v0, rho);
    copy(v0, z_.claim(0));
    return rho;
  }

  void spmv(std::size_t i, const TridiagFactors& tf) {
    auto& rec = ctx_.rec;
    auto zi = z_.get(i);
    rec.spmv();
    if (i < l_) {
      spmv_add(ctx_.a, zi, -ctx_.cfg.shifts[i], zi, z_.claim(i + 1));
      rec.axpy();
      return;
    }
    const std::size_t t = i - l_;
    if (t == 0) {
      spmv_into(ctx_.a, zi, z_.claim(i + 1));
      return;
    }
    auto zprev = z_.get(i - 1);
    auto out = z_.claim(i + 1);  // aliases zprev when l == 1
    spmv_add(ctx_.a, zi, -tf.delta[t - 1], zprev, out);
    rec.axpy();
  }

  void copy_warmup(std::size_t) {}

  void update(std::size_t i, const TridiagFactors& tf, const GramBand& g) {
    auto& rec = ctx_.rec;
    const std::size_t t = i - l_;
    const std::size_t c = t + 1;
    const std::size_t lo = g.first_row(c);
    std::vector<std::span<const double>> terms;
    std::vector<double> coef;
    for (std::size_t j = lo; j < c; ++j) {
      terms.push_back(v_.get(j));
      coef.push_back(g(static_cast<std::ptrdiff_t>(j), static_cast<std::ptrdiff_t>(c)));
    }
    const double gcc = g(static_cast<std::ptrdiff_t>(c), static_cast<std::ptrdiff_t>(c));
    auto zc = z_.get(c);
    auto out = v_.claim(c);  // may alias terms[0]; each element is read before it is written
    for (std::size_t e = 0; e < out.size(); ++e) {
      double s = zc[e];
      for (std::size_t q = 0; q < terms.size(); ++q) s -= coef[q] * terms[q][e];
      out[e] = s / gcc;
    }
    rec.axpy(terms.size());
    auto znew = z_.get(i + 1);
    finish_recurrence(znew, znew, tf.gamma[t], z_.get(i), tf.delta[t]);
    rec.axpy();
  }

  void dots(std::size_t i, GramBand& g) {
    auto& rec = ctx_.rec;
    const std::size_t c = i + 1;
    g.ensure_column(c);
    auto left = z_.get(c);
    if (c >= l_) {
      const std::size_t hi = c - l_;
      const std::size_t lo = ctx_.cfg.full_dot_products ? g.first_row(c) : hi;
      for (std::size_t j = lo; j <= hi; ++j) {
        g.at(j, c) = dot(left, v_.get(j));
        rec.dots();
      }
    }
    for (std::size_t j = c >= l_ ? c - l_ + 1 : 0; j <= c; ++j) {
      g.at(j, c) = dot(left, z_.get(j));
      rec.dots();
    }
  }

  std::span<double> v(std::size_t j) { return v_.get(j); }
  std::span<double> z(std::size_t j) { return z_.get(j); }
  std::span<const double> u(std::size_t) { return {}; }
  std::span<double> scratch(std::size_t k) {
    if (k < 2) return z_.scratch(k);
    throw std::logic_error("OriginalBasis: no scratch slot " + std::to_string(k));
  }

 private:
  Context& ctx_;
  std::size_t l_;
  VectorRing v_;
  VectorRing z_;
};

struct CycleOutcome {
  enum class Kind { converged, max_iterations, breakdown } kind = Kind::max_iterations;
  std::size_t row = 0;         // global trace row of the current iterate x
  bool has_candidate = false;  // x + zeta_t p_t is the next Galerkin iterate
  double zeta = 0.0;
  double root = 0.0;
};

template <class Basis>
class Engine {
 public:
  Engine(Context& ctx, std::span<const double> x0)
      : ctx_(ctx), l_(ctx.cfg.l), pool_(ctx.a.n()), basis_(ctx, pool_), g_(ctx.cfg.l),
        x_(x0.begin(), x0.end()) {
    p_ = pool_.acquire();
  }

  void run() {
    auto& rec = ctx_.rec;
    auto& res = rec.result();
    res.ops.live_vectors_high_water = pool_.high_water();
    std::size_t base = 0;
    bool restart = false;
    for (;;) {
      const CycleOutcome out = cycle(base, restart);
      res.tridiag = tf_;
      res.lu = lu_;
      if (out.kind == CycleOutcome::Kind::converged) return rec.finish(x_, SolveStatus::converged);
      if (out.kind == CycleOutcome::Kind::max_iterations) return rec.finish(x_, SolveStatus::max_iterations);
      if (handle_breakdown(out, base)) return;
      restart = true;
    }
  }

 private:
  // Residual norm in the stopping-test norm (M^-1 norm when preconditioned)
  // and the Euclidean norm, using basis scratch slots.
  std::pair<double, double> residual_norms(std::span<const double> x) {
    auto r = basis_.scratch(0);
    residual_into(ctx_.a, x, ctx_.b, r);
    ctx_.rec.restart_spmv();
    const double euclid = nrm2(r);
    if (!ctx_.m) return {euclid, euclid};
    auto s = basis_.scratch(2);
    ctx_.m->apply_into(r, s);
    const double mdot = dot(r, s);
    return {mdot > 0.0 ? std::sqrt(mdot) : euclid, euclid};
  }

  // Returns true when the solve is finished.
  bool handle_breakdown(const CycleOutcome& out, std::size_t& base) {
    auto& rec = ctx_.rec;
    auto& res = rec.result();
    rec.mark(out.row, TraceEvent::breakdown);
    const auto [pre_stop, pre_true] = residual_norms(x_);
    double best_stop = pre_stop;
    double best_true = pre_true;
    bool take_candidate = false;
    if (out.has_candidate) {
      auto candidate = basis_.scratch(1);
      copy(x_, candidate);
      axpy_inplace(out.zeta, p_, candidate);
      const auto [c_stop, c_true] = residual_norms(candidate);
      if (std::isfinite(c_stop) && c_stop < pre_stop) {
        take_candidate = true;
        best_stop = c_stop;
        best_true = c_true;
        copy(candidate, x_);
      }
    }
    const std::size_t next_row = take_candidate ? out.row + 1 : out.row;
    if (rec.converged(best_stop)) {
      if (take_candidate) rec.row(next_row, best_stop, x_);
      rec.finish(x_, SolveStatus::converged);
      return true;
    }
    if (res.restarts >= ctx_.cfg.max_restarts) {
      if (take_candidate) rec.row(next_row, best_stop, x_);
      rec.finish(x_, SolveStatus::breakdown_unrecovered);
      return true;
    }
    ++res.restarts;
    res.restart_log.push_back(RestartRecord{out.row, out.root, pre_true, best_true});
    base = next_row;
    return false;
  }

  struct RowOutcome {
    bool converged = false;
    bool eta_bad = false;
  };

  RowOutcome lu_row(std::size_t t, std::size_t base, bool restart) {
    auto& rec = ctx_.rec;
    const std::size_t k = base + t;
    lu_advance(lu_, tf_, t, rho_);
    RowOutcome out;
    if (t == 0) {
      check_definite(lu_.eta[0], "gamma_0 = (v_0, A v_0)", k);
      auto v0 = basis_.v(0);
      for (std::size_t e = 0; e < p_.size(); ++e) p_[e] = v0[e] / lu_.eta[0];
      if (ctx_.cfg.on_direction) ctx_.cfg.on_direction(0, p_);
    } else {
      require_finite(lu_.eta[t], "eta", k);
      require_finite(lu_.zeta[t], "zeta", k);
      axpy_inplace(lu_.zeta[t - 1], p_, x_);
      rec.axpy();
      if (!(lu_.eta[t] > 0.0)) {
        out.eta_bad = true;
      } else {
        auto vt = basis_.v(t);
        const double dprev = tf_.delta[t - 1];
        for (std::size_t e = 0; e < p_.size(); ++e) p_[e] = (vt[e] - dprev * p_[e]) / lu_.eta[t];
        rec.axpy();
        if (ctx_.cfg.on_direction) ctx_.cfg.on_direction(t, p_);
      }
    }
    rec.row(k, lu_.zeta[t], x_, (t == 0 && restart) ? TraceEvent::restart : TraceEvent::none);
    out.converged = rec.converged(lu_.zeta[t]);
    return out;
  }

  CycleOutcome cycle(std::size_t base, bool restart) {
    auto& rec = ctx_.rec;
    const auto& cfg = ctx_.cfg;
    BasisArchive* ar = rec.archive();
    basis_.reset();
    g_.clear();
    tf_.clear();
    lu_.clear();
    fifo_.clear();
    if (ar) ar->start_cycle();

    rho_ = basis_.start(x_, restart);
    if (!restart) rec.set_reference(rho_);
    if (rho_ == 0.0) {
      rec.row(base, 0.0, x_, restart ? TraceEvent::restart : TraceEvent::none);
      return {CycleOutcome::Kind::converged, base};
    }
    g_.ensure_column(0);
    g_.at(0, 0) = 1.0;
    if (ar) {
      ar->append_v(basis_.v(0));
      ar->append_z(basis_.z(0), basis_.u(0));
      const double one = 1.0;
      ar->set_gram_column(0, 0, std::span<const double>(&one, 1));
    }

    for (std::size_t i = 0;; ++i) {
      rec.begin_iteration();
      basis_.spmv(i, tf_);
      basis_.copy_warmup(i);
      if (i >= l_) {
        const std::size_t c = i - l_ + 1;
        const std::size_t t = i - l_;
        if (fifo_.empty() || fifo_.front() != c) throw std::logic_error("reduction FIFO out of order");
        fifo_.pop_front();
        if (!cfg.full_dot_products) gram_fill_symmetric(g_, c);
        GramStep step = gram_finalize(g_, c, cfg.breakdown_floor);
        if (!restart && cfg.inject_breakdown_at_column && *cfg.inject_breakdown_at_column == c) {
          step.breakdown = true;
        }
        require_finite(step.root_argument, "Gram root argument", base + t);
        if (step.breakdown) {
          tridiag_update(g_, tf_, t, cfg.shifts, false);
          require_finite(tf_.gamma[t], "gamma", base + t);
          const RowOutcome row = lu_row(t, base, restart);
          rec.end_iteration(false);
          if (row.converged) return {CycleOutcome::Kind::converged, base + t};
          return {CycleOutcome::Kind::breakdown, base + t, !row.eta_bad, lu_.zeta[t], step.root_argument};
        }
        if (ar) ar->set_gram_column(c, g_.first_row(c), g_.column(c));
        tridiag_update(g_, tf_, t, cfg.shifts, true);
        require_finite(tf_.gamma[t], "gamma", base + t);
        require_finite(tf_.delta[t], "delta", base + t);
        basis_.update(i, tf_, g_);
        if (ar) {
          ar->append_tcol(tf_.gamma[t], tf_.delta[t]);
          ar->append_v(basis_.v(t + 1));
        }
      }
      basis_.dots(i, g_);
      fifo_.push_back(i + 1);
      if (ar) ar->append_z(basis_.z(i + 1), basis_.u(i + 1));

      if (i < l_) {
        rec.end_iteration(false);
        continue;
      }
      const std::size_t t = i - l_;
      const RowOutcome row = lu_row(t, base, restart);
      rec.end_iteration(t >= 2 * l_);
      if (row.converged) return {CycleOutcome::Kind::converged, base + t};
      if (row.eta_bad) return {CycleOutcome::Kind::breakdown, base + t, false, 0.0, 0.0};
      if (base + t >= cfg.max_iters) return {CycleOutcome::Kind::max_iterations, base + t};
    }
  }

  Context& ctx_;
  std::size_t l_;
  VectorPool pool_;
  Basis basis_;
  GramBand g_;
  TridiagFactors tf_;
  LuFactors lu_;
  std::deque<std::size_t> fifo_;  // Gram columns with reductions in flight
  Vector x_;
  std::span<double> p_;
  double rho_ = 0.0;
};

}  // namespace

SolveResult solve_plcg(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                       const SolverConfig& cfg) {
  SolveResult res;
  Recorder rec(a, b, cfg, res);
  if (cfg.record_diagnostics) {
    std::shared_ptr<const Preconditioner> m = cfg.precon;
    BasisArchive::Operator op = [&a, m](std::span<const double> in, std::span<double> out) {
      if (!m) return spmv_into(a, in, out);
      Vector tmp = spmv(a, in);
      m->apply_into(tmp, out);
    };
    BasisArchive::Operator m_op;
    if (m) {
      m_op = [m](std::span<const double> in, std::span<double> out) {
        const Vector mv = m->multiply(in);
        std::copy(mv.begin(), mv.end(), out.begin());
      };
    }
    res.archive.emplace(a.n(), std::move(op), std::move(m_op));
  }
  Context ctx{a, b, cfg, cfg.precon.get(), rec};
  if (cfg.variant == Variant::plcg_original) {
    Engine<OriginalBasis> engine(ctx, x0);
    engine.run();
  } else {
    Engine<StableBasis> engine(ctx, x0);
    engine.run();
  }
  return res;
}

}  // namespace krylov::detail
