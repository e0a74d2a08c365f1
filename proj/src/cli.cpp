#include "krylov/cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <thread>

#include "krylov/errors.hpp"
#include "krylov/format.hpp"

namespace krylov::cli {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::size_t to_count(std::string_view token, std::string_view what) {
  std::size_t v = 0;
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, v);
  if (token.empty() || ec != std::errc{} || ptr != end) {
    throw ContractError(std::string(what) + ": '" + std::string(token) + "' is not a count");
  }
  return v;
}

double to_double(std::string_view token, std::string_view what) {
  const auto v = parse_double(token);
  if (!v) throw ContractError(std::string(what) + ": '" + std::string(token) + "' is not a number");
  return *v;
}

bool to_bool(std::string_view token, std::string_view what) {
  if (token == "1" || token == "true" || token == "yes" || token == "on") return true;
  if (token == "0" || token == "false" || token == "no" || token == "off") return false;
  throw ContractError(std::string(what) + ": '" + std::string(token) + "' is not a boolean");
}

// Splits "head:rest"; rest is empty when there is no colon.
std::pair<std::string_view, std::string_view> head_rest(std::string_view spec) {
  const auto pos = spec.find(':');
  if (pos == std::string_view::npos) return {spec, {}};
  return {spec.substr(0, pos), spec.substr(pos + 1)};
}

std::string run_file_name(Variant v, std::size_t l) {
  if (is_pipelined(v)) return to_string(v) + "_l" + std::to_string(l) + ".csv";
  return to_string(v) + ".csv";
}

std::string fmt(double v) { return format_shortest(v); }

std::string opt_fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string("NA"); }

TraceEvent parse_events(std::string_view field, std::size_t line) {
  TraceEvent ev = TraceEvent::none;
  if (field.empty()) return ev;
  for (auto part : split(field, ';')) {
    if (part == "breakdown") {
      ev = ev | TraceEvent::breakdown;
    } else if (part == "restart") {
      ev = ev | TraceEvent::restart;
    } else if (part == "converged") {
      ev = ev | TraceEvent::converged;
    } else {
      throw ParseError("unknown event '" + std::string(part) + "'", line);
    }
  }
  return ev;
}

struct Job {
  Variant variant;
  std::size_t l;
};

}  // namespace

CsrMatrix build_problem(std::string_view spec) {
  const auto [kind, arg] = head_rest(trim(spec));
  if (kind == "laplace2d") {
    const std::size_t n = to_count(arg, "laplace2d");
    if (n == 0) throw ContractError("laplace2d: grid size must be at least 1");
    return laplace2d(n);
  }
  if (kind == "mm") {
    if (arg.empty()) throw ContractError("mm: missing path");
    return read_matrix_market(std::filesystem::path(std::string(arg)));
  }
  if (kind == "diag") {
    const auto range = arg.find("..");
    std::vector<double> d;
    if (range != std::string_view::npos) {
      const double lo = to_double(trim(arg.substr(0, range)), "diag");
      const double hi = to_double(trim(arg.substr(range + 2)), "diag");
      if (!(lo <= hi)) throw ContractError("diag: empty range");
      for (double v = lo; v <= hi; v += 1.0) d.push_back(v);
    } else {
      d = parse_doubles(arg);
    }
    if (d.empty()) throw ContractError("diag: no entries");
    return diagonal(d);
  }
  throw ContractError("unknown problem '" + std::string(spec) + "'");
}

std::vector<std::size_t> parse_counts(std::string_view text) {
  text = trim(text);
  std::vector<std::size_t> out;
  const auto range = text.find("..");
  if (range != std::string_view::npos) {
    const std::size_t lo = to_count(trim(text.substr(0, range)), "range");
    const std::size_t hi = to_count(trim(text.substr(range + 2)), "range");
    if (lo > hi) throw ContractError("range: '" + std::string(text) + "' is empty");
    for (std::size_t v = lo; v <= hi; ++v) out.push_back(v);
    return out;
  }
  for (auto tok : split(text, ',')) out.push_back(to_count(tok, "list"));
  return out;
}

std::vector<double> parse_doubles(std::string_view text) {
  std::vector<double> out;
  for (auto tok : split(trim(text), ',')) out.push_back(to_double(tok, "list"));
  return out;
}

std::vector<Variant> parse_variants(std::string_view text) {
  std::vector<Variant> out;
  for (auto tok : split(trim(text), ',')) {
    const auto v = parse_variant(tok);
    if (!v) throw ContractError("unknown variant '" + std::string(tok) + "'");
    out.push_back(*v);
  }
  return out;
}

SpectrumEstimate estimate_spectrum(const CsrMatrix& a, std::string_view spec, std::uint64_t seed) {
  const auto [kind, arg] = head_rest(trim(spec));
  SpectrumEstimate est;
  if (kind == "analytic") {
    const auto v = parse_doubles(arg);
    if (v.size() != 2) throw ContractError("analytic spectrum needs LO,HI");
    est = {v[0], v[1], SpectrumSource::analytic};
  } else if (kind == "power") {
    const std::size_t iters = arg.empty() ? kDefaultPowerIterations : to_count(arg, "power");
    if (iters == 0) throw ContractError("power: iteration count must be at least 1");
    est = {0.0, power_method(a, iters, seed), SpectrumSource::power_method};
  } else {
    throw ContractError("unknown spectrum '" + std::string(spec) + "'");
  }
  est.validate();
  return est;
}

std::shared_ptr<const Preconditioner> build_precon(const CsrMatrix& a, std::string_view spec) {
  const auto [kind, arg] = head_rest(trim(spec));
  if (kind == "none") return nullptr;
  if (kind == "identity") return std::make_shared<Preconditioner>(Preconditioner::build(a, PreconKind::identity));
  if (kind == "jacobi") return std::make_shared<Preconditioner>(Preconditioner::build(a, PreconKind::jacobi));
  if (kind == "block_jacobi") {
    const std::size_t bs = to_count(arg, "block_jacobi");
    if (bs == 0) throw ContractError("block_jacobi: block size must be at least 1");
    return std::make_shared<Preconditioner>(Preconditioner::build(a, PreconKind::block_jacobi, bs));
  }
  throw ContractError("unknown preconditioner '" + std::string(spec) + "'");
}

Vector build_rhs(const CsrMatrix& a, std::string_view spec, std::uint64_t seed) {
  spec = trim(spec);
  if (spec == "aones") return spmv(a, Vector(a.n(), 1.0));
  if (spec == "ones") return Vector(a.n(), 1.0);
  if (spec == "random") {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Vector b(a.n());
    for (double& e : b) e = dist(gen);
    return b;
  }
  throw ContractError("unknown rhs '" + std::string(spec) + "'");
}

void RunSpec::validate() const {
  if (variants.empty()) throw ContractError("RunSpec: no variants");
  if (l_values.empty()) throw ContractError("RunSpec: no pipeline lengths");
  if (std::find(l_values.begin(), l_values.end(), std::size_t{0}) != l_values.end()) {
    throw ContractError("RunSpec: pipeline length must be at least 1");
  }
  if (!(tau > 0.0)) throw ContractError("RunSpec: tau must be positive");
  if (jobs == 0) throw ContractError("RunSpec: jobs must be at least 1");
  if (shifts) {
    for (Variant v : variants) {
      if (!is_pipelined(v)) continue;
      for (std::size_t l : l_values) {
        if (shifts->size() != l) {
          throw ContractError("RunSpec: " + std::to_string(shifts->size()) + " explicit shifts for l = " +
                              std::to_string(l));
        }
      }
    }
  }
}

std::map<std::string, std::string> read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ContractError("cannot open config '" + path.string() + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string_view s = line;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key=value", number);
    const auto key = trim(s.substr(0, eq));
    if (key.empty()) throw ParseError("empty key", number);
    kv[std::string(key)] = std::string(trim(s.substr(eq + 1)));
  }
  return kv;
}

void apply_config(RunSpec& spec, const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "problem") {
      spec.problem = value;
    } else if (key == "variant") {
      spec.variants = parse_variants(value);
    } else if (key == "l") {
      spec.l_values = parse_counts(value);
    } else if (key == "tau") {
      spec.tau = to_double(value, key);
    } else if (key == "max_iters") {
      spec.max_iters = to_count(value, key);
    } else if (key == "shifts") {
      if (value == "auto") {
        spec.shifts.reset();
      } else {
        spec.shifts = parse_doubles(value);
      }
    } else if (key == "spectrum") {
      spec.spectrum = value;
    } else if (key == "precon") {
      spec.precon = value;
    } else if (key == "rhs") {
      spec.rhs = value;
    } else if (key == "output") {
      spec.output = value;
    } else if (key == "diagnostics") {
      spec.diagnostics = to_bool(value, key);
    } else if (key == "true_residual") {
      spec.true_residual = to_bool(value, key);
    } else if (key == "checkpoint_interval") {
      spec.checkpoint_interval = to_count(value, key);
    } else if (key == "max_restarts") {
      spec.max_restarts = to_count(value, key);
    } else if (key == "seed") {
      spec.seed = to_count(value, key);
    } else if (key == "jobs") {
      spec.jobs = to_count(value, key);
    } else {
      throw ContractError("unknown config key '" + key + "'");
    }
  }
}

std::uint64_t seed_from_env(std::uint64_t fallback) {
  const char* env = std::getenv("KRYLOV_SEED");
  if (!env) return fallback;
  std::string_view s = trim(env);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) return fallback;
  return v;
}

std::string format_csv(const IterationTrace& trace) {
  std::string out = "iter,recursive_resnorm,true_resnorm,orth_loss,lanczos_dev,event\n";
  for (const auto& row : trace.rows) {
    out += std::to_string(row.iteration);
    out += ',' + fmt(row.recursive_resnorm);
    out += ',' + opt_fmt(row.true_resnorm);
    out += ',' + opt_fmt(row.orth_loss);
    out += ',' + opt_fmt(row.lanczos_dev);
    out += ',' + to_string(row.events);
    out += '\n';
  }
  return out;
}

void emit_csv(const IterationTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << format_csv(trace);
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

IterationTrace parse_csv(std::string_view text) {
  IterationTrace trace;
  std::size_t line = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto raw = text.substr(start, end - start);
    start = end + 1;
    ++line;
    if (line == 1) {
      if (trim(raw) != "iter,recursive_resnorm,true_resnorm,orth_loss,lanczos_dev,event") {
        throw ParseError("unexpected header", line);
      }
      continue;
    }
    if (trim(raw).empty()) continue;
    const auto f = split(raw, ',');
    if (f.size() != 6) throw ParseError("expected 6 fields", line);
    auto num = [line](std::string_view s) {
      const auto v = parse_double(s);
      if (!v) throw ParseError("bad number '" + std::string(s) + "'", line);
      return *v;
    };
    auto opt = [&num](std::string_view s) -> std::optional<double> {
      if (s == "NA") return std::nullopt;
      return num(s);
    };
    TraceRow row;
    try {
      row.iteration = to_count(f[0], "iter");
    } catch (const ContractError& e) {
      throw ParseError(e.what(), line);
    }
    row.recursive_resnorm = num(f[1]);
    row.true_resnorm = opt(f[2]);
    row.orth_loss = opt(f[3]);
    row.lanczos_dev = opt(f[4]);
    row.events = parse_events(f[5], line);
    trace.rows.push_back(row);
  }
  return trace;
}

BatchResult run(const RunSpec& spec) {
  spec.validate();
  const CsrMatrix a = build_problem(spec.problem);
  const Vector b = build_rhs(a, spec.rhs, spec.seed);
  const Vector x0(a.n(), 0.0);
  const auto precon = build_precon(a, spec.precon);

  std::vector<Job> jobs;
  bool any_pipelined = false;
  for (Variant v : spec.variants) {
    if (is_pipelined(v)) {
      any_pipelined = true;
      for (std::size_t l : spec.l_values) jobs.push_back({v, l});
    } else {
      jobs.push_back({v, 1});
    }
  }
  std::optional<SpectrumEstimate> spectrum;
  if (any_pipelined && !spec.shifts) spectrum = estimate_spectrum(a, spec.spectrum, spec.seed);

  std::filesystem::create_directories(spec.output);
  BatchResult batch;
  batch.runs.resize(jobs.size());
  const double bnorm = nrm2(b);

  auto execute = [&](std::size_t idx) {
    const Job& job = jobs[idx];
    RunSummary& s = batch.runs[idx];
    s.variant = job.variant;
    s.l = job.l;
    s.csv = spec.output / run_file_name(job.variant, job.l);
    SolverConfig cfg;
    cfg.variant = job.variant;
    cfg.l = job.l;
    cfg.max_iters = spec.max_iters;
    cfg.tau = spec.tau;
    cfg.max_restarts = spec.max_restarts;
    cfg.record_diagnostics = spec.diagnostics;
    cfg.checkpoint_interval = spec.checkpoint_interval;
    cfg.trace_true_residual = spec.true_residual;
    if (is_pipelined(job.variant)) {
      cfg.shifts = spec.shifts ? *spec.shifts : chebyshev_shifts(*spectrum, job.l).sigmas;
    }
    // Only the stable pipelined variant has a preconditioned form.
    if (job.variant == Variant::plcg_stable) cfg.precon = precon;
    try {
      const SolveResult res = solve(a, b, x0, cfg);
      s.status = res.status;
      s.numeric_failure = res.status == SolveStatus::breakdown_unrecovered;
      s.iterations = res.iterations;
      s.restarts = res.restarts;
      s.trace_rows = res.trace.rows.size();
      const double scale = bnorm > 0.0 ? bnorm : 1.0;
      s.final_recursive_rel = res.final_recursive_resnorm / (res.r0_norm > 0.0 ? res.r0_norm : 1.0);
      s.final_true_rel = res.final_true_resnorm / scale;
      s.ops = res.ops;
      s.ops.per_iteration.clear();
      emit_csv(res.trace, s.csv);
    } catch (const DefinitenessError& e) {
      s.error = e.what();
      s.numeric_failure = true;
    } catch (const NumericError& e) {
      s.error = e.what();
      s.numeric_failure = true;
    } catch (const std::exception& e) {
      s.error = e.what();
    }
  };

  const std::size_t workers = std::min(spec.jobs, jobs.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) execute(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) execute(i);
      });
    }
  }

  for (const auto& s : batch.runs) {
    if (s.numeric_failure) {
      batch.exit_code = kExitNumeric;
    } else if (!s.status && batch.exit_code == kExitOk) {
      batch.exit_code = kExitUsage;
    }
  }
  std::ofstream summary(spec.output / "summary.csv", std::ios::binary);
  summary << format_summary_csv(batch);
  return batch;
}

std::string format_summary_csv(const BatchResult& batch) {
  std::string out =
      "variant,l,status,iterations,restarts,final_recursive_rel,final_true_rel,spmv,dots,axpy,precon,"
      "live_vectors,trace_rows,csv\n";
  for (const auto& s : batch.runs) {
    out += to_string(s.variant) + ',' + std::to_string(s.l) + ',';
    out += (s.status ? to_string(*s.status) : std::string("error")) + ',';
    out += std::to_string(s.iterations) + ',' + std::to_string(s.restarts) + ',';
    out += (s.status ? fmt(s.final_recursive_rel) : "NA") + ',';
    out += (s.status ? fmt(s.final_true_rel) : "NA") + ',';
    out += std::to_string(s.ops.spmv) + ',' + std::to_string(s.ops.dots) + ',' + std::to_string(s.ops.axpy) +
           ',' + std::to_string(s.ops.precon) + ',' + std::to_string(s.ops.live_vectors_high_water) + ',';
    out += std::to_string(s.trace_rows) + ',' + (s.status ? s.csv.filename().string() : "NA") + '\n';
  }
  return out;
}

void print_summary(std::ostream& os, const BatchResult& batch) {
  os << std::left << std::setw(15) << "variant" << std::setw(4) << "l" << std::setw(23) << "status"
     << std::right << std::setw(7) << "iters" << std::setw(9) << "restarts" << std::setw(13) << "true_rel"
     << std::setw(8) << "spmv" << std::setw(8) << "dots" << std::setw(8) << "axpy" << std::setw(7)
     << "vecs" << '\n';
  for (const auto& s : batch.runs) {
    os << std::left << std::setw(15) << to_string(s.variant) << std::setw(4) << s.l << std::setw(23)
       << (s.status ? to_string(*s.status) : std::string("error")) << std::right << std::setw(7)
       << s.iterations << std::setw(9) << s.restarts << std::setw(13) << std::setprecision(3)
       << std::scientific << s.final_true_rel << std::defaultfloat << std::setw(8) << s.ops.spmv
       << std::setw(8) << s.ops.dots << std::setw(8) << s.ops.axpy << std::setw(7)
       << s.ops.live_vectors_high_water << '\n';
    if (!s.error.empty()) os << "  " << s.error << '\n';
  }
}

void print_iteration_table(std::ostream& os, double glred, double spmv, double prec,
                           const std::vector<std::size_t>& l_values) {
  os << "variant,l,iteration_time\n";
  os << "cg,1," << fmt(iteration_time(glred, spmv, Variant::cg, 1, prec)) << '\n';
  os << "dlanczos,1," << fmt(iteration_time(glred, spmv, Variant::dlanczos, 1, prec)) << '\n';
  os << "pcg_ghysels,1," << fmt(iteration_time(glred, spmv, Variant::pcg_ghysels, 1, prec)) << '\n';
  for (std::size_t l : l_values) {
    os << "plcg_stable," << l << ',' << fmt(iteration_time(glred, spmv, Variant::plcg_stable, l, prec)) << '\n';
  }
}

void print_speedup_table(std::ostream& os, const MachineModel& model,
                         const std::vector<std::size_t>& l_values,
                         const std::vector<std::size_t>& nodes, std::size_t iters) {
  os << "nodes,cg,pcg_ghysels";
  for (std::size_t l : l_values) os << ",plcg_l" << l;
  os << '\n';
  const auto cg = speedup_curve(model, Variant::cg, 1, nodes, iters);
  const auto pcg = speedup_curve(model, Variant::pcg_ghysels, 1, nodes, iters);
  std::vector<std::vector<SpeedupPoint>> pl;
  for (std::size_t l : l_values) pl.push_back(speedup_curve(model, Variant::plcg_stable, l, nodes, iters));
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    os << nodes[i] << ',' << fmt(cg[i].speedup) << ',' << fmt(pcg[i].speedup);
    for (const auto& c : pl) os << ',' << fmt(c[i].speedup);
    os << '\n';
  }
}

}  // namespace krylov::cli
