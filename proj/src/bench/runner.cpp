#include "neurocpd/bench/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <sstream>

#include "neurocpd/baselines.hpp"
#include "neurocpd/datagen.hpp"
#include "neurocpd/simd/kernels.hpp"
#include "neurocpd/tensor_io.hpp"

namespace neurocpd::bench {
namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "seed", "threads",
      "problem.kind", "problem.seed", "problem.file", "problem.snr_db",
      "algorithm.name", "algorithm.rank",
      "flow.step", "flow.epsilon", "flow.precondition", "flow.ridge", "flow.tol", "flow.jitter_epsilon",
      "barrier.gamma", "barrier.integrator", "barrier.decay_every", "barrier.decay_factor",
      "dtpnn.lambda", "dtpnn.alpha", "dtpnn.beta", "dtpnn.precondition", "dtpnn.ridge", "dtpnn.form",
      "dtpnn.tol",
      "swarm.q", "swarm.alpha", "swarm.beta1", "swarm.beta2", "swarm.diversity_threshold",
      "swarm.epsilon_stop", "swarm.mutation", "swarm.inner", "swarm.inner_tol", "swarm.inner_max_steps",
      "budget.max_iters", "budget.wall_ms", "budget.target_error",
      "output.name", "output.wall_clock", "output.stride", "output.gnuplot"};
  return keys;
}

std::optional<double> ridge_value(const Config& cfg, const std::string& key) {
  const auto v = cfg.get(key);
  if (!v || *v == "auto") return std::nullopt;
  const double r = cfg.get_double(key, 0.0);
  if (!(r >= 0.0)) throw ConfigError(key + " must be >= 0 or 'auto'");
  return r;
}

std::size_t positive_size(const Config& cfg, const std::string& key, std::size_t fallback) {
  const auto v = cfg.get_int(key, static_cast<std::int64_t>(fallback));
  if (v <= 0) throw ConfigError(key + " must be a positive integer");
  return static_cast<std::size_t>(v);
}

double positive_double(const Config& cfg, const std::string& key, double fallback) {
  const double v = cfg.get_double(key, fallback);
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(key + " must be positive");
  return v;
}

double nonnegative_double(const Config& cfg, const std::string& key, double fallback) {
  const double v = cfg.get_double(key, fallback);
  if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(key + " must be >= 0");
  return v;
}

InnerSolver parse_inner(const std::string& s) {
  if (s == "flow") return InnerSolver::flow;
  if (s == "dtpnn-explicit") return InnerSolver::dtpnn_explicit;
  if (s == "dtpnn-armijo") return InnerSolver::dtpnn_armijo;
  if (s == "dtpnn-semiimplicit") return InnerSolver::dtpnn_semi_implicit;
  throw ConfigError("swarm.inner: unknown inner solver '" + s + "'");
}

using Clock = std::chrono::steady_clock;

// Collects trace rows, keeps solver time apart from bookkeeping and enforces
// the wall-clock and target-error budgets.
class Recorder {
 public:
  Recorder(const RunConfig& cfg, const DenseTensor& t)
      : cfg_(cfg), t_(t), norm_(frobenius_norm(t)), resumed_(Clock::now()) {}

  bool observe(std::size_t iter, const KruskalModel& m, std::optional<double> diversity = std::nullopt) {
    pause();
    last_model_ = m;
    last_iter_ = iter;
    last_diversity_ = diversity;
    const bool row = iter % cfg_.stride == 0;
    bool keep_going = true;
    if (row || cfg_.target_error > 0.0) {
      const double rel = relative_error(t_, m);
      if (row) push(iter, rel, diversity);
      if (cfg_.target_error > 0.0 && rel <= cfg_.target_error) {
        stop_reason_ = "target_error";
        keep_going = false;
      }
    }
    if (keep_going && cfg_.wall_ms > 0.0 && solver_ms_ >= cfg_.wall_ms) {
      stop_reason_ = "wall_ms";
      keep_going = false;
    }
    resume();
    return keep_going;
  }

  void finish(RunRecord& rec) {
    pause();
    if (rows_.empty() || rows_.back().iter != last_iter_)
      push(last_iter_, relative_error(t_, last_model_), last_diversity_);
    rec.rows = std::move(rows_);
    rec.final_model = last_model_;
    rec.iterations = last_iter_;
    rec.final_error = rec.rows.back().rel_error;
    rec.best_error = rec.final_error;
    for (const auto& r : rec.rows) rec.best_error = std::min(rec.best_error, r.rel_error);
    rec.total_wall_ms = cfg_.wall_clock ? solver_ms_ : 0.0;
  }

  const std::string& stop_reason() const { return stop_reason_; }
  std::size_t last_iter() const { return last_iter_; }

 private:
  void pause() {
    solver_ms_ += std::chrono::duration<double, std::milli>(Clock::now() - resumed_).count();
  }
  void resume() { resumed_ = Clock::now(); }
  void push(std::size_t iter, double rel, std::optional<double> diversity) {
    TraceRow r;
    r.iter = iter;
    r.rel_error = rel;
    const double abs_err = rel * norm_;
    r.objective = 0.5 * abs_err * abs_err;
    r.wall_ms = cfg_.wall_clock ? solver_ms_ : 0.0;
    r.diversity = diversity;
    rows_.push_back(r);
  }

  const RunConfig& cfg_;
  const DenseTensor& t_;
  double norm_;
  Clock::time_point resumed_;
  double solver_ms_ = 0.0;
  std::vector<TraceRow> rows_;
  KruskalModel last_model_;
  std::size_t last_iter_ = 0;
  std::optional<double> last_diversity_;
  std::string stop_reason_;
};

InnerConfig inner_from(const RunConfig& cfg) {
  InnerConfig in = cfg.swarm.inner;
  in.precondition = in.kind == InnerSolver::flow ? cfg.flow_precondition : cfg.dtpnn_precondition;
  in.ridge = in.kind == InnerSolver::flow ? cfg.flow_ridge : cfg.dtpnn_ridge;
  in.epsilon = cfg.flow_epsilon;
  in.step = cfg.flow_step;
  in.jitter_epsilon = cfg.flow_jitter_epsilon;
  in.lambda = cfg.dtpnn_lambda;
  in.armijo_alpha = cfg.dtpnn_alpha;
  in.armijo_beta = cfg.dtpnn_beta;
  in.form = cfg.dtpnn_form;
  return in;
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) c = '-';
  return s;
}

std::string fixed(double v, const char* fmt = "%.6e") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

}  // namespace

Algorithm parse_algorithm(const std::string& name) {
  if (name == "cno") return Algorithm::cno;
  if (name == "flow") return Algorithm::flow;
  if (name == "dtpnn-explicit") return Algorithm::dtpnn_explicit;
  if (name == "dtpnn-armijo") return Algorithm::dtpnn_armijo;
  if (name == "dtpnn-semiimplicit") return Algorithm::dtpnn_semi_implicit;
  if (name == "barrier-flow") return Algorithm::barrier_flow;
  if (name == "hals") return Algorithm::hals;
  if (name == "mur") return Algorithm::mur;
  throw ConfigError("unknown algorithm '" + name + "'");
}

std::string_view algorithm_name(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::cno: return "cno";
    case Algorithm::flow: return "flow";
    case Algorithm::dtpnn_explicit: return "dtpnn-explicit";
    case Algorithm::dtpnn_armijo: return "dtpnn-armijo";
    case Algorithm::dtpnn_semi_implicit: return "dtpnn-semiimplicit";
    case Algorithm::barrier_flow: return "barrier-flow";
    case Algorithm::hals: return "hals";
    case Algorithm::mur: return "mur";
  }
  return "?";
}

RunConfig RunConfig::from(const Config& cfg) {
  // Variant sections are validated when compare() lays them over the base.
  for (const auto& [k, v] : cfg.entries())
    if (k.rfind("variant.", 0) != 0 && !known_keys().count(k)) throw ConfigError("unknown config key '" + k + "'");

  RunConfig rc;
  rc.source = cfg;
  rc.seed = cfg.get_uint("seed", 0);
  rc.threads = positive_size(cfg, "threads", 1);

  rc.kind = cfg.get_string("problem.kind", rc.kind);
  if (cfg.contains("problem.seed")) rc.problem_seed = cfg.get_uint("problem.seed", 0);
  rc.tensor_file = cfg.get_string("problem.file", "");
  if (cfg.contains("problem.snr_db")) rc.snr_db = cfg.get_double("problem.snr_db", 0.0);

  rc.algorithm = parse_algorithm(cfg.get_string("algorithm.name", "flow"));
  rc.rank = static_cast<std::size_t>(cfg.get_uint("algorithm.rank", 0));

  rc.flow_step = positive_double(cfg, "flow.step", rc.flow_step);
  rc.flow_epsilon = positive_double(cfg, "flow.epsilon", rc.flow_epsilon);
  rc.flow_precondition = cfg.get_bool("flow.precondition", rc.flow_precondition);
  rc.flow_ridge = ridge_value(cfg, "flow.ridge");
  rc.flow_tol = positive_double(cfg, "flow.tol", rc.flow_tol);
  rc.flow_jitter_epsilon = cfg.get_bool("flow.jitter_epsilon", rc.flow_jitter_epsilon);
  if (rc.flow_step > (rc.flow_jitter_epsilon ? 0.5 : 1.0) * rc.flow_epsilon)
    throw ConfigError("flow.step must not exceed the smallest time constant");

  rc.barrier.gamma = nonnegative_double(cfg, "barrier.gamma", rc.barrier.gamma);
  const std::string integrator = cfg.get_string("barrier.integrator", "euler");
  if (integrator == "euler")
    rc.barrier_integrator = Integrator::euler;
  else if (integrator == "rk4")
    rc.barrier_integrator = Integrator::rk4;
  else
    throw ConfigError("barrier.integrator must be euler or rk4");
  rc.barrier_decay_every = static_cast<std::size_t>(cfg.get_uint("barrier.decay_every", 0));
  rc.barrier_decay_factor = positive_double(cfg, "barrier.decay_factor", rc.barrier_decay_factor);

  rc.dtpnn_lambda = positive_double(cfg, "dtpnn.lambda", rc.dtpnn_lambda);
  rc.dtpnn_alpha = positive_double(cfg, "dtpnn.alpha", rc.dtpnn_alpha);
  rc.dtpnn_beta = positive_double(cfg, "dtpnn.beta", rc.dtpnn_beta);
  if (rc.dtpnn_alpha >= 1.0 || rc.dtpnn_beta >= 1.0) throw ConfigError("dtpnn.alpha and dtpnn.beta must lie in (0, 1)");
  rc.dtpnn_precondition = cfg.get_bool("dtpnn.precondition", rc.dtpnn_precondition);
  rc.dtpnn_ridge = ridge_value(cfg, "dtpnn.ridge");
  const std::string form = cfg.get_string("dtpnn.form", "corrected");
  if (form == "corrected")
    rc.dtpnn_form = SemiImplicitForm::corrected;
  else if (form == "literal")
    rc.dtpnn_form = SemiImplicitForm::literal;
  else
    throw ConfigError("dtpnn.form must be corrected or literal");
  rc.dtpnn_tol = positive_double(cfg, "dtpnn.tol", rc.dtpnn_tol);
  SwarmConfig& sw = rc.swarm;
  sw.q = positive_size(cfg, "swarm.q", sw.q);
  sw.alpha = cfg.get_double("swarm.alpha", sw.alpha);
  if (!(sw.alpha >= 0.0 && sw.alpha <= 1.0)) throw ConfigError("swarm.alpha must lie in [0, 1]");
  sw.beta1 = nonnegative_double(cfg, "swarm.beta1", sw.beta1);
  sw.beta2 = nonnegative_double(cfg, "swarm.beta2", sw.beta2);
  sw.diversity_threshold = nonnegative_double(cfg, "swarm.diversity_threshold", sw.diversity_threshold);
  sw.epsilon_stop = nonnegative_double(cfg, "swarm.epsilon_stop", sw.epsilon_stop);
  sw.mutation = cfg.get_bool("swarm.mutation", sw.mutation);
  sw.inner.kind = parse_inner(cfg.get_string("swarm.inner", "flow"));
  sw.inner.tol = positive_double(cfg, "swarm.inner_tol", sw.inner.tol);
  sw.inner.max_steps = positive_size(cfg, "swarm.inner_max_steps", sw.inner.max_steps);

  const bool projected_dtpnn =
      rc.algorithm == Algorithm::dtpnn_explicit || rc.algorithm == Algorithm::dtpnn_armijo ||
      (rc.algorithm == Algorithm::cno &&
       (sw.inner.kind == InnerSolver::dtpnn_explicit || sw.inner.kind == InnerSolver::dtpnn_armijo));
  if (projected_dtpnn && rc.dtpnn_lambda > 1.0)
    throw ConfigError("dtpnn.lambda must not exceed 1 for projected steps");

  rc.max_iters = positive_size(cfg, "budget.max_iters", rc.max_iters);
  rc.wall_ms = nonnegative_double(cfg, "budget.wall_ms", rc.wall_ms);
  rc.target_error = nonnegative_double(cfg, "budget.target_error", rc.target_error);

  rc.name = cfg.get_string("output.name", "");
  rc.wall_clock = cfg.get_bool("output.wall_clock", rc.wall_clock);
  rc.stride = positive_size(cfg, "output.stride", rc.stride);
  rc.gnuplot = cfg.get_bool("output.gnuplot", rc.gnuplot);
  if (rc.name.empty()) rc.name = std::string(algorithm_name(rc.algorithm)) + "_" + rc.problem_label();
  rc.name = sanitize(rc.name);
  return rc;
}

std::string RunConfig::problem_label() const {
  return tensor_file.empty() ? sanitize(kind) : sanitize(tensor_file.stem().string());
}

LoadedProblem load_problem(const RunConfig& cfg) {
  LoadedProblem out;
  if (!cfg.tensor_file.empty()) {
    out.tensor = load_tensor(cfg.tensor_file);
    if (cfg.rank == 0) throw ConfigError("algorithm.rank is required with problem.file");
    out.rank = cfg.rank;
    return out;
  }
  Problem p;
  try {
    p = gen_problem(cfg.kind, cfg.problem_seed.value_or(cfg.seed), cfg.snr_db);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  out.tensor = std::move(p.tensor);
  out.rank = cfg.rank == 0 ? p.truth.rank() : cfg.rank;
  return out;
}

RunRecord run(const RunConfig& cfg) {
  const LoadedProblem p = load_problem(cfg);
  return run(cfg, p.tensor, p.rank);
}

RunRecord run(const RunConfig& cfg, const DenseTensor& t, std::size_t rank) {
  RunRecord rec;
  rec.cfg = cfg;
  Recorder recorder(cfg, t);
  KruskalModel init = initial_model(t, rank, cfg.seed, 0);
  recorder.observe(0, init);
  const auto stopped = [&](bool converged) {
    if (!recorder.stop_reason().empty()) return recorder.stop_reason();
    return std::string(converged ? "converged" : "max_iters");
  };

  try {
    switch (cfg.algorithm) {
      case Algorithm::flow: {
        FlowState s;
        s.time_constants.assign(init.order(), cfg.flow_epsilon);
        s.model = init;
        s.step = cfg.flow_step;
        s.precondition = cfg.flow_precondition;
        s.ridge = cfg.flow_ridge;
        const auto r = solve_to_equilibrium(t, std::move(s), cfg.flow_tol, cfg.max_iters,
                                            [&](const FlowState& st) { return recorder.observe(st.steps, st.model); });
        rec.termination = stopped(r.converged);
        break;
      }
      case Algorithm::barrier_flow: {
        FlowState s;
        s.time_constants.assign(init.order(), cfg.flow_epsilon);
        s.model = init;
        s.step = cfg.flow_step;
        s.precondition = cfg.flow_precondition;
        s.ridge = cfg.flow_ridge;
        const auto r = solve_barrier_flow(t, std::move(s), cfg.barrier, cfg.flow_tol, cfg.max_iters,
                                          cfg.barrier_integrator, cfg.barrier_decay_every,
                                          cfg.barrier_decay_factor,
                                          [&](const FlowState& st) { return recorder.observe(st.steps, st.model); });
        rec.termination = stopped(r.converged);
        break;
      }
      case Algorithm::dtpnn_explicit:
      case Algorithm::dtpnn_armijo:
      case Algorithm::dtpnn_semi_implicit: {
        DtpnnState s = DtpnnState::with_defaults(init);
        s.lambdas.assign(init.order(), cfg.dtpnn_lambda);
        s.armijo_alpha = cfg.dtpnn_alpha;
        s.armijo_beta = cfg.dtpnn_beta;
        s.precondition = cfg.dtpnn_precondition;
        s.ridge = cfg.dtpnn_ridge;
        s.form = cfg.dtpnn_form;
        s.record_history = false;
        s.stall_tol = cfg.dtpnn_tol;
        const DtpnnMethod m = cfg.algorithm == Algorithm::dtpnn_explicit ? DtpnnMethod::explicit_jacobi
                              : cfg.algorithm == Algorithm::dtpnn_armijo ? DtpnnMethod::gauss_seidel_armijo
                                                                         : DtpnnMethod::semi_implicit;
        const auto r = run_dtpnn(t, std::move(s), m, cfg.dtpnn_tol, cfg.max_iters,
                                 [&](const DtpnnState& st) { return recorder.observe(st.iter, st.model); });
        rec.termination = stopped(r.converged);
        break;
      }
      case Algorithm::hals:
      case Algorithm::mur: {
        KruskalModel m = init;
        Rng rng = make_rng(cfg.seed, 0, 0, 0x68616c73);
        for (std::size_t i = 1; i <= cfg.max_iters; ++i) {
          m = cfg.algorithm == Algorithm::hals ? hals_sweep(t, std::move(m), rng) : mur_sweep(t, std::move(m));
          if (!simd::active().all_finite(flatten(m))) throw DivergenceError(i, "non-finite factors");
          if (!recorder.observe(i, m)) break;
        }
        rec.termination = stopped(false);
        break;
      }
      case Algorithm::cno: {
        SwarmConfig sc = cfg.swarm;
        sc.k_max = cfg.max_iters;
        sc.rank = rank;
        sc.seed = cfg.seed;
        sc.threads = cfg.threads;
        sc.inner = inner_from(cfg);
        const auto r = cno_run(t, sc, [&](const SwarmIteration& it, const KruskalModel& best) {
          return recorder.observe(it.k, best, it.diversity);
        });
        rec.swarm_trace = r.trace;
        rec.termination = r.termination == "observer" ? recorder.stop_reason() : r.termination;
        break;
      }
    }
  } catch (const DivergenceError& e) {
    rec.diverged = true;
    rec.termination = std::string("diverged: ") + e.what();
  } catch (const StallError& e) {
    rec.diverged = true;
    rec.termination = std::string("stalled: ") + e.what();
  } catch (const SingularSystemError& e) {
    rec.diverged = true;
    rec.termination = std::string("diverged: ") + e.what();
  }
  recorder.finish(rec);
  return rec;
}

std::string trace_csv(const RunRecord& rec) {
  std::string out = "iter,objective,rel_error,wall_ms,diversity\n";
  for (const auto& r : rec.rows) {
    out += std::to_string(r.iter) + ',' + format_double(r.objective) + ',' + format_double(r.rel_error) +
           ',' + format_double(r.wall_ms) + ',' + (r.diversity ? format_double(*r.diversity) : "") + '\n';
  }
  return out;
}

std::string summary_text(const RunRecord& rec) {
  std::ostringstream os;
  os << "algorithm = " << algorithm_name(rec.cfg.algorithm) << '\n'
     << "problem = " << rec.cfg.problem_label() << '\n'
     << "seed = " << rec.cfg.seed << '\n'
     << "rank = " << rec.final_model.rank() << '\n'
     << "final_rel_error = " << format_double(rec.final_error) << '\n'
     << "best_rel_error = " << format_double(rec.best_error) << '\n'
     << "iterations = " << rec.iterations << '\n'
     << "termination = " << rec.termination << '\n'
     << "wall_ms = " << format_double(rec.total_wall_ms) << '\n'
     << "threads = " << rec.cfg.threads << '\n';
  for (const auto& [k, v] : rec.cfg.source.entries()) os << "config." << k << " = " << v << '\n';
  return os.str();
}

std::string gnuplot_script(std::span<const std::string> csv_files, const std::string& title) {
  std::ostringstream os;
  os << "set datafile separator ','\n"
     << "set logscale y\n"
     << "set xlabel 'iteration'\n"
     << "set ylabel 'relative error'\n"
     << "set title '" << title << "'\n"
     << "set key outside\n"
     << "plot";
  for (std::size_t i = 0; i < csv_files.size(); ++i)
    os << (i ? ", \\\n    " : " ") << "'" << csv_files[i] << "' using 1:3 with lines title '" << csv_files[i] << "'";
  os << '\n';
  return os.str();
}

std::filesystem::path output_root() {
  const char* env = std::getenv("NEUROCPD_OUT");
  return env && *env ? std::filesystem::path(env) : std::filesystem::current_path();
}

std::filesystem::path write_run_outputs(const RunRecord& rec, const std::filesystem::path& dir) {
  const std::string tag = "seed" + std::to_string(rec.cfg.seed);
  const auto csv = dir / ("trace_" + tag + ".csv");
  write_file_atomic(csv, trace_csv(rec));
  write_file_atomic(dir / ("summary_" + tag + ".txt"), summary_text(rec));
  if (rec.final_model.order() > 0) save_model(dir / ("model_" + tag + ".txt"), rec.final_model);
  if (rec.cfg.gnuplot) {
    std::vector<std::string> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
      if (e.path().extension() == ".csv" && e.path().filename().string().rfind("trace_", 0) == 0)
        files.push_back(e.path().filename().string());
    std::sort(files.begin(), files.end());
    write_file_atomic(dir / "plot.gp", gnuplot_script(files, rec.cfg.name));
  }
  return csv;
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

CompareResult compare(const Config& cfg, std::span<const std::uint64_t> seeds,
                      const std::optional<std::filesystem::path>& out_dir) {
  if (seeds.empty()) throw ConfigError("compare: no seeds");
  std::vector<std::string> names = cfg.variants();
  const bool base_only = names.empty();
  if (base_only) names.push_back(std::string(algorithm_name(RunConfig::from(cfg).algorithm)));

  // Validate every variant before running anything.
  for (const auto& name : names) RunConfig::from(base_only ? cfg : cfg.variant(name));

  CompareResult res;
  for (const auto& name : names) {
    CompareRow row;
    row.variant = name;
    std::vector<double> finals;
    for (std::uint64_t seed : seeds) {
      Config c = base_only ? cfg : cfg.variant(name);
      c.set("seed", std::to_string(seed));
      const RunConfig rc = RunConfig::from(c);
      const RunRecord rec = run(rc);
      ++row.runs;
      if (rec.diverged)
        ++row.failures;
      else
        finals.push_back(rec.final_error);
      if (out_dir) write_run_outputs(rec, *out_dir / sanitize(name));
    }
    if (!finals.empty()) {
      row.median = median(finals);
      row.min = *std::min_element(finals.begin(), finals.end());
      row.max = *std::max_element(finals.begin(), finals.end());
    } else {
      row.median = row.min = row.max = std::numeric_limits<double>::quiet_NaN();
    }
    res.total_runs += row.runs;
    res.total_failures += row.failures;
    res.rows.push_back(row);
  }
  if (out_dir) {
    write_file_atomic(*out_dir / "compare.csv", compare_csv(res));
    write_file_atomic(*out_dir / "compare.txt", compare_table(res));
  }
  return res;
}

std::string compare_csv(const CompareResult& res) {
  std::string out = "variant,runs,failures,median_rel_error,min_rel_error,max_rel_error\n";
  for (const auto& r : res.rows)
    out += r.variant + ',' + std::to_string(r.runs) + ',' + std::to_string(r.failures) + ',' +
           format_double(r.median) + ',' + format_double(r.min) + ',' + format_double(r.max) + '\n';
  return out;
}

std::string compare_table(const CompareResult& res) {
  std::size_t width = 7;
  for (const auto& r : res.rows) width = std::max(width, r.variant.size());
  std::ostringstream os;
  const auto pad = [&](const std::string& s) { return s + std::string(width - std::min(width, s.size()), ' '); };
  os << pad("variant") << "  runs  fail  median        min           max\n";
  for (const auto& r : res.rows) {
    char counts[32];
    std::snprintf(counts, sizeof counts, "%6zu%6zu", r.runs, r.failures);
    os << pad(r.variant) << counts << "  " << fixed(r.median) << "  " << fixed(r.min) << "  " << fixed(r.max)
       << '\n';
  }
  return os.str();
}

}  // namespace neurocpd::bench
