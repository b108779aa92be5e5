#pragma once

// Config-driven experiment runs: problem assembly, one algorithm per run,
// per-iteration traces, CSV/summary/model files and multi-seed comparisons.
//
// Trace CSV columns: iter,objective,rel_error,wall_ms,diversity
//   iter       0 for the initial model, then one row per iteration (every
//              `output.stride` iterations plus the final one); for cno an
//              iteration is one outer swarm iteration
//   objective  1/2 ||X - full(model)||^2, equal to 1/2 (rel_error ||X||)^2
//   rel_error  ||X - full(model)|| / ||X||, recomputed from the model of that row
//   wall_ms    solver time since the start (trace bookkeeping excluded);
//              0 when output.wall_clock = false
//   diversity  swarm diversity for cno, empty otherwise

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "neurocpd/bench/config.hpp"
#include "neurocpd/dtpnn.hpp"
#include "neurocpd/flow.hpp"
#include "neurocpd/objective.hpp"
#include "neurocpd/swarm.hpp"
#include "neurocpd/tensor.hpp"

namespace neurocpd::bench {

enum class Algorithm { cno, flow, dtpnn_explicit, dtpnn_armijo, dtpnn_semi_implicit, barrier_flow, hals, mur };

Algorithm parse_algorithm(const std::string& name);
std::string_view algorithm_name(Algorithm a) noexcept;

struct RunConfig {
  // problem
  std::string kind = "difficult9";
  std::optional<std::uint64_t> problem_seed;  // defaults to `seed`
  std::filesystem::path tensor_file;          // overrides `kind` when set
  std::optional<double> snr_db;

  Algorithm algorithm = Algorithm::flow;
  std::size_t rank = 0;  // 0: rank of the generated ground truth
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  // flow / barrier flow
  double flow_step = 0.5;
  double flow_epsilon = 1.0;
  bool flow_precondition = true;
  std::optional<double> flow_ridge;
  double flow_tol = 1e-10;
  bool flow_jitter_epsilon = false;
  BarrierParams barrier;
  Integrator barrier_integrator = Integrator::euler;
  std::size_t barrier_decay_every = 0;
  double barrier_decay_factor = 0.5;

  // dtpnn
  double dtpnn_lambda = 1.0;
  double dtpnn_alpha = 1e-4;
  double dtpnn_beta = 0.5;
  bool dtpnn_precondition = true;
  std::optional<double> dtpnn_ridge;
  SemiImplicitForm dtpnn_form = SemiImplicitForm::corrected;
  double dtpnn_tol = 1e-10;

  // swarm (k_max comes from max_iters)
  SwarmConfig swarm;

  // budget
  std::size_t max_iters = 1000;
  double wall_ms = 0.0;       // 0: unlimited
  double target_error = 0.0;  // 0: none

  // output
  std::string name;  // output subdirectory; default "<algorithm>_<problem>"
  bool wall_clock = true;
  std::size_t stride = 1;
  bool gnuplot = false;

  Config source;  // snapshot of the settings this was built from

  /// Validates every key; unknown keys and out-of-range values throw ConfigError.
  static RunConfig from(const Config& cfg);
  std::string problem_label() const;
};

struct TraceRow {
  std::size_t iter = 0;
  double objective = 0.0;
  double rel_error = 0.0;
  double wall_ms = 0.0;
  std::optional<double> diversity;
};

struct RunRecord {
  RunConfig cfg;
  std::vector<TraceRow> rows;
  KruskalModel final_model;
  std::string termination;  // converged, max_iters, wall_ms, target_error, epsilon_stop, diverged: ...
  bool diverged = false;
  double final_error = 0.0;
  double best_error = 0.0;
  double total_wall_ms = 0.0;
  std::size_t iterations = 0;
  std::vector<SwarmIteration> swarm_trace;  // cno only
};

/// The problem tensor named by the config and the rank to fit.
struct LoadedProblem {
  DenseTensor tensor;
  std::size_t rank = 0;
};
LoadedProblem load_problem(const RunConfig& cfg);

RunRecord run(const RunConfig& cfg);
RunRecord run(const RunConfig& cfg, const DenseTensor& t, std::size_t rank);

std::string trace_csv(const RunRecord& rec);
std::string summary_text(const RunRecord& rec);
std::string gnuplot_script(std::span<const std::string> csv_files, const std::string& title);

/// $NEUROCPD_OUT, or the current directory.
std::filesystem::path output_root();

/// Writes trace_seed<S>.csv, summary_seed<S>.txt, model_seed<S>.txt (and
/// plot.gp when requested) into `dir`; returns the CSV path.
std::filesystem::path write_run_outputs(const RunRecord& rec, const std::filesystem::path& dir);

struct CompareRow {
  std::string variant;
  std::size_t runs = 0;
  std::size_t failures = 0;  // diverged runs; statistics use the survivors
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct CompareResult {
  std::vector<CompareRow> rows;  // sorted by variant name
  std::size_t total_runs = 0;
  std::size_t total_failures = 0;
};

/// Runs every variant (or the base config alone when there are none) for
/// every seed. With `out_dir`, per-run files go to out_dir/<variant>/ and the
/// table to out_dir/compare.csv and out_dir/compare.txt.
CompareResult compare(const Config& cfg, std::span<const std::uint64_t> seeds,
                      const std::optional<std::filesystem::path>& out_dir = std::nullopt);

std::string compare_csv(const CompareResult& res);
std::string compare_table(const CompareResult& res);

double median(std::vector<double> values);

}  // namespace neurocpd::bench
