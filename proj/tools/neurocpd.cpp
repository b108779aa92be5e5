// neurocpd: generate problems, run solvers from config files, compare variants.
//
//   neurocpd run --config <file> [--set key=value]...
//   neurocpd compare --config <file> --seeds a..b [--set key=value]...
//   neurocpd gen --kind <k> --seed <s> --out <path> [--snr-db <x>]
//
// Outputs go below $NEUROCPD_OUT (default: current directory).
// Exit codes: 0 success, 1 configuration error, 2 every run diverged.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "neurocpd/bench/config.hpp"
#include "neurocpd/bench/runner.hpp"
#include "neurocpd/datagen.hpp"
#include "neurocpd/simd/kernels.hpp"
#include "neurocpd/tensor_io.hpp"

namespace {

constexpr int kConfigError = 1;
constexpr int kAllDiverged = 2;

neurocpd::bench::Config load_config(const std::string& path, const std::vector<std::string>& overrides) {
  auto cfg = neurocpd::bench::Config::load(path);
  for (const auto& o : overrides) cfg.apply_override(o);
  return cfg;
}

int cmd_run(const std::string& config, const std::vector<std::string>& overrides) {
  using namespace neurocpd::bench;
  const RunConfig rc = RunConfig::from(load_config(config, overrides));
  const RunRecord rec = run(rc);
  const auto dir = output_root() / rc.name;
  const auto csv = write_run_outputs(rec, dir);
  std::cout << algorithm_name(rc.algorithm) << " on " << rc.problem_label() << " seed " << rc.seed
            << ": final rel_error " << neurocpd::format_double(rec.final_error) << " after "
            << rec.iterations << " iterations (" << rec.termination << ")\n"
            << "trace: " << csv.string() << '\n';
  return rec.diverged ? kAllDiverged : 0;
}

int cmd_compare(const std::string& config, const std::string& seeds,
                const std::vector<std::string>& overrides) {
  using namespace neurocpd::bench;
  const Config cfg = load_config(config, overrides);
  const auto seed_list = parse_seeds(seeds);
  std::string name = cfg.get_string("output.name", "");
  if (name.empty()) name = std::filesystem::path(config).stem().string();
  const auto dir = output_root() / name;
  const CompareResult res = compare(cfg, seed_list, dir);
  std::cout << compare_table(res) << "written: " << (dir / "compare.csv").string() << '\n';
  return res.total_runs > 0 && res.total_failures == res.total_runs ? kAllDiverged : 0;
}

int cmd_gen(const std::string& kind, std::uint64_t seed, const std::string& out, const std::optional<double>& snr) {
  const auto p = neurocpd::gen_problem(kind, seed, snr);
  neurocpd::save_problem(out, p);
  std::cout << "wrote " << out << " (" << p.kind << ", seed " << p.seed << ", rank " << p.truth.rank() << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonnegative CPD by collaborative neurodynamic optimization"};
  app.require_subcommand(1);
  std::string isa;
  app.add_option("--isa", isa, "Kernel instruction set: scalar, avx2 or neon (default: best available)");

  std::string config;
  std::vector<std::string> overrides;
  auto* run = app.add_subcommand("run", "Run one algorithm on one problem");
  run->add_option("--config", config, "Config file")->required();
  run->add_option("--set", overrides, "Override a config key: section.key=value");

  std::string seeds;
  auto* cmp = app.add_subcommand("compare", "Run all variants over a seed range and tabulate");
  cmp->add_option("--config", config, "Config file")->required();
  cmp->add_option("--seeds", seeds, "Seed range a..b or list a,b,c")->required();
  cmp->add_option("--set", overrides, "Override a config key: section.key=value");

  std::string kind;
  std::uint64_t seed = 0;
  std::string out;
  std::optional<double> snr;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic problem");
  gen->add_option("--kind", kind, "difficult9, difficult9_R11..16, medium70, caseI, caseII, lowrank:IxJxK:R")
      ->required();
  gen->add_option("--seed", seed, "Generator seed")->required();
  gen->add_option("--out", out, "Tensor path (.bin for binary, text otherwise)")->required();
  gen->add_option("--snr-db", snr, "Add uniform noise at this SNR (dB)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (!isa.empty()) {
      using neurocpd::simd::Isa;
      if (isa == "scalar")
        neurocpd::simd::select(Isa::scalar);
      else if (isa == "avx2")
        neurocpd::simd::select(Isa::avx2);
      else if (isa == "neon")
        neurocpd::simd::select(Isa::neon);
      else
        throw neurocpd::bench::ConfigError("unknown --isa '" + isa + "'");
    }
    if (*run) return cmd_run(config, overrides);
    if (*cmp) return cmd_compare(config, seeds, overrides);
    if (*gen) return cmd_gen(kind, seed, out, snr);
  } catch (const neurocpd::bench::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const neurocpd::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return 0;
}
