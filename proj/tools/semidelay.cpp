// Command-line front end: run, validate, corpus, sweep.
#include "semidelay/runner.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace semidelay;

  CLI::App app{"Delay-system consensus simulator and verifier"};
  app.require_subcommand(1);

  std::string run_file, run_out;
  auto* run = app.add_subcommand("run", "Integrate a scenario and write its outputs");
  run->add_option("file", run_file, "Scenario file")->required();
  auto* run_out_opt = run->add_option("--out", run_out, "Output directory");
  std::string run_out_pos;
  run->add_option("out_dir", run_out_pos, "Output directory (positional form)")->excludes(run_out_opt);

  std::string validate_file;
  auto* validate = app.add_subcommand("validate", "Check network, delays and history coverage");
  validate->add_option("file", validate_file, "Scenario file")->required();

  std::string corpus_out;
  double corpus_step = 0.0;
  unsigned corpus_jobs = 1;
  auto* corpus = app.add_subcommand("corpus", "Run every built-in scenario");
  corpus->add_option("--out", corpus_out, "Output directory")->required();
  auto* step_opt = corpus->add_option("--step", corpus_step, "Override the integration step");
  corpus->add_option("--jobs", corpus_jobs, "Parallel runs")->check(CLI::Range(1u, 256u));

  SweepCommand sweep_cmd;
  std::string sweep_file, sweep_out;
  std::uint64_t sweep_seed = 0;
  auto* sweep = app.add_subcommand("sweep", "Integrate random constant histories");
  sweep->add_option("file", sweep_file, "Scenario file")->required();
  sweep->add_option("--count", sweep_cmd.count, "Number of runs")->required();
  sweep->add_option("--amplitude", sweep_cmd.amplitude, "History amplitude")->required();
  auto* seed_opt = sweep->add_option("--seed", sweep_seed, "Master seed (default: the scenario seed)");
  sweep->add_option("--out", sweep_out, "Output directory")->required();
  sweep->add_option("--jobs", sweep_cmd.jobs, "Parallel runs")->check(CLI::Range(1u, 256u));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_input_error;
  }

  if (*run) {
    const std::string out = run_out.empty() ? run_out_pos : run_out;
    if (out.empty()) {
      std::cerr << "error: run needs an output directory (--out DIR)\n";
      return exit_input_error;
    }
    return command_run(run_file, out, std::cout, std::cerr);
  }
  if (*validate) return command_validate(validate_file, std::cout, std::cerr);
  if (*corpus) {
    std::optional<double> step;
    if (*step_opt) step = corpus_step;
    return command_corpus(corpus_out, step, corpus_jobs, std::cout, std::cerr);
  }
  sweep_cmd.scenario_path = sweep_file;
  sweep_cmd.out_dir = sweep_out;
  if (*seed_opt) sweep_cmd.seed = sweep_seed;
  return command_sweep(sweep_cmd, std::cout, std::cerr);
}
