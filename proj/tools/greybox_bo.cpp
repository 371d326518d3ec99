#include "greybox/harness.hpp"
#include "greybox/manifest.hpp"
#include "greybox/problems.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

int cmd_run(const std::string& manifest_path, const std::string& out, bool dump_state, bool dump_ledger) {
  const greybox::RunManifest m = greybox::load_manifest(manifest_path);
  greybox::RunOptions opts;
  opts.out_dir = out;
  opts.dump_state = dump_state;
  opts.dump_ledger = dump_ledger;
  opts.log = &std::cerr;
  const greybox::RunReport rep = greybox::run_manifest(m, opts);
  std::cout << "wrote " << rep.out_dir << "/results.csv (" << rep.trials.size() << " trials)\n";
  if (rep.aborted > 0) {
    std::cerr << rep.aborted << " trial(s) aborted; partial results were written\n";
    return 1;
  }
  return 0;
}

int cmd_moments(const std::string& problem_id, int points, int train, const std::vector<int>& samples,
                std::uint64_t seed, const std::string& out) {
  greybox::ParityOptions opts;
  opts.points = points;
  opts.train_points = train;
  opts.samples = samples;
  opts.seed = seed;
  const auto rows = greybox::moment_parity(greybox::make_registered(problem_id), opts);
  const std::filesystem::path dir(out.empty() ? "." : out);
  std::filesystem::create_directories(dir);
  std::ofstream os(dir / "parity.csv", std::ios::binary);
  greybox::write_parity_csv(os, rows, samples);
  std::cout << "wrote " << (dir / "parity.csv").string() << " (" << rows.size() << " points)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grey-box Bayesian optimization benchmarks"};
  app.require_subcommand(1);

  std::string out;
  bool dump_state = false;
  bool dump_ledger = false;
  app.add_option("--out", out, "Output directory (overrides the manifest)");
  app.add_flag("--dump-state", dump_state, "Write per-trial sample histories and counters as JSON");
  app.add_flag("--dump-ledger", dump_ledger, "Write the cost ledger of every sampled design (pbr)");

  auto* run = app.add_subcommand("run", "Run the trials of a manifest");
  std::string manifest;
  run->add_option("manifest", manifest, "Manifest file")->required()->check(CLI::ExistingFile);

  auto* moments = app.add_subcommand("moments", "Compare linearized and sampled moments");
  std::string problem;
  int points = 500;
  int train = 40;
  std::vector<int> samples{10, 100, 1000};
  std::uint64_t seed = 0;
  moments->add_option("problem", problem, "Registered problem id")->required();
  moments->add_option("--points", points, "Evaluation points")->check(CLI::PositiveNumber);
  moments->add_option("--train", train, "Training design size")->check(CLI::Range(2, 100000));
  moments->add_option("--samples", samples, "Monte Carlo sample counts")->delimiter(',')->check(CLI::Range(2, 100000000));
  moments->add_option("--seed", seed, "Seed");

  app.add_subcommand("list", "List registered problems");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(manifest, out, dump_state, dump_ledger);
    if (*moments) return cmd_moments(problem, points, train, samples, seed, out);
    greybox::print_problem_list(std::cout);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
