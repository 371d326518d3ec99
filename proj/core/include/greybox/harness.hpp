#pragma once

#include "greybox/composite.hpp"
#include "greybox/engine.hpp"
#include "greybox/manifest.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace greybox {

/// %.17g; round-trips doubles and keeps CSV output byte-comparable.
std::string format_double(double v);

/// Worker count: `requested` when positive, else GREYBOX_BO_THREADS, else 1.
int resolve_threads(int requested);

/// Initial design of trial `trial` (shared by all algorithms of a run).
std::vector<Vector> initial_design(const RunManifest& m, const CompositeProblem& problem, int trial);

TrialConfig make_trial_config(const RunManifest& m, const CompositeProblem& problem, Algorithm algorithm,
                              int trial);

struct RunOptions {
  std::string out_dir;  // overrides the manifest's output when non-empty
  int threads = 0;
  bool dump_state = false;
  bool dump_ledger = false;
  bool write_files = true;
  std::ostream* log = nullptr;
};

struct TrialRecord {
  std::string algorithm;
  int trial = 0;
  TrialResult result;
};

struct RunReport {
  std::vector<TrialRecord> trials;  // algorithm-major, manifest order
  int aborted = 0;
  std::string out_dir;
};

/// Runs every (algorithm, trial) pair and writes results.csv, summary.json
/// and timing.csv under the output directory.
RunReport run_manifest(const RunManifest& m, const RunOptions& opts = {});

void write_results_csv(std::ostream& os, const CompositeProblem& problem, const std::vector<TrialRecord>& trials);
void write_timing_csv(std::ostream& os, const std::vector<TrialRecord>& trials);
std::string summary_json(const RunManifest& m, const std::vector<TrialRecord>& trials);

struct ParityOptions {
  int train_points = 40;
  int points = 500;
  std::vector<int> samples{10, 100, 1000};
  std::uint64_t seed = 0;
};

struct ParityRow {
  Vector x;
  double m_bois = 0.0;
  double s_bois = 0.0;
  double t_bois = 0.0;  // seconds
  std::vector<double> m_mc, s_mc, t_mc;
  EvalCounters bois_counters;
  std::vector<EvalCounters> mc_counters;
};

/// Trains node models on a seeded uniform design of the problem's sampler and
/// compares linearized and sampled moments at seeded random designs.
std::vector<ParityRow> moment_parity(const CompositeProblem& problem, const ParityOptions& opts);
/// Same, on an already trained problem.
std::vector<ParityRow> moment_parity_trained(const CompositeProblem& trained, const ParityOptions& opts);
void write_parity_csv(std::ostream& os, const std::vector<ParityRow>& rows, const std::vector<int>& samples);

/// Uniform design of n points drawn with `seed`; designs where the sampler
/// throws are redrawn (at most 20 n attempts).
void train_on_random_design(CompositeProblem& problem, int n, std::uint64_t seed);

/// One line per registered problem with d_x, d_y and the design box.
void print_problem_list(std::ostream& os);

}  // namespace greybox
