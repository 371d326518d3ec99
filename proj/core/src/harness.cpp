#include "greybox/harness.hpp"

#include "greybox/chemproc.hpp"
#include "greybox/pbr.hpp"
#include "greybox/problems.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <random>
#include <thread>

namespace greybox {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// JSON has no NaN; non-finite values become null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

Vector uniform_point(const BoxDomain& box, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector t(box.dim());
  for (Eigen::Index i = 0; i < t.size(); ++i) t[i] = u(rng);
  return box.from_unit(t);
}

Vector grid_point(const BoxDomain& box, int levels, long index) {
  Vector x(box.dim());
  for (Eigen::Index i = box.dim() - 1; i >= 0; --i) {
    const long k = index % levels;
    index /= levels;
    x[i] = box.lower[i] + box.width()[i] * static_cast<double>(k) / (levels - 1);
  }
  return x;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
  out << text;
}

json stream_json(const chemproc::Stream& s) {
  return {{"n", std::vector<double>(s.n.begin(), s.n.end())}, {"T", s.T}, {"P", s.P}};
}

json chemproc_state_json(const Vector& x) {
  const chemproc::ProcessState st = chemproc::simulate(x).state;
  return {{"feed_A", stream_json(st.feed_A)},
          {"feed_B", stream_json(st.feed_B)},
          {"reactor_in", stream_json(st.reactor_in)},
          {"reactor_out", stream_json(st.reactor_out)},
          {"product", stream_json(st.product)},
          {"vapor", stream_json(st.vapor)},
          {"purge", stream_json(st.purge)},
          {"recycle", stream_json(st.recycle)},
          {"extent", st.extent},
          {"Q_MJ_per_hr", std::vector<double>(st.Q.begin(), st.Q.end())},
          {"W_kW", std::vector<double>(st.W.begin(), st.W.end())},
          {"tear_passes", st.tear_passes},
          {"tear_residual", st.tear_residual}};
}

json state_json(const TrialRecord& r, const std::string& problem_id) {
  json samples = json::array();
  for (const SampleRecord& s : r.result.samples) {
    json entry = {{"iteration", s.iteration},
                  {"x", std::vector<double>(s.x.data(), s.x.data() + s.x.size())},
                  {"y", std::vector<double>(s.y.data(), s.y.data() + s.y.size())},
                  {"f", number(s.f)},
                  {"best_f", number(s.best_f)},
                  {"gp_calls", s.gp_calls},
                  {"f_evals", s.f_evals}};
    if (problem_id == "chemproc") entry["streams"] = chemproc_state_json(s.x);
    samples.push_back(entry);
  }
  const EvalCounters& c = r.result.counters.detail;
  return {{"algorithm", r.algorithm},
          {"trial", r.trial},
          {"seed", r.result.config.seed},
          {"aborted", r.result.aborted},
          {"error", r.result.error},
          {"counters",
           {{"gp_mean_queries", c.gp_mean_queries},
            {"gp_variance_queries", c.gp_variance_queries},
            {"posterior_draws", c.posterior_draws},
            {"whitebox_evals", c.whitebox_evals},
            {"af_probes", c.af_probes},
            {"system_samples", c.system_samples}}},
          {"opbo_infeasible", r.result.opbo_infeasible},
          {"opbo_collapses", r.result.opbo_collapses},
          {"samples", samples}};
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("GREYBOX_BO_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

std::vector<Vector> initial_design(const RunManifest& m, const CompositeProblem& problem, int trial) {
  std::mt19937_64 rng(derive_seed(m.trial_seed(trial), 30, 0));
  std::vector<Vector> pts;
  if (m.init.kind == InitSpec::Kind::kRandom) {
    for (int i = 0; i < m.init.points; ++i) pts.push_back(uniform_point(problem.design_box, rng));
    return pts;
  }
  long cells = 1;
  for (Eigen::Index i = 0; i < problem.dx(); ++i) cells *= m.init.levels;
  const long first = trial % cells;
  std::uniform_int_distribution<long> pick(0, cells - 2);
  long second = pick(rng);
  if (second >= first) ++second;
  pts.push_back(grid_point(problem.design_box, m.init.levels, first));
  pts.push_back(grid_point(problem.design_box, m.init.levels, second));
  return pts;
}

TrialConfig make_trial_config(const RunManifest& m, const CompositeProblem& problem, Algorithm algorithm,
                              int trial) {
  TrialConfig cfg;
  cfg.algorithm = algorithm;
  cfg.kappa = m.kappa;
  cfg.iterations = m.iterations;
  cfg.mc_samples = m.mc_samples;
  cfg.af_starts = m.af_starts;
  cfg.seed = m.trial_seed(trial);
  cfg.init_points = initial_design(m, problem, trial);
  cfg.problem_id = m.problem;
  cfg.f_star = m.f_star;
  cfg.nu = m.kernel == "matern32" ? Smoothness::kMatern32 : Smoothness::kMatern52;
  cfg.gp_restarts = m.gp_restarts;
  cfg.gp_refit_restarts = m.gp_refit_restarts;
  return cfg;
}

void write_results_csv(std::ostream& os, const CompositeProblem& problem, const std::vector<TrialRecord>& trials) {
  os << "trial,iteration,algorithm";
  for (Eigen::Index i = 0; i < problem.dx(); ++i) os << ",x" << i;
  os << ",f,best_f,regret,gp_calls,f_evals\n";
  for (const TrialRecord& r : trials) {
    for (const SampleRecord& s : r.result.samples) {
      os << r.trial << ',' << s.iteration << ',' << r.algorithm;
      for (Eigen::Index i = 0; i < s.x.size(); ++i) os << ',' << format_double(s.x[i]);
      os << ',' << format_double(s.f) << ',' << format_double(s.best_f) << ',' << format_double(s.regret) << ','
         << s.gp_calls << ',' << s.f_evals << '\n';
    }
  }
}

void write_timing_csv(std::ostream& os, const std::vector<TrialRecord>& trials) {
  os << "trial,iteration,algorithm,iter_seconds\n";
  for (const TrialRecord& r : trials) {
    for (const SampleRecord& s : r.result.samples) {
      os << r.trial << ',' << s.iteration << ',' << r.algorithm << ',' << format_double(s.seconds) << '\n';
    }
  }
}

std::string summary_json(const RunManifest& m, const std::vector<TrialRecord>& trials) {
  json algs = json::object();
  for (const std::string& a : m.algorithms) {
    std::vector<double> best;
    json per_trial = json::array();
    long aborted = 0;
    std::uint64_t gp = 0, fe = 0, samples = 0;
    for (const TrialRecord& r : trials) {
      if (r.algorithm != a) continue;
      const double b = r.result.best_trace.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                   : r.result.best_trace.back();
      if (std::isfinite(b)) best.push_back(b);
      per_trial.push_back(number(b));
      aborted += r.result.aborted ? 1 : 0;
      gp += r.result.counters.gp_posterior_calls;
      fe += r.result.counters.f_evals;
      samples += r.result.counters.system_samples;
    }
    json entry = {{"best_per_trial", per_trial},
                  {"min", number(best.empty() ? NAN : *std::min_element(best.begin(), best.end()))},
                  {"median", number(median(best))},
                  {"max", number(best.empty() ? NAN : *std::max_element(best.begin(), best.end()))},
                  {"aborted_trials", aborted},
                  {"gp_calls", gp},
                  {"f_evals", fe},
                  {"system_samples", samples}};
    if (m.f_star) {
      std::vector<double> final_regret;
      for (double b : best) final_regret.push_back(regret_value(b, *m.f_star));
      entry["final_regret_median"] = number(median(final_regret));
    }
    algs[a] = entry;
  }
  json j = {{"problem", m.problem},
            {"trials", m.trials},
            {"iterations", m.iterations},
            {"f_star", m.f_star ? json(*m.f_star) : json(nullptr)},
            {"algorithms", algs}};
  return j.dump(2) + "\n";
}

RunReport run_manifest(const RunManifest& m, const RunOptions& opts) {
  m.validate();
  const CompositeProblem problem = make_registered(m.problem);
  RunReport report;
  report.out_dir = opts.out_dir.empty() ? m.output : opts.out_dir;

  struct Job {
    Algorithm algorithm;
    int trial;
  };
  std::vector<Job> jobs;
  for (const std::string& a : m.algorithms) {
    for (int t = 0; t < m.trials; ++t) jobs.push_back({parse_algorithm(a), t});
  }
  report.trials.resize(jobs.size());

  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  const auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      const Job& job = jobs[k];
      const auto t0 = std::chrono::steady_clock::now();
      TrialRecord rec;
      rec.algorithm = algorithm_name(job.algorithm);
      rec.trial = job.trial;
      rec.result = run_trial(make_trial_config(m, problem, job.algorithm, job.trial), problem);
      if (opts.log != nullptr) {
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const std::lock_guard<std::mutex> lock(log_mutex);
        *opts.log << rec.algorithm << " trial " << job.trial << ": best "
                  << (rec.result.best_trace.empty() ? NAN : rec.result.best_trace.back()) << " in " << secs << " s"
                  << (rec.result.aborted ? " (aborted: " + rec.result.error + ")" : std::string()) << std::endl;
      }
      report.trials[k] = std::move(rec);
    }
  };
  const int threads = std::min<int>(resolve_threads(opts.threads), static_cast<int>(jobs.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  for (const TrialRecord& r : report.trials) report.aborted += r.result.aborted ? 1 : 0;

  if (!opts.write_files) return report;
  const fs::path dir(report.out_dir);
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "results.csv", std::ios::binary);
    write_results_csv(out, problem, report.trials);
  }
  {
    std::ofstream out(dir / "timing.csv", std::ios::binary);
    write_timing_csv(out, report.trials);
  }
  write_file(dir / "summary.json", summary_json(m, report.trials));
  if (opts.dump_state) {
    fs::create_directories(dir / "state");
    for (const TrialRecord& r : report.trials) {
      write_file(dir / "state" / (r.algorithm + "_trial" + std::to_string(r.trial) + ".json"),
                 state_json(r, m.problem).dump(2) + "\n");
    }
  }
  if (opts.dump_ledger) {
    if (m.problem != "pbr") throw InvalidArgument("--dump-ledger is only available for the pbr problem");
    std::ofstream out(dir / "ledger.jsonl", std::ios::binary);
    for (const TrialRecord& r : report.trials) {
      for (const SampleRecord& s : r.result.samples) {
        const pbr::SimulationResult sim = pbr::simulate(s.x);
        json items = json::object();
        for (const auto& [k, v] : sim.ledger.items()) items[k] = number(v);
        json line = {{"algorithm", r.algorithm}, {"trial", r.trial}, {"iteration", s.iteration},
                     {"msp", number(sim.f)}, {"ledger", items}};
        out << line.dump() << '\n';
      }
    }
  }
  return report;
}

void train_on_random_design(CompositeProblem& problem, int n, std::uint64_t seed) {
  if (n < 2) throw InvalidArgument("train_on_random_design: need at least two points");
  std::mt19937_64 rng(seed);
  std::vector<Vector> xs, ys;
  int attempts = 0;
  while (static_cast<int>(xs.size()) < n) {
    if (++attempts > 20 * n) throw NumericalError("train_on_random_design: sampler keeps failing");
    const Vector x = uniform_point(problem.design_box, rng);
    try {
      Vector y = problem.sampler(x);
      if (!y.allFinite()) continue;
      xs.push_back(x);
      ys.push_back(std::move(y));
    } catch (const NumericalError&) {
      continue;
    }
  }
  TrialConfig cfg;
  train_node_models(problem, xs, ys, cfg, derive_seed(seed, 10, 0));
}

std::vector<ParityRow> moment_parity_trained(const CompositeProblem& trained, const ParityOptions& opts) {
  using Clock = std::chrono::steady_clock;
  std::mt19937_64 rng(derive_seed(opts.seed, 40, 0));
  std::vector<ParityRow> rows;
  rows.reserve(static_cast<std::size_t>(opts.points));
  for (int k = 0; k < opts.points; ++k) {
    ParityRow row;
    row.x = uniform_point(trained.design_box, rng);
    auto t0 = Clock::now();
    const MomentEstimate b = bois_moments(trained, row.x, &row.bois_counters);
    row.t_bois = std::chrono::duration<double>(Clock::now() - t0).count();
    row.m_bois = b.mean;
    row.s_bois = b.stdev;
    for (std::size_t j = 0; j < opts.samples.size(); ++j) {
      EvalCounters c;
      t0 = Clock::now();
      const MomentEstimate mc = mc_moments(trained, row.x, opts.samples[j],
                                           derive_seed(opts.seed, 41, static_cast<std::uint64_t>(k) * 64 + j), &c);
      row.t_mc.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
      row.m_mc.push_back(mc.mean);
      row.s_mc.push_back(mc.stdev);
      row.mc_counters.push_back(c);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<ParityRow> moment_parity(const CompositeProblem& problem, const ParityOptions& opts) {
  CompositeProblem trained = problem;
  train_on_random_design(trained, opts.train_points, opts.seed);
  return moment_parity_trained(trained, opts);
}

void write_parity_csv(std::ostream& os, const std::vector<ParityRow>& rows, const std::vector<int>& samples) {
  const Eigen::Index dx = rows.empty() ? 0 : rows.front().x.size();
  for (Eigen::Index i = 0; i < dx; ++i) os << 'x' << i << ',';
  os << "m_bois,s_bois";
  for (int s : samples) os << ",m_mc_" << s << ",s_mc_" << s;
  os << ",t_bois";
  for (int s : samples) os << ",t_mc_" << s;
  os << '\n';
  for (const ParityRow& r : rows) {
    for (Eigen::Index i = 0; i < dx; ++i) os << format_double(r.x[i]) << ',';
    os << format_double(r.m_bois) << ',' << format_double(r.s_bois);
    for (std::size_t j = 0; j < samples.size(); ++j) {
      os << ',' << format_double(r.m_mc[j]) << ',' << format_double(r.s_mc[j]);
    }
    os << ',' << format_double(r.t_bois);
    for (std::size_t j = 0; j < samples.size(); ++j) os << ',' << format_double(r.t_mc[j]);
    os << '\n';
  }
}

void print_problem_list(std::ostream& os) {
  for (const ProblemEntry& e : problem_registry()) {
    const CompositeProblem p = e.make();
    os << e.id << "  d_x=" << p.dx() << "  d_y=" << p.dy() << "  box=";
    for (Eigen::Index i = 0; i < p.dx(); ++i) {
      os << (i == 0 ? "" : "x") << '[' << p.design_box.lower[i] << ',' << p.design_box.upper[i] << ']';
    }
    os << "  " << e.description << '\n';
  }
}

}  // namespace greybox
