#include "greybox/manifest.hpp"

#include "greybox/engine.hpp"
#include "greybox/problems.hpp"
#include "greybox/types.hpp"

#include "json.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace greybox {
namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (allowed.count(key) == 0) throw InvalidArgument("manifest: unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get(const json& j, const char* key, const T& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("manifest: bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

void RunManifest::validate() const {
  (void)find_problem(problem);
  if (algorithms.empty()) throw InvalidArgument("manifest: 'algorithms' must not be empty");
  std::set<std::string> seen;
  for (const std::string& a : algorithms) {
    (void)parse_algorithm(a);
    if (!seen.insert(a).second) throw InvalidArgument("manifest: duplicate algorithm '" + a + "'");
  }
  if (trials < 1) throw InvalidArgument("manifest: 'trials' must be >= 1");
  if (iterations < 1) throw InvalidArgument("manifest: 'iterations' must be >= 1");
  if (!(kappa >= 0.0)) throw InvalidArgument("manifest: 'kappa' must be >= 0");
  if (mc_samples < 2) throw InvalidArgument("manifest: 'mc_samples' must be >= 2");
  if (af_starts < 1) throw InvalidArgument("manifest: 'af_starts' must be >= 1");
  if (init.kind == InitSpec::Kind::kRandom && init.points < 2) {
    throw InvalidArgument("manifest: 'init.points' must be >= 2");
  }
  if (init.kind == InitSpec::Kind::kGridPair && init.levels < 2) {
    throw InvalidArgument("manifest: 'init.levels' must be >= 2");
  }
  if (f_star && *f_star == 0.0) throw InvalidArgument("manifest: 'f_star' must be non-zero");
  if (kernel != "matern32" && kernel != "matern52") {
    throw InvalidArgument("manifest: 'kernel' must be matern32 or matern52");
  }
  if (gp_restarts < 1 || gp_refit_restarts < 0) throw InvalidArgument("manifest: bad GP restart counts");
  if (output.empty()) throw InvalidArgument("manifest: 'output' must not be empty");
}

RunManifest parse_manifest(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("manifest: ") + e.what());
  }
  if (!j.is_object()) throw InvalidArgument("manifest: top level must be an object");
  reject_unknown(j,
                 {"problem", "algorithms", "trials", "iterations", "seed", "kappa", "mc_samples", "af_starts",
                  "init", "f_star", "output", "gp"},
                 "manifest");
  if (!j.contains("problem")) throw InvalidArgument("manifest: missing 'problem'");
  if (!j.contains("algorithms")) throw InvalidArgument("manifest: missing 'algorithms'");

  RunManifest m;
  m.problem = get<std::string>(j, "problem", "");
  m.algorithms = get<std::vector<std::string>>(j, "algorithms", {});
  m.trials = get<int>(j, "trials", m.trials);
  m.iterations = get<int>(j, "iterations", m.iterations);
  m.kappa = get<double>(j, "kappa", m.kappa);
  m.mc_samples = get<int>(j, "mc_samples", m.mc_samples);
  m.af_starts = get<int>(j, "af_starts", m.af_starts);
  m.output = get<std::string>(j, "output", m.output);
  if (j.contains("seed")) {
    const json& s = j.at("seed");
    reject_unknown(s, {"base", "rule"}, "seed");
    m.base_seed = get<std::uint64_t>(s, "base", 0);
    if (get<std::string>(s, "rule", "base+trial") != "base+trial") {
      throw InvalidArgument("manifest: only the 'base+trial' seed rule is supported");
    }
  }
  if (j.contains("init")) {
    const json& s = j.at("init");
    reject_unknown(s, {"kind", "points", "levels"}, "init");
    const std::string kind = get<std::string>(s, "kind", "random");
    if (kind == "random") {
      m.init.kind = InitSpec::Kind::kRandom;
    } else if (kind == "grid_pair") {
      m.init.kind = InitSpec::Kind::kGridPair;
    } else {
      throw InvalidArgument("manifest: init.kind must be 'random' or 'grid_pair'");
    }
    m.init.points = get<int>(s, "points", m.init.points);
    m.init.levels = get<int>(s, "levels", m.init.levels);
  }
  if (j.contains("f_star") && !j.at("f_star").is_null()) m.f_star = get<double>(j, "f_star", 0.0);
  if (j.contains("gp")) {
    const json& s = j.at("gp");
    reject_unknown(s, {"kernel", "restarts", "refit_restarts"}, "gp");
    m.kernel = get<std::string>(s, "kernel", m.kernel);
    m.gp_restarts = get<int>(s, "restarts", m.gp_restarts);
    m.gp_refit_restarts = get<int>(s, "refit_restarts", m.gp_refit_restarts);
  }
  m.validate();
  return m;
}

RunManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("manifest: cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_manifest(os.str());
}

std::string serialize_manifest(const RunManifest& m) {
  json j;
  j["problem"] = m.problem;
  j["algorithms"] = m.algorithms;
  j["trials"] = m.trials;
  j["iterations"] = m.iterations;
  j["seed"] = {{"base", m.base_seed}, {"rule", "base+trial"}};
  j["kappa"] = m.kappa;
  j["mc_samples"] = m.mc_samples;
  j["af_starts"] = m.af_starts;
  j["init"] = {{"kind", m.init.kind == InitSpec::Kind::kRandom ? "random" : "grid_pair"},
               {"points", m.init.points},
               {"levels", m.init.levels}};
  j["f_star"] = m.f_star ? json(*m.f_star) : json(nullptr);
  j["output"] = m.output;
  j["gp"] = {{"kernel", m.kernel}, {"restarts", m.gp_restarts}, {"refit_restarts", m.gp_refit_restarts}};
  return j.dump(2) + "\n";
}

}  // namespace greybox
