#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace greybox {

struct InitSpec {
  enum class Kind { kRandom, kGridPair };
  Kind kind = Kind::kRandom;
  int points = 5;  // kRandom: uniform points per trial
  int levels = 5;  // kGridPair: levels per axis of the seeding grid

  bool operator==(const InitSpec&) const = default;
};

struct RunManifest {
  std::string problem;
  std::vector<std::string> algorithms;
  int trials = 1;
  int iterations = 1;
  std::uint64_t base_seed = 0;  // trial t uses base_seed + t
  double kappa = 2.0;
  int mc_samples = 100;
  int af_starts = 50;
  InitSpec init;
  std::optional<double> f_star;
  std::string output = "out";
  std::string kernel = "matern52";
  int gp_restarts = 4;
  int gp_refit_restarts = 1;

  bool operator==(const RunManifest&) const = default;

  [[nodiscard]] std::uint64_t trial_seed(int trial) const { return base_seed + static_cast<std::uint64_t>(trial); }
  /// Checks ranges, algorithm names and that the problem is registered.
  void validate() const;
};

RunManifest parse_manifest(const std::string& text);
RunManifest load_manifest(const std::string& path);
std::string serialize_manifest(const RunManifest& m);

}  // namespace greybox
