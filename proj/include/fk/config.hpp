#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fk/backward.hpp"
#include "fk/compat.hpp"
#include "fk/validate.hpp"

namespace fk {

struct ForwardBlock {
  std::size_t csv_paths = 64;
  bool binary = false;
};

struct SolveBlock {
  int vi_tests = 100;
  std::size_t csv_paths = 64;
  std::vector<double> markov_probes;
  int markov_subsample = 8;
};

struct EllipticBlock {
  std::optional<double> lambda;
  double tol = 1e-3;
  int n_max = 40;
  int steps_per_unit = 50;
  int pilot_n = 2;
  std::vector<int> horizons{2, 4, 6, 8, 10};
};

struct ResidualBlock {
  /// "fd" (finite-difference reference) or "mc" (grid of evaluate_u).
  std::string source = "fd";
  int nx = 200;
  int nt = 200;
  ResidualOptions options;
};

struct ChecksBlock {
  int samples = 256;
  std::uint64_t seed = 0;
  double y_box = 10.0;
  double z_box = 10.0;
};

/// Parsed experiment file. `resolved` is the input with every default filled
/// in; `hash` is its SHA-256.
struct ExperimentConfig {
  nlohmann::json resolved;
  std::string hash;
  Problem problem;
  std::size_t M = 10000;
  std::uint64_t seed = 1;
  double t = 0.0;
  Vec x;
  ChecksBlock checks;
  ForwardBlock forward;
  SolveBlock solve;
  ContinuitySpec continuity;
  EllipticBlock elliptic;
  FdOptions fd;
  ResidualBlock residuals;
  CompatConfig compat;
  StructuralReport structure;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
};

/// Parses, validates and samples the structural hypotheses. Unknown keys and
/// failed checks raise InvalidConfig naming the key or the witness.
ExperimentConfig parse_config(const nlohmann::json& j, const Overrides& overrides = {});
ExperimentConfig load_config(const std::string& path, const Overrides& overrides = {});

std::string sha256_hex(const std::string& data);

}  // namespace fk
