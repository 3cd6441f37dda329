#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fedsilo/schemes.hpp"

namespace fedsilo {

// anything wrong with the experiment description itself; maps to exit code 2
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ExperimentConfig {
  ScenarioSpec scenario;
  Scheme scheme = Scheme::hcct;
  MlpArch arch;  // widths derived from the scenario when left empty
  TrainParams train;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string out = "out";
  // sweep axes in file order: key path -> raw value tokens
  std::vector<std::pair<std::string, std::vector<std::string>>> sweep;
  std::vector<Scheme> compare_schemes;
};

// one key assignment, kept as raw text until build_config types it
struct RawEntry {
  std::string path;  // dotted, e.g. "scenario.n_clients"
  std::vector<std::string> tokens;
  bool is_array = false;
  int line = 0;  // 0 for overrides
};

struct RawConfig {
  std::string source;  // file path, for messages
  std::vector<RawEntry> entries;
};

// key = value lines with [section] headers, # comments, "quoted" strings and
// [a, b] arrays; throws ConfigError listing every syntax problem
RawConfig load_config_file(const std::string& path);

// command-line override "key=value" or "key=[a,b]"; appended, so it wins
void apply_override(RawConfig& raw, const std::string& spec);

// types and validates every entry, applies defaults and FEDSILO_SEED, and
// throws ConfigError listing every violation at once
ExperimentConfig build_config(const RawConfig& raw);

ExperimentConfig parse_config(const std::string& path);

ExperimentSetup to_setup(const ExperimentConfig& cfg);

}  // namespace fedsilo
