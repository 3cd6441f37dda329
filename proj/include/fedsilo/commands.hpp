#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fedsilo/config.hpp"

namespace fedsilo {

// each throws ConfigError for bad experiment descriptions and other
// exceptions for runtime failures; run_cli maps those to exit codes 2 and 1

// per-seed metrics.csv / partitions.jsonl / summary.json under
// <out>/seed_<s>/, plus <out>/aggregate.json across seeds
void cmd_run(const RawConfig& raw, const std::optional<std::string>& out_override, int threads);

// Cartesian grid from [sweep] x seeds; artifacts under <out>/sweep/<cell>/seed_<s>/,
// one row per (cell, seed) in <out>/sweep.csv; finished cells are skipped
void cmd_sweep(const RawConfig& raw, const std::optional<std::string>& out_override, int threads);

// every scheme in [compare] on the same data and seeds; artifacts under
// <out>/compare/<scheme>/seed_<s>/, one row per scheme in <out>/compare.csv
void cmd_compare(const RawConfig& raw, const std::optional<std::string>& out_override,
                 int threads);

// args are argv[1..]; returns the process exit code
int run_cli(const std::vector<std::string>& args);

}  // namespace fedsilo
