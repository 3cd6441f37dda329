#include "fedsilo/commands.hpp"

#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <mutex>
#include <thread>

#include "fedsilo/metrics.hpp"

namespace fs = std::filesystem;

namespace fedsilo {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void parallel_for(int n_items, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || n_items <= 1) {
    for (int i = 0; i < n_items; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> stop{false};
  std::mutex mu;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  const int k = std::min(threads, n_items);
  for (int t = 0; t < k; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        if (stop.load()) return;
        const int i = next.fetch_add(1);
        if (i >= n_items) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!first_error) first_error = std::current_exception();
          stop.store(true);
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

struct RunStats {
  double mean = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t n_groups = 0;
  std::uint64_t fingerprint = 0;
};

RunStats run_and_write(const ExperimentConfig& cfg, std::uint64_t seed, const fs::path& dir) {
  const auto res = run_experiment(to_setup(cfg), seed);
  fs::create_directories(dir);
  write_metrics_csv((dir / "metrics.csv").string(), res.log);
  write_partitions_jsonl((dir / "partitions.jsonl").string(), res.log);
  write_summary_json((dir / "summary.json").string(), res.log, to_string(cfg.scheme), seed);
  const auto& last = res.log.records.back();
  const ErrorStats st = error_stats(last.test_errors);
  return {st.mean, st.stddev, st.min, st.max, last.groups.size(), res.data_fingerprint};
}

std::optional<RunStats> load_finished(const fs::path& dir) {
  std::ifstream in(dir / "summary.json");
  if (!in) return std::nullopt;
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  if (!(j.contains("mean") && j.contains("std") && j.contains("min") && j.contains("max") &&
        j.contains("final_partition"))) {
    return std::nullopt;
  }
  RunStats st;
  st.mean = j["mean"].get<double>();
  st.stddev = j["std"].get<double>();
  st.min = j["min"].get<double>();
  st.max = j["max"].get<double>();
  st.n_groups = j["final_partition"].size();
  return st;
}

ExperimentConfig build_with_out(const RawConfig& raw,
                                const std::optional<std::string>& out_override) {
  ExperimentConfig cfg = build_config(raw);
  if (out_override) cfg.out = *out_override;
  return cfg;
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' ||
                    c == '+' || c == '_' || c == '=';
    out += ok ? c : '_';
  }
  return out;
}

// population statistics over per-seed means, matching error_stats
ErrorStats stats_over(const std::vector<double>& values) { return error_stats(values); }

}  // namespace

void cmd_run(const RawConfig& raw, const std::optional<std::string>& out_override, int threads) {
  const ExperimentConfig cfg = build_with_out(raw, out_override);
  const fs::path out(cfg.out);
  fs::create_directories(out);

  std::vector<RunStats> stats(cfg.seeds.size());
  parallel_for(static_cast<int>(cfg.seeds.size()), threads, [&](int i) {
    const std::uint64_t seed = cfg.seeds[static_cast<std::size_t>(i)];
    stats[static_cast<std::size_t>(i)] =
        run_and_write(cfg, seed, out / ("seed_" + std::to_string(seed)));
  });

  std::vector<double> means;
  nlohmann::json agg;
  agg["scheme"] = to_string(cfg.scheme);
  agg["seeds"] = cfg.seeds;
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
    means.push_back(stats[i].mean);
    std::cout << "seed " << cfg.seeds[i] << ": mean_error " << fmt_double(stats[i].mean) << "\n";
  }
  agg["per_seed_mean"] = means;
  const ErrorStats over = stats_over(means);
  agg["mean"] = over.mean;
  agg["std"] = over.stddev;
  agg["min"] = over.min;
  agg["max"] = over.max;
  std::ofstream aggf(out / "aggregate.json");
  if (!aggf) throw std::runtime_error("cannot write " + (out / "aggregate.json").string());
  aggf << agg.dump(2) << "\n";
  std::cout << "wrote " << (out / "aggregate.json").string() << "\n";
}

void cmd_sweep(const RawConfig& raw, const std::optional<std::string>& out_override, int threads) {
  const ExperimentConfig base = build_with_out(raw, out_override);
  if (base.sweep.empty()) throw ConfigError("sweep: empty grid, add a [sweep] section");

  struct Cell {
    std::vector<std::string> values;  // one per axis
    std::string name;
    ExperimentConfig cfg;
  };
  std::vector<Cell> cells;
  std::vector<std::size_t> idx(base.sweep.size(), 0);
  for (;;) {
    Cell cell;
    RawConfig cell_raw = raw;
    std::string name;
    for (std::size_t a = 0; a < base.sweep.size(); ++a) {
      const auto& [path, values] = base.sweep[a];
      const std::string& v = values[idx[a]];
      cell.values.push_back(v);
      cell_raw.entries.push_back(RawEntry{path, {v}, false, 0});
      if (!name.empty()) name += "_";
      name += sanitize(path) + "=" + sanitize(v);
    }
    cell.name = name;
    cell.cfg = build_with_out(cell_raw, out_override);
    cells.push_back(std::move(cell));

    bool done = false;
    std::size_t a = base.sweep.size();
    for (;;) {
      if (a == 0) {
        done = true;
        break;
      }
      --a;
      if (++idx[a] < base.sweep[a].second.size()) break;
      idx[a] = 0;
    }
    if (done) break;
  }

  const fs::path out(base.out);
  fs::create_directories(out / "sweep");

  struct Row {
    const Cell* cell = nullptr;
    std::uint64_t seed = 0;
    RunStats stats;
  };
  std::vector<Row> rows;
  for (const auto& cell : cells) {
    for (std::uint64_t seed : base.seeds) rows.push_back(Row{&cell, seed, {}});
  }

  parallel_for(static_cast<int>(rows.size()), threads, [&](int i) {
    Row& row = rows[static_cast<std::size_t>(i)];
    const fs::path dir = out / "sweep" / row.cell->name / ("seed_" + std::to_string(row.seed));
    if (auto done = load_finished(dir)) {
      row.stats = *done;
      return;
    }
    row.stats = run_and_write(row.cell->cfg, row.seed, dir);
  });

  std::ofstream csv(out / "sweep.csv");
  if (!csv) throw std::runtime_error("cannot write " + (out / "sweep.csv").string());
  for (const auto& [path, values] : base.sweep) {
    (void)values;
    csv << path << ",";
  }
  csv << "seed,mean_error,std_error,min_error,max_error,final_groups\n";
  for (const auto& row : rows) {
    for (const auto& v : row.cell->values) csv << v << ",";
    csv << row.seed << "," << fmt_double(row.stats.mean) << "," << fmt_double(row.stats.stddev)
        << "," << fmt_double(row.stats.min) << "," << fmt_double(row.stats.max) << ","
        << row.stats.n_groups << "\n";
  }
  std::cout << "wrote " << (out / "sweep.csv").string() << " (" << rows.size() << " rows)\n";
}

void cmd_compare(const RawConfig& raw, const std::optional<std::string>& out_override,
                 int threads) {
  const ExperimentConfig base = build_with_out(raw, out_override);
  if (base.compare_schemes.empty())
    throw ConfigError("compare.schemes: nothing to compare, add a [compare] section");

  const fs::path out(base.out);
  fs::create_directories(out / "compare");

  struct Item {
    Scheme scheme;
    std::uint64_t seed;
    RunStats stats;
  };
  std::vector<Item> items;
  for (Scheme s : base.compare_schemes) {
    for (std::uint64_t seed : base.seeds) items.push_back(Item{s, seed, {}});
  }

  parallel_for(static_cast<int>(items.size()), threads, [&](int i) {
    Item& item = items[static_cast<std::size_t>(i)];
    ExperimentConfig cfg = base;
    cfg.scheme = item.scheme;
    const fs::path dir =
        out / "compare" / to_string(item.scheme) / ("seed_" + std::to_string(item.seed));
    item.stats = run_and_write(cfg, item.seed, dir);
  });

  // every scheme must have trained on the very same data
  for (std::size_t si = 0; si < base.seeds.size(); ++si) {
    const std::uint64_t fp = items[si].stats.fingerprint;
    for (std::size_t k = 1; k < base.compare_schemes.size(); ++k) {
      if (items[k * base.seeds.size() + si].stats.fingerprint != fp) {
        throw std::runtime_error("compare: dataset fingerprints diverged for seed " +
                                 std::to_string(base.seeds[si]));
      }
    }
  }

  std::ofstream csv(out / "compare.csv");
  if (!csv) throw std::runtime_error("cannot write " + (out / "compare.csv").string());
  csv << "scheme,seeds,mean_error,std_error,min_error,max_error\n";
  for (std::size_t k = 0; k < base.compare_schemes.size(); ++k) {
    std::vector<double> means;
    for (std::size_t si = 0; si < base.seeds.size(); ++si) {
      means.push_back(items[k * base.seeds.size() + si].stats.mean);
    }
    const ErrorStats st = stats_over(means);
    csv << to_string(base.compare_schemes[k]) << "," << base.seeds.size() << ","
        << fmt_double(st.mean) << "," << fmt_double(st.stddev) << "," << fmt_double(st.min) << ","
        << fmt_double(st.max) << "\n";
  }
  std::cout << "wrote " << (out / "compare.csv").string() << " ("
            << base.compare_schemes.size() << " schemes x " << base.seeds.size() << " seeds)\n";
}

int run_cli(const std::vector<std::string>& args) {
  const std::string usage =
      "usage: fedsilo run|sweep|compare --config <path> [--override k=v ...] [--out <dir>] "
      "[--threads n]";
  std::string command;
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::string> out_dir;
  int threads = 1;

  std::size_t i = 0;
  if (i < args.size() && args[i].rfind("--", 0) != 0) command = args[i++];
  for (; i < args.size(); ++i) {
    const std::string& a = args[i];
    auto next = [&](const char* what) -> std::optional<std::string> {
      if (i + 1 >= args.size()) {
        std::cerr << "fedsilo: " << what << " needs a value\n" << usage << "\n";
        return std::nullopt;
      }
      return args[++i];
    };
    if (a == "--config") {
      auto v = next("--config");
      if (!v) return 2;
      config_path = *v;
    } else if (a == "--override") {
      auto v = next("--override");
      if (!v) return 2;
      overrides.push_back(*v);
    } else if (a == "--out") {
      auto v = next("--out");
      if (!v) return 2;
      out_dir = *v;
    } else if (a == "--threads") {
      auto v = next("--threads");
      if (!v) return 2;
      try {
        std::size_t used = 0;
        threads = std::stoi(*v, &used);
        if (used != v->size() || threads < 1) throw std::invalid_argument("");
      } catch (const std::exception&) {
        std::cerr << "fedsilo: --threads expects a positive integer\n";
        return 2;
      }
    } else {
      std::cerr << "fedsilo: unknown argument '" << a << "'\n" << usage << "\n";
      return 2;
    }
  }
  if (command != "run" && command != "sweep" && command != "compare") {
    std::cerr << usage << "\n";
    return 2;
  }
  if (config_path.empty()) {
    std::cerr << "fedsilo: --config is required\n" << usage << "\n";
    return 2;
  }

  try {
    RawConfig raw = load_config_file(config_path);
    for (const auto& o : overrides) apply_override(raw, o);
    if (command == "run") cmd_run(raw, out_dir, threads);
    else if (command == "sweep") cmd_sweep(raw, out_dir, threads);
    else cmd_compare(raw, out_dir, threads);
  } catch (const ConfigError& e) {
    std::cerr << "fedsilo: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "fedsilo: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace fedsilo
