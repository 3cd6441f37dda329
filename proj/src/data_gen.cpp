#include "fedsilo/data_gen.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "fedsilo/rng.hpp"

namespace fedsilo {

namespace {

// rng stream tags, one per independent purpose
constexpr std::uint64_t kSrcTag = 101;
constexpr std::uint64_t kClientTag = 102;
constexpr std::uint64_t kSizesTag = 103;
constexpr std::uint64_t kAssignTag = 104;
constexpr std::uint64_t kShardTag = 105;
constexpr std::uint64_t kSplitTag = 106;

int test_count(int train_n, double ratio) {
  return std::max(1, static_cast<int>(std::llround(train_n * (1.0 - ratio) / ratio)));
}

void append_sample(Dataset& d, const double* mean, int dim, double noise_sd, int label, Rng& rng) {
  for (int j = 0; j < dim; ++j) d.x.push_back(mean[j] + noise_sd * rng.normal());
  d.y.push_back(label);
}

// spherical gaussian class means, classes x dim
std::vector<double> draw_class_means(int classes, int dim, double spread, Rng& rng) {
  std::vector<double> m(static_cast<std::size_t>(classes) * dim);
  for (auto& v : m) v = spread * rng.normal();
  return m;
}

// splits collected samples into train/test by ratio, shuffling first so the
// test slice is not biased toward whichever class was appended last
ClientDataset split_pool(std::vector<std::vector<double>> xs, std::vector<int> ys, int dim,
                         double ratio, Rng& rng) {
  const std::size_t n = ys.size();
  if (n < 2) throw std::invalid_argument("client pool needs at least 2 samples to split");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);

  auto train_n = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  train_n = std::clamp<std::size_t>(train_n, 1, n - 1);

  ClientDataset out;
  out.train.dim = dim;
  out.test.dim = dim;
  for (std::size_t k = 0; k < n; ++k) {
    Dataset& d = k < train_n ? out.train : out.test;
    const auto& row = xs[order[k]];
    d.x.insert(d.x.end(), row.begin(), row.end());
    d.y.push_back(ys[order[k]]);
  }
  return out;
}

void check_common(const ScenarioSpec& spec) {
  if (spec.n_clients < 1) throw std::invalid_argument("n_clients must be >= 1");
  if (spec.classes < 2) throw std::invalid_argument("classes must be >= 2");
  if (spec.feature_dim < 1) throw std::invalid_argument("feature_dim must be >= 1");
  if (!(spec.train_ratio > 0.0 && spec.train_ratio < 1.0))
    throw std::invalid_argument("train_ratio must be in (0,1)");
}

ClientDataset sample_client(const std::vector<double>& means, const std::vector<int>& allowed,
                            int dim, double noise_sd, int train_n, int test_n, Rng& rng) {
  ClientDataset out;
  out.train.dim = dim;
  out.test.dim = dim;
  for (int k = 0; k < train_n + test_n; ++k) {
    const int label = allowed[rng.uniform_int(allowed.size())];
    Dataset& d = k < train_n ? out.train : out.test;
    append_sample(d, means.data() + static_cast<std::size_t>(label) * dim, dim, noise_sd, label,
                  rng);
  }
  return out;
}

std::vector<ClientDataset> clustered_impl(const ScenarioSpec& spec, std::uint64_t seed,
                                          int n_total) {
  check_common(spec);
  if (spec.n_sources < 1) throw std::invalid_argument("n_sources must be >= 1");
  if (spec.n_sources > spec.n_clients)
    throw std::invalid_argument("n_sources must not exceed n_clients");
  if (spec.disjoint_labels && spec.classes < spec.n_sources)
    throw std::invalid_argument("disjoint_labels needs classes >= n_sources");
  if (spec.train_n < 1) throw std::invalid_argument("train_n must be >= 1");

  const int dim = spec.feature_dim;
  Rng src_rng(derive_seed(seed, kSrcTag));
  const auto base = draw_class_means(spec.classes, dim, spec.class_spread, src_rng);

  // source s shifts every class mean by separation along axis s % dim, with
  // the magnitude stepped up each time the axes wrap, so any two sources'
  // means are at least `separation` apart
  std::vector<std::vector<double>> source_means(static_cast<std::size_t>(spec.n_sources));
  for (int s = 0; s < spec.n_sources; ++s) {
    auto m = base;
    const int axis = s % dim;
    const double mag = spec.separation * (1.0 + static_cast<double>(s / dim));
    for (int c = 0; c < spec.classes; ++c) m[static_cast<std::size_t>(c) * dim + axis] += mag;
    source_means[static_cast<std::size_t>(s)] = std::move(m);
  }

  std::vector<std::vector<int>> allowed(static_cast<std::size_t>(spec.n_sources));
  for (int s = 0; s < spec.n_sources; ++s) {
    for (int c = 0; c < spec.classes; ++c) {
      if (!spec.disjoint_labels || c % spec.n_sources == s)
        allowed[static_cast<std::size_t>(s)].push_back(c);
    }
  }

  const int test_n = test_count(spec.train_n, spec.train_ratio);
  std::vector<ClientDataset> out;
  out.reserve(static_cast<std::size_t>(n_total));
  for (int i = 0; i < n_total; ++i) {
    const int s = i % spec.n_sources;
    Rng rng(derive_seed(seed, kClientTag, static_cast<std::uint64_t>(i)));
    auto cd = sample_client(source_means[static_cast<std::size_t>(s)],
                            allowed[static_cast<std::size_t>(s)], dim, spec.noise_sd, spec.train_n,
                            test_n, rng);
    cd.source_id = s;
    cd.source_class_means = source_means[static_cast<std::size_t>(s)];
    out.push_back(std::move(cd));
  }
  return out;
}

std::vector<ClientDataset> iid_impl(const ScenarioSpec& spec, std::uint64_t seed, int n_total) {
  check_common(spec);
  if (spec.base_size < 1) throw std::invalid_argument("base_size must be >= 1");
  if (spec.min_size < 1) throw std::invalid_argument("min_size must be >= 1");

  const int dim = spec.feature_dim;
  Rng src_rng(derive_seed(seed, kSrcTag));
  const auto means = draw_class_means(spec.classes, dim, spec.class_spread, src_rng);

  std::vector<int> allowed(static_cast<std::size_t>(spec.classes));
  std::iota(allowed.begin(), allowed.end(), 0);

  Rng size_rng(derive_seed(seed, kSizesTag));
  std::vector<ClientDataset> out;
  out.reserve(static_cast<std::size_t>(n_total));
  for (int i = 0; i < n_total; ++i) {
    const double z = spec.fixed_z > 0.0 ? spec.fixed_z : std::abs(size_rng.normal());
    const int train_n =
        std::max(spec.min_size, static_cast<int>(std::llround(spec.base_size * z)));
    Rng rng(derive_seed(seed, kClientTag, static_cast<std::uint64_t>(i)));
    auto cd = sample_client(means, allowed, dim, spec.noise_sd, train_n,
                            test_count(train_n, spec.train_ratio), rng);
    cd.source_id = 0;
    cd.source_class_means = means;
    out.push_back(std::move(cd));
  }
  return out;
}

[[noreturn]] void csv_error(const std::string& path, std::size_t line, const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::clustered_sources: return "clustered_sources";
    case ScenarioKind::iid_halfnormal: return "iid_halfnormal";
    case ScenarioKind::label_shards: return "label_shards";
    case ScenarioKind::motivating: return "motivating";
    case ScenarioKind::csv: return "csv";
  }
  throw std::logic_error("bad ScenarioKind");
}

ScenarioKind scenario_kind_from_string(const std::string& s) {
  if (s == "clustered_sources") return ScenarioKind::clustered_sources;
  if (s == "iid_halfnormal") return ScenarioKind::iid_halfnormal;
  if (s == "label_shards") return ScenarioKind::label_shards;
  if (s == "motivating") return ScenarioKind::motivating;
  if (s == "csv") return ScenarioKind::csv;
  throw std::invalid_argument("unknown scenario kind '" + s + "'");
}

std::vector<ClientDataset> gen_clustered_sources(const ScenarioSpec& spec, std::uint64_t seed) {
  if (spec.kind != ScenarioKind::clustered_sources)
    throw std::invalid_argument("spec.kind mismatch");
  return clustered_impl(spec, seed, spec.n_clients);
}

std::vector<ClientDataset> gen_iid_halfnormal(const ScenarioSpec& spec, std::uint64_t seed) {
  if (spec.kind != ScenarioKind::iid_halfnormal) throw std::invalid_argument("spec.kind mismatch");
  return iid_impl(spec, seed, spec.n_clients);
}

std::vector<ClientDataset> gen_label_shards(const ScenarioSpec& spec, std::uint64_t seed) {
  if (spec.kind != ScenarioKind::label_shards) throw std::invalid_argument("spec.kind mismatch");
  check_common(spec);
  if (spec.n_shards < 1) throw std::invalid_argument("n_shards must be >= 1");
  if (spec.n_shards % spec.classes != 0)
    throw std::invalid_argument("n_shards must be divisible by classes");
  if (spec.n_clients > spec.n_shards)
    throw std::invalid_argument("n_clients must not exceed n_shards");
  if (spec.shard_size < 2) throw std::invalid_argument("shard_size must be >= 2");

  const int dim = spec.feature_dim;
  Rng src_rng(derive_seed(seed, kSrcTag));
  const auto means = draw_class_means(spec.classes, dim, spec.class_spread, src_rng);

  // shard j holds shard_size samples of class j % classes
  std::vector<std::vector<std::vector<double>>> shard_x(
      static_cast<std::size_t>(spec.n_shards));
  for (int j = 0; j < spec.n_shards; ++j) {
    const int label = j % spec.classes;
    Rng rng(derive_seed(seed, kShardTag, static_cast<std::uint64_t>(j)));
    auto& rows = shard_x[static_cast<std::size_t>(j)];
    rows.reserve(static_cast<std::size_t>(spec.shard_size));
    for (int k = 0; k < spec.shard_size; ++k) {
      std::vector<double> row(static_cast<std::size_t>(dim));
      const double* mu = means.data() + static_cast<std::size_t>(label) * dim;
      for (int d = 0; d < dim; ++d) row[static_cast<std::size_t>(d)] = mu[d] + spec.noise_sd * rng.normal();
      rows.push_back(std::move(row));
    }
  }

  // half-normal shard demand, floored at one
  Rng size_rng(derive_seed(seed, kSizesTag));
  std::vector<int> demand(static_cast<std::size_t>(spec.n_clients));
  const double per_client = static_cast<double>(spec.n_shards) / spec.n_clients;
  for (auto& c : demand) {
    c = std::max(1, static_cast<int>(std::llround(per_client * std::abs(size_rng.normal()))));
  }

  // random shard order; one shard to everyone first, then residual demand in
  // id order while the pool lasts, then leftovers dealt round-robin so every
  // shard lands somewhere
  std::vector<int> pool(static_cast<std::size_t>(spec.n_shards));
  std::iota(pool.begin(), pool.end(), 0);
  Rng assign_rng(derive_seed(seed, kAssignTag));
  assign_rng.shuffle(pool);

  std::vector<std::vector<int>> owned(static_cast<std::size_t>(spec.n_clients));
  std::size_t cursor = 0;
  for (int i = 0; i < spec.n_clients; ++i) owned[static_cast<std::size_t>(i)].push_back(pool[cursor++]);
  for (int i = 0; i < spec.n_clients && cursor < pool.size(); ++i) {
    for (int k = 1; k < demand[static_cast<std::size_t>(i)] && cursor < pool.size(); ++k) {
      owned[static_cast<std::size_t>(i)].push_back(pool[cursor++]);
    }
  }
  for (int i = 0; cursor < pool.size(); i = (i + 1) % spec.n_clients) {
    owned[static_cast<std::size_t>(i)].push_back(pool[cursor++]);
  }

  std::vector<ClientDataset> out;
  out.reserve(static_cast<std::size_t>(spec.n_clients));
  for (int i = 0; i < spec.n_clients; ++i) {
    std::vector<std::vector<double>> xs;
    std::vector<int> ys;
    for (int j : owned[static_cast<std::size_t>(i)]) {
      for (auto& row : shard_x[static_cast<std::size_t>(j)]) {
        xs.push_back(row);
        ys.push_back(j % spec.classes);
      }
    }
    Rng rng(derive_seed(seed, kSplitTag, static_cast<std::uint64_t>(i)));
    auto cd = split_pool(std::move(xs), std::move(ys), dim, spec.train_ratio, rng);
    cd.source_id = 0;
    cd.source_class_means = means;
    out.push_back(std::move(cd));
  }
  return out;
}

std::vector<ClientDataset> gen_motivating_example(std::uint64_t seed) {
  constexpr int kDim = 8;
  constexpr int kClasses = 10;
  constexpr int kPerClass = 100;
  constexpr double kRatio = 0.8;
  constexpr double kSpread = 2.0;

  Rng src_rng(derive_seed(seed, kSrcTag));
  const auto means = draw_class_means(kClasses, kDim, kSpread, src_rng);

  std::vector<std::vector<std::vector<double>>> pools(kClasses);
  for (int c = 0; c < kClasses; ++c) {
    Rng rng(derive_seed(seed, kShardTag, static_cast<std::uint64_t>(c)));
    for (int k = 0; k < kPerClass; ++k) {
      std::vector<double> row(kDim);
      for (int d = 0; d < kDim; ++d) row[static_cast<std::size_t>(d)] = means[static_cast<std::size_t>(c) * kDim + d] + rng.normal();
      pools[static_cast<std::size_t>(c)].push_back(std::move(row));
    }
  }

  // client 0: first 20% of classes 0-4; client 1: the other 80%;
  // client 2: all of classes 5-9
  std::vector<std::vector<std::vector<double>>> xs(3);
  std::vector<std::vector<int>> ys(3);
  constexpr int kCut = kPerClass / 5;
  for (int c = 0; c < 5; ++c) {
    for (int k = 0; k < kPerClass; ++k) {
      const int who = k < kCut ? 0 : 1;
      xs[static_cast<std::size_t>(who)].push_back(pools[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)]);
      ys[static_cast<std::size_t>(who)].push_back(c);
    }
  }
  for (int c = 5; c < kClasses; ++c) {
    for (int k = 0; k < kPerClass; ++k) {
      xs[2].push_back(pools[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)]);
      ys[2].push_back(c);
    }
  }

  std::vector<ClientDataset> out;
  for (int i = 0; i < 3; ++i) {
    Rng rng(derive_seed(seed, kSplitTag, static_cast<std::uint64_t>(i)));
    auto cd = split_pool(std::move(xs[static_cast<std::size_t>(i)]),
                         std::move(ys[static_cast<std::size_t>(i)]), kDim, kRatio, rng);
    cd.source_id = i == 2 ? 1 : 0;
    cd.source_class_means = means;
    out.push_back(std::move(cd));
  }
  return out;
}

std::vector<ClientDataset> load_csv(const ScenarioSpec& spec, std::uint64_t seed) {
  if (spec.kind != ScenarioKind::csv) throw std::invalid_argument("spec.kind mismatch");
  check_common(spec);
  if (spec.paths.empty()) throw std::invalid_argument("csv scenario needs at least one path");
  if (static_cast<int>(spec.paths.size()) != spec.n_clients)
    throw std::invalid_argument("csv scenario needs exactly one path per client");

  std::vector<ClientDataset> out;
  for (int i = 0; i < spec.n_clients; ++i) {
    const std::string& path = spec.paths[static_cast<std::size_t>(i)];
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");

    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) csv_error(path, 1, "missing header row");
    ++lineno;
    const auto n_cols = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
    if (n_cols < 2) csv_error(path, 1, "need at least one feature column and a label column");
    const int dim = static_cast<int>(n_cols) - 1;

    std::vector<std::vector<double>> xs;
    std::vector<int> ys;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;

      std::vector<std::string> cells;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      if (!line.empty() && line.back() == ',') cells.push_back("");
      if (cells.size() != n_cols) {
        csv_error(path, lineno,
                  "expected " + std::to_string(n_cols) + " columns, got " +
                      std::to_string(cells.size()));
      }

      std::vector<double> row(static_cast<std::size_t>(dim));
      for (int d = 0; d < dim; ++d) {
        try {
          std::size_t used = 0;
          row[static_cast<std::size_t>(d)] = std::stod(cells[static_cast<std::size_t>(d)], &used);
          if (used != cells[static_cast<std::size_t>(d)].size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
          csv_error(path, lineno, "bad feature value '" + cells[static_cast<std::size_t>(d)] + "'");
        }
      }
      const std::string& label_cell = cells[n_cols - 1];
      long label = 0;
      try {
        std::size_t used = 0;
        label = std::stol(label_cell, &used);
        if (used != label_cell.size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        csv_error(path, lineno, "label '" + label_cell + "' is not an integer");
      }
      if (label < 0 || label >= spec.classes) {
        csv_error(path, lineno,
                  "label " + std::to_string(label) + " outside [0, " +
                      std::to_string(spec.classes) + ")");
      }
      xs.push_back(std::move(row));
      ys.push_back(static_cast<int>(label));
    }
    if (ys.size() < 2) throw std::runtime_error(path + ": need at least 2 data rows");
    if (spec.feature_dim != dim) {
      throw std::runtime_error(path + ": has " + std::to_string(dim) +
                               " feature columns, config says " +
                               std::to_string(spec.feature_dim));
    }

    Rng rng(derive_seed(seed, kSplitTag, static_cast<std::uint64_t>(i)));
    auto cd = split_pool(std::move(xs), std::move(ys), dim, spec.train_ratio, rng);
    cd.source_id = i;
    out.push_back(std::move(cd));
  }
  return out;
}

std::vector<ClientDataset> generate_scenario(const ScenarioSpec& spec, std::uint64_t seed,
                                             int n_extra) {
  if (n_extra < 0) throw std::invalid_argument("n_extra must be >= 0");
  switch (spec.kind) {
    case ScenarioKind::clustered_sources:
      return clustered_impl(spec, seed, spec.n_clients + n_extra);
    case ScenarioKind::iid_halfnormal:
      return iid_impl(spec, seed, spec.n_clients + n_extra);
    case ScenarioKind::label_shards:
      if (n_extra > 0) throw std::invalid_argument("label_shards does not support arrivals");
      return gen_label_shards(spec, seed);
    case ScenarioKind::motivating:
      if (n_extra > 0) throw std::invalid_argument("motivating does not support arrivals");
      return gen_motivating_example(seed);
    case ScenarioKind::csv:
      if (n_extra > 0) throw std::invalid_argument("csv does not support arrivals");
      return load_csv(spec, seed);
  }
  throw std::logic_error("bad ScenarioKind");
}

std::uint64_t dataset_fingerprint(const std::vector<ClientDataset>& clients) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  auto mix_bytes = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto& c : clients) {
    mix_bytes(&c.source_id, sizeof c.source_id);
    for (const Dataset* d : {&c.train, &c.test}) {
      mix_bytes(&d->dim, sizeof d->dim);
      mix_bytes(d->x.data(), d->x.size() * sizeof(double));
      mix_bytes(d->y.data(), d->y.size() * sizeof(int));
    }
  }
  return h;
}

}  // namespace fedsilo
