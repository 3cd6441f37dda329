#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedsilo/mlp.hpp"

namespace fedsilo {

// One client's local data. Train and test come from the same generator, so
// the test set measures the distribution the client actually trains on.
struct ClientDataset {
  Dataset train;
  Dataset test;
  int source_id = 0;
  // class-conditional means of the generating source, classes x dim row-major;
  // identical (bitwise) for clients sharing a source
  std::vector<double> source_class_means;
};

enum class ScenarioKind { clustered_sources, iid_halfnormal, label_shards, motivating, csv };

std::string to_string(ScenarioKind k);
ScenarioKind scenario_kind_from_string(const std::string& s);

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::iid_halfnormal;
  int n_clients = 2;
  int classes = 10;
  int feature_dim = 8;
  double train_ratio = 0.8;

  // clustered_sources
  int n_sources = 2;
  int train_n = 100;
  double separation = 4.0;
  double class_spread = 2.0;
  double noise_sd = 1.0;
  bool disjoint_labels = false;

  // iid_halfnormal
  int base_size = 120;
  int min_size = 10;
  double fixed_z = 0.0;  // > 0 pins every size draw to this |z| (test hook)

  // label_shards
  int n_shards = 100;
  int shard_size = 20;

  // csv: one file per client
  std::vector<std::string> paths;
};

std::vector<ClientDataset> gen_clustered_sources(const ScenarioSpec& spec, std::uint64_t seed);
std::vector<ClientDataset> gen_iid_halfnormal(const ScenarioSpec& spec, std::uint64_t seed);
std::vector<ClientDataset> gen_label_shards(const ScenarioSpec& spec, std::uint64_t seed);
std::vector<ClientDataset> gen_motivating_example(std::uint64_t seed);
std::vector<ClientDataset> load_csv(const ScenarioSpec& spec, std::uint64_t seed);

// dispatches on spec.kind; n_extra appends additional clients drawn by the
// same rules (mid-run arrivals), ids continuing after the initial ones
std::vector<ClientDataset> generate_scenario(const ScenarioSpec& spec, std::uint64_t seed,
                                             int n_extra = 0);

std::uint64_t dataset_fingerprint(const std::vector<ClientDataset>& clients);

}  // namespace fedsilo
