#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedsilo/data_gen.hpp"
#include "fedsilo/metrics.hpp"
#include "fedsilo/mlp.hpp"
#include "fedsilo/partition.hpp"
#include "fedsilo/rng.hpp"

namespace fedsilo {

enum class Scheme { hcct, hcct_e, hcct_p, independent, global, maxfl, fedfa, ifca, flsc };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

struct TrainParams {
  int epochs = 30;       // T
  int local_steps = 5;   // Q
  int batch_size = 64;
  double eta0 = 0.1;
  double gamma = 0.995;
  double alpha = 100.0;
  double beta = 2.0;
  int n_groups = 2;  // ifca / flsc cluster count
  int n_select = 1;  // flsc: clusters each client subscribes to
  // fix the group count instead of stopping at non-positive benefit
  std::optional<int> forced_k;
  bool compute_kappa = false;       // pairwise gradient distances at the shared init
  std::map<int, int> arrivals;      // epoch -> number of clients admitted then
};

struct ExperimentSetup {
  ScenarioSpec scenario;
  Scheme scheme = Scheme::hcct;
  MlpArch arch;
  TrainParams train;
};

struct ClientState {
  int id = 0;
  ClientDataset data;
  ParamVector model;
  ParamVector last_gradient;  // upload from the previous epoch; empty before that
  ParamVector shadow;         // maxfl's always-solo twin
  Rng train_rng{0};
  Rng shadow_rng{0};
};

struct ExperimentResult {
  MetricsLog log;
  std::vector<ParamVector> final_models;  // ascending client id
  std::uint64_t data_fingerprint = 0;
  int similarity_layer = -1;  // hcct_e's frozen choice
};

double learning_rate(const TrainParams& train, int epoch);

ExperimentResult run_experiment(const ExperimentSetup& setup, std::uint64_t seed);

}  // namespace fedsilo
