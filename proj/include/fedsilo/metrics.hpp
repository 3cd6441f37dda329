#pragma once

#include <string>
#include <vector>

#include "fedsilo/mlp.hpp"
#include "fedsilo/param_vector.hpp"

namespace fedsilo {

// fraction of argmax-misclassified samples; ties predict the lowest class
double test_error(const MlpArch& arch, const ParamVector& model, const Dataset& test);

struct ErrorStats {
  double mean = 0.0;
  double stddev = 0.0;  // population (divide by N)
  double min = 0.0;
  double max = 0.0;
};

ErrorStats error_stats(const std::vector<double>& errors);

// sum over clients of the squared norm of the full-batch gradient, each
// evaluated at that client's own model
double grad_norm_sum(const MlpArch& arch, const std::vector<ParamVector>& models,
                     const std::vector<const Dataset*>& trains);

// pairwise gradient distance ||grad_i(w) - grad_j(w)|| at a shared probe model
std::vector<std::vector<double>> kappa_estimate(const MlpArch& arch, const ParamVector& probe,
                                                const std::vector<const Dataset*>& trains);

// one record per epoch boundary: the state entering that epoch
struct EpochRecord {
  int epoch = 0;
  std::vector<int> client_ids;             // present clients, ascending
  std::vector<std::vector<int>> groups;    // partition in effect
  std::vector<double> test_errors;         // parallel to client_ids
  std::vector<double> train_losses;
  std::vector<double> utilities;           // NaN before any gradients exist
  double grad_norm_sum = 0.0;
  std::vector<std::vector<double>> kappa;  // empty unless enabled
  // cost of computing this record's partition, in similarity multiply-accumulates
  std::int64_t partition_macs = 0;
  // layer index similarity was restricted to, -1 when the full gradient was used
  int similarity_layer = -1;
};

struct MetricsLog {
  std::vector<EpochRecord> records;
};

void write_metrics_csv(const std::string& path, const MetricsLog& log);
void write_partitions_jsonl(const std::string& path, const MetricsLog& log);

// {scheme, seed, epochs, n_clients, mean, std, min, max, final_partition},
// statistics taken over the final record's per-client test errors
std::string summary_json(const MetricsLog& log, const std::string& scheme,
                         std::uint64_t seed);
void write_summary_json(const std::string& path, const MetricsLog& log,
                        const std::string& scheme, std::uint64_t seed);

}  // namespace fedsilo
