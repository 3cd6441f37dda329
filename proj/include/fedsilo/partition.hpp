#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedsilo/param_vector.hpp"

namespace fedsilo {

enum class SimilarityMode { full_gradient, selected_layer };

struct UtilityParams {
  double alpha = 1.0;
  double beta = 2.0;
  SimilarityMode mode = SimilarityMode::full_gradient;
  int selected_layer = -1;  // required when mode == selected_layer
};

// Coordinate range similarity is computed on: the whole vector, or the
// chosen layer's weight+bias block.
Slice similarity_slice(const ParamVector& ref, const UtilityParams& up);

struct PartitionStats {
  std::uint64_t similarity_macs = 0;  // 3 per coordinate per cosine (dot + both norms)
  std::uint64_t benefit_evals = 0;
  std::uint64_t cache_hits = 0;
};

// Cosine over the slice; 0 when either vector's slice norm is below 1e-12.
// Clamped to [-1, 1]. `stats` tallies multiply-accumulates when given.
double cosine_similarity(const ParamVector& a, const ParamVector& b, Slice s,
                         PartitionStats* stats = nullptr);

// Collaboration utility of one client inside a group: -alpha/group_size plus
// the cosine between the client's gradient and the group aggregate, plus beta.
double client_utility(const ParamVector& grad_i, const ParamVector& group_grad,
                      std::int64_t group_size, const UtilityParams& up, Slice s,
                      PartitionStats* stats = nullptr);

// Memoized pair benefits keyed by unordered stable group ids. A merge
// invalidates every entry touching either parent.
class BenefitCache {
 public:
  std::optional<double> get(int a, int b) const;
  void put(int a, int b, double value);
  void invalidate(int id);
  std::size_t size() const { return store_.size(); }

 private:
  std::map<std::pair<int, int>, double> store_;
};

struct MergeRecord {
  int a = -1;  // surviving group id (always the smaller)
  int b = -1;
  double benefit = 0.0;
};

struct Partition {
  // canonical: members ascending within a group, groups ordered by first member
  std::vector<std::vector<int>> groups;
  std::vector<std::int64_t> group_sizes;
  std::vector<ParamVector> group_grads;
  std::vector<MergeRecord> merges;  // in execution order

  int group_of(int client) const;
};

struct PartitionOptions {
  bool use_cache = true;
  // Ignore benefit signs and keep merging greedily until exactly this many
  // groups remain (values >= N leave everyone alone).
  std::optional<int> forced_k;
  std::optional<Slice> slice_override;
  PartitionStats* stats = nullptr;
};

// Data-size-weighted aggregate of the members' gradients, full vector,
// accumulated in ascending member order.
ParamVector members_aggregate(const std::vector<int>& members,
                              const std::vector<ParamVector>& grads,
                              const std::vector<std::int64_t>& sizes);

double group_utility(const std::vector<int>& members, const std::vector<ParamVector>& grads,
                     const std::vector<std::int64_t>& sizes, const UtilityParams& up,
                     std::optional<Slice> slice = {}, PartitionStats* stats = nullptr);

// Total utility of the union minus the two groups' own totals.
double merge_benefit(const std::vector<int>& members_a, const std::vector<int>& members_b,
                     const std::vector<ParamVector>& grads, const std::vector<std::int64_t>& sizes,
                     const UtilityParams& up, std::optional<Slice> slice = {},
                     PartitionStats* stats = nullptr);

// Greedy agglomeration from singletons: repeatedly merge the pair with the
// largest positive benefit (lexicographically smallest pair on ties), stop at
// one group or when no pair has positive benefit.
Partition client_partition(const std::vector<ParamVector>& grads,
                           const std::vector<std::int64_t>& sizes, const UtilityParams& up,
                           const PartitionOptions& opt = {});

// Index of the layer whose gradient coordinates vary most across clients
// relative to their shared mean; ties go to the lowest index.
int select_similarity_layer(const std::vector<ParamVector>& grads);

std::vector<double> client_utilities(const Partition& part, const std::vector<ParamVector>& grads,
                                     const std::vector<std::int64_t>& sizes,
                                     const UtilityParams& up, std::optional<Slice> slice = {});

double total_utility(const Partition& part, const std::vector<ParamVector>& grads,
                     const std::vector<std::int64_t>& sizes, const UtilityParams& up,
                     std::optional<Slice> slice = {});

// {"groups": [[...], ...], "epoch": t} on one line.
std::string partition_to_json(const Partition& part, int epoch);
std::vector<std::vector<int>> groups_from_json(const std::string& line);

}  // namespace fedsilo
