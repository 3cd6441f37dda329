#include "fedsilo/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace fedsilo {

Slice similarity_slice(const ParamVector& ref, const UtilityParams& up) {
  if (up.mode == SimilarityMode::full_gradient) return full_slice(ref);
  return layer_slice(ref, up.selected_layer);
}

double cosine_similarity(const ParamVector& a, const ParamVector& b, Slice s,
                         PartitionStats* stats) {
  const double dot = dot_slice(a, b, s);
  const double na = norm_slice(a, s);
  const double nb = norm_slice(b, s);
  if (stats) stats->similarity_macs += 3 * static_cast<std::uint64_t>(s.length);
  if (na < 1e-12 || nb < 1e-12) return 0.0;
  return std::clamp(dot / (na * nb), -1.0, 1.0);
}

double client_utility(const ParamVector& grad_i, const ParamVector& group_grad,
                      std::int64_t group_size, const UtilityParams& up, Slice s,
                      PartitionStats* stats) {
  if (group_size <= 0)
    throw std::invalid_argument("client_utility: group data size must be positive, got " +
                                std::to_string(group_size));
  if (up.alpha < 0.0) throw std::invalid_argument("client_utility: alpha must be >= 0");
  const double sim = cosine_similarity(grad_i, group_grad, s, stats);
  return -up.alpha / static_cast<double>(group_size) + sim + up.beta;
}

std::optional<double> BenefitCache::get(int a, int b) const {
  auto it = store_.find(std::minmax(a, b));
  if (it == store_.end()) return std::nullopt;
  return it->second;
}

void BenefitCache::put(int a, int b, double value) { store_[std::minmax(a, b)] = value; }

void BenefitCache::invalidate(int id) {
  for (auto it = store_.begin(); it != store_.end();) {
    it = (it->first.first == id || it->first.second == id) ? store_.erase(it) : std::next(it);
  }
}

int Partition::group_of(int client) const {
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (int m : groups[g]) {
      if (m == client) return static_cast<int>(g);
    }
  }
  return -1;
}

namespace {

void check_partition_inputs(const std::vector<ParamVector>& grads,
                            const std::vector<std::int64_t>& sizes) {
  if (grads.empty()) throw std::invalid_argument("no client gradients");
  if (grads.size() != sizes.size())
    throw std::invalid_argument(std::to_string(grads.size()) + " gradients but " +
                                std::to_string(sizes.size()) + " data sizes");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (sizes[i] <= 0)
      throw std::invalid_argument("client " + std::to_string(i) + " has data size " +
                                  std::to_string(sizes[i]));
    if (!same_layout(grads[i], grads[0]))
      throw std::invalid_argument("client " + std::to_string(i) +
                                  " gradient layout differs from client 0");
  }
}

std::int64_t members_size(const std::vector<int>& members, const std::vector<std::int64_t>& sizes) {
  std::int64_t total = 0;
  for (int m : members) total += sizes[static_cast<std::size_t>(m)];
  return total;
}

double utility_sum(const std::vector<int>& members, const ParamVector& agg, std::int64_t dsz,
                   const std::vector<ParamVector>& grads, const UtilityParams& up, Slice s,
                   PartitionStats* stats) {
  double total = 0.0;
  for (int m : members)
    total += client_utility(grads[static_cast<std::size_t>(m)], agg, dsz, up, s, stats);
  return total;
}

}  // namespace

ParamVector members_aggregate(const std::vector<int>& members,
                              const std::vector<ParamVector>& grads,
                              const std::vector<std::int64_t>& sizes) {
  if (members.empty()) throw std::invalid_argument("members_aggregate: empty group");
  const double dsz = static_cast<double>(members_size(members, sizes));
  std::vector<const ParamVector*> gs;
  std::vector<double> ws;
  gs.reserve(members.size());
  ws.reserve(members.size());
  for (int m : members) {
    gs.push_back(&grads[static_cast<std::size_t>(m)]);
    ws.push_back(static_cast<double>(sizes[static_cast<std::size_t>(m)]) / dsz);
  }
  return weighted_sum(gs, ws);
}

double group_utility(const std::vector<int>& members, const std::vector<ParamVector>& grads,
                     const std::vector<std::int64_t>& sizes, const UtilityParams& up,
                     std::optional<Slice> slice, PartitionStats* stats) {
  check_partition_inputs(grads, sizes);
  if (members.empty()) throw std::invalid_argument("group_utility: empty group");
  const Slice s = slice ? *slice : similarity_slice(grads[0], up);
  const ParamVector agg = members_aggregate(members, grads, sizes);
  return utility_sum(members, agg, members_size(members, sizes), grads, up, s, stats);
}

double merge_benefit(const std::vector<int>& members_a, const std::vector<int>& members_b,
                     const std::vector<ParamVector>& grads, const std::vector<std::int64_t>& sizes,
                     const UtilityParams& up, std::optional<Slice> slice, PartitionStats* stats) {
  check_partition_inputs(grads, sizes);
  if (members_a.empty() || members_b.empty())
    throw std::invalid_argument("merge_benefit: empty group");
  for (int m : members_a) {
    if (std::find(members_b.begin(), members_b.end(), m) != members_b.end())
      throw std::invalid_argument("merge_benefit: groups share client " + std::to_string(m));
  }
  const Slice s = slice ? *slice : similarity_slice(grads[0], up);
  if (stats) ++stats->benefit_evals;

  std::vector<int> merged;
  merged.reserve(members_a.size() + members_b.size());
  std::merge(members_a.begin(), members_a.end(), members_b.begin(), members_b.end(),
             std::back_inserter(merged));

  const ParamVector agg = members_aggregate(merged, grads, sizes);
  const std::int64_t dsz = members_size(merged, sizes);
  const double merged_util = utility_sum(merged, agg, dsz, grads, up, s, stats);

  const ParamVector agg_a = members_aggregate(members_a, grads, sizes);
  const double util_a =
      utility_sum(members_a, agg_a, members_size(members_a, sizes), grads, up, s, stats);
  const ParamVector agg_b = members_aggregate(members_b, grads, sizes);
  const double util_b =
      utility_sum(members_b, agg_b, members_size(members_b, sizes), grads, up, s, stats);
  return merged_util - util_a - util_b;
}

Partition client_partition(const std::vector<ParamVector>& grads,
                           const std::vector<std::int64_t>& sizes, const UtilityParams& up,
                           const PartitionOptions& opt) {
  check_partition_inputs(grads, sizes);
  if (opt.forced_k && *opt.forced_k < 1)
    throw std::invalid_argument("forced group count must be >= 1, got " +
                                std::to_string(*opt.forced_k));
  const Slice s = opt.slice_override ? *opt.slice_override : similarity_slice(grads[0], up);

  struct Group {
    std::vector<int> members;
    ParamVector agg;
    std::int64_t dsz = 0;
    double util = 0.0;
  };

  // stable id = smallest member; the surviving group of a merge keeps the
  // smaller id, so ids never move
  std::map<int, Group> alive;
  for (std::size_t i = 0; i < grads.size(); ++i) {
    Group g;
    g.members = {static_cast<int>(i)};
    g.agg = members_aggregate(g.members, grads, sizes);
    g.dsz = sizes[i];
    g.util = utility_sum(g.members, g.agg, g.dsz, grads, up, s, opt.stats);
    alive.emplace(static_cast<int>(i), std::move(g));
  }

  BenefitCache cache;
  std::vector<MergeRecord> merges;

  auto eval_benefit = [&](const Group& ga, const Group& gb) {
    if (opt.stats) ++opt.stats->benefit_evals;
    std::vector<int> merged;
    merged.reserve(ga.members.size() + gb.members.size());
    std::merge(ga.members.begin(), ga.members.end(), gb.members.begin(), gb.members.end(),
               std::back_inserter(merged));
    const ParamVector agg = members_aggregate(merged, grads, sizes);
    const std::int64_t dsz = ga.dsz + gb.dsz;
    return utility_sum(merged, agg, dsz, grads, up, s, opt.stats) - ga.util - gb.util;
  };

  while (alive.size() > 1) {
    if (opt.forced_k && static_cast<int>(alive.size()) <= *opt.forced_k) break;

    double best = -std::numeric_limits<double>::infinity();
    int best_a = -1, best_b = -1;
    for (auto ia = alive.begin(); ia != alive.end(); ++ia) {
      for (auto ib = std::next(ia); ib != alive.end(); ++ib) {
        double benefit;
        std::optional<double> hit = opt.use_cache ? cache.get(ia->first, ib->first) : std::nullopt;
        if (hit) {
          benefit = *hit;
          if (opt.stats) ++opt.stats->cache_hits;
        } else {
          benefit = eval_benefit(ia->second, ib->second);
          if (opt.use_cache) cache.put(ia->first, ib->first, benefit);
        }
        // strict > keeps the lexicographically smallest argmax pair
        if (benefit > best) {
          best = benefit;
          best_a = ia->first;
          best_b = ib->first;
        }
      }
    }
    if (!opt.forced_k && best <= 0.0) break;

    Group& ga = alive.at(best_a);
    Group& gb = alive.at(best_b);
    std::vector<int> merged;
    merged.reserve(ga.members.size() + gb.members.size());
    std::merge(ga.members.begin(), ga.members.end(), gb.members.begin(), gb.members.end(),
               std::back_inserter(merged));
    ga.members = std::move(merged);
    ga.dsz += gb.dsz;
    ga.agg = members_aggregate(ga.members, grads, sizes);
    ga.util = utility_sum(ga.members, ga.agg, ga.dsz, grads, up, s, opt.stats);
    alive.erase(best_b);
    cache.invalidate(best_a);
    cache.invalidate(best_b);
    merges.push_back({best_a, best_b, best});
  }

  Partition part;
  part.merges = std::move(merges);
  for (auto& [id, g] : alive) {
    (void)id;
    part.groups.push_back(std::move(g.members));
    part.group_sizes.push_back(g.dsz);
    part.group_grads.push_back(std::move(g.agg));
  }
  return part;
}

int select_similarity_layer(const std::vector<ParamVector>& grads) {
  if (grads.empty()) throw std::invalid_argument("select_similarity_layer: no gradients");
  for (std::size_t i = 1; i < grads.size(); ++i) {
    if (!same_layout(grads[i], grads[0]))
      throw std::invalid_argument("select_similarity_layer: client " + std::to_string(i) +
                                  " gradient layout differs from client 0");
  }
  const int layers = layer_count(grads[0]);
  const double n = static_cast<double>(grads.size());

  int best_layer = 0;
  double best_rel = -std::numeric_limits<double>::infinity();
  for (int l = 0; l < layers; ++l) {
    const Slice s = layer_slice(grads[0], l);
    double var_sum = 0.0, mean_sum = 0.0;
    for (std::size_t j = s.offset; j < s.offset + s.length; ++j) {
      double mu = 0.0;
      for (const auto& g : grads) mu += g.values[j];
      mu /= n;
      double var = 0.0;
      for (const auto& g : grads) {
        const double d = g.values[j] - mu;
        var += d * d;
      }
      var /= n;
      var_sum += var;
      mean_sum += mu;
    }
    const double len = static_cast<double>(s.length);
    const double rel = (var_sum / len) / (std::abs(mean_sum / len) + 1e-12);
    if (rel > best_rel) {
      best_rel = rel;
      best_layer = l;
    }
  }
  return best_layer;
}

std::vector<double> client_utilities(const Partition& part, const std::vector<ParamVector>& grads,
                                     const std::vector<std::int64_t>& sizes,
                                     const UtilityParams& up, std::optional<Slice> slice) {
  check_partition_inputs(grads, sizes);
  const Slice s = slice ? *slice : similarity_slice(grads[0], up);
  std::vector<double> out(grads.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t g = 0; g < part.groups.size(); ++g) {
    const ParamVector agg = members_aggregate(part.groups[g], grads, sizes);
    const std::int64_t dsz = members_size(part.groups[g], sizes);
    for (int m : part.groups[g]) {
      out[static_cast<std::size_t>(m)] =
          client_utility(grads[static_cast<std::size_t>(m)], agg, dsz, up, s);
    }
  }
  return out;
}

double total_utility(const Partition& part, const std::vector<ParamVector>& grads,
                     const std::vector<std::int64_t>& sizes, const UtilityParams& up,
                     std::optional<Slice> slice) {
  double total = 0.0;
  for (const auto& g : part.groups) total += group_utility(g, grads, sizes, up, slice);
  return total;
}

std::string partition_to_json(const Partition& part, int epoch) {
  nlohmann::json j;
  j["groups"] = part.groups;
  j["epoch"] = epoch;
  return j.dump();
}

std::vector<std::vector<int>> groups_from_json(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  if (!j.contains("groups"))
    throw std::invalid_argument("partition JSON is missing the \"groups\" key");
  return j.at("groups").get<std::vector<std::vector<int>>>();
}

}  // namespace fedsilo
