#include "fedsilo/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fedsilo {

namespace {

constexpr std::uint64_t kInitTag = 11;
constexpr std::uint64_t kTrainTag = 12;
constexpr std::uint64_t kShadowTag = 13;
constexpr std::uint64_t kClusterTag = 14;

bool hcct_family(Scheme s) {
  return s == Scheme::hcct || s == Scheme::hcct_e || s == Scheme::hcct_p;
}

void copy_slice(ParamVector& dst, const ParamVector& src, Slice s) {
  for (std::size_t i = s.offset; i < s.offset + s.length; ++i) dst.values[i] = src.values[i];
}

double nan_value() { return std::numeric_limits<double>::quiet_NaN(); }

// the structure an epoch will train under, decided before any training
struct Plan {
  std::vector<std::vector<int>> groups;  // sorted by first member
  std::vector<double> utilities;         // per client; NaN when undefined
  std::vector<bool> joins;               // maxfl
  std::vector<std::vector<int>> chosen;  // ifca/flsc cluster picks, ascending
  std::int64_t macs = 0;
  int similarity_layer = -1;
};

void sort_groups(std::vector<std::vector<int>>& groups) {
  std::sort(groups.begin(), groups.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
}

class Runner {
 public:
  Runner(const ExperimentSetup& setup, std::uint64_t seed) : cfg_(setup), seed_(seed) {}

  ExperimentResult run() {
    int extra = 0;
    for (const auto& [epoch, count] : cfg_.train.arrivals) {
      (void)epoch;
      extra += count;
    }
    all_data_ = generate_scenario(cfg_.scenario, seed_, extra);
    const int n0 = static_cast<int>(all_data_.size()) - extra;
    validate(all_data_[0].train.dim, n0);

    const ParamVector w0 = init_params(cfg_.arch, derive_seed(seed_, kInitTag));
    states_.reserve(all_data_.size());
    for (int i = 0; i < n0; ++i) push_client(i, w0);

    if (cfg_.scheme == Scheme::ifca || cfg_.scheme == Scheme::flsc) {
      clusters_.push_back(w0);
      for (int c = 1; c < cfg_.train.n_groups; ++c) {
        clusters_.push_back(
            init_params(cfg_.arch, derive_seed(seed_, kClusterTag, static_cast<std::uint64_t>(c))));
      }
    }
    shared_model_ = w0;

    last_groups_.clear();
    for (int i = 0; i < n0; ++i) last_groups_.push_back({i});

    ExperimentResult res;
    for (int t = 0; t <= cfg_.train.epochs; ++t) {
      if (t > 0) {
        if (auto it = cfg_.train.arrivals.find(t); it != cfg_.train.arrivals.end()) {
          admit(it->second, t);
        }
      }
      Plan p = plan_epoch(t);
      res.log.records.push_back(snapshot(t, p));
      last_groups_ = p.groups;
      if (t == cfg_.train.epochs) break;
      execute(p, t);
    }

    for (const auto& st : states_) res.final_models.push_back(st.model);
    res.data_fingerprint = dataset_fingerprint(all_data_);
    res.similarity_layer = frozen_layer_.value_or(-1);
    return res;
  }

 private:
  const ExperimentSetup& cfg_;
  std::uint64_t seed_;
  std::vector<ClientDataset> all_data_;
  std::vector<ClientState> states_;
  std::vector<ParamVector> clusters_;  // ifca/flsc
  ParamVector shared_model_;           // maxfl/fedfa
  std::optional<int> frozen_layer_;    // hcct_e
  std::vector<std::vector<int>> last_groups_;

  void validate(int data_dim, int n0) const {
    const TrainParams& tp = cfg_.train;
    auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
    if (n0 < 1) fail("need at least one client");
    if (tp.epochs < 0) fail("epochs must be >= 0");
    if (tp.local_steps < 1) fail("local_steps must be >= 1");
    if (tp.batch_size < 1) fail("batch_size must be >= 1");
    if (!(tp.eta0 > 0.0)) fail("eta0 must be > 0");
    if (!(tp.gamma > 0.0 && tp.gamma <= 1.0)) fail("gamma must be in (0,1]");
    if (!(tp.alpha > 0.0)) fail("alpha must be > 0");
    if (!(tp.beta > 0.0)) fail("beta must be > 0");
    if (cfg_.arch.widths.size() < 2) fail("arch needs at least one layer");
    if (cfg_.arch.widths.front() != data_dim) fail("arch input width must match feature_dim");
    const int classes =
        cfg_.scenario.kind == ScenarioKind::motivating ? 10 : cfg_.scenario.classes;
    if (cfg_.arch.widths.back() != classes) fail("arch output width must match classes");
    if (cfg_.scheme == Scheme::hcct_p && cfg_.arch.widths.size() < 3)
      fail("hcct_p needs at least two layers");
    if (cfg_.scheme == Scheme::ifca || cfg_.scheme == Scheme::flsc) {
      if (tp.n_groups < 1) fail("n_groups must be >= 1");
      if (cfg_.scheme == Scheme::flsc && (tp.n_select < 1 || tp.n_select > tp.n_groups))
        fail("n_select must be in [1, n_groups]");
    }
    if (tp.forced_k) {
      if (!hcct_family(cfg_.scheme)) fail("forced_k applies only to the hcct schemes");
      if (*tp.forced_k < 1) fail("forced_k must be >= 1");
    }
    if (!tp.arrivals.empty()) {
      if (!hcct_family(cfg_.scheme)) fail("arrivals apply only to the hcct schemes");
      for (const auto& [epoch, count] : tp.arrivals) {
        if (epoch < 1 || epoch > tp.epochs - 1) fail("arrival epochs must be in [1, epochs-1]");
        if (count < 1) fail("arrival counts must be >= 1");
      }
    }
  }

  void push_client(int id, const ParamVector& w0) {
    ClientState st;
    st.id = id;
    st.data = all_data_[static_cast<std::size_t>(id)];
    st.model = w0;
    st.shadow = w0;
    st.train_rng = Rng(derive_seed(seed_, kTrainTag, static_cast<std::uint64_t>(id)));
    st.shadow_rng = Rng(derive_seed(seed_, kShadowTag, static_cast<std::uint64_t>(id)));
    states_.push_back(std::move(st));
  }

  int n() const { return static_cast<int>(states_.size()); }

  std::vector<ParamVector> last_gradients() const {
    std::vector<ParamVector> g;
    g.reserve(states_.size());
    for (const auto& st : states_) g.push_back(st.last_gradient);
    return g;
  }

  std::vector<std::int64_t> sizes() const {
    std::vector<std::int64_t> s;
    s.reserve(states_.size());
    for (const auto& st : states_) s.push_back(static_cast<std::int64_t>(st.data.train.size()));
    return s;
  }

  UtilityParams utility_params() const {
    UtilityParams up;
    up.alpha = cfg_.train.alpha;
    up.beta = cfg_.train.beta;
    if (cfg_.scheme == Scheme::hcct_e && frozen_layer_) {
      up.mode = SimilarityMode::selected_layer;
      up.selected_layer = *frozen_layer_;
    }
    return up;
  }

  std::optional<Slice> similarity_override() const {
    if (cfg_.scheme == Scheme::hcct_p) return shared_prefix_slice(states_[0].model);
    return std::nullopt;
  }

  Slice broadcast_slice() const {
    if (cfg_.scheme == Scheme::hcct_p) return shared_prefix_slice(states_[0].model);
    return full_slice(states_[0].model);
  }

  double full_loss(const ParamVector& model, const Dataset& d) const {
    return forward_loss(cfg_.arch, model, as_batch(d));
  }

  std::vector<std::vector<int>> singleton_groups() const {
    std::vector<std::vector<int>> g;
    for (int i = 0; i < n(); ++i) g.push_back({i});
    return g;
  }

  std::vector<int> everyone() const {
    std::vector<int> all(static_cast<std::size_t>(n()));
    for (int i = 0; i < n(); ++i) all[static_cast<std::size_t>(i)] = i;
    return all;
  }

  void fill_utilities(Plan& p, int t) {
    p.utilities.assign(static_cast<std::size_t>(n()), nan_value());
    if (t == 0) return;
    if (cfg_.scheme == Scheme::flsc && cfg_.train.n_select > 1) return;  // overlapping groups
    Partition part;
    part.groups = p.groups;
    p.utilities =
        client_utilities(part, last_gradients(), sizes(), utility_params(), similarity_override());
  }

  Plan plan_hcct(int t) {
    Plan p;
    if (t == 0) {
      if (cfg_.train.forced_k && *cfg_.train.forced_k == 1 && n() > 1) {
        p.groups.push_back(everyone());
      } else {
        p.groups = singleton_groups();
      }
      fill_utilities(p, t);
      return p;
    }
    auto grads = last_gradients();
    if (cfg_.scheme == Scheme::hcct_e && !frozen_layer_) {
      frozen_layer_ = select_similarity_layer(grads);
    }
    const UtilityParams up = utility_params();
    PartitionStats stats;
    PartitionOptions opt;
    opt.forced_k = cfg_.train.forced_k;
    opt.slice_override = similarity_override();
    opt.stats = &stats;
    const Partition part = client_partition(grads, sizes(), up, opt);
    p.groups = part.groups;
    p.macs = stats.similarity_macs;
    p.similarity_layer = cfg_.scheme == Scheme::hcct_e ? *frozen_layer_ : -1;
    p.utilities = client_utilities(part, grads, sizes(), up, similarity_override());
    return p;
  }

  Plan plan_fixed(bool one_group, int t) {
    Plan p;
    if (one_group && n() > 1) {
      p.groups.push_back(everyone());
    } else {
      p.groups = singleton_groups();
    }
    fill_utilities(p, t);
    return p;
  }

  Plan plan_maxfl(int t) {
    Plan p;
    p.joins.resize(static_cast<std::size_t>(n()));
    std::vector<int> joiners;
    for (int i = 0; i < n(); ++i) {
      const auto& st = states_[static_cast<std::size_t>(i)];
      const double lg = full_loss(shared_model_, st.data.train);
      const double ls = full_loss(st.shadow, st.data.train);
      p.joins[static_cast<std::size_t>(i)] = lg <= ls;
      if (lg <= ls) joiners.push_back(i);
    }
    if (!joiners.empty()) p.groups.push_back(joiners);
    for (int i = 0; i < n(); ++i) {
      if (!p.joins[static_cast<std::size_t>(i)]) p.groups.push_back({i});
    }
    sort_groups(p.groups);
    fill_utilities(p, t);
    return p;
  }

  Plan plan_clusters(int t) {
    Plan p;
    const int k = static_cast<int>(clusters_.size());
    const int pick = cfg_.scheme == Scheme::flsc ? cfg_.train.n_select : 1;
    p.chosen.resize(static_cast<std::size_t>(n()));
    std::vector<std::vector<int>> members(static_cast<std::size_t>(k));
    for (int i = 0; i < n(); ++i) {
      std::vector<std::pair<double, int>> ranked;
      ranked.reserve(static_cast<std::size_t>(k));
      for (int c = 0; c < k; ++c) {
        ranked.emplace_back(full_loss(clusters_[static_cast<std::size_t>(c)],
                                      states_[static_cast<std::size_t>(i)].data.train),
                            c);
      }
      std::sort(ranked.begin(), ranked.end());
      auto& mine = p.chosen[static_cast<std::size_t>(i)];
      for (int j = 0; j < pick; ++j) mine.push_back(ranked[static_cast<std::size_t>(j)].second);
      std::sort(mine.begin(), mine.end());
      for (int c : mine) members[static_cast<std::size_t>(c)].push_back(i);
    }
    for (auto& m : members) {
      if (!m.empty()) p.groups.push_back(m);
    }
    sort_groups(p.groups);
    fill_utilities(p, t);
    return p;
  }

  Plan plan_epoch(int t) {
    switch (cfg_.scheme) {
      case Scheme::hcct:
      case Scheme::hcct_e:
      case Scheme::hcct_p: return plan_hcct(t);
      case Scheme::independent: return plan_fixed(false, t);
      case Scheme::global: return plan_fixed(true, t);
      case Scheme::maxfl: return plan_maxfl(t);
      case Scheme::fedfa: return plan_fixed(true, t);
      case Scheme::ifca:
      case Scheme::flsc: return plan_clusters(t);
    }
    throw std::logic_error("bad scheme");
  }

  // data-size-weighted average of the members' models over the broadcast slice
  ParamVector group_model(const std::vector<int>& members) const {
    if (members.size() == 1) return states_[static_cast<std::size_t>(members[0])].model;
    std::vector<const ParamVector*> models;
    std::vector<double> weights;
    std::int64_t dhat = 0;
    for (int m : members) dhat += static_cast<std::int64_t>(states_[static_cast<std::size_t>(m)].data.train.size());
    for (int m : members) {
      const auto& st = states_[static_cast<std::size_t>(m)];
      models.push_back(&st.model);
      weights.push_back(static_cast<double>(st.data.train.size()) / static_cast<double>(dhat));
    }
    return weighted_average_slice(models, weights, broadcast_slice(),
                                  states_[static_cast<std::size_t>(members[0])].model);
  }

  void solo_step(int i, double eta) {
    auto& st = states_[static_cast<std::size_t>(i)];
    auto r = local_train(cfg_.arch, st.model, st.data.train, cfg_.train.local_steps,
                         cfg_.train.batch_size, eta, st.train_rng);
    st.model = std::move(r.updated);
    st.last_gradient = std::move(r.gradient);
  }

  // broadcast `start`, run local training on every member, apply the
  // size-weighted gradient step to `start`, hand the result back to the
  // members; returns the updated group model
  ParamVector collaborative_step(const ParamVector& start, const std::vector<int>& members,
                                 double eta, Slice s, bool personalized) {
    std::vector<ParamVector> grads;
    std::vector<ParamVector> updated;
    grads.reserve(members.size());
    std::int64_t dhat = 0;
    for (int m : members) dhat += static_cast<std::int64_t>(states_[static_cast<std::size_t>(m)].data.train.size());

    for (int m : members) {
      auto& st = states_[static_cast<std::size_t>(m)];
      ParamVector begin;
      if (personalized) {
        begin = st.model;  // keep the local classifier, take the shared slice
        copy_slice(begin, start, s);
      } else {
        begin = start;
      }
      auto r = local_train(cfg_.arch, begin, st.data.train, cfg_.train.local_steps,
                           cfg_.train.batch_size, eta, st.train_rng);
      if (personalized) updated.push_back(std::move(r.updated));
      grads.push_back(std::move(r.gradient));
    }

    std::vector<const ParamVector*> gp;
    std::vector<double> weights;
    for (std::size_t k = 0; k < members.size(); ++k) {
      gp.push_back(&grads[k]);
      weights.push_back(
          static_cast<double>(states_[static_cast<std::size_t>(members[k])].data.train.size()) /
          static_cast<double>(dhat));
    }
    const ParamVector agg = weighted_sum(gp, weights);
    ParamVector next = start;
    add_scaled_slice(next, -eta, agg, s);

    for (std::size_t k = 0; k < members.size(); ++k) {
      auto& st = states_[static_cast<std::size_t>(members[k])];
      if (personalized) {
        st.model = std::move(updated[k]);
        copy_slice(st.model, next, s);
      } else {
        st.model = next;
      }
      st.last_gradient = std::move(grads[k]);
    }
    return next;
  }

  void execute(const Plan& p, int t) {
    const double eta = learning_rate(cfg_.train, t);
    switch (cfg_.scheme) {
      case Scheme::hcct:
      case Scheme::hcct_e:
      case Scheme::hcct_p:
      case Scheme::independent:
      case Scheme::global: {
        const Slice s = broadcast_slice();
        const bool personalized = cfg_.scheme == Scheme::hcct_p;
        if (personalized) {
          // the classifier spans must stay out of the broadcast payload
          if (s.offset + s.length >= states_[0].model.values.size())
            throw std::logic_error("personalized broadcast would include the classifier");
        }
        for (const auto& g : p.groups) {
          if (g.size() == 1) {
            solo_step(g[0], eta);
          } else {
            collaborative_step(group_model(g), g, eta, s, personalized);
          }
        }
        break;
      }
      case Scheme::maxfl: {
        std::vector<int> joiners;
        for (int i = 0; i < n(); ++i) {
          if (p.joins[static_cast<std::size_t>(i)]) joiners.push_back(i);
          else solo_step(i, eta);
        }
        if (!joiners.empty()) {
          shared_model_ =
              collaborative_step(shared_model_, joiners, eta, full_slice(shared_model_), false);
        }
        for (auto& st : states_) {
          auto r = local_train(cfg_.arch, st.shadow, st.data.train, cfg_.train.local_steps,
                               cfg_.train.batch_size, eta, st.shadow_rng);
          st.shadow = std::move(r.updated);
        }
        break;
      }
      case Scheme::fedfa: {
        std::vector<ParamVector> grads;
        std::vector<double> raw;
        for (auto& st : states_) {
          auto r = local_train(cfg_.arch, shared_model_, st.data.train, cfg_.train.local_steps,
                               cfg_.train.batch_size, eta, st.train_rng);
          const double acc =
              std::clamp(accuracy(cfg_.arch, r.updated, st.data.train), 1e-3, 1.0 - 1e-3);
          raw.push_back(-std::log2(acc));
          st.last_gradient = r.gradient;
          grads.push_back(std::move(r.gradient));
        }
        double total = 0.0;
        for (double v : raw) total += v;
        std::vector<const ParamVector*> gp;
        std::vector<double> weights;
        for (std::size_t k = 0; k < grads.size(); ++k) {
          gp.push_back(&grads[k]);
          weights.push_back(raw[k] / total);
        }
        const ParamVector agg = weighted_sum(gp, weights);
        add_scaled(shared_model_, -eta, agg);
        for (auto& st : states_) st.model = shared_model_;
        break;
      }
      case Scheme::ifca: {
        for (int c = 0; c < static_cast<int>(clusters_.size()); ++c) {
          std::vector<int> members;
          for (int i = 0; i < n(); ++i) {
            if (p.chosen[static_cast<std::size_t>(i)][0] == c) members.push_back(i);
          }
          if (members.empty()) continue;  // untouched, bitwise
          clusters_[static_cast<std::size_t>(c)] = collaborative_step(
              clusters_[static_cast<std::size_t>(c)], members, eta,
              full_slice(clusters_[static_cast<std::size_t>(c)]), false);
        }
        break;
      }
      case Scheme::flsc: {
        std::vector<ParamVector> grads(static_cast<std::size_t>(n()));
        for (int i = 0; i < n(); ++i) {
          auto& st = states_[static_cast<std::size_t>(i)];
          const auto& mine = p.chosen[static_cast<std::size_t>(i)];
          const ParamVector start = average_clusters(mine);
          auto r = local_train(cfg_.arch, start, st.data.train, cfg_.train.local_steps,
                               cfg_.train.batch_size, eta, st.train_rng);
          st.last_gradient = r.gradient;
          grads[static_cast<std::size_t>(i)] = std::move(r.gradient);
        }
        for (int c = 0; c < static_cast<int>(clusters_.size()); ++c) {
          std::vector<int> receivers;
          for (int i = 0; i < n(); ++i) {
            const auto& mine = p.chosen[static_cast<std::size_t>(i)];
            if (std::find(mine.begin(), mine.end(), c) != mine.end()) receivers.push_back(i);
          }
          if (receivers.empty()) continue;
          std::int64_t dhat = 0;
          for (int i : receivers) dhat += static_cast<std::int64_t>(states_[static_cast<std::size_t>(i)].data.train.size());
          std::vector<const ParamVector*> gp;
          std::vector<double> weights;
          for (int i : receivers) {
            gp.push_back(&grads[static_cast<std::size_t>(i)]);
            weights.push_back(
                static_cast<double>(states_[static_cast<std::size_t>(i)].data.train.size()) /
                static_cast<double>(dhat));
          }
          const ParamVector agg = weighted_sum(gp, weights);
          add_scaled(clusters_[static_cast<std::size_t>(c)], -eta, agg);
        }
        for (int i = 0; i < n(); ++i) {
          states_[static_cast<std::size_t>(i)].model =
              average_clusters(p.chosen[static_cast<std::size_t>(i)]);
        }
        break;
      }
    }
  }

  ParamVector average_clusters(const std::vector<int>& which) const {
    std::vector<const ParamVector*> models;
    std::vector<double> weights;
    for (int c : which) {
      models.push_back(&clusters_[static_cast<std::size_t>(c)]);
      weights.push_back(1.0 / static_cast<double>(which.size()));
    }
    return weighted_average_slice(models, weights,
                                  full_slice(clusters_[static_cast<std::size_t>(which[0])]),
                                  clusters_[static_cast<std::size_t>(which[0])]);
  }

  // a newcomer probes the loss-closest group, trains once from its model, and
  // joins the group whose merge benefit is largest if any benefit is positive
  void admit(int count, int t) {
    const double eta = learning_rate(cfg_.train, t);
    for (int k = 0; k < count; ++k) {
      const int id = n();
      if (static_cast<std::size_t>(id) >= all_data_.size())
        throw std::logic_error("arrival without a generated dataset");
      ClientState st;
      st.id = id;
      st.data = all_data_[static_cast<std::size_t>(id)];
      st.train_rng = Rng(derive_seed(seed_, kTrainTag, static_cast<std::uint64_t>(id)));
      st.shadow_rng = Rng(derive_seed(seed_, kShadowTag, static_cast<std::uint64_t>(id)));

      std::vector<ParamVector> gmodels;
      gmodels.reserve(last_groups_.size());
      for (const auto& g : last_groups_) gmodels.push_back(group_model(g));
      int donor = 0;
      double best_loss = std::numeric_limits<double>::infinity();
      for (std::size_t gi = 0; gi < gmodels.size(); ++gi) {
        const double l = full_loss(gmodels[gi], st.data.train);
        if (l < best_loss) {
          best_loss = l;
          donor = static_cast<int>(gi);
        }
      }

      auto probe = local_train(cfg_.arch, gmodels[static_cast<std::size_t>(donor)], st.data.train,
                               cfg_.train.local_steps, cfg_.train.batch_size, eta, st.train_rng);

      auto grads = last_gradients();
      grads.push_back(probe.gradient);
      auto sz = sizes();
      sz.push_back(static_cast<std::int64_t>(st.data.train.size()));
      const UtilityParams up = utility_params();
      int best_group = -1;
      double best_benefit = 0.0;
      for (std::size_t gi = 0; gi < last_groups_.size(); ++gi) {
        const double b =
            merge_benefit({id}, last_groups_[gi], grads, sz, up, similarity_override());
        if (b > best_benefit) {
          best_benefit = b;
          best_group = static_cast<int>(gi);
        }
      }

      st.model = best_group >= 0 ? gmodels[static_cast<std::size_t>(best_group)]
                                 : std::move(probe.updated);
      st.shadow = st.model;
      st.last_gradient = std::move(probe.gradient);
      states_.push_back(std::move(st));
      last_groups_.push_back({id});
    }
  }

  EpochRecord snapshot(int t, const Plan& p) {
    EpochRecord r;
    r.epoch = t;
    std::vector<ParamVector> models;
    std::vector<const Dataset*> trains;
    for (const auto& st : states_) {
      r.client_ids.push_back(st.id);
      r.test_errors.push_back(test_error(cfg_.arch, st.model, st.data.test));
      r.train_losses.push_back(full_loss(st.model, st.data.train));
      models.push_back(st.model);
      trains.push_back(&st.data.train);
    }
    r.groups = p.groups;
    r.utilities = p.utilities;
    r.grad_norm_sum = grad_norm_sum(cfg_.arch, models, trains);
    if (cfg_.train.compute_kappa && t == 0) {
      r.kappa = kappa_estimate(cfg_.arch, states_[0].model, trains);
    }
    r.partition_macs = p.macs;
    r.similarity_layer = p.similarity_layer;
    return r;
  }
};

}  // namespace

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::hcct: return "hcct";
    case Scheme::hcct_e: return "hcct_e";
    case Scheme::hcct_p: return "hcct_p";
    case Scheme::independent: return "independent";
    case Scheme::global: return "global";
    case Scheme::maxfl: return "maxfl";
    case Scheme::fedfa: return "fedfa";
    case Scheme::ifca: return "ifca";
    case Scheme::flsc: return "flsc";
  }
  throw std::logic_error("bad Scheme");
}

Scheme scheme_from_string(const std::string& s) {
  if (s == "hcct") return Scheme::hcct;
  if (s == "hcct_e") return Scheme::hcct_e;
  if (s == "hcct_p") return Scheme::hcct_p;
  if (s == "independent") return Scheme::independent;
  if (s == "global") return Scheme::global;
  if (s == "maxfl") return Scheme::maxfl;
  if (s == "fedfa") return Scheme::fedfa;
  if (s == "ifca") return Scheme::ifca;
  if (s == "flsc") return Scheme::flsc;
  throw std::invalid_argument("unknown scheme '" + s + "'");
}

double learning_rate(const TrainParams& train, int epoch) {
  return train.eta0 * std::pow(train.gamma, epoch);
}

ExperimentResult run_experiment(const ExperimentSetup& setup, std::uint64_t seed) {
  Runner runner(setup, seed);
  return runner.run();
}

}  // namespace fedsilo
