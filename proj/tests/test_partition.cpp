#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "fedsilo/partition.hpp"
#include "fedsilo/rng.hpp"

using namespace fedsilo;

namespace {

// ---------- straight-line oracles, no shared code with the module ----------

std::vector<double> slice_vals(const ParamVector& g, Slice s) {
  return {g.values.begin() + static_cast<std::ptrdiff_t>(s.offset),
          g.values.begin() + static_cast<std::ptrdiff_t>(s.offset + s.length)};
}

double oracle_cos(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  na = std::sqrt(na);
  nb = std::sqrt(nb);
  if (na < 1e-12 || nb < 1e-12) return 0.0;
  return d / (na * nb);
}

double oracle_group_utility(const std::vector<int>& members, const std::vector<ParamVector>& grads,
                            const std::vector<std::int64_t>& sizes, double alpha, double beta,
                            Slice s) {
  std::int64_t dsz = 0;
  for (int m : members) dsz += sizes[static_cast<std::size_t>(m)];
  std::vector<double> agg(s.length, 0.0);
  for (int m : members) {
    const double w = static_cast<double>(sizes[static_cast<std::size_t>(m)]) /
                     static_cast<double>(dsz);
    const auto& g = grads[static_cast<std::size_t>(m)];
    for (std::size_t j = 0; j < s.length; ++j) agg[j] += w * g.values[s.offset + j];
  }
  double util = 0.0;
  for (int m : members) {
    util += -alpha / static_cast<double>(dsz) +
            oracle_cos(slice_vals(grads[static_cast<std::size_t>(m)], s), agg) + beta;
  }
  return util;
}

double oracle_benefit(const std::vector<int>& a, const std::vector<int>& b,
                      const std::vector<ParamVector>& grads,
                      const std::vector<std::int64_t>& sizes, double alpha, double beta, Slice s) {
  std::vector<int> merged = a;
  merged.insert(merged.end(), b.begin(), b.end());
  std::sort(merged.begin(), merged.end());
  return oracle_group_utility(merged, grads, sizes, alpha, beta, s) -
         oracle_group_utility(a, grads, sizes, alpha, beta, s) -
         oracle_group_utility(b, grads, sizes, alpha, beta, s);
}

// Replays the merge log against exhaustive oracle benefit scans: every merge
// must pick an argmax pair with a matching benefit, strictly raise the total
// utility, and (unforced) leave no positive pair behind at the end.
void audit_partition(const Partition& part, const std::vector<ParamVector>& grads,
                     const std::vector<std::int64_t>& sizes, const UtilityParams& up,
                     bool forced) {
  const Slice s = similarity_slice(grads[0], up);
  std::map<int, std::vector<int>> gs;
  for (std::size_t i = 0; i < grads.size(); ++i) gs[static_cast<int>(i)] = {static_cast<int>(i)};

  auto total = [&] {
    double t = 0.0;
    for (auto& [id, mem] : gs) {
      (void)id;
      t += oracle_group_utility(mem, grads, sizes, up.alpha, up.beta, s);
    }
    return t;
  };

  double prev_total = total();
  for (const auto& rec : part.merges) {
    REQUIRE(gs.count(rec.a) == 1);
    REQUIRE(gs.count(rec.b) == 1);
    double best = -std::numeric_limits<double>::infinity();
    for (auto ia = gs.begin(); ia != gs.end(); ++ia) {
      for (auto ib = std::next(ia); ib != gs.end(); ++ib) {
        best = std::max(best,
                        oracle_benefit(ia->second, ib->second, grads, sizes, up.alpha, up.beta, s));
      }
    }
    const double chosen = oracle_benefit(gs[rec.a], gs[rec.b], grads, sizes, up.alpha, up.beta, s);
    CHECK(chosen >= best - 1e-9);
    CHECK(std::abs(chosen - rec.benefit) < 1e-9);
    if (!forced) CHECK(rec.benefit > 0.0);

    auto& ga = gs[rec.a];
    auto& gb = gs[rec.b];
    ga.insert(ga.end(), gb.begin(), gb.end());
    std::sort(ga.begin(), ga.end());
    gs.erase(rec.b);

    const double now = total();
    if (!forced) CHECK(now > prev_total);
    prev_total = now;
  }

  if (!forced) {
    for (auto ia = gs.begin(); ia != gs.end(); ++ia) {
      for (auto ib = std::next(ia); ib != gs.end(); ++ib) {
        CHECK(oracle_benefit(ia->second, ib->second, grads, sizes, up.alpha, up.beta, s) <= 1e-9);
      }
    }
  }

  // the replayed end state must equal the returned partition
  std::vector<std::vector<int>> replay;
  for (auto& [id, mem] : gs) {
    (void)id;
    replay.push_back(mem);
  }
  CHECK(replay == part.groups);
}

void check_valid_partition(const Partition& part, std::size_t n) {
  std::set<int> seen;
  for (const auto& g : part.groups) {
    CHECK(!g.empty());
    CHECK(std::is_sorted(g.begin(), g.end()));
    for (int m : g) {
      CHECK(m >= 0);
      CHECK(m < static_cast<int>(n));
      CHECK(seen.insert(m).second);  // no client twice
    }
  }
  CHECK(seen.size() == n);
  for (std::size_t g = 1; g < part.groups.size(); ++g) {
    CHECK(part.groups[g - 1].front() < part.groups[g].front());
  }
}

ParamVector make_grad(std::vector<double> vals) {
  ParamVector p;
  const std::size_t n = vals.size();
  p.values = std::move(vals);
  p.spans = {{0, n, "w0"}};
  return p;
}

// two-layer layout: w0 6, b0 3, w1 6, b1 2
ParamVector random_grad(Rng& rng, double scale = 1.0) {
  ParamVector p;
  p.values.resize(17);
  for (auto& v : p.values) v = scale * rng.normal();
  p.spans = {{0, 6, "w0"}, {6, 3, "b0"}, {9, 6, "w1"}, {15, 2, "b1"}};
  return p;
}

}  // namespace

TEST_CASE("cosine_similarity worked values") {
  auto a = make_grad({1.0, 1.0});
  auto b = make_grad({1.0, 0.0});
  CHECK(cosine_similarity(a, b, {0, 2}) ==
        doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-14));
  CHECK(cosine_similarity(a, a, {0, 2}) == doctest::Approx(1.0).epsilon(1e-14));

  auto zero = make_grad({0.0, 0.0});
  CHECK(cosine_similarity(a, zero, {0, 2}) == 0.0);
  CHECK(cosine_similarity(zero, zero, {0, 2}) == 0.0);
  auto tiny = make_grad({1e-13, 0.0});
  CHECK(cosine_similarity(a, tiny, {0, 2}) == 0.0);

  auto neg = make_grad({-1.0, -1.0});
  CHECK(cosine_similarity(a, neg, {0, 2}) == doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("cosine_similarity counts multiply-accumulates") {
  PartitionStats st;
  auto a = make_grad({1.0, 2.0, 3.0, 4.0});
  cosine_similarity(a, a, {0, 4}, &st);
  CHECK(st.similarity_macs == 12);
  cosine_similarity(a, a, {1, 2}, &st);
  CHECK(st.similarity_macs == 18);
}

TEST_CASE("client_utility singleton worked value") {
  auto g = make_grad({3.0, 4.0});
  UtilityParams up;
  up.alpha = 1.0;
  up.beta = 2.0;
  // own group of size 100: -1/100 + 1 + 2
  CHECK(client_utility(g, g, 100, up, {0, 2}) == doctest::Approx(2.99).epsilon(1e-14));
}

TEST_CASE("client_utility argument validation") {
  auto g = make_grad({1.0});
  UtilityParams up;
  CHECK_THROWS_AS(client_utility(g, g, 0, up, {0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(client_utility(g, g, -5, up, {0, 1}), std::invalid_argument);
  up.alpha = -1.0;
  CHECK_THROWS_AS(client_utility(g, g, 10, up, {0, 1}), std::invalid_argument);
}

TEST_CASE("merge_benefit frozen examples: identical +1, opposed -1") {
  UtilityParams up;
  up.alpha = 100.0;
  up.beta = 2.0;
  std::vector<std::int64_t> sizes{100, 100};

  std::vector<ParamVector> same{make_grad({1.0, 0.0}), make_grad({1.0, 0.0})};
  CHECK(merge_benefit({0}, {1}, same, sizes, up) == doctest::Approx(1.0).epsilon(1e-12));

  std::vector<ParamVector> opposed{make_grad({1.0, 0.0}), make_grad({-1.0, 0.0})};
  CHECK(merge_benefit({0}, {1}, opposed, sizes, up) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("merge_benefit rejects overlapping groups") {
  std::vector<ParamVector> grads{make_grad({1.0}), make_grad({2.0})};
  std::vector<std::int64_t> sizes{10, 10};
  UtilityParams up;
  CHECK_THROWS_AS(merge_benefit({0, 1}, {1}, grads, sizes, up), std::invalid_argument);
}

TEST_CASE("merge_benefit matches the straight-line oracle on random instances") {
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ParamVector> grads;
    std::vector<std::int64_t> sizes;
    for (int i = 0; i < 4; ++i) {
      grads.push_back(random_grad(rng));
      sizes.push_back(1 + static_cast<std::int64_t>(rng.uniform_int(400)));
    }
    UtilityParams up;
    up.alpha = trial % 2 ? 100.0 : 1.0;
    up.beta = 2.0;
    const Slice s = full_slice(grads[0]);
    const double got = merge_benefit({0, 2}, {1, 3}, grads, sizes, up);
    const double want = oracle_benefit({0, 2}, {1, 3}, grads, sizes, up.alpha, up.beta, s);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("client_partition merges two identical clients, keeps opposed ones apart") {
  UtilityParams up;
  up.alpha = 100.0;
  up.beta = 2.0;
  std::vector<std::int64_t> sizes{100, 100};

  std::vector<ParamVector> same{make_grad({1.0, 0.0}), make_grad({1.0, 0.0})};
  auto merged = client_partition(same, sizes, up);
  CHECK(merged.groups == std::vector<std::vector<int>>{{0, 1}});
  REQUIRE(merged.merges.size() == 1);
  CHECK(merged.merges[0].a == 0);
  CHECK(merged.merges[0].b == 1);
  CHECK(merged.merges[0].benefit == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(merged.group_sizes == std::vector<std::int64_t>{200});

  std::vector<ParamVector> opposed{make_grad({1.0, 0.0}), make_grad({-1.0, 0.0})};
  auto apart = client_partition(opposed, sizes, up);
  CHECK(apart.groups == std::vector<std::vector<int>>{{0}, {1}});
  CHECK(apart.merges.empty());
}

TEST_CASE("client_partition six-client merge sequence is exact") {
  // three gradient blocks on orthogonal axes; sizes tuned so the greedy order
  // is (0,1), then (3,4), then ({0,1},2), then stop at three groups
  std::vector<ParamVector> grads{
      make_grad({1, 0, 0}), make_grad({1, 0, 0}), make_grad({1, 0, 0}),
      make_grad({0, 1, 0}), make_grad({0, 1, 0}), make_grad({0, 0, 1}),
  };
  std::vector<std::int64_t> sizes{50, 50, 200, 60, 60, 100};
  UtilityParams up;
  up.alpha = 1.0;
  up.beta = 2.0;

  auto part = client_partition(grads, sizes, up);
  REQUIRE(part.merges.size() == 3);
  CHECK(part.merges[0].a == 0);
  CHECK(part.merges[0].b == 1);
  CHECK(part.merges[0].benefit == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(part.merges[1].a == 3);
  CHECK(part.merges[1].b == 4);
  CHECK(part.merges[1].benefit == doctest::Approx(1.0 / 60).epsilon(1e-12));
  CHECK(part.merges[2].a == 0);
  CHECK(part.merges[2].b == 2);
  CHECK(part.merges[2].benefit == doctest::Approx(0.015).epsilon(1e-12));
  CHECK(part.groups == std::vector<std::vector<int>>{{0, 1, 2}, {3, 4}, {5}});
  audit_partition(part, grads, sizes, up, false);
}

TEST_CASE("client_partition tie-break picks the lexicographically smallest pair") {
  std::vector<ParamVector> grads{make_grad({1, 0}), make_grad({1, 0}), make_grad({1, 0})};
  std::vector<std::int64_t> sizes{100, 100, 100};
  UtilityParams up;
  up.alpha = 100.0;
  auto part = client_partition(grads, sizes, up);
  REQUIRE(part.merges.size() == 2);
  CHECK(part.merges[0].a == 0);
  CHECK(part.merges[0].b == 1);
  CHECK(part.merges[1].a == 0);
  CHECK(part.merges[1].b == 2);
  CHECK(part.groups == std::vector<std::vector<int>>{{0, 1, 2}});
}

TEST_CASE("client_partition single client") {
  std::vector<ParamVector> grads{make_grad({1, 2})};
  std::vector<std::int64_t> sizes{10};
  auto part = client_partition(grads, sizes, UtilityParams{});
  CHECK(part.groups == std::vector<std::vector<int>>{{0}});
  CHECK(part.merges.empty());
}

TEST_CASE("client_partition random instances satisfy the greedy contract") {
  Rng rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_int(7));
    std::vector<ParamVector> grads;
    std::vector<std::int64_t> sizes;
    for (int i = 0; i < n; ++i) {
      grads.push_back(random_grad(rng));
      sizes.push_back(1 + static_cast<std::int64_t>(rng.uniform_int(500)));
    }
    UtilityParams up;
    const double alphas[] = {0.1, 1.0, 10.0, 100.0};
    up.alpha = alphas[trial % 4];
    up.beta = 2.0;

    auto part = client_partition(grads, sizes, up);
    check_valid_partition(part, static_cast<std::size_t>(n));
    audit_partition(part, grads, sizes, up, false);

    // returned aggregates and sizes match a from-scratch recompute
    for (std::size_t g = 0; g < part.groups.size(); ++g) {
      std::int64_t dsz = 0;
      for (int m : part.groups[g]) dsz += sizes[static_cast<std::size_t>(m)];
      CHECK(part.group_sizes[g] == dsz);
      auto agg = members_aggregate(part.groups[g], grads, sizes);
      for (std::size_t j = 0; j < agg.size(); ++j) {
        CHECK(part.group_grads[g].values[j] == agg.values[j]);
      }
    }
  }
}

TEST_CASE("client_partition group structure is invariant to beta") {
  Rng rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 3 + static_cast<int>(rng.uniform_int(5));
    std::vector<ParamVector> grads;
    std::vector<std::int64_t> sizes;
    for (int i = 0; i < n; ++i) {
      grads.push_back(random_grad(rng));
      sizes.push_back(1 + static_cast<std::int64_t>(rng.uniform_int(300)));
    }
    UtilityParams up;
    up.alpha = trial % 2 ? 100.0 : 1.0;

    up.beta = 0.5;
    auto a = client_partition(grads, sizes, up);
    up.beta = 2.0;
    auto b = client_partition(grads, sizes, up);
    up.beta = 100.0;
    auto c = client_partition(grads, sizes, up);
    CHECK(a.groups == b.groups);
    CHECK(b.groups == c.groups);
  }
}

TEST_CASE("client_partition group structure is invariant to gradient scale") {
  Rng rng(55);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 3 + static_cast<int>(rng.uniform_int(5));
    std::vector<ParamVector> base;
    std::vector<std::int64_t> sizes;
    for (int i = 0; i < n; ++i) {
      base.push_back(random_grad(rng));
      sizes.push_back(1 + static_cast<std::int64_t>(rng.uniform_int(300)));
    }
    UtilityParams up;
    up.alpha = trial % 2 ? 100.0 : 1.0;

    auto ref = client_partition(base, sizes, up);
    for (double c : {0.1, 10.0}) {
      std::vector<ParamVector> scaled = base;
      for (auto& g : scaled) {
        for (auto& v : g.values) v *= c;
      }
      auto got = client_partition(scaled, sizes, up);
      CHECK(got.groups == ref.groups);
    }
  }
}

TEST_CASE("client_partition with the cache disabled is identical") {
  Rng rng(1234);
  for (int trial = 0; trial < 15; ++trial) {
    const int n = 3 + static_cast<int>(rng.uniform_int(6));
    std::vector<ParamVector> grads;
    std::vector<std::int64_t> sizes;
    for (int i = 0; i < n; ++i) {
      grads.push_back(random_grad(rng));
      sizes.push_back(1 + static_cast<std::int64_t>(rng.uniform_int(300)));
    }
    UtilityParams up;
    up.alpha = 10.0;

    PartitionOptions with;
    PartitionOptions without;
    without.use_cache = false;
    auto a = client_partition(grads, sizes, up, with);
    auto b = client_partition(grads, sizes, up, without);
    CHECK(a.groups == b.groups);
    REQUIRE(a.merges.size() == b.merges.size());
    for (std::size_t i = 0; i < a.merges.size(); ++i) {
      CHECK(a.merges[i].a == b.merges[i].a);
      CHECK(a.merges[i].b == b.merges[i].b);
      CHECK(a.merges[i].benefit == b.merges[i].benefit);  // bitwise: same eval path
    }
  }
}

TEST_CASE("cache saves work without changing results") {
  Rng rng(42);
  std::vector<ParamVector> grads;
  std::vector<std::int64_t> sizes;
  for (int i = 0; i < 8; ++i) {
    grads.push_back(random_grad(rng));
    sizes.push_back(50);
  }
  UtilityParams up;
  up.alpha = 100.0;
  PartitionStats cached, plain;
  PartitionOptions copt, popt;
  copt.stats = &cached;
  popt.stats = &plain;
  popt.use_cache = false;
  auto a = client_partition(grads, sizes, up, copt);
  auto b = client_partition(grads, sizes, up, popt);
  CHECK(a.groups == b.groups);
  if (a.merges.size() >= 2) {
    CHECK(cached.cache_hits > 0);
    CHECK(cached.benefit_evals < plain.benefit_evals);
  }
}

TEST_CASE("forced group counts ignore benefit signs") {
  std::vector<ParamVector> grads{
      make_grad({1, 0, 0}), make_grad({1, 0, 0}), make_grad({1, 0, 0}),
      make_grad({0, 1, 0}), make_grad({0, 1, 0}), make_grad({0, 0, 1}),
  };
  std::vector<std::int64_t> sizes{50, 50, 200, 60, 60, 100};
  UtilityParams up;
  up.alpha = 1.0;

  PartitionOptions to_one;
  to_one.forced_k = 1;
  auto all = client_partition(grads, sizes, up, to_one);
  CHECK(all.groups == std::vector<std::vector<int>>{{0, 1, 2, 3, 4, 5}});
  CHECK(all.merges.size() == 5);
  audit_partition(all, grads, sizes, up, true);

  PartitionOptions keep_all;
  keep_all.forced_k = 6;
  auto singletons = client_partition(grads, sizes, up, keep_all);
  CHECK(singletons.groups.size() == 6);
  CHECK(singletons.merges.empty());

  PartitionOptions overshoot;
  overshoot.forced_k = 10;
  CHECK(client_partition(grads, sizes, up, overshoot).groups.size() == 6);

  PartitionOptions four;
  four.forced_k = 4;
  auto p4 = client_partition(grads, sizes, up, four);
  CHECK(p4.groups.size() == 4);
  audit_partition(p4, grads, sizes, up, true);

  PartitionOptions bad;
  bad.forced_k = 0;
  CHECK_THROWS_AS(client_partition(grads, sizes, up, bad), std::invalid_argument);
}

TEST_CASE("client_partition input validation") {
  UtilityParams up;
  CHECK_THROWS_AS(client_partition({}, {}, up), std::invalid_argument);

  std::vector<ParamVector> grads{make_grad({1, 0}), make_grad({0, 1})};
  std::vector<std::int64_t> short_sizes{10};
  CHECK_THROWS_AS(client_partition(grads, short_sizes, up), std::invalid_argument);

  std::vector<std::int64_t> bad_sizes{10, 0};
  CHECK_THROWS_AS(client_partition(grads, bad_sizes, up), std::invalid_argument);

  std::vector<ParamVector> mixed{make_grad({1, 0}), make_grad({0, 1, 2})};
  std::vector<std::int64_t> sizes{10, 10};
  CHECK_THROWS_AS(client_partition(mixed, sizes, up), std::invalid_argument);
}

TEST_CASE("similarity on a selected layer drives the grouping") {
  // layer 0 agrees everywhere, layer 1 splits clients in two camps
  auto mk = [](double l1a, double l1b) {
    ParamVector p;
    p.values = {1.0, 1.0, 1.0, l1a, l1b, 0.0};
    p.spans = {{0, 2, "w0"}, {2, 1, "b0"}, {3, 2, "w1"}, {5, 1, "b1"}};
    return p;
  };
  std::vector<ParamVector> grads{mk(1, 0), mk(1, 0), mk(-1, 0), mk(-1, 0)};
  std::vector<std::int64_t> sizes{100, 100, 100, 100};

  // alpha large enough that full-gradient similarity (0.866 across camps)
  // cannot block the merge, yet the layer-1 aggregate cancels to zero and
  // its total similarity loss of 4 keeps the camps apart
  UtilityParams up;
  up.alpha = 100.0;
  up.mode = SimilarityMode::selected_layer;
  up.selected_layer = 1;
  auto part = client_partition(grads, sizes, up);
  CHECK(part.groups == std::vector<std::vector<int>>{{0, 1}, {2, 3}});

  UtilityParams full;
  full.alpha = 100.0;
  auto whole = client_partition(grads, sizes, full);
  CHECK(whole.groups == std::vector<std::vector<int>>{{0, 1, 2, 3}});
}

TEST_CASE("select_similarity_layer picks the varying layer") {
  auto mk = [](std::vector<double> l0, std::vector<double> l1) {
    ParamVector p;
    p.values = l0;
    p.values.insert(p.values.end(), l1.begin(), l1.end());
    p.spans = {{0, 2, "w0"}, {2, 1, "b0"}, {3, 2, "w1"}, {5, 1, "b1"}};
    return p;
  };
  std::vector<ParamVector> grads{mk({1, 1, 1}, {2, 0, 1}), mk({1, 1, 1}, {0, 2, 1})};
  CHECK(select_similarity_layer(grads) == 1);

  std::vector<ParamVector> identical{mk({1, 1, 1}, {2, 0, 1}), mk({1, 1, 1}, {2, 0, 1})};
  CHECK(select_similarity_layer(identical) == 0);  // all-zero variance ties to lowest

  std::vector<ParamVector> single{mk({1, 1, 1}, {2, 0, 1})};
  CHECK(select_similarity_layer(single) == 0);

  std::vector<ParamVector> other{mk({3, 0, 1}, {1, 1, 1}), mk({0, 3, 1}, {1, 1, 1})};
  CHECK(select_similarity_layer(other) == 0);
}

TEST_CASE("select_similarity_layer matches a straight-line recompute") {
  Rng rng(321);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_int(5));
    std::vector<ParamVector> grads;
    for (int i = 0; i < n; ++i) grads.push_back(random_grad(rng));

    const int got = select_similarity_layer(grads);

    int want = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (int l = 0; l < 2; ++l) {
      const Slice s = layer_slice(grads[0], l);
      double vs = 0.0, ms = 0.0;
      for (std::size_t j = s.offset; j < s.offset + s.length; ++j) {
        double mu = 0.0;
        for (auto& g : grads) mu += g.values[j];
        mu /= n;
        double var = 0.0;
        for (auto& g : grads) var += (g.values[j] - mu) * (g.values[j] - mu);
        var /= n;
        vs += var;
        ms += mu;
      }
      const double rel =
          (vs / static_cast<double>(s.length)) /
          (std::abs(ms / static_cast<double>(s.length)) + 1e-12);
      if (rel > best) {
        best = rel;
        want = l;
      }
    }
    CHECK(got == want);
  }
}

TEST_CASE("select_similarity_layer rejects mixed layouts") {
  ParamVector a;
  a.values = std::vector<double>(6, 1.0);
  a.spans = {{0, 2, "w0"}, {2, 1, "b0"}, {3, 2, "w1"}, {5, 1, "b1"}};
  ParamVector b;
  b.values = std::vector<double>(5, 1.0);
  b.spans = {{0, 2, "w0"}, {2, 1, "b0"}, {3, 1, "w1"}, {4, 1, "b1"}};
  CHECK_THROWS_AS(select_similarity_layer({a, b}), std::invalid_argument);
  CHECK_THROWS_AS(select_similarity_layer({}), std::invalid_argument);
}

TEST_CASE("BenefitCache stores unordered pairs and invalidates by id") {
  BenefitCache c;
  CHECK(!c.get(1, 2));
  c.put(2, 1, 0.5);
  CHECK(c.get(1, 2).value() == 0.5);
  CHECK(c.get(2, 1).value() == 0.5);
  c.put(1, 3, -0.25);
  c.put(2, 3, 0.75);
  CHECK(c.size() == 3);
  c.invalidate(1);
  CHECK(!c.get(1, 2));
  CHECK(!c.get(1, 3));
  CHECK(c.get(2, 3).value() == 0.75);
  CHECK(c.size() == 1);
}

TEST_CASE("client_utilities covers every client, total matches the oracle") {
  Rng rng(77);
  std::vector<ParamVector> grads;
  std::vector<std::int64_t> sizes;
  for (int i = 0; i < 6; ++i) {
    grads.push_back(random_grad(rng));
    sizes.push_back(20 + static_cast<std::int64_t>(rng.uniform_int(100)));
  }
  UtilityParams up;
  up.alpha = 10.0;
  auto part = client_partition(grads, sizes, up);
  auto utils = client_utilities(part, grads, sizes, up);
  REQUIRE(utils.size() == 6);
  double sum = 0.0;
  for (double u : utils) {
    CHECK(std::isfinite(u));
    sum += u;
  }
  CHECK(sum == doctest::Approx(total_utility(part, grads, sizes, up)).epsilon(1e-12));

  double want = 0.0;
  const Slice s = full_slice(grads[0]);
  for (const auto& g : part.groups)
    want += oracle_group_utility(g, grads, sizes, up.alpha, up.beta, s);
  CHECK(sum == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("partition JSON round-trip") {
  Partition p;
  p.groups = {{0, 1}, {2}};
  const std::string line = partition_to_json(p, 7);
  CHECK(line.find("\"epoch\":7") != std::string::npos);
  CHECK(groups_from_json(line) == p.groups);
  CHECK_THROWS(groups_from_json("{\"epoch\": 3}"));
  CHECK_THROWS(groups_from_json("not json"));
}
