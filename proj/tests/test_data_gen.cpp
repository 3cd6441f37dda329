#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>

#include "fedsilo/data_gen.hpp"

using namespace fedsilo;

namespace {

void check_basics(const std::vector<ClientDataset>& clients, int classes) {
  for (const auto& c : clients) {
    CHECK(!c.train.y.empty());
    CHECK(!c.test.y.empty());
    CHECK(c.train.dim == c.test.dim);
    CHECK(c.train.x.size() == c.train.y.size() * static_cast<std::size_t>(c.train.dim));
    CHECK(c.test.x.size() == c.test.y.size() * static_cast<std::size_t>(c.test.dim));
    for (double v : c.train.x) CHECK(std::isfinite(v));
    for (double v : c.test.x) CHECK(std::isfinite(v));
    for (int y : c.train.y) {
      CHECK(y >= 0);
      CHECK(y < classes);
    }
    for (int y : c.test.y) {
      CHECK(y >= 0);
      CHECK(y < classes);
    }
  }
}

std::set<int> label_set(const ClientDataset& c) {
  std::set<int> s(c.train.y.begin(), c.train.y.end());
  s.insert(c.test.y.begin(), c.test.y.end());
  return s;
}

std::filesystem::path write_csv(const std::string& name, const std::string& content) {
  auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("clustered_sources round-robin assignment and shared source parameters") {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::clustered_sources;
  spec.n_clients = 10;
  spec.n_sources = 5;
  spec.classes = 4;
  spec.feature_dim = 4;
  spec.train_n = 40;

  auto clients = gen_clustered_sources(spec, 3);
  REQUIRE(clients.size() == 10);
  check_basics(clients, spec.classes);

  std::map<int, int> per_source;
  for (std::size_t i = 0; i < clients.size(); ++i) {
    CHECK(clients[i].source_id == static_cast<int>(i) % 5);
    ++per_source[clients[i].source_id];
  }
  for (auto& [s, n] : per_source) {
    (void)s;
    CHECK(n == 2);
  }

  CHECK(clients[0].source_class_means == clients[5].source_class_means);
  CHECK(clients[1].source_class_means == clients[6].source_class_means);
  CHECK(clients[0].source_class_means != clients[1].source_class_means);
}

TEST_CASE("clustered_sources class-0 means of distinct sources are separated") {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::clustered_sources;
  spec.n_clients = 7;
  spec.n_sources = 7;  // more sources than dims, exercises the axis wrap
  spec.classes = 3;
  spec.feature_dim = 4;
  spec.separation = 4.0;
  spec.train_n = 10;

  auto clients = gen_clustered_sources(spec, 9);
  for (std::size_t a = 0; a < clients.size(); ++a) {
    for (std::size_t b = a + 1; b < clients.size(); ++b) {
      double d2 = 0.0;
      for (int j = 0; j < spec.feature_dim; ++j) {
        const double diff = clients[a].source_class_means[static_cast<std::size_t>(j)] -
                            clients[b].source_class_means[static_cast<std::size_t>(j)];
        d2 += diff * diff;
      }
      CHECK(std::sqrt(d2) >= spec.separation - 1e-12);
    }
  }
}

TEST_CASE("clustered_sources same-source empirical class means concentrate together") {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::clustered_sources;
  spec.n_clients = 2;
  spec.n_sources = 1;
  spec.classes = 4;
  spec.feature_dim = 4;
  spec.train_n = 4000;
  spec.noise_sd = 1.0;

  auto clients = gen_clustered_sources(spec, 11);
  for (int c = 0; c < spec.classes; ++c) {
    std::vector<std::vector<double>> mean(2, std::vector<double>(4, 0.0));
    std::vector<int> count(2, 0);
    for (int i = 0; i < 2; ++i) {
      const auto& d = clients[static_cast<std::size_t>(i)].train;
      for (std::size_t k = 0; k < d.y.size(); ++k) {
        if (d.y[k] != c) continue;
        ++count[static_cast<std::size_t>(i)];
        for (int j = 0; j < 4; ++j)
          mean[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] += d.row(k)[j];
      }
    }
    REQUIRE(count[0] > 100);
    REQUIRE(count[1] > 100);
    const double bound = 3.0 / std::sqrt(static_cast<double>(std::min(count[0], count[1])));
    for (int j = 0; j < 4; ++j) {
      const double m0 = mean[0][static_cast<std::size_t>(j)] / count[0];
      const double m1 = mean[1][static_cast<std::size_t>(j)] / count[1];
      CHECK(std::abs(m0 - m1) < bound);
    }
  }
}

TEST_CASE("clustered_sources disjoint label supports") {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::clustered_sources;
  spec.n_clients = 4;
  spec.n_sources = 2;
  spec.classes = 10;
  spec.feature_dim = 4;
  spec.train_n = 200;
  spec.disjoint_labels = true;

  auto clients = gen_clustered_sources(spec, 5);
  const std::set<int> even{0, 2, 4, 6, 8};
  const std::set<int> odd{1, 3, 5, 7, 9};
  CHECK(label_set(clients[0]) == even);
  CHECK(label_set(clients[2]) == even);
  CHECK(label_set(clients[1]) == odd);
  CHECK(label_set(clients[3]) == odd);
}

TEST_CASE("clustered_sources rejects bad shapes") {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::clustered_sources;
  spec.n_clients = 3;
  spec.n_sources = 5;
  CHECK_THROWS_AS(gen_clustered_sources(spec, 1), std::invalid_argument);

  spec.n_clients = 8;
  spec.n_sources = 5;
  spec.classes = 3;
  spec.disjoint_labels = true;
  CHECK_THROWS_AS(gen_clustered_sources(spec, 1), std::invalid_argument);
}

TEST_CASE("iid_halfnormal pinned z gives exact sizes, floor applies") {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::iid_halfnormal;
  spec.n_clients = 6;
  spec.classes = 3;
  spec.feature_dim = 4;
  spec.base_size = 120;
  spec.fixed_z = 1.0;

  auto clients = gen_iid_halfnormal(spec, 9);
  check_basics(clients, spec.classes);
  for (const auto& c : clients) {
    CHECK(c.train.y.size() == 120);
    CHECK(c.test.y.size() == 30);  // 120 * 0.2 / 0.8
    CHECK(c.source_id == 0);
  }

  spec.fixed_z = 0.01;
  spec.min_size = 10;
  for (const auto& c : gen_iid_halfnormal(spec, 9)) CHECK(c.train.y.size() == 10);
}

TEST_CASE("iid_halfnormal mean size lands in the half-normal band") {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::iid_halfnormal;
  spec.n_clients = 20;
  spec.classes = 3;
  spec.feature_dim = 4;
  spec.base_size = 120;
  spec.min_size = 10;

  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto clients = gen_iid_halfnormal(spec, seed);
    double mean = 0.0;
    for (const auto& c : clients) {
      CHECK(c.train.y.size() >= 10);
      mean += static_cast<double>(c.train.y.size());
    }
    mean /= static_cast<double>(clients.size());
    CHECK(mean >= 60.0);
    CHECK(mean <= 200.0);
  }
}

TEST_CASE("label_shards partitions every shard and keeps shard purity") {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::label_shards;
  spec.n_clients = 4;
  spec.classes = 10;
  spec.feature_dim = 4;
  spec.n_shards = 20;
  spec.shard_size = 10;

  auto clients = gen_label_shards(spec, 17);
  check_basics(clients, spec.classes);

  // all 200 pooled samples are assigned exactly once
  std::size_t total = 0;
  std::map<int, int> per_class;
  for (const auto& c : clients) {
    total += c.train.y.size() + c.test.y.size();
    for (int y : c.train.y) ++per_class[y];
    for (int y : c.test.y) ++per_class[y];
  }
  CHECK(total == 200);
  for (int y = 0; y < 10; ++y) CHECK(per_class[y] == 20);  // 2 shards per class
}

TEST_CASE("label_shards single-shard client holds a single label") {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::label_shards;
  spec.n_clients = 6;
  spec.classes = 3;
  spec.feature_dim = 4;
  spec.n_shards = 6;
  spec.shard_size = 10;

  auto clients = gen_label_shards(spec, 5);
  for (const auto& c : clients) {
    CHECK(c.train.y.size() + c.test.y.size() == 10);
    CHECK(label_set(c).size() == 1);
  }
}

TEST_CASE("label_shards rejects bad shapes") {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::label_shards;
  spec.classes = 10;
  spec.feature_dim = 4;

  spec.n_clients = 30;
  spec.n_shards = 20;
  CHECK_THROWS_AS(gen_label_shards(spec, 1), std::invalid_argument);

  spec.n_clients = 4;
  spec.n_shards = 25;
  CHECK_THROWS_AS(gen_label_shards(spec, 1), std::invalid_argument);
}

TEST_CASE("motivating example shapes") {
  auto clients = gen_motivating_example(21);
  REQUIRE(clients.size() == 3);
  check_basics(clients, 10);

  const std::set<int> low{0, 1, 2, 3, 4};
  const std::set<int> high{5, 6, 7, 8, 9};
  CHECK(label_set(clients[0]) == low);
  CHECK(label_set(clients[1]) == low);
  CHECK(label_set(clients[2]) == high);

  CHECK(clients[0].train.y.size() == 80);
  CHECK(clients[1].train.y.size() == 320);
  CHECK(clients[2].train.y.size() == 400);
  CHECK(clients[0].test.y.size() == 20);
  CHECK(clients[1].test.y.size() == 80);
  CHECK(clients[2].test.y.size() == 100);
  CHECK(clients[1].train.y.size() == 4 * clients[0].train.y.size());

  CHECK(clients[0].source_id == clients[1].source_id);
  CHECK(clients[0].source_id != clients[2].source_id);

  CHECK(dataset_fingerprint(clients) == dataset_fingerprint(gen_motivating_example(21)));
  CHECK(dataset_fingerprint(clients) != dataset_fingerprint(gen_motivating_example(22)));
}

TEST_CASE("csv ingestion splits and validates") {
  auto good = write_csv("fedsilo_good.csv",
                        "f0,f1,f2,label\n"
                        "1.0,2.0,3.0,0\n"
                        "0.5,-1.25,0.0,1\n"
                        "2.0,0.0,1.0,0\n"
                        "0.25,0.75,-0.5,1\n"
                        "1.5,1.5,1.5,1\n");
  ScenarioSpec spec;
  spec.kind = ScenarioKind::csv;
  spec.n_clients = 1;
  spec.classes = 2;
  spec.feature_dim = 3;
  spec.train_ratio = 0.8;
  spec.paths = {good.string()};

  auto clients = load_csv(spec, 7);
  REQUIRE(clients.size() == 1);
  CHECK(clients[0].train.y.size() == 4);
  CHECK(clients[0].test.y.size() == 1);
  CHECK(clients[0].train.dim == 3);
  CHECK(dataset_fingerprint(clients) == dataset_fingerprint(load_csv(spec, 7)));
  CHECK(dataset_fingerprint(clients) != dataset_fingerprint(load_csv(spec, 8)));
  std::filesystem::remove(good);
}

TEST_CASE("csv errors carry file and line") {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::csv;
  spec.n_clients = 1;
  spec.classes = 4;
  spec.feature_dim = 2;

  auto bad_label = write_csv("fedsilo_badlabel.csv", "a,b,y\n1,2,0\n1,2,3.5\n");
  spec.paths = {bad_label.string()};
  try {
    load_csv(spec, 1);
    FAIL("expected parse error");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find(":3:") != std::string::npos);
    CHECK(msg.find("3.5") != std::string::npos);
  }
  std::filesystem::remove(bad_label);

  auto bad_cols = write_csv("fedsilo_badcols.csv", "a,b,y\n1,2,0\n1,2\n");
  spec.paths = {bad_cols.string()};
  try {
    load_csv(spec, 1);
    FAIL("expected parse error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }
  std::filesystem::remove(bad_cols);

  auto bad_feat = write_csv("fedsilo_badfeat.csv", "a,b,y\nx,2,0\n1,2,1\n");
  spec.paths = {bad_feat.string()};
  CHECK_THROWS_AS(load_csv(spec, 1), std::runtime_error);
  std::filesystem::remove(bad_feat);

  auto out_of_range = write_csv("fedsilo_range.csv", "a,b,y\n1,2,9\n1,2,0\n");
  spec.paths = {out_of_range.string()};
  CHECK_THROWS_AS(load_csv(spec, 1), std::runtime_error);
  std::filesystem::remove(out_of_range);

  auto empty = write_csv("fedsilo_empty.csv", "a,b,y\n");
  spec.paths = {empty.string()};
  CHECK_THROWS_AS(load_csv(spec, 1), std::runtime_error);
  std::filesystem::remove(empty);

  spec.paths = {"/nonexistent/fedsilo_missing.csv"};
  CHECK_THROWS_AS(load_csv(spec, 1), std::runtime_error);

  spec.paths = {};
  CHECK_THROWS_AS(load_csv(spec, 1), std::invalid_argument);
}

TEST_CASE("generate_scenario appends arrival clients without disturbing incumbents") {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::clustered_sources;
  spec.n_clients = 4;
  spec.n_sources = 2;
  spec.classes = 4;
  spec.feature_dim = 4;
  spec.train_n = 30;

  auto base = generate_scenario(spec, 13);
  auto extended = generate_scenario(spec, 13, 2);
  REQUIRE(extended.size() == 6);
  std::vector<ClientDataset> prefix(extended.begin(), extended.begin() + 4);
  CHECK(dataset_fingerprint(prefix) == dataset_fingerprint(base));
  CHECK(extended[4].source_id == 0);
  CHECK(extended[5].source_id == 1);

  ScenarioSpec iid;
  iid.kind = ScenarioKind::iid_halfnormal;
  iid.n_clients = 3;
  iid.classes = 3;
  iid.feature_dim = 4;
  auto ibase = generate_scenario(iid, 2);
  auto iext = generate_scenario(iid, 2, 1);
  std::vector<ClientDataset> iprefix(iext.begin(), iext.begin() + 3);
  CHECK(dataset_fingerprint(iprefix) == dataset_fingerprint(ibase));

  ScenarioSpec shards;
  shards.kind = ScenarioKind::label_shards;
  shards.n_clients = 4;
  shards.classes = 4;
  shards.feature_dim = 4;
  shards.n_shards = 8;
  CHECK_THROWS_AS(generate_scenario(shards, 1, 2), std::invalid_argument);
}

TEST_CASE("scenario kind names round-trip") {
  for (auto k : {ScenarioKind::clustered_sources, ScenarioKind::iid_halfnormal,
                 ScenarioKind::label_shards, ScenarioKind::motivating, ScenarioKind::csv}) {
    CHECK(scenario_kind_from_string(to_string(k)) == k);
  }
  CHECK_THROWS_AS(scenario_kind_from_string("mnist"), std::invalid_argument);
}
