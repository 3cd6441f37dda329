#include "fedsilo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "fedsilo/partition.hpp"

namespace fedsilo {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  return out;
}

ParamVector full_gradient(const MlpArch& arch, const ParamVector& model, const Dataset& train) {
  const Batch b = as_batch(train);
  return backward(arch, model, b);
}

}  // namespace

double test_error(const MlpArch& arch, const ParamVector& model, const Dataset& test) {
  if (test.y.empty()) throw std::invalid_argument("test set is empty");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < test.y.size(); ++i) {
    if (predict_one(arch, model, test.row(i)) != test.y[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(test.y.size());
}

ErrorStats error_stats(const std::vector<double>& errors) {
  if (errors.empty()) throw std::invalid_argument("error_stats needs at least one value");
  ErrorStats s;
  s.min = errors[0];
  s.max = errors[0];
  for (double e : errors) {
    s.mean += e;
    s.min = std::min(s.min, e);
    s.max = std::max(s.max, e);
  }
  s.mean /= static_cast<double>(errors.size());
  double var = 0.0;
  for (double e : errors) var += (e - s.mean) * (e - s.mean);
  s.stddev = std::sqrt(var / static_cast<double>(errors.size()));
  return s;
}

double grad_norm_sum(const MlpArch& arch, const std::vector<ParamVector>& models,
                     const std::vector<const Dataset*>& trains) {
  if (models.size() != trains.size())
    throw std::invalid_argument("models/trains length mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto g = full_gradient(arch, models[i], *trains[i]);
    for (double v : g.values) sum += v * v;
  }
  return sum;
}

std::vector<std::vector<double>> kappa_estimate(const MlpArch& arch, const ParamVector& probe,
                                                const std::vector<const Dataset*>& trains) {
  const std::size_t n = trains.size();
  std::vector<ParamVector> grads;
  grads.reserve(n);
  for (const Dataset* d : trains) grads.push_back(full_gradient(arch, probe, *d));

  std::vector<std::vector<double>> k(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t t = 0; t < grads[i].values.size(); ++t) {
        const double d = grads[i].values[t] - grads[j].values[t];
        d2 += d * d;
      }
      k[i][j] = k[j][i] = std::sqrt(d2);
    }
  }
  return k;
}

void write_metrics_csv(const std::string& path, const MetricsLog& log) {
  auto out = open_out(path);
  out << "epoch,client,group,n_groups,test_error,train_loss,utility,grad_norm_sum\n";
  for (const auto& r : log.records) {
    for (std::size_t c = 0; c < r.client_ids.size(); ++c) {
      int group = -1;
      for (std::size_t g = 0; g < r.groups.size(); ++g) {
        const auto& members = r.groups[g];
        if (std::find(members.begin(), members.end(), r.client_ids[c]) != members.end()) {
          group = static_cast<int>(g);
          break;
        }
      }
      out << r.epoch << ',' << r.client_ids[c] << ',' << group << ',' << r.groups.size() << ','
          << fmt_double(r.test_errors[c]) << ',' << fmt_double(r.train_losses[c]) << ','
          << fmt_double(r.utilities[c]) << ',' << fmt_double(r.grad_norm_sum) << '\n';
    }
  }
}

void write_partitions_jsonl(const std::string& path, const MetricsLog& log) {
  auto out = open_out(path);
  for (const auto& r : log.records) {
    Partition p;
    p.groups = r.groups;
    out << partition_to_json(p, r.epoch) << '\n';
  }
}

std::string summary_json(const MetricsLog& log, const std::string& scheme, std::uint64_t seed) {
  if (log.records.empty()) throw std::invalid_argument("empty metrics log");
  const auto& last = log.records.back();
  const ErrorStats s = error_stats(last.test_errors);

  nlohmann::json j;
  j["scheme"] = scheme;
  j["seed"] = seed;
  j["epochs"] = last.epoch;
  j["n_clients"] = last.client_ids.size();
  j["mean"] = s.mean;
  j["std"] = s.stddev;
  j["min"] = s.min;
  j["max"] = s.max;
  j["final_partition"] = last.groups;
  return j.dump(2) + "\n";
}

void write_summary_json(const std::string& path, const MetricsLog& log,
                        const std::string& scheme, std::uint64_t seed) {
  auto out = open_out(path);
  out << summary_json(log, scheme, seed);
}

}  // namespace fedsilo
