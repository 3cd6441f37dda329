#include "fedsilo/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fedsilo {

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw std::invalid_argument("unknown activation '" + s + "' (expected relu or tanh)");
}

namespace {

void check_arch(const MlpArch& arch) {
  if (arch.widths.size() < 2)
    throw std::invalid_argument("arch needs at least input and output widths, got " +
                                std::to_string(arch.widths.size()));
  for (std::size_t i = 0; i < arch.widths.size(); ++i) {
    if (arch.widths[i] < 1)
      throw std::invalid_argument("arch width " + std::to_string(i) + " is " +
                                  std::to_string(arch.widths[i]) + ", must be >= 1");
  }
}

std::vector<LayerSpan> param_layout(const MlpArch& arch) {
  std::vector<LayerSpan> spans;
  std::size_t off = 0;
  for (int l = 0; l < arch.n_layers(); ++l) {
    const auto rows = static_cast<std::size_t>(arch.widths[l + 1]);
    const auto cols = static_cast<std::size_t>(arch.widths[l]);
    spans.push_back({off, rows * cols, "w" + std::to_string(l)});
    off += rows * cols;
    spans.push_back({off, rows, "b" + std::to_string(l)});
    off += rows;
  }
  return spans;
}

void check_model_inputs(const MlpArch& arch, const ParamVector& params, const Batch& batch) {
  check_arch(arch);
  if (params.size() != arch.param_count())
    throw std::invalid_argument("params hold " + std::to_string(params.size()) +
                                " values, arch wants " + std::to_string(arch.param_count()));
  if (batch.n == 0) throw std::invalid_argument("empty batch");
  if (batch.dim != static_cast<std::size_t>(arch.input_dim()))
    throw std::invalid_argument("batch features have dim " + std::to_string(batch.dim) +
                                ", arch input is " + std::to_string(arch.input_dim()));
  for (std::size_t i = 0; i < batch.n; ++i) {
    if (batch.y[i] < 0 || batch.y[i] >= arch.classes())
      throw std::invalid_argument("label " + std::to_string(batch.y[i]) + " at batch row " +
                                  std::to_string(i) + " outside [0, " +
                                  std::to_string(arch.classes()) + ")");
  }
}

// Per-sample forward/backward scratch, reused across the batch.
struct Scratch {
  std::vector<std::vector<double>> act;  // act[0] unused, input read from the batch
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> delta;

  explicit Scratch(const MlpArch& arch) {
    const int L = arch.n_layers();
    act.resize(L + 1);
    pre.resize(L + 1);
    delta.resize(L + 1);
    for (int l = 1; l <= L; ++l) {
      act[l].resize(arch.widths[l]);
      pre[l].resize(arch.widths[l]);
      delta[l].resize(arch.widths[l]);
    }
  }
};

// Fills pre/act for one sample, returns the stable log-sum-exp of the logits.
double forward_sample(const MlpArch& arch, const ParamVector& params, const double* x,
                      Scratch& s) {
  const int L = arch.n_layers();
  const double* prev = x;
  std::size_t off = 0;
  for (int l = 0; l < L; ++l) {
    const int rows = arch.widths[l + 1];
    const int cols = arch.widths[l];
    const double* w = params.values.data() + off;
    const double* b = params.values.data() + off + static_cast<std::size_t>(rows) * cols;
    for (int r = 0; r < rows; ++r) {
      double z = b[r];
      const double* wr = w + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) z += wr[c] * prev[c];
      s.pre[l + 1][r] = z;
      if (l + 1 < L)
        s.act[l + 1][r] = arch.activation == Activation::relu ? (z > 0.0 ? z : 0.0) : std::tanh(z);
    }
    off += static_cast<std::size_t>(rows) * cols + rows;
    prev = s.act[l + 1].data();
  }
  const auto& logits = s.pre[L];
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - m);
  return m + std::log(sum);
}

}  // namespace

std::size_t MlpArch::param_count() const {
  check_arch(*this);
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l)
    n += static_cast<std::size_t>(widths[l]) * widths[l + 1] + widths[l + 1];
  return n;
}

ParamVector init_params(const MlpArch& arch, std::uint64_t seed) {
  check_arch(arch);
  ParamVector p;
  p.spans = param_layout(arch);
  p.values.resize(arch.param_count());
  Rng rng(seed);
  std::size_t off = 0;
  for (int l = 0; l < arch.n_layers(); ++l) {
    const int fan_in = arch.widths[l];
    const int fan_out = arch.widths[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    const std::size_t nw = static_cast<std::size_t>(fan_in) * fan_out;
    for (std::size_t i = 0; i < nw; ++i) p.values[off + i] = rng.uniform(-bound, bound);
    off += nw;
    for (int i = 0; i < fan_out; ++i) p.values[off + static_cast<std::size_t>(i)] = 0.0;
    off += static_cast<std::size_t>(fan_out);
  }
  return p;
}

double forward_loss(const MlpArch& arch, const ParamVector& params, const Batch& batch) {
  check_model_inputs(arch, params, batch);
  Scratch s(arch);
  const int L = arch.n_layers();
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.n; ++i) {
    const double lse = forward_sample(arch, params, batch.x + i * batch.dim, s);
    loss += lse - s.pre[L][batch.y[i]];
  }
  return loss / static_cast<double>(batch.n);
}

ParamVector backward(const MlpArch& arch, const ParamVector& params, const Batch& batch,
                     double* loss_out) {
  check_model_inputs(arch, params, batch);
  Scratch s(arch);
  const int L = arch.n_layers();

  ParamVector grad;
  grad.spans = param_layout(arch);
  grad.values.assign(params.size(), 0.0);

  const double inv_n = 1.0 / static_cast<double>(batch.n);
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.n; ++i) {
    const double* x = batch.x + i * batch.dim;
    const double lse = forward_sample(arch, params, x, s);
    loss += lse - s.pre[L][batch.y[i]];

    for (int c = 0; c < arch.classes(); ++c) {
      const double p = std::exp(s.pre[L][c] - lse);
      s.delta[L][c] = (p - (c == batch.y[i] ? 1.0 : 0.0)) * inv_n;
    }

    std::size_t off = params.size();
    for (int l = L - 1; l >= 0; --l) {
      const int rows = arch.widths[l + 1];
      const int cols = arch.widths[l];
      off -= static_cast<std::size_t>(rows) * cols + rows;
      double* gw = grad.values.data() + off;
      double* gb = gw + static_cast<std::size_t>(rows) * cols;
      const double* w = params.values.data() + off;
      const double* below = l == 0 ? x : s.act[l].data();

      for (int r = 0; r < rows; ++r) {
        const double d = s.delta[l + 1][r];
        gb[r] += d;
        double* gwr = gw + static_cast<std::size_t>(r) * cols;
        for (int c = 0; c < cols; ++c) gwr[c] += d * below[c];
      }
      if (l > 0) {
        for (int c = 0; c < cols; ++c) {
          double acc = 0.0;
          for (int r = 0; r < rows; ++r)
            acc += w[static_cast<std::size_t>(r) * cols + c] * s.delta[l + 1][r];
          const double z = s.pre[l][c];
          if (arch.activation == Activation::relu) {
            s.delta[l][c] = z > 0.0 ? acc : 0.0;
          } else {
            const double t = std::tanh(z);
            s.delta[l][c] = acc * (1.0 - t * t);
          }
        }
      }
    }
  }
  if (loss_out) *loss_out = loss * inv_n;
  return grad;
}

int predict_one(const MlpArch& arch, const ParamVector& params, const double* x) {
  Scratch s(arch);
  forward_sample(arch, params, x, s);
  const auto& logits = s.pre[arch.n_layers()];
  int best = 0;
  for (int c = 1; c < arch.classes(); ++c) {
    if (logits[c] > logits[best]) best = c;
  }
  return best;
}

double accuracy(const MlpArch& arch, const ParamVector& params, const Dataset& data) {
  if (data.size() == 0) throw std::invalid_argument("accuracy on empty dataset");
  check_model_inputs(arch, params, as_batch(data));
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (predict_one(arch, params, data.row(i)) == data.y[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

LocalTrainResult local_train(const MlpArch& arch, const ParamVector& start, const Dataset& data,
                             int steps, int batch_size, double eta, Rng& rng) {
  if (steps < 1) throw std::invalid_argument("local_train: steps must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("local_train: batch_size must be >= 1");
  if (eta < 0.0) throw std::invalid_argument("local_train: negative learning rate");
  if (data.size() == 0) throw std::invalid_argument("local_train: empty dataset");
  check_model_inputs(arch, start, as_batch(data));

  ParamVector w = start;
  ParamVector g_acc;
  g_acc.spans = w.spans;
  g_acc.values.assign(w.size(), 0.0);

  const bool whole = data.size() <= static_cast<std::size_t>(batch_size);
  std::vector<std::size_t> perm;
  std::size_t cursor = 0;
  std::vector<double> bx;
  std::vector<int> by;
  if (!whole) {
    perm.resize(data.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    cursor = data.size();  // force a shuffle on the first step
    bx.resize(static_cast<std::size_t>(batch_size) * data.dim);
    by.resize(static_cast<std::size_t>(batch_size));
  }

  for (int q = 0; q < steps; ++q) {
    Batch b;
    if (whole) {
      b = as_batch(data);
    } else {
      if (cursor + static_cast<std::size_t>(batch_size) > data.size()) {
        rng.shuffle(perm);
        cursor = 0;
      }
      for (int i = 0; i < batch_size; ++i) {
        const std::size_t r = perm[cursor + static_cast<std::size_t>(i)];
        std::copy(data.row(r), data.row(r) + data.dim,
                  bx.begin() + static_cast<std::size_t>(i) * data.dim);
        by[static_cast<std::size_t>(i)] = data.y[r];
      }
      cursor += static_cast<std::size_t>(batch_size);
      b = {bx.data(), by.data(), static_cast<std::size_t>(batch_size), data.dim};
    }

    ParamVector step_grad = backward(arch, w, b);
    for (std::size_t i = 0; i < g_acc.size(); ++i) g_acc.values[i] += step_grad.values[i];
    for (std::size_t i = 0; i < w.size(); ++i)
      w.values[i] = start.values[i] - eta * g_acc.values[i];
  }
  return {std::move(w), std::move(g_acc)};
}

}  // namespace fedsilo
