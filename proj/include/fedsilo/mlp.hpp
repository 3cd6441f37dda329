#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedsilo/param_vector.hpp"
#include "fedsilo/rng.hpp"

namespace fedsilo {

enum class Activation { relu, tanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

// Fully connected net: widths = [input_dim, hidden..., classes].
// Hidden layers use `activation`; the head is softmax cross-entropy.
struct MlpArch {
  std::vector<int> widths;
  Activation activation = Activation::relu;

  int input_dim() const { return widths.front(); }
  int classes() const { return widths.back(); }
  int n_layers() const { return static_cast<int>(widths.size()) - 1; }
  std::size_t param_count() const;
};

struct Dataset {
  std::size_t dim = 0;
  std::vector<double> x;  // row-major, size() rows of `dim` features
  std::vector<int> y;

  std::size_t size() const { return y.size(); }
  const double* row(std::size_t i) const { return x.data() + i * dim; }
};

// Borrowed view over sample rows; never owns memory.
struct Batch {
  const double* x = nullptr;
  const int* y = nullptr;
  std::size_t n = 0;
  std::size_t dim = 0;
};

inline Batch as_batch(const Dataset& d) { return {d.x.data(), d.y.data(), d.size(), d.dim}; }

// Glorot-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases.
// Layout: w0, b0, w1, b1, ... with weight matrices row-major (out x in).
ParamVector init_params(const MlpArch& arch, std::uint64_t seed);

// Mean softmax cross-entropy over the batch.
double forward_loss(const MlpArch& arch, const ParamVector& params, const Batch& batch);

// Gradient of forward_loss w.r.t. every parameter, same layout as params.
// Optionally reports the loss from the same pass.
ParamVector backward(const MlpArch& arch, const ParamVector& params, const Batch& batch,
                     double* loss_out = nullptr);

// Argmax class; ties resolve to the lowest class index.
int predict_one(const MlpArch& arch, const ParamVector& params, const double* x);

double accuracy(const MlpArch& arch, const ParamVector& params, const Dataset& data);

struct LocalTrainResult {
  ParamVector updated;
  ParamVector gradient;  // sum over steps of the per-step mean-batch gradient
};

// Runs `steps` mini-batch SGD steps from `start`. Batches come from an
// epoch-local shuffle without replacement, reshuffled when fewer than
// batch_size indices remain (the remainder is dropped). Datasets no larger
// than batch_size are used whole, in storage order, consuming no RNG.
// Each step rebases on the accumulated gradient, so the returned state
// satisfies updated == start - eta * gradient exactly.
LocalTrainResult local_train(const MlpArch& arch, const ParamVector& start, const Dataset& data,
                             int steps, int batch_size, double eta, Rng& rng);

}  // namespace fedsilo
