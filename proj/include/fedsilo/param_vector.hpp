#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace fedsilo {

// One contiguous stretch of a flat parameter vector: a weight matrix or a
// bias vector. Spans are stored in parameter order and cover the vector
// exactly, with no gaps or overlap.
struct LayerSpan {
  std::size_t offset = 0;
  std::size_t length = 0;
  std::string label;  // "w0", "b0", "w1", ...
};

// Half-open coordinate range [offset, offset + length) of a ParamVector.
struct Slice {
  std::size_t offset = 0;
  std::size_t length = 0;
};

// Flat model parameters plus the span table describing their layout.
struct ParamVector {
  std::vector<double> values;
  std::vector<LayerSpan> spans;

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
};

// Throws std::invalid_argument if spans do not tile values exactly.
void check_spans(const ParamVector& p);

bool same_layout(const ParamVector& a, const ParamVector& b);

bool all_finite(const ParamVector& p);

// Number of (weight, bias) span pairs. Throws if the span count is odd.
int layer_count(const ParamVector& p);

// Contiguous range covering layer l's weight matrix and bias vector.
Slice layer_slice(const ParamVector& p, int layer);

// Everything before the final (weight, bias) pair, i.e. the part that is
// shared when the classifier head stays local.
Slice shared_prefix_slice(const ParamVector& p);

Slice full_slice(const ParamVector& p);

double dot_slice(const ParamVector& a, const ParamVector& b, Slice s);
double norm_slice(const ParamVector& a, Slice s);

// x += a * y over all coordinates; layouts must match.
void add_scaled(ParamVector& x, double a, const ParamVector& y);

// x += a * y restricted to the coordinates in s.
void add_scaled_slice(ParamVector& x, double a, const ParamVector& y, Slice s);

// Weighted average of models, anchored on the first one:
//   result = m0 + sum_i w_i * (m_i - m0)
// Equal to sum_i w_i * m_i when the weights sum to 1, better conditioned,
// and exact when all inputs are bitwise identical. Only coordinates inside
// `s` are averaged; the rest of the result is copied from `into_base`.
ParamVector weighted_average_slice(const std::vector<const ParamVector*>& models,
                                   const std::vector<double>& weights, Slice s,
                                   const ParamVector& into_base);

// sum_i w_i * g_i over all coordinates, accumulated in input order.
ParamVector weighted_sum(const std::vector<const ParamVector*>& grads,
                         const std::vector<double>& weights);

}  // namespace fedsilo
