#include "fedsilo/param_vector.hpp"

#include <cmath>
#include <stdexcept>

namespace fedsilo {

void check_spans(const ParamVector& p) {
  std::size_t expect = 0;
  for (const auto& s : p.spans) {
    if (s.offset != expect)
      throw std::invalid_argument("span '" + s.label + "' starts at " +
                                  std::to_string(s.offset) + ", expected " +
                                  std::to_string(expect));
    if (s.length == 0)
      throw std::invalid_argument("span '" + s.label + "' is empty");
    expect += s.length;
  }
  if (expect != p.values.size())
    throw std::invalid_argument("spans cover " + std::to_string(expect) +
                                " values, vector holds " + std::to_string(p.values.size()));
}

bool same_layout(const ParamVector& a, const ParamVector& b) {
  if (a.values.size() != b.values.size() || a.spans.size() != b.spans.size()) return false;
  for (std::size_t i = 0; i < a.spans.size(); ++i) {
    if (a.spans[i].offset != b.spans[i].offset || a.spans[i].length != b.spans[i].length)
      return false;
  }
  return true;
}

bool all_finite(const ParamVector& p) {
  for (double v : p.values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

int layer_count(const ParamVector& p) {
  if (p.spans.size() % 2 != 0)
    throw std::invalid_argument("span table has an odd number of entries");
  return static_cast<int>(p.spans.size() / 2);
}

Slice layer_slice(const ParamVector& p, int layer) {
  const int n = layer_count(p);
  if (layer < 0 || layer >= n)
    throw std::invalid_argument("layer " + std::to_string(layer) + " out of range [0, " +
                                std::to_string(n) + ")");
  const auto& w = p.spans[2 * static_cast<std::size_t>(layer)];
  const auto& b = p.spans[2 * static_cast<std::size_t>(layer) + 1];
  return {w.offset, w.length + b.length};
}

Slice shared_prefix_slice(const ParamVector& p) {
  const int n = layer_count(p);
  if (n < 2)
    throw std::invalid_argument("model has a single layer, nothing precedes the classifier");
  return {0, p.spans[p.spans.size() - 2].offset};
}

Slice full_slice(const ParamVector& p) { return {0, p.values.size()}; }

namespace {

void check_slice(const ParamVector& a, Slice s) {
  if (s.offset + s.length > a.values.size())
    throw std::invalid_argument("slice [" + std::to_string(s.offset) + ", " +
                                std::to_string(s.offset + s.length) + ") exceeds vector of size " +
                                std::to_string(a.values.size()));
}

}  // namespace

double dot_slice(const ParamVector& a, const ParamVector& b, Slice s) {
  check_slice(a, s);
  check_slice(b, s);
  double acc = 0.0;
  for (std::size_t i = s.offset; i < s.offset + s.length; ++i) acc += a.values[i] * b.values[i];
  return acc;
}

double norm_slice(const ParamVector& a, Slice s) { return std::sqrt(dot_slice(a, a, s)); }

void add_scaled(ParamVector& x, double a, const ParamVector& y) {
  if (x.values.size() != y.values.size())
    throw std::invalid_argument("add_scaled: size mismatch");
  for (std::size_t i = 0; i < x.values.size(); ++i) x.values[i] += a * y.values[i];
}

void add_scaled_slice(ParamVector& x, double a, const ParamVector& y, Slice s) {
  if (x.values.size() != y.values.size())
    throw std::invalid_argument("add_scaled_slice: size mismatch");
  if (s.offset + s.length > x.values.size())
    throw std::invalid_argument("add_scaled_slice: slice out of range");
  for (std::size_t i = s.offset; i < s.offset + s.length; ++i) x.values[i] += a * y.values[i];
}

ParamVector weighted_average_slice(const std::vector<const ParamVector*>& models,
                                   const std::vector<double>& weights, Slice s,
                                   const ParamVector& into_base) {
  if (models.empty() || models.size() != weights.size())
    throw std::invalid_argument("weighted_average_slice: empty input or weight count mismatch");
  double wsum = 0.0;
  for (double w : weights) wsum += w;
  if (std::abs(wsum - 1.0) > 1e-9)
    throw std::invalid_argument("weighted_average_slice: weights sum to " + std::to_string(wsum) +
                                ", expected 1");
  ParamVector out = into_base;
  check_slice(out, s);
  const ParamVector& anchor = *models[0];
  for (std::size_t i = s.offset; i < s.offset + s.length; ++i) out.values[i] = anchor.values[i];
  for (std::size_t m = 1; m < models.size(); ++m) {
    const ParamVector& mi = *models[m];
    if (mi.values.size() != anchor.values.size())
      throw std::invalid_argument("weighted_average_slice: size mismatch");
    const double w = weights[m];
    for (std::size_t i = s.offset; i < s.offset + s.length; ++i)
      out.values[i] += w * (mi.values[i] - anchor.values[i]);
  }
  return out;
}

ParamVector weighted_sum(const std::vector<const ParamVector*>& grads,
                         const std::vector<double>& weights) {
  if (grads.empty() || grads.size() != weights.size())
    throw std::invalid_argument("weighted_sum: empty input or weight count mismatch");
  ParamVector out = *grads[0];
  for (double& v : out.values) v = 0.0;
  for (std::size_t m = 0; m < grads.size(); ++m) {
    if (grads[m]->values.size() != out.values.size())
      throw std::invalid_argument("weighted_sum: size mismatch");
    add_scaled(out, weights[m], *grads[m]);
  }
  return out;
}

}  // namespace fedsilo
