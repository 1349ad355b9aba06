// SPDX-License-Identifier: Apache-2.0
#include "memrnn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace memrnn {

std::string Tensor::shape_str() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

bool Tensor::all_finite() const {
  for (real v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

namespace {

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shapes " + a.shape_str() + " and " +
                     b.shape_str() + " do not match");
  }
}

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t Rng::next_u64() {
  state_ += 0x9e3779b97f4a7c15ULL;
  return mix64(state_);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t n) {
  // Masked rejection sampling: unbiased and platform independent.
  std::uint64_t mask = n - 1;
  mask |= mask >> 1;
  mask |= mask >> 2;
  mask |= mask >> 4;
  mask |= mask >> 8;
  mask |= mask >> 16;
  mask |= mask >> 32;
  for (;;) {
    std::uint64_t v = next_u64() & mask;
    if (v < n) return v;
  }
}

Rng Rng::split(std::uint64_t stream_id) const {
  return Rng(mix64(state_ ^ mix64(stream_id + 0x632be59bd9b4e019ULL)));
}

Tensor sigmoid(const Tensor& x) {
  Tensor y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    real v = x[i];
    // Split on sign so exp never overflows.
    if (v >= 0) {
      y[i] = real(1) / (real(1) + std::exp(-v));
    } else {
      real e = std::exp(v);
      y[i] = e / (real(1) + e);
    }
  }
  return y;
}

Tensor tanh(const Tensor& x) {
  Tensor y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
  return y;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  Tensor y(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) y[i] = a[i] + b[i];
  return y;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  Tensor y(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) y[i] = a[i] - b[i];
  return y;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  require_same_shape("hadamard", a, b);
  Tensor y(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) y[i] = a[i] * b[i];
  return y;
}

Tensor matvec(const Tensor& W, const Tensor& v) {
  if (!v.is_vector() || v.cols() != W.cols()) {
    throw ShapeError("matvec: W is " + W.shape_str() + " but v is " + v.shape_str());
  }
  Tensor y(1, W.rows());
  const real* w = W.data();
  for (std::size_t r = 0; r < W.rows(); ++r) {
    real acc = 0;
    const real* row = w + r * W.cols();
    for (std::size_t c = 0; c < W.cols(); ++c) acc += row[c] * v[c];
    y[r] = acc;
  }
  return y;
}

Tensor matvec_t(const Tensor& W, const Tensor& v) {
  if (!v.is_vector() || v.cols() != W.rows()) {
    throw ShapeError("matvec_t: W is " + W.shape_str() + " but v is " + v.shape_str());
  }
  Tensor y(1, W.cols());
  const real* w = W.data();
  for (std::size_t r = 0; r < W.rows(); ++r) {
    const real* row = w + r * W.cols();
    const real s = v[r];
    for (std::size_t c = 0; c < W.cols(); ++c) y[c] += s * row[c];
  }
  return y;
}

void add_outer(Tensor& W, const Tensor& u, const Tensor& v) {
  if (!u.is_vector() || !v.is_vector() || u.cols() != W.rows() || v.cols() != W.cols()) {
    throw ShapeError("add_outer: W is " + W.shape_str() + " but u is " + u.shape_str() +
                     " and v is " + v.shape_str());
  }
  real* w = W.data();
  for (std::size_t r = 0; r < W.rows(); ++r) {
    real* row = w + r * W.cols();
    const real s = u[r];
    for (std::size_t c = 0; c < W.cols(); ++c) row[c] += s * v[c];
  }
}

void axpy(Tensor& y, real a, const Tensor& x) {
  require_same_shape("axpy", y, x);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

Tensor softmax(const Tensor& x) {
  Tensor y(x.rows(), x.cols());
  real mx = x[0];
  for (std::size_t i = 1; i < x.size(); ++i) mx = std::max(mx, x[i]);
  real total = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = std::exp(x[i] - mx);
    total += y[i];
  }
  for (std::size_t i = 0; i < x.size(); ++i) y[i] /= total;
  return y;
}

real cross_entropy(const Tensor& probs, std::size_t label) {
  if (label >= probs.size()) {
    throw ShapeError("cross_entropy: label " + std::to_string(label) +
                     " out of range for " + probs.shape_str());
  }
  real p = std::max(probs[label], std::numeric_limits<real>::min());
  return -std::log(p);
}

Tensor glorot_uniform(Rng& rng, std::size_t rows, std::size_t cols) {
  real bound = std::sqrt(real(6) / real(rows + cols));
  return uniform_init(rng, rows, cols, bound);
}

Tensor uniform_init(Rng& rng, std::size_t rows, std::size_t cols, real range) {
  Tensor t(rows, cols);
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = static_cast<real>(rng.uniform(-double(range), double(range)));
  }
  return t;
}

real sum(const Tensor& x) {
  real s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i];
  return s;
}

real l1_norm(const Tensor& x) {
  real s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i]);
  return s;
}

real squared_l2_norm(const Tensor& x) {
  real s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * x[i];
  return s;
}

std::size_t argmax(const Tensor& x) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (x[i] > x[best]) best = i;
  }
  return best;
}

}  // namespace memrnn
