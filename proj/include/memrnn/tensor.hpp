// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "memrnn/errors.hpp"

namespace memrnn {

#ifdef MEMRNN_REAL32
using real = float;
#else
using real = double;
#endif

/// Dense row-major matrix. Vectors are stored as 1 x n.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, real fill = 0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Tensor row(std::initializer_list<real> values) {
    Tensor t(1, values.size());
    std::size_t i = 0;
    for (real v : values) t.data_[i++] = v;
    return t;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool is_vector() const { return rows_ == 1; }

  real& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  real operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  real& operator[](std::size_t i) { return data_[i]; }
  real operator[](std::size_t i) const { return data_[i]; }

  real* data() { return data_.data(); }
  const real* data() const { return data_.data(); }

  void fill(real v) { data_.assign(data_.size(), v); }
  std::string shape_str() const;
  bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool all_finite() const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<real> data_;
};

/// Deterministic seeded generator (SplitMix64 core). Identical seeds give
/// identical streams on any platform; floating-point conversion uses the top
/// 53 bits so the stream is also bit-stable across compilers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);
  /// Independent child stream; child state is a mix of parent state and id.
  Rng split(std::uint64_t stream_id) const;

  std::uint64_t state() const { return state_; }
  static Rng from_state(std::uint64_t s) { return Rng(s); }

 private:
  std::uint64_t state_;
};

// --- elementwise and linear ops -------------------------------------------

Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);

/// W (m x n) applied to row vector v (1 x n); returns 1 x m.
Tensor matvec(const Tensor& W, const Tensor& v);
/// Transposed product W^T v for v (1 x m); returns 1 x n.
Tensor matvec_t(const Tensor& W, const Tensor& v);
/// Rank-one accumulation W(i,j) += u[i] * v[j].
void add_outer(Tensor& W, const Tensor& u, const Tensor& v);
/// y += a * x.
void axpy(Tensor& y, real a, const Tensor& x);

/// Numerically stable softmax (max subtraction); output sums to 1.
Tensor softmax(const Tensor& x);
/// -log(probs[label]); probs are clamped away from zero so the result stays finite.
real cross_entropy(const Tensor& probs, std::size_t label);

/// i.i.d. uniform on +-sqrt(6 / (rows + cols)).
Tensor glorot_uniform(Rng& rng, std::size_t rows, std::size_t cols);
/// i.i.d. uniform on +-range.
Tensor uniform_init(Rng& rng, std::size_t rows, std::size_t cols, real range);

real sum(const Tensor& x);
real l1_norm(const Tensor& x);
real squared_l2_norm(const Tensor& x);
/// Lowest index wins ties.
std::size_t argmax(const Tensor& x);

}  // namespace memrnn
