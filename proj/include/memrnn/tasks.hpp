// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "memrnn/tensor.hpp"

namespace memrnn {

class SequenceModel;
struct SeqInput;

enum class Pooling { MeanOverTime, FinalState };

/// Token lookup table, rows are vectors of dimension d_x.
struct Embedding {
  Tensor table;  // V x d_x
  bool trainable = true;

  Tensor lookup(std::size_t id) const;
};

/// Affine (optionally one hidden tanh layer) classifier over a pooled state.
struct ClassifierHead {
  Tensor W_out;     // C x d_in
  Tensor b_out;     // 1 x C
  Tensor W_hidden;  // H x d_h when a hidden layer is configured, else empty
  Tensor b_hidden;  // 1 x H
  Pooling pooling = Pooling::MeanOverTime;

  bool has_hidden() const { return !W_hidden.empty(); }
};

/// Per-step next-token softmax layer.
struct LmHead {
  Tensor W_out;  // V x d_h
  Tensor b_out;  // 1 x V
};

/// Order-invariant pooling of a state list.
Tensor mean_pool(const std::vector<Tensor>& states);

/// Fraction of positions where prediction equals label.
real accuracy(const std::vector<int>& predictions, const std::vector<int>& labels);

/// exp(mean negative log-likelihood).
real perplexity(real nll);

/// Runs the full model on one sequence; returns class probabilities and the
/// argmax prediction (lowest index wins ties).
std::pair<Tensor, int> classify(const SequenceModel& model, const SeqInput& input);

struct LmLossResult {
  real nll = 0;                  // mean over the T-1 prediction positions
  std::vector<real> per_step;    // per-position negative log-likelihood
};

/// Mean next-token negative log-likelihood of a token sequence (length >= 2).
LmLossResult lm_loss(const SequenceModel& model, const std::vector<int>& tokens);

}  // namespace memrnn
