// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "memrnn/model.hpp"

namespace memrnn {

struct AdamConfig {
  real lr = real(1e-3);
  real beta1 = real(0.9);
  real beta2 = real(0.999);
  real eps = real(1e-8);
};

/// First/second moment accumulators, one pair per trainable tensor.
class AdamState {
 public:
  explicit AdamState(const SequenceModel& model);

  /// Standard bias-corrected Adam step. Throws NumericError on non-finite
  /// gradients, naming the offending tensor.
  void update(SequenceModel& model, const ModelGrads& grads, const AdamConfig& cfg);

  std::size_t step_count() const { return t_; }

 private:
  ModelGrads m_, v_;
  std::size_t t_ = 0;
};

/// Inverted dropout mask: entries are 0 with probability `rate`, else
/// 1/(1-rate). Training-mode only; evaluation skips masking entirely.
Tensor dropout_mask(Rng& rng, real rate, std::size_t len);

/// Scales all gradients so the global L2 norm is at most max_norm.
/// Returns the pre-clip norm. max_norm <= 0 disables clipping.
real clip_global_norm(ModelGrads& grads, real max_norm);

struct BpttResult {
  real loss = 0;        // mean loss over the batch
  ModelGrads grads;     // gradients of the mean loss
};

/// Forward + reverse over a batch of sequences. Per-sequence work may run on
/// `threads` workers; partial gradients are reduced in sequence order, so the
/// result is identical for any thread count. Sequence i draws its dropout
/// stream from split(dropout_seed, i).
BpttResult bptt(const SequenceModel& model, const std::vector<SeqInput>& batch,
                std::uint64_t dropout_seed = 0, std::size_t threads = 1);

struct GradCheckReport {
  real max_rel_err = 0;
  std::string worst_param;
  std::size_t worst_index = 0;
  real analytic = 0;
  real numeric = 0;
  real tolerance = 0;
  std::size_t coords_checked = 0;
  bool pass = false;
};

struct GradCheckOptions {
  real tolerance = real(1e-4);
  real fd_step = real(1e-5);
  /// Cap on coordinates checked per tensor (0 = all), sampled at a fixed stride.
  std::size_t max_coords_per_tensor = 0;
  /// Fixed dropout stream so every finite-difference evaluation sees the
  /// same masks as the analytic pass.
  std::uint64_t dropout_seed = 0;
};

/// Central-difference check of the analytic gradients of the mean loss on
/// one sample. Relative error uses max(|a|, |n|, 1e-8) as denominator.
GradCheckReport grad_check(SequenceModel& model, const SeqInput& sample,
                           const GradCheckOptions& opts = {});

/// Same check against externally supplied gradients (e.g. a corrupted copy,
/// as a negative control).
GradCheckReport compare_to_fd(SequenceModel& model, const SeqInput& sample,
                              const ModelGrads& analytic, const GradCheckOptions& opts);

}  // namespace memrnn
