// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "memrnn/cells.hpp"
#include "memrnn/tasks.hpp"
#include "memrnn/tensor.hpp"

namespace memrnn {

enum class HeadKind { Classifier, LanguageModel };

struct ModelConfig {
  CellConfig cell;            // d_x is the input dimension of layer 0
  std::size_t layers = 1;     // layer k>0 consumes the d_h outputs of layer k-1
  HeadKind head = HeadKind::Classifier;
  Pooling pooling = Pooling::MeanOverTime;
  std::size_t classes = 0;    // classifier output size
  std::size_t vocab = 0;      // embedding rows / LM output size
  bool embed = false;         // token input through the embedding table
  std::size_t mlp_hidden = 0; // classifier hidden width, 0 = single affine
  real dropout = 0;           // rate on non-recurrent connections, train only
};

/// One input sequence: either raw vectors or token ids (when the model embeds).
struct SeqInput {
  std::vector<Tensor> vectors;
  std::vector<int> tokens;
  int label = -1;

  std::size_t length() const { return vectors.empty() ? tokens.size() : vectors.size(); }
};

/// Embedding + recurrent stack + task head.
class SequenceModel {
 public:
  SequenceModel() = default;
  SequenceModel(const ModelConfig& cfg, Rng& rng);

  ModelConfig config;
  Embedding embedding;        // when config.embed
  std::vector<Cell> cells;
  ClassifierHead classifier;  // head == Classifier
  LmHead lm;                  // head == LanguageModel

  std::size_t parameter_count() const;

  /// Visits every trainable tensor in a fixed order as (name, tensor).
  void for_each_param(const std::function<void(const std::string&, Tensor&)>& fn);
  void for_each_param(const std::function<void(const std::string&, const Tensor&)>& fn) const;
};

/// Gradients shaped like a model's trainable tensors, visited in the
/// same fixed order.
struct ModelGrads {
  Tensor embedding;
  std::vector<CellGrads> cells;
  Tensor head_W, head_b;          // W_out / b_out of whichever head is live
  Tensor head_Wh, head_bh;        // classifier hidden layer, when present

  static ModelGrads zeros_like(const SequenceModel& model);
  void add_scaled(const ModelGrads& other, real a);
  void scale(real a);
  void for_each(const std::function<void(const std::string&, Tensor&)>& fn);
  void for_each(const std::function<void(const std::string&, const Tensor&)>& fn) const;
};

/// Pairs each parameter with its gradient slot, in visitation order.
void for_each_param_grad(SequenceModel& model, ModelGrads& grads,
                         const std::function<void(const std::string&, Tensor&, Tensor&)>& fn);

/// Everything one forward pass recorded, enough for an exact backward pass.
struct ForwardCache {
  std::vector<std::vector<StepTrace>> traces;   // [layer][t]
  std::vector<std::vector<Tensor>> layer_in;    // [layer][t] inputs actually fed
  std::vector<std::vector<Tensor>> in_mask;     // dropout masks on layer inputs
  std::vector<Tensor> head_mask;                // dropout masks on states feeding the head
  std::vector<Tensor> head_states;              // masked top-layer states
  Tensor pooled;
  Tensor hidden_act;                            // classifier hidden activation
  Tensor probs;                                 // classifier probabilities
  std::vector<Tensor> lm_probs;                 // LM: distribution at each position
  real loss = 0;
};

/// Forward pass with trace capture. `dropout_rng` enables training-mode
/// dropout on the non-recurrent connections; pass nullptr for evaluation.
ForwardCache forward_classify(const SequenceModel& model, const SeqInput& input,
                              Rng* dropout_rng);
ForwardCache forward_lm(const SequenceModel& model, const SeqInput& input,
                        Rng* dropout_rng);

/// Reverse-mode pass over a recorded forward; accumulates into `grads`.
void backward(const SequenceModel& model, const SeqInput& input,
              const ForwardCache& cache, ModelGrads& grads);

}  // namespace memrnn
