// SPDX-License-Identifier: Apache-2.0
#include "memrnn/tasks.hpp"

#include <cmath>

#include "memrnn/model.hpp"

namespace memrnn {

Tensor Embedding::lookup(std::size_t id) const {
  if (id >= table.rows()) {
    throw ConfigError("embedding: token id " + std::to_string(id) +
                      " out of range for vocabulary " + std::to_string(table.rows()));
  }
  Tensor v(1, table.cols());
  for (std::size_t j = 0; j < table.cols(); ++j) v[j] = table(id, j);
  return v;
}

Tensor mean_pool(const std::vector<Tensor>& states) {
  if (states.empty()) throw ConfigError("mean_pool: empty state list");
  Tensor acc(1, states[0].cols());
  for (const Tensor& s : states) axpy(acc, 1, s);
  const real inv = real(1) / real(states.size());
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] *= inv;
  return acc;
}

real accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.empty() || predictions.size() != labels.size()) {
    throw ConfigError("accuracy: prediction/label lists must be non-empty and equal length");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] == labels[i]) ++correct;
  }
  return real(correct) / real(predictions.size());
}

real perplexity(real nll) { return std::exp(nll); }

std::pair<Tensor, int> classify(const SequenceModel& model, const SeqInput& input) {
  ForwardCache cache = forward_classify(model, input, nullptr);
  return {cache.probs, static_cast<int>(argmax(cache.probs))};
}

LmLossResult lm_loss(const SequenceModel& model, const std::vector<int>& tokens) {
  SeqInput input;
  input.tokens = tokens;
  ForwardCache cache = forward_lm(model, input, nullptr);
  LmLossResult result;
  result.nll = cache.loss;
  result.per_step.reserve(cache.lm_probs.size());
  for (std::size_t t = 0; t < cache.lm_probs.size(); ++t) {
    result.per_step.push_back(
        cross_entropy(cache.lm_probs[t], static_cast<std::size_t>(tokens[t + 1])));
  }
  return result;
}

}  // namespace memrnn
