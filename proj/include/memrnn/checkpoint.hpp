// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <unordered_map>

#include "memrnn/config.hpp"
#include "memrnn/model.hpp"

namespace memrnn {

struct Checkpoint {
  TrainConfig train;
  SequenceModel model;
  std::uint64_t rng_state = 0;
  std::unordered_map<std::string, int> vocab;  // token tasks only
};

/// Versioned text dump of the run config, resolved model shape, RNG state and
/// every parameter tensor. Values are written as hex floats, so a save/load
/// cycle is bit-exact at the build's precision.
void save_checkpoint(const std::string& path, const SequenceModel& model,
                     const TrainConfig& train, std::uint64_t rng_state,
                     const std::unordered_map<std::string, int>* vocab = nullptr);

Checkpoint load_checkpoint(const std::string& path);

}  // namespace memrnn
