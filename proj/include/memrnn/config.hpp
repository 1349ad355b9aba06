// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "memrnn/model.hpp"

namespace memrnn {

/// Full experiment description. Every field maps to one `key = value` line in
/// a config file and one --key=value command-line override.
struct TrainConfig {
  std::string task = "synthetic";  // synthetic | text | image | lm
  std::string unit = "rnn";        // rnn | lstm
  std::string forget = "none";     // none | f1 | f2
  std::string nonlinearity = "tanh";         // tanh | sigmoid
  std::string output_gate_input = "h_prev";  // h_prev | h_fwm
  bool peepholes = true;
  std::size_t d_x = 3;
  std::size_t d_h = 64;
  std::size_t layers = 1;
  std::string pooling = "mean";  // mean | final
  std::size_t mlp_hidden = 0;    // 0 = single affine head
  real dropout = 0;
  real lr = real(1e-3);
  std::size_t batch_size = 32;
  std::size_t epochs = 10;
  real clip_norm = 0;  // 0 disables clipping
  std::uint64_t seed = 42;
  std::string precision = "f64";  // f64 | f32, must match the build
  std::size_t threads = 1;

  // synthetic task
  std::size_t synth_train_n = 20000;
  std::size_t synth_test_n = 5000;
  std::size_t synth_len = 50;
  double synth_special_train = 0.375;
  double synth_special_test = 1.0;

  // file-backed tasks
  std::string train_path;
  std::string test_path;
  std::string train_labels;  // image task
  std::string test_labels;
  std::size_t max_vocab = 10000;
  std::size_t seq_len = 35;  // lm batching window
  bool embed_trainable = true;

  std::string out_dir = "runs/default";
};

using KvList = std::vector<std::pair<std::string, std::string>>;

/// Flat `key = value` file; '#' starts a comment, blank lines are skipped.
KvList parse_config_file(const std::string& path);

/// Builds a config from defaults + file pairs + override pairs (in that
/// order); the MEMRNN_SEED environment variable, when set, wins over all.
/// Throws ConfigError on unknown keys or invalid values.
TrainConfig make_train_config(const KvList& file_pairs, const KvList& overrides);

/// Applies one key=value assignment. Exposed for checkpoint loading.
void apply_config_pair(TrainConfig& cfg, const std::string& key, const std::string& value);

/// Validates ranges and enum values; throws ConfigError naming the bad key.
void validate(const TrainConfig& cfg);

/// All keys in canonical order with canonical value formatting.
KvList to_kv(const TrainConfig& cfg);

CellConfig cell_config_from(const TrainConfig& cfg);

}  // namespace memrnn
