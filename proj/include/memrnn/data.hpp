// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "memrnn/tensor.hpp"

namespace memrnn {

/// One counting-task instance over the alphabet {-1, 0, 1}. A sequence holds
/// at most one -1; the label counts the 1s after it (or all 1s without it).
struct SyntheticSequence {
  std::vector<int> symbols;
  int label = 0;
  std::optional<std::size_t> special_pos;
};

/// Independent label count used to validate the generator and any model claims.
/// Throws ConfigError on a foreign symbol or a second -1.
int synth_oracle(const std::vector<int>& symbols);

/// Generates n sequences of length T. Positions are i.i.d. 0/1 with p=0.5;
/// exactly round(special_fraction * n) sequences get one -1 at a uniformly
/// random position (exact partition, then the order is shuffled).
std::vector<SyntheticSequence> synth_generate(Rng& rng, std::size_t n, std::size_t T,
                                              double special_fraction);

/// One-hot encoding in the fixed order (-1, 0, 1).
Tensor encode_symbol(int symbol);
std::vector<Tensor> encode_symbols(const std::vector<int>& symbols);
int decode_symbol(const Tensor& one_hot);

/// File format: one sequence per line, comma-separated symbols, '|', label.
void synth_save(const std::vector<SyntheticSequence>& data, const std::string& path);
std::vector<SyntheticSequence> synth_load(const std::string& path);

struct TextDataset {
  std::unordered_map<std::string, int> vocab;  // includes pad=0 and unk=1
  std::vector<std::pair<std::vector<int>, int>> examples;  // (token ids, class)
  std::size_t vocab_size = 0;
  std::size_t num_classes = 0;
};

/// Lines are "label<TAB>text"; text is lowercased and split on whitespace.
/// The vocabulary keeps the max_vocab most frequent tokens (lexicographic
/// tie-break) after the reserved ids 0=pad and 1=unk.
TextDataset text_load(const std::string& path, std::size_t max_vocab);
/// Same parse but mapping tokens through an existing vocabulary (for test sets).
TextDataset text_load_with_vocab(const std::string& path,
                                 const std::unordered_map<std::string, int>& vocab,
                                 std::size_t num_classes);

/// Plain whitespace token stream for language modelling, one id per token.
std::vector<int> lm_load_tokens(const std::string& path, std::size_t max_vocab,
                                std::unordered_map<std::string, int>* vocab_out);
std::vector<int> lm_load_tokens_with_vocab(const std::string& path,
                                           const std::unordered_map<std::string, int>& vocab);

struct ImageSequence {
  std::vector<Tensor> rows;  // each 1 x cols, values in [0, 1]
  int label = 0;
};

/// IDX pair loader (big-endian magics 0x00000803 / 0x00000801); pixels are
/// scaled to [0, 1] by /255. Image i pairs with label i.
std::vector<ImageSequence> idx_load(const std::string& images_path,
                                    const std::string& labels_path);

/// FNV-1a over a file's bytes, for dataset fingerprints.
std::uint64_t file_checksum(const std::string& path);

}  // namespace memrnn
