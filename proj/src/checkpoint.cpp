// SPDX-License-Identifier: Apache-2.0
#include "memrnn/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace memrnn {

namespace {

constexpr const char* kHeader = "memrnn-checkpoint v1";

// Every tensor in the model, including a non-trainable embedding.
std::vector<std::pair<std::string, Tensor*>> tensor_slots(SequenceModel& m) {
  std::vector<std::pair<std::string, Tensor*>> slots;
  if (m.config.embed && !m.embedding.trainable) {
    slots.emplace_back("emb.table", &m.embedding.table);
  }
  m.for_each_param([&](const std::string& name, Tensor& t) { slots.emplace_back(name, &t); });
  return slots;
}

std::string head_str(HeadKind h) {
  return h == HeadKind::Classifier ? "classifier" : "lm";
}

}  // namespace

void save_checkpoint(const std::string& path, const SequenceModel& model,
                     const TrainConfig& train, std::uint64_t rng_state) {
  std::ofstream out(path);
  if (!out) throw IoError("checkpoint: cannot open " + path + " for writing");
  out << kHeader << '\n';
  out << "precision " << (sizeof(real) == 8 ? "f64" : "f32") << '\n';
  out << "rng " << rng_state << '\n';
  for (const auto& [k, v] : to_kv(train)) out << "train " << k << ' ' << v << '\n';

  const ModelConfig& mc = model.config;
  out << "model layers " << mc.layers << '\n';
  out << "model head " << head_str(mc.head) << '\n';
  out << "model pooling " << (mc.pooling == Pooling::MeanOverTime ? "mean" : "final") << '\n';
  out << "model classes " << mc.classes << '\n';
  out << "model vocab " << mc.vocab << '\n';
  out << "model embed " << (mc.embed ? "true" : "false") << '\n';
  out << "model embed_trainable " << (model.embedding.trainable ? "true" : "false") << '\n';
  out << "model mlp_hidden " << mc.mlp_hidden << '\n';

  auto& mutable_model = const_cast<SequenceModel&>(model);
  char buf[64];
  for (const auto& [name, tensor] : tensor_slots(mutable_model)) {
    out << "tensor " << name << ' ' << tensor->rows() << ' ' << tensor->cols() << '\n';
    for (std::size_t r = 0; r < tensor->rows(); ++r) {
      for (std::size_t c = 0; c < tensor->cols(); ++c) {
        std::snprintf(buf, sizeof buf, "%a", double((*tensor)(r, c)));
        out << (c ? " " : "") << buf;
      }
      out << '\n';
    }
  }
  out << "end\n";
  if (!out) throw IoError("checkpoint: write to " + path + " failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("checkpoint: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kHeader) {
    throw IoError("checkpoint: " + path + " is not a '" + kHeader + "' file");
  }

  Checkpoint ckpt;
  ModelConfig mc;
  bool embed_trainable = true;
  std::vector<std::tuple<std::string, std::size_t, std::size_t, std::vector<real>>> tensors;

  while (std::getline(in, line)) {
    if (line == "end") break;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "precision") {
      std::string p;
      ls >> p;
      const char* built = sizeof(real) == 8 ? "f64" : "f32";
      if (p != built) {
        throw ConfigError("checkpoint: stored precision " + p + " but this build is " + built);
      }
    } else if (tag == "rng") {
      ls >> ckpt.rng_state;
    } else if (tag == "train") {
      std::string key;
      ls >> key;
      std::string value;
      std::getline(ls, value);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      apply_config_pair(ckpt.train, key, value);
    } else if (tag == "model") {
      std::string key, value;
      ls >> key >> value;
      if (key == "layers") mc.layers = std::stoul(value);
      else if (key == "head") mc.head = value == "lm" ? HeadKind::LanguageModel : HeadKind::Classifier;
      else if (key == "pooling") mc.pooling = value == "final" ? Pooling::FinalState : Pooling::MeanOverTime;
      else if (key == "classes") mc.classes = std::stoul(value);
      else if (key == "vocab") mc.vocab = std::stoul(value);
      else if (key == "embed") mc.embed = value == "true";
      else if (key == "embed_trainable") embed_trainable = value == "true";
      else if (key == "mlp_hidden") mc.mlp_hidden = std::stoul(value);
      else throw IoError("checkpoint: unknown model key '" + key + "'");
    } else if (tag == "tensor") {
      std::string name;
      std::size_t rows, cols;
      ls >> name >> rows >> cols;
      std::vector<real> values;
      values.reserve(rows * cols);
      for (std::size_t r = 0; r < rows; ++r) {
        if (!std::getline(in, line)) {
          throw IoError("checkpoint: truncated tensor " + name);
        }
        const char* p = line.c_str();
        char* next = nullptr;
        for (std::size_t c = 0; c < cols; ++c) {
          const double v = std::strtod(p, &next);
          if (next == p) throw IoError("checkpoint: bad value in tensor " + name);
          values.push_back(real(v));
          p = next;
        }
      }
      tensors.emplace_back(name, rows, cols, std::move(values));
    } else if (!tag.empty()) {
      throw IoError("checkpoint: unknown line tag '" + tag + "'");
    }
  }

  validate(ckpt.train);
  mc.cell = cell_config_from(ckpt.train);
  mc.dropout = ckpt.train.dropout;

  Rng scratch(0);  // weights are overwritten below
  ckpt.model = SequenceModel(mc, scratch);
  ckpt.model.embedding.trainable = embed_trainable;

  auto slots = tensor_slots(ckpt.model);
  if (slots.size() != tensors.size()) {
    throw IoError("checkpoint: expected " + std::to_string(slots.size()) + " tensors, found " +
                  std::to_string(tensors.size()));
  }
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const auto& [name, rows, cols, values] = tensors[i];
    if (name != slots[i].first) {
      throw IoError("checkpoint: tensor '" + name + "' where '" + slots[i].first +
                    "' was expected");
    }
    Tensor& dst = *slots[i].second;
    if (rows != dst.rows() || cols != dst.cols()) {
      throw IoError("checkpoint: tensor " + name + " has shape " + std::to_string(rows) + "x" +
                    std::to_string(cols) + ", expected " + dst.shape_str());
    }
    for (std::size_t k = 0; k < values.size(); ++k) dst[k] = values[k];
  }
  return ckpt;
}

}  // namespace memrnn
