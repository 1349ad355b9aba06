// SPDX-License-Identifier: Apache-2.0
#include "memrnn/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>

namespace memrnn {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config: " + key + " expects a boolean, got '" + v + "'");
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  try {
    return static_cast<std::size_t>(std::stoull(v));
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + " expects an unsigned integer, got '" + v + "'");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + " expects a number, got '" + v + "'");
  }
}

void expect_one_of(const std::string& key, const std::string& v,
                   std::initializer_list<const char*> allowed) {
  for (const char* a : allowed) {
    if (v == a) return;
  }
  std::string msg = "config: " + key + " must be one of {";
  bool first = true;
  for (const char* a : allowed) {
    if (!first) msg += ", ";
    msg += a;
    first = false;
  }
  throw ConfigError(msg + "}, got '" + v + "'");
}

}  // namespace

KvList parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open " + path);
  KvList pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: " + path + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    }
    pairs.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return pairs;
}

void apply_config_pair(TrainConfig& c, const std::string& key, const std::string& v) {
  if (key == "task") c.task = v;
  else if (key == "unit") c.unit = v;
  else if (key == "forget") c.forget = v;
  else if (key == "nonlinearity") c.nonlinearity = v;
  else if (key == "output_gate_input") c.output_gate_input = v;
  else if (key == "peepholes") c.peepholes = parse_bool(key, v);
  else if (key == "d_x") c.d_x = parse_size(key, v);
  else if (key == "d_h") c.d_h = parse_size(key, v);
  else if (key == "layers") c.layers = parse_size(key, v);
  else if (key == "pooling") c.pooling = v;
  else if (key == "mlp_hidden") c.mlp_hidden = parse_size(key, v);
  else if (key == "dropout") c.dropout = real(parse_double(key, v));
  else if (key == "lr") c.lr = real(parse_double(key, v));
  else if (key == "batch_size") c.batch_size = parse_size(key, v);
  else if (key == "epochs") c.epochs = parse_size(key, v);
  else if (key == "clip_norm") c.clip_norm = real(parse_double(key, v));
  else if (key == "seed") c.seed = static_cast<std::uint64_t>(std::stoull(v));
  else if (key == "precision") c.precision = v;
  else if (key == "threads") c.threads = parse_size(key, v);
  else if (key == "synth_train_n") c.synth_train_n = parse_size(key, v);
  else if (key == "synth_test_n") c.synth_test_n = parse_size(key, v);
  else if (key == "synth_len") c.synth_len = parse_size(key, v);
  else if (key == "synth_special_train") c.synth_special_train = parse_double(key, v);
  else if (key == "synth_special_test") c.synth_special_test = parse_double(key, v);
  else if (key == "train_path") c.train_path = v;
  else if (key == "test_path") c.test_path = v;
  else if (key == "train_labels") c.train_labels = v;
  else if (key == "test_labels") c.test_labels = v;
  else if (key == "max_vocab") c.max_vocab = parse_size(key, v);
  else if (key == "seq_len") c.seq_len = parse_size(key, v);
  else if (key == "embed_trainable") c.embed_trainable = parse_bool(key, v);
  else if (key == "out_dir") c.out_dir = v;
  else throw ConfigError("config: unknown key '" + key + "'");
}

TrainConfig make_train_config(const KvList& file_pairs, const KvList& overrides) {
  TrainConfig cfg;
  for (const auto& [k, v] : file_pairs) apply_config_pair(cfg, k, v);
  for (const auto& [k, v] : overrides) apply_config_pair(cfg, k, v);
  if (const char* env_seed = std::getenv("MEMRNN_SEED")) {
    apply_config_pair(cfg, "seed", env_seed);
  }
  validate(cfg);
  return cfg;
}

void validate(const TrainConfig& c) {
  expect_one_of("task", c.task, {"synthetic", "text", "image", "lm"});
  expect_one_of("unit", c.unit, {"rnn", "lstm"});
  expect_one_of("forget", c.forget, {"none", "f1", "f2"});
  expect_one_of("nonlinearity", c.nonlinearity, {"tanh", "sigmoid"});
  expect_one_of("output_gate_input", c.output_gate_input, {"h_prev", "h_fwm"});
  expect_one_of("pooling", c.pooling, {"mean", "final"});
  expect_one_of("precision", c.precision, {"f64", "f32"});
  const char* built = sizeof(real) == 8 ? "f64" : "f32";
  if (c.precision != built) {
    throw ConfigError("config: precision " + c.precision + " requested but this build is " +
                      built);
  }
  if (c.d_x < 1 || c.d_h < 1) throw ConfigError("config: d_x and d_h must be >= 1");
  if (c.layers < 1) throw ConfigError("config: layers must be >= 1");
  if (c.dropout < 0 || c.dropout >= 1) throw ConfigError("config: dropout must be in [0, 1)");
  if (c.lr <= 0) throw ConfigError("config: lr must be > 0");
  if (c.batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
  if (c.clip_norm < 0) throw ConfigError("config: clip_norm must be >= 0");
  if (c.threads < 1) throw ConfigError("config: threads must be >= 1");
  if (c.task == "synthetic") {
    if (c.d_x != 3) throw ConfigError("config: the synthetic task uses one-hot inputs, d_x must be 3");
    if (c.synth_len < 1) throw ConfigError("config: synth_len must be >= 1");
    if (c.synth_special_train < 0 || c.synth_special_train > 1 ||
        c.synth_special_test < 0 || c.synth_special_test > 1) {
      throw ConfigError("config: special fractions must be in [0, 1]");
    }
  }
  if (c.task == "lm" && c.seq_len < 2) throw ConfigError("config: seq_len must be >= 2");
}

KvList to_kv(const TrainConfig& c) {
  KvList kv;
  kv.emplace_back("task", c.task);
  kv.emplace_back("unit", c.unit);
  kv.emplace_back("forget", c.forget);
  kv.emplace_back("nonlinearity", c.nonlinearity);
  kv.emplace_back("output_gate_input", c.output_gate_input);
  kv.emplace_back("peepholes", c.peepholes ? "true" : "false");
  kv.emplace_back("d_x", std::to_string(c.d_x));
  kv.emplace_back("d_h", std::to_string(c.d_h));
  kv.emplace_back("layers", std::to_string(c.layers));
  kv.emplace_back("pooling", c.pooling);
  kv.emplace_back("mlp_hidden", std::to_string(c.mlp_hidden));
  kv.emplace_back("dropout", fmt_real(double(c.dropout)));
  kv.emplace_back("lr", fmt_real(double(c.lr)));
  kv.emplace_back("batch_size", std::to_string(c.batch_size));
  kv.emplace_back("epochs", std::to_string(c.epochs));
  kv.emplace_back("clip_norm", fmt_real(double(c.clip_norm)));
  kv.emplace_back("seed", std::to_string(c.seed));
  kv.emplace_back("precision", c.precision);
  kv.emplace_back("threads", std::to_string(c.threads));
  kv.emplace_back("synth_train_n", std::to_string(c.synth_train_n));
  kv.emplace_back("synth_test_n", std::to_string(c.synth_test_n));
  kv.emplace_back("synth_len", std::to_string(c.synth_len));
  kv.emplace_back("synth_special_train", fmt_real(c.synth_special_train));
  kv.emplace_back("synth_special_test", fmt_real(c.synth_special_test));
  kv.emplace_back("train_path", c.train_path);
  kv.emplace_back("test_path", c.test_path);
  kv.emplace_back("train_labels", c.train_labels);
  kv.emplace_back("test_labels", c.test_labels);
  kv.emplace_back("max_vocab", std::to_string(c.max_vocab));
  kv.emplace_back("seq_len", std::to_string(c.seq_len));
  kv.emplace_back("embed_trainable", c.embed_trainable ? "true" : "false");
  kv.emplace_back("out_dir", c.out_dir);
  return kv;
}

CellConfig cell_config_from(const TrainConfig& c) {
  CellConfig cc;
  cc.unit = c.unit == "rnn" ? UnitKind::Rnn : UnitKind::Lstm;
  cc.forget = c.forget == "none" ? ForgetKind::None
                                 : (c.forget == "f1" ? ForgetKind::F1 : ForgetKind::F2);
  cc.g = c.nonlinearity == "tanh" ? Nonlinearity::Tanh : Nonlinearity::Sigmoid;
  cc.output_gate_input = c.output_gate_input == "h_prev" ? OutputGateInput::PrevState
                                                         : OutputGateInput::ForgottenState;
  cc.peepholes = c.peepholes;
  cc.d_x = c.d_x;
  cc.d_h = c.d_h;
  return cc;
}

}  // namespace memrnn
