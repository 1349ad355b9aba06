// SPDX-License-Identifier: Apache-2.0
#include "memrnn/data.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

namespace memrnn {

int synth_oracle(const std::vector<int>& symbols) {
  int count_all = 0;
  int count_after = 0;
  bool seen_special = false;
  for (int s : symbols) {
    if (s == -1) {
      if (seen_special) throw ConfigError("synth_oracle: more than one -1 in sequence");
      seen_special = true;
      count_after = 0;
    } else if (s == 0 || s == 1) {
      count_all += s;
      count_after += s;
    } else {
      throw ConfigError("synth_oracle: foreign symbol " + std::to_string(s));
    }
  }
  return seen_special ? count_after : count_all;
}

std::vector<SyntheticSequence> synth_generate(Rng& rng, std::size_t n, std::size_t T,
                                              double special_fraction) {
  if (T < 1) throw ConfigError("synth_generate: T must be >= 1");
  if (special_fraction < 0 || special_fraction > 1) {
    throw ConfigError("synth_generate: special_fraction must be in [0, 1]");
  }
  const std::size_t n_special =
      static_cast<std::size_t>(std::llround(special_fraction * double(n)));

  std::vector<SyntheticSequence> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    SyntheticSequence& seq = out[i];
    seq.symbols.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
      seq.symbols[t] = rng.uniform() < 0.5 ? 1 : 0;
    }
    if (i < n_special) {
      const std::size_t pos = static_cast<std::size_t>(rng.below(T));
      seq.symbols[pos] = -1;
      seq.special_pos = pos;
    }
    seq.label = synth_oracle(seq.symbols);
  }
  // Fisher-Yates so special sequences are not clustered at the front.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(out[i - 1], out[j]);
  }
  return out;
}

Tensor encode_symbol(int symbol) {
  Tensor v(1, 3);
  switch (symbol) {
    case -1: v[0] = 1; break;
    case 0: v[1] = 1; break;
    case 1: v[2] = 1; break;
    default: throw ConfigError("encode_symbol: foreign symbol " + std::to_string(symbol));
  }
  return v;
}

std::vector<Tensor> encode_symbols(const std::vector<int>& symbols) {
  std::vector<Tensor> out;
  out.reserve(symbols.size());
  for (int s : symbols) out.push_back(encode_symbol(s));
  return out;
}

int decode_symbol(const Tensor& one_hot) {
  if (one_hot.size() != 3) {
    throw ShapeError("decode_symbol: expected 1x3, got " + one_hot.shape_str());
  }
  const std::size_t i = argmax(one_hot);
  return i == 0 ? -1 : (i == 1 ? 0 : 1);
}

void synth_save(const std::vector<SyntheticSequence>& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("synth_save: cannot open " + path);
  for (const SyntheticSequence& seq : data) {
    for (std::size_t t = 0; t < seq.symbols.size(); ++t) {
      if (t) out << ',';
      out << seq.symbols[t];
    }
    out << '|' << seq.label << '\n';
  }
}

std::vector<SyntheticSequence> synth_load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("synth_load: cannot open " + path);
  std::vector<SyntheticSequence> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::size_t bar = line.find('|');
    if (bar == std::string::npos) {
      throw IoError("synth_load: " + path + ":" + std::to_string(line_no) +
                    ": missing '|' separator");
    }
    SyntheticSequence seq;
    std::stringstream symbols(line.substr(0, bar));
    std::string tok;
    std::size_t t = 0;
    while (std::getline(symbols, tok, ',')) {
      try {
        seq.symbols.push_back(std::stoi(tok));
      } catch (const std::exception&) {
        throw IoError("synth_load: " + path + ":" + std::to_string(line_no) +
                      ": bad symbol '" + tok + "'");
      }
      if (seq.symbols.back() == -1) seq.special_pos = t;
      ++t;
    }
    try {
      seq.label = std::stoi(line.substr(bar + 1));
    } catch (const std::exception&) {
      throw IoError("synth_load: " + path + ":" + std::to_string(line_no) + ": bad label");
    }
    if (synth_oracle(seq.symbols) != seq.label) {
      throw IoError("synth_load: " + path + ":" + std::to_string(line_no) +
                    ": label disagrees with the sequence");
    }
    out.push_back(std::move(seq));
  }
  return out;
}

namespace {

std::vector<std::string> tokenize_lower(const std::string& text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) tokens.push_back(std::move(cur)), cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

struct ParsedTextLine {
  int label;
  std::vector<std::string> tokens;
};

std::vector<ParsedTextLine> parse_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("text_load: cannot open " + path);
  std::vector<ParsedTextLine> lines;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw IoError("text_load: " + path + ":" + std::to_string(line_no) +
                    ": expected 'label<TAB>text'");
    }
    ParsedTextLine parsed;
    try {
      parsed.label = std::stoi(line.substr(0, tab));
    } catch (const std::exception&) {
      throw IoError("text_load: " + path + ":" + std::to_string(line_no) + ": bad label");
    }
    if (parsed.label < 0) {
      throw IoError("text_load: " + path + ":" + std::to_string(line_no) +
                    ": negative class id");
    }
    parsed.tokens = tokenize_lower(line.substr(tab + 1));
    lines.push_back(std::move(parsed));
  }
  return lines;
}

// Frequency order, lexicographic tie-break.
std::unordered_map<std::string, int> build_vocab(const std::vector<ParsedTextLine>& lines,
                                                 std::size_t max_vocab) {
  std::map<std::string, std::size_t> freq;
  for (const ParsedTextLine& l : lines) {
    for (const std::string& tok : l.tokens) ++freq[tok];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::unordered_map<std::string, int> vocab;
  int next_id = 2;  // 0 = pad, 1 = unk
  for (const auto& [tok, _] : ranked) {
    if (max_vocab > 0 && static_cast<std::size_t>(next_id) >= max_vocab + 2) break;
    vocab[tok] = next_id++;
  }
  return vocab;
}

TextDataset assemble(const std::vector<ParsedTextLine>& lines,
                     std::unordered_map<std::string, int> vocab,
                     std::size_t num_classes) {
  TextDataset ds;
  ds.vocab = std::move(vocab);
  int max_id = 1;
  for (const auto& [_, id] : ds.vocab) max_id = std::max(max_id, id);
  ds.vocab_size = static_cast<std::size_t>(max_id) + 1;
  std::size_t max_class = 0;
  for (const ParsedTextLine& l : lines) {
    std::vector<int> ids;
    ids.reserve(l.tokens.size());
    for (const std::string& tok : l.tokens) {
      auto it = ds.vocab.find(tok);
      ids.push_back(it == ds.vocab.end() ? 1 : it->second);
    }
    max_class = std::max(max_class, static_cast<std::size_t>(l.label));
    ds.examples.emplace_back(std::move(ids), l.label);
  }
  ds.num_classes = num_classes > 0 ? num_classes : max_class + 1;
  return ds;
}

}  // namespace

TextDataset text_load(const std::string& path, std::size_t max_vocab) {
  auto lines = parse_text_file(path);
  return assemble(lines, build_vocab(lines, max_vocab), 0);
}

TextDataset text_load_with_vocab(const std::string& path,
                                 const std::unordered_map<std::string, int>& vocab,
                                 std::size_t num_classes) {
  return assemble(parse_text_file(path), vocab, num_classes);
}

std::vector<int> lm_load_tokens(const std::string& path, std::size_t max_vocab,
                                std::unordered_map<std::string, int>* vocab_out) {
  std::ifstream in(path);
  if (!in) throw IoError("lm_load_tokens: cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::vector<ParsedTextLine> pseudo{{0, tokenize_lower(buffer.str())}};
  auto vocab = build_vocab(pseudo, max_vocab);
  std::vector<int> ids;
  ids.reserve(pseudo[0].tokens.size());
  for (const std::string& tok : pseudo[0].tokens) {
    auto it = vocab.find(tok);
    ids.push_back(it == vocab.end() ? 1 : it->second);
  }
  if (vocab_out) *vocab_out = std::move(vocab);
  return ids;
}

std::vector<int> lm_load_tokens_with_vocab(
    const std::string& path, const std::unordered_map<std::string, int>& vocab) {
  std::ifstream in(path);
  if (!in) throw IoError("lm_load_tokens: cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::vector<int> ids;
  for (const std::string& tok : tokenize_lower(buffer.str())) {
    auto it = vocab.find(tok);
    ids.push_back(it == vocab.end() ? 1 : it->second);
  }
  return ids;
}

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& path, const char* what) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
    throw IoError("idx_load: " + path + ": truncated " + what);
  }
  return (std::uint32_t(bytes[0]) << 24) | (std::uint32_t(bytes[1]) << 16) |
         (std::uint32_t(bytes[2]) << 8) | std::uint32_t(bytes[3]);
}

}  // namespace

std::vector<ImageSequence> idx_load(const std::string& images_path,
                                    const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw IoError("idx_load: cannot open " + images_path);
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw IoError("idx_load: cannot open " + labels_path);

  const std::uint32_t img_magic = read_be32(img, images_path, "magic");
  if (img_magic != 0x00000803u) {
    throw IoError("idx_load: " + images_path + ": magic 0x" +
                  [&] { char b[16]; std::snprintf(b, sizeof b, "%08x", img_magic); return std::string(b); }() +
                  ", expected 0x00000803");
  }
  const std::uint32_t lab_magic = read_be32(lab, labels_path, "magic");
  if (lab_magic != 0x00000801u) {
    throw IoError("idx_load: " + labels_path + ": magic 0x" +
                  [&] { char b[16]; std::snprintf(b, sizeof b, "%08x", lab_magic); return std::string(b); }() +
                  ", expected 0x00000801");
  }

  const std::uint32_t n_images = read_be32(img, images_path, "count");
  const std::uint32_t n_rows = read_be32(img, images_path, "rows");
  const std::uint32_t n_cols = read_be32(img, images_path, "cols");
  const std::uint32_t n_labels = read_be32(lab, labels_path, "count");
  if (n_images != n_labels) {
    throw IoError("idx_load: image count " + std::to_string(n_images) +
                  " != label count " + std::to_string(n_labels));
  }

  std::vector<ImageSequence> out(n_images);
  std::vector<unsigned char> pixel_row(n_cols);
  for (std::uint32_t i = 0; i < n_images; ++i) {
    out[i].rows.reserve(n_rows);
    for (std::uint32_t r = 0; r < n_rows; ++r) {
      if (!img.read(reinterpret_cast<char*>(pixel_row.data()), n_cols)) {
        throw IoError("idx_load: " + images_path + ": truncated at image " +
                      std::to_string(i) + " row " + std::to_string(r));
      }
      Tensor row(1, n_cols);
      for (std::uint32_t c = 0; c < n_cols; ++c) row[c] = real(pixel_row[c]) / real(255);
      out[i].rows.push_back(std::move(row));
    }
    char label = 0;
    if (!lab.read(&label, 1)) {
      throw IoError("idx_load: " + labels_path + ": truncated at label " + std::to_string(i));
    }
    out[i].label = static_cast<unsigned char>(label);
  }
  return out;
}

std::uint64_t file_checksum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("file_checksum: cannot open " + path);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  char buf[4096];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 0x100000001b3ULL;
    }
  }
  return hash;
}

}  // namespace memrnn
