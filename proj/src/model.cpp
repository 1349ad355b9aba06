// SPDX-License-Identifier: Apache-2.0
#include "memrnn/model.hpp"

#include <cmath>
#include <utility>

#include "memrnn/training.hpp"

namespace memrnn {

namespace {

void check_finite_state(const RecurrentState& s, std::size_t layer, std::size_t t) {
  if (!s.h.all_finite() || (!s.c.empty() && !s.c.all_finite())) {
    throw NumericError("non-finite hidden state at timestep " + std::to_string(t) +
                       " (layer " + std::to_string(layer) + ")");
  }
}

Tensor masked(const Tensor& v, const Tensor& mask) {
  return mask.empty() ? v : hadamard(v, mask);
}

}  // namespace

SequenceModel::SequenceModel(const ModelConfig& cfg, Rng& rng) : config(cfg) {
  if (cfg.layers < 1) throw ConfigError("model needs at least one layer");
  if (cfg.embed) {
    if (cfg.vocab == 0) throw ConfigError("embedding requires a vocabulary size");
    embedding.table = uniform_init(rng, cfg.vocab, cfg.cell.d_x, real(0.05));
  }
  cells.reserve(cfg.layers);
  for (std::size_t k = 0; k < cfg.layers; ++k) {
    CellConfig cc = cfg.cell;
    if (k > 0) cc.d_x = cfg.cell.d_h;
    cells.emplace_back(cc, rng);
  }
  const std::size_t dh = cfg.cell.d_h;
  if (cfg.head == HeadKind::Classifier) {
    if (cfg.classes == 0) throw ConfigError("classifier requires a class count");
    classifier.pooling = cfg.pooling;
    std::size_t head_in = dh;
    if (cfg.mlp_hidden > 0) {
      classifier.W_hidden = glorot_uniform(rng, cfg.mlp_hidden, dh);
      classifier.b_hidden = Tensor(1, cfg.mlp_hidden);
      head_in = cfg.mlp_hidden;
    }
    classifier.W_out = glorot_uniform(rng, cfg.classes, head_in);
    classifier.b_out = Tensor(1, cfg.classes);
  } else {
    if (cfg.vocab == 0) throw ConfigError("language model requires a vocabulary size");
    lm.W_out = glorot_uniform(rng, cfg.vocab, dh);
    lm.b_out = Tensor(1, cfg.vocab);
  }
}

std::size_t SequenceModel::parameter_count() const {
  std::size_t n = 0;
  for_each_param([&](const std::string&, const Tensor& t) { n += t.size(); });
  return n;
}

namespace {

template <typename ModelT, typename Fn>
void visit_model(ModelT& m, Fn&& fn) {
  if (m.config.embed && m.embedding.trainable) fn("emb.table", m.embedding.table);
  for (std::size_t k = 0; k < m.cells.size(); ++k) {
    std::string prefix = "cell" + std::to_string(k) + ".";
    m.cells[k].for_each_param(
        [&](const char* name, auto& t) { fn(prefix + name, t); });
  }
  if (m.config.head == HeadKind::Classifier) {
    if (m.classifier.has_hidden()) {
      fn("head.W_hidden", m.classifier.W_hidden);
      fn("head.b_hidden", m.classifier.b_hidden);
    }
    fn("head.W_out", m.classifier.W_out);
    fn("head.b_out", m.classifier.b_out);
  } else {
    fn("head.W_out", m.lm.W_out);
    fn("head.b_out", m.lm.b_out);
  }
}

}  // namespace

void SequenceModel::for_each_param(
    const std::function<void(const std::string&, Tensor&)>& fn) {
  visit_model(*this, fn);
}

void SequenceModel::for_each_param(
    const std::function<void(const std::string&, const Tensor&)>& fn) const {
  visit_model(*this, fn);
}

ModelGrads ModelGrads::zeros_like(const SequenceModel& m) {
  ModelGrads g;
  if (m.config.embed && m.embedding.trainable) {
    g.embedding = Tensor(m.embedding.table.rows(), m.embedding.table.cols());
  }
  g.cells.reserve(m.cells.size());
  for (const Cell& c : m.cells) g.cells.push_back(CellGrads::zeros_like(c));
  if (m.config.head == HeadKind::Classifier) {
    if (m.classifier.has_hidden()) {
      g.head_Wh = Tensor(m.classifier.W_hidden.rows(), m.classifier.W_hidden.cols());
      g.head_bh = Tensor(1, m.classifier.b_hidden.cols());
    }
    g.head_W = Tensor(m.classifier.W_out.rows(), m.classifier.W_out.cols());
    g.head_b = Tensor(1, m.classifier.b_out.cols());
  } else {
    g.head_W = Tensor(m.lm.W_out.rows(), m.lm.W_out.cols());
    g.head_b = Tensor(1, m.lm.b_out.cols());
  }
  return g;
}

namespace {

template <typename GradsT, typename Fn>
void visit_grads(GradsT& g, Fn&& fn) {
  auto maybe = [&](const std::string& name, auto& t) {
    if (!t.empty()) fn(name, t);
  };
  maybe("emb.table", g.embedding);
  for (std::size_t k = 0; k < g.cells.size(); ++k) {
    std::string prefix = "cell" + std::to_string(k) + ".";
    auto& c = g.cells[k];
    maybe(prefix + "rnn.W", c.rnn.W);
    maybe(prefix + "rnn.U", c.rnn.U);
    maybe(prefix + "rnn.b", c.rnn.b);
    maybe(prefix + "lstm.W_ix", c.lstm.W_ix);
    maybe(prefix + "lstm.W_ih", c.lstm.W_ih);
    maybe(prefix + "lstm.b_i", c.lstm.b_i);
    maybe(prefix + "lstm.W_fx", c.lstm.W_fx);
    maybe(prefix + "lstm.W_fh", c.lstm.W_fh);
    maybe(prefix + "lstm.b_f", c.lstm.b_f);
    maybe(prefix + "lstm.W_cx", c.lstm.W_cx);
    maybe(prefix + "lstm.W_ch", c.lstm.W_ch);
    maybe(prefix + "lstm.b_c", c.lstm.b_c);
    maybe(prefix + "lstm.W_ox", c.lstm.W_ox);
    maybe(prefix + "lstm.W_oh", c.lstm.W_oh);
    maybe(prefix + "lstm.b_o", c.lstm.b_o);
    maybe(prefix + "lstm.p_i", c.lstm.p_i);
    maybe(prefix + "lstm.p_f", c.lstm.p_f);
    maybe(prefix + "lstm.p_o", c.lstm.p_o);
    maybe(prefix + "wm.W", c.wm.W);
    maybe(prefix + "wm.U", c.wm.U);
    maybe(prefix + "wm.b", c.wm.b);
    maybe(prefix + "forget.W_f", c.forget.W_f);
    maybe(prefix + "forget.b_f", c.forget.b_f);
  }
  maybe("head.W_hidden", g.head_Wh);
  maybe("head.b_hidden", g.head_bh);
  maybe("head.W_out", g.head_W);
  maybe("head.b_out", g.head_b);
}

}  // namespace

void ModelGrads::for_each(const std::function<void(const std::string&, Tensor&)>& fn) {
  visit_grads(*this, fn);
}

void ModelGrads::for_each(
    const std::function<void(const std::string&, const Tensor&)>& fn) const {
  visit_grads(*this, fn);
}

void ModelGrads::add_scaled(const ModelGrads& other, real a) {
  std::vector<const Tensor*> src;
  other.for_each([&](const std::string&, const Tensor& t) { src.push_back(&t); });
  std::size_t i = 0;
  for_each([&](const std::string&, Tensor& t) { axpy(t, a, *src[i++]); });
}

void ModelGrads::scale(real a) {
  for_each([&](const std::string&, Tensor& t) {
    for (std::size_t i = 0; i < t.size(); ++i) t[i] *= a;
  });
}

void for_each_param_grad(SequenceModel& model, ModelGrads& grads,
                         const std::function<void(const std::string&, Tensor&, Tensor&)>& fn) {
  std::vector<std::pair<std::string, Tensor*>> ps, gs;
  model.for_each_param([&](const std::string& n, Tensor& t) { ps.emplace_back(n, &t); });
  grads.for_each([&](const std::string& n, Tensor& t) { gs.emplace_back(n, &t); });
  if (ps.size() != gs.size()) {
    throw ShapeError("parameter/gradient sets have different sizes");
  }
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (ps[i].first != gs[i].first) {
      throw ShapeError("parameter/gradient mismatch at " + ps[i].first);
    }
    fn(ps[i].first, *ps[i].second, *gs[i].second);
  }
}

namespace {

// Runs the recurrent stack and fills the trace/mask sections of the cache.
// Returns via cache.head_states the (masked) top-layer states.
void run_stack(const SequenceModel& m, const SeqInput& input, Rng* dropout_rng,
               std::size_t steps, ForwardCache& cache) {
  const ModelConfig& cfg = m.config;
  const real rate = cfg.dropout;
  const bool use_dropout = dropout_rng != nullptr && rate > 0;
  const std::size_t L = m.cells.size();

  cache.traces.assign(L, {});
  cache.in_mask.assign(L, {});
  cache.head_mask.clear();
  cache.head_states.clear();

  std::vector<Tensor> current(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    if (m.config.embed) {
      current[t] = m.embedding.lookup(static_cast<std::size_t>(input.tokens[t]));
    } else {
      current[t] = input.vectors[t];
    }
  }

  for (std::size_t k = 0; k < L; ++k) {
    cache.traces[k].resize(steps);
    cache.in_mask[k].resize(steps);
    RecurrentState state = m.cells[k].initial_state();
    for (std::size_t t = 0; t < steps; ++t) {
      if (use_dropout) {
        cache.in_mask[k][t] = dropout_mask(*dropout_rng, rate, current[t].cols());
        current[t] = hadamard(current[t], cache.in_mask[k][t]);
      }
      state = framework_step(m.cells[k], current[t], state, cache.traces[k][t]);
      check_finite_state(state, k, t);
      current[t] = state.h;  // feeds the next layer (or the head)
    }
  }

  cache.head_mask.resize(steps);
  cache.head_states.resize(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    if (use_dropout) {
      cache.head_mask[t] = dropout_mask(*dropout_rng, rate, current[t].cols());
    }
    cache.head_states[t] = masked(current[t], cache.head_mask[t]);
  }
}

}  // namespace

ForwardCache forward_classify(const SequenceModel& m, const SeqInput& input,
                              Rng* dropout_rng) {
  const std::size_t T = input.length();
  if (T == 0) throw ConfigError("classify: empty sequence");
  ForwardCache cache;
  run_stack(m, input, dropout_rng, T, cache);

  const ClassifierHead& head = m.classifier;
  cache.pooled = head.pooling == Pooling::MeanOverTime ? mean_pool(cache.head_states)
                                                       : cache.head_states.back();
  Tensor head_in = cache.pooled;
  if (head.has_hidden()) {
    cache.hidden_act = tanh(add(matvec(head.W_hidden, cache.pooled), head.b_hidden));
    head_in = cache.hidden_act;
  }
  cache.probs = softmax(add(matvec(head.W_out, head_in), head.b_out));
  if (input.label >= 0) {
    cache.loss = cross_entropy(cache.probs, static_cast<std::size_t>(input.label));
  }
  return cache;
}

ForwardCache forward_lm(const SequenceModel& m, const SeqInput& input,
                        Rng* dropout_rng) {
  const std::size_t T = input.tokens.size();
  if (T < 2) throw ConfigError("lm: need at least two tokens");
  for (int tok : input.tokens) {
    if (tok < 0 || static_cast<std::size_t>(tok) >= m.config.vocab) {
      throw ConfigError("lm: token id " + std::to_string(tok) +
                        " out of range for vocabulary " + std::to_string(m.config.vocab));
    }
  }
  ForwardCache cache;
  run_stack(m, input, dropout_rng, T - 1, cache);  // position t predicts token t+1

  cache.lm_probs.resize(T - 1);
  real total = 0;
  for (std::size_t t = 0; t + 1 < T; ++t) {
    cache.lm_probs[t] = softmax(add(matvec(m.lm.W_out, cache.head_states[t]), m.lm.b_out));
    total += cross_entropy(cache.lm_probs[t], static_cast<std::size_t>(input.tokens[t + 1]));
  }
  cache.loss = total / real(T - 1);
  return cache;
}

void backward(const SequenceModel& m, const SeqInput& input,
              const ForwardCache& cache, ModelGrads& grads) {
  const ModelConfig& cfg = m.config;
  const std::size_t L = m.cells.size();
  const std::size_t steps = cache.traces.empty() ? 0 : cache.traces[0].size();
  const std::size_t dh = cfg.cell.d_h;

  // dh_extra[t]: gradient reaching the top-layer state at t from the head.
  std::vector<Tensor> dh_extra(steps, Tensor(1, dh));

  if (cfg.head == HeadKind::Classifier) {
    Tensor dlogits = cache.probs;
    dlogits[static_cast<std::size_t>(input.label)] -= 1;

    Tensor dpooled;
    if (m.classifier.has_hidden()) {
      add_outer(grads.head_W, dlogits, cache.hidden_act);
      axpy(grads.head_b, 1, dlogits);
      Tensor dhid = matvec_t(m.classifier.W_out, dlogits);
      for (std::size_t i = 0; i < dhid.size(); ++i) {
        dhid[i] *= real(1) - cache.hidden_act[i] * cache.hidden_act[i];
      }
      add_outer(grads.head_Wh, dhid, cache.pooled);
      axpy(grads.head_bh, 1, dhid);
      dpooled = matvec_t(m.classifier.W_hidden, dhid);
    } else {
      add_outer(grads.head_W, dlogits, cache.pooled);
      axpy(grads.head_b, 1, dlogits);
      dpooled = matvec_t(m.classifier.W_out, dlogits);
    }

    if (m.classifier.pooling == Pooling::MeanOverTime) {
      const real inv_t = real(1) / real(steps);
      for (std::size_t t = 0; t < steps; ++t) {
        Tensor d = dpooled;
        for (std::size_t i = 0; i < d.size(); ++i) d[i] *= inv_t;
        dh_extra[t] = masked(d, cache.head_mask[t]);
      }
    } else {
      dh_extra[steps - 1] = masked(dpooled, cache.head_mask[steps - 1]);
    }
  } else {
    const real inv_n = real(1) / real(steps);
    for (std::size_t t = 0; t < steps; ++t) {
      Tensor dlogits = cache.lm_probs[t];
      dlogits[static_cast<std::size_t>(input.tokens[t + 1])] -= 1;
      for (std::size_t i = 0; i < dlogits.size(); ++i) dlogits[i] *= inv_n;
      add_outer(grads.head_W, dlogits, cache.head_states[t]);
      axpy(grads.head_b, 1, dlogits);
      dh_extra[t] = masked(matvec_t(m.lm.W_out, dlogits), cache.head_mask[t]);
    }
  }

  // Per-layer BPTT from the top of the stack down.
  std::vector<Tensor> dinput(steps);
  for (std::size_t k = L; k-- > 0;) {
    Tensor dh_next(1, dh);
    Tensor dc_next;
    if (m.cells[k].config().unit == UnitKind::Lstm) dc_next = Tensor(1, dh);
    for (std::size_t t = steps; t-- > 0;) {
      Tensor dh = add(dh_extra[t], dh_next);
      StepBackward sb = framework_step_backward(m.cells[k], cache.traces[k][t], dh,
                                                dc_next, grads.cells[k]);
      dh_next = std::move(sb.dh_prev);
      dc_next = std::move(sb.dc_prev);
      dinput[t] = std::move(sb.dx);
    }
    if (k > 0) {
      // The layer's input was the (masked) state of the layer below.
      for (std::size_t t = 0; t < steps; ++t) {
        dh_extra[t] = masked(dinput[t], cache.in_mask[k][t]);
      }
    }
  }

  if (cfg.embed && m.embedding.trainable) {
    for (std::size_t t = 0; t < steps; ++t) {
      Tensor d = masked(dinput[t], cache.in_mask[0][t]);
      const std::size_t row = static_cast<std::size_t>(input.tokens[t]);
      for (std::size_t j = 0; j < d.size(); ++j) grads.embedding(row, j) += d[j];
    }
  }
}

}  // namespace memrnn
