// SPDX-License-Identifier: Apache-2.0
#include "memrnn/cells.hpp"

#include <cmath>

namespace memrnn {

const char* to_string(UnitKind k) { return k == UnitKind::Rnn ? "rnn" : "lstm"; }
const char* to_string(ForgetKind k) {
  switch (k) {
    case ForgetKind::None: return "none";
    case ForgetKind::F1: return "f1";
    default: return "f2";
  }
}
const char* to_string(Nonlinearity k) {
  return k == Nonlinearity::Tanh ? "tanh" : "sigmoid";
}
const char* to_string(OutputGateInput k) {
  return k == OutputGateInput::PrevState ? "h_prev" : "h_fwm";
}

namespace {

Tensor apply_g(Nonlinearity g, const Tensor& x) {
  return g == Nonlinearity::Tanh ? tanh(x) : sigmoid(x);
}

// Derivative from the activation value: tanh' = 1 - y^2, sigmoid' = y(1 - y).
Tensor g_prime_from_value(Nonlinearity g, const Tensor& y) {
  Tensor d(y.rows(), y.cols());
  if (g == Nonlinearity::Tanh) {
    for (std::size_t i = 0; i < y.size(); ++i) d[i] = real(1) - y[i] * y[i];
  } else {
    for (std::size_t i = 0; i < y.size(); ++i) d[i] = y[i] * (real(1) - y[i]);
  }
  return d;
}

Tensor affine_recurrent(const RnnParams& p, const Tensor& x, const Tensor& h) {
  Tensor a = matvec(p.W, x);
  Tensor uh = matvec(p.U, h);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += uh[i] + p.b[i];
  return a;
}

// LSTM body with independently supplied recurrent inputs: h_rec feeds the
// input/forget gates and the candidate, h_og feeds the output gate. The
// baseline step and the framework step differ only in what they pass here.
void lstm_body(const LstmParams& p, const Tensor& x, const Tensor& h_rec,
               const Tensor& h_og, const Tensor& c_prev, StepTrace& t) {
  Tensor a_i = add(add(matvec(p.W_ix, x), matvec(p.W_ih, h_rec)), p.b_i);
  Tensor a_f = add(add(matvec(p.W_fx, x), matvec(p.W_fh, h_rec)), p.b_f);
  if (p.peepholes) {
    for (std::size_t k = 0; k < a_i.size(); ++k) {
      a_i[k] += p.p_i[k] * c_prev[k];
      a_f[k] += p.p_f[k] * c_prev[k];
    }
  }
  t.i = sigmoid(a_i);
  t.f = sigmoid(a_f);
  Tensor a_c = add(add(matvec(p.W_cx, x), matvec(p.W_ch, h_rec)), p.b_c);
  t.cand = tanh(a_c);
  t.c = add(hadamard(t.f, c_prev), hadamard(t.i, t.cand));
  Tensor a_o = add(add(matvec(p.W_ox, x), matvec(p.W_oh, h_og)), p.b_o);
  if (p.peepholes) {
    for (std::size_t k = 0; k < a_o.size(); ++k) a_o[k] += p.p_o[k] * t.c[k];
  }
  t.o = sigmoid(a_o);
  t.c_tanh = tanh(t.c);
  t.h_out = hadamard(t.o, t.c_tanh);
}

// Reverse of lstm_body. dh/dc_in are gradients w.r.t. h_out and c.
// Outputs dx, dh_rec, dh_og, dc_prev; parameter grads accumulate into g.
void lstm_body_backward(const LstmParams& p, const StepTrace& t, const Tensor& h_rec,
                        const Tensor& h_og, const Tensor& dh, const Tensor& dc_in,
                        LstmParams& g, Tensor& dx, Tensor& dh_rec, Tensor& dh_og,
                        Tensor& dc_prev) {
  const std::size_t n = t.h_out.size();
  Tensor da_o(1, n), dc(1, n), da_f(1, n), da_i(1, n), da_c(1, n);
  for (std::size_t k = 0; k < n; ++k) {
    real do_k = dh[k] * t.c_tanh[k];
    da_o[k] = do_k * t.o[k] * (real(1) - t.o[k]);
    dc[k] = dc_in[k] + dh[k] * t.o[k] * (real(1) - t.c_tanh[k] * t.c_tanh[k]);
    if (p.peepholes) dc[k] += p.p_o[k] * da_o[k];
    da_f[k] = dc[k] * t.c_prev[k] * t.f[k] * (real(1) - t.f[k]);
    da_i[k] = dc[k] * t.cand[k] * t.i[k] * (real(1) - t.i[k]);
    da_c[k] = dc[k] * t.i[k] * (real(1) - t.cand[k] * t.cand[k]);
  }
  dc_prev = hadamard(dc, t.f);
  if (p.peepholes) {
    for (std::size_t k = 0; k < n; ++k) {
      dc_prev[k] += p.p_i[k] * da_i[k] + p.p_f[k] * da_f[k];
      g.p_i[k] += da_i[k] * t.c_prev[k];
      g.p_f[k] += da_f[k] * t.c_prev[k];
      g.p_o[k] += da_o[k] * t.c[k];
    }
  }
  add_outer(g.W_ix, da_i, t.x);
  add_outer(g.W_ih, da_i, h_rec);
  axpy(g.b_i, 1, da_i);
  add_outer(g.W_fx, da_f, t.x);
  add_outer(g.W_fh, da_f, h_rec);
  axpy(g.b_f, 1, da_f);
  add_outer(g.W_cx, da_c, t.x);
  add_outer(g.W_ch, da_c, h_rec);
  axpy(g.b_c, 1, da_c);
  add_outer(g.W_ox, da_o, t.x);
  add_outer(g.W_oh, da_o, h_og);
  axpy(g.b_o, 1, da_o);

  dx = matvec_t(p.W_ix, da_i);
  axpy(dx, 1, matvec_t(p.W_fx, da_f));
  axpy(dx, 1, matvec_t(p.W_cx, da_c));
  axpy(dx, 1, matvec_t(p.W_ox, da_o));
  dh_rec = matvec_t(p.W_ih, da_i);
  axpy(dh_rec, 1, matvec_t(p.W_fh, da_f));
  axpy(dh_rec, 1, matvec_t(p.W_ch, da_c));
  dh_og = matvec_t(p.W_oh, da_o);
}

}  // namespace

Cell::Cell(const CellConfig& cfg, Rng& rng) : cfg_(cfg) {
  const std::size_t dx = cfg.d_x, dh = cfg.d_h;
  if (dx < 1 || dh < 1) throw ConfigError("cell dims must be >= 1");
  auto affine = [&](RnnParams& p) {
    p.W = glorot_uniform(rng, dh, dx);
    p.U = glorot_uniform(rng, dh, dh);
    p.b = Tensor(1, dh);
  };
  if (cfg.unit == UnitKind::Rnn) {
    affine(rnn);
  } else {
    auto gate = [&](Tensor& Wx, Tensor& Wh, Tensor& b) {
      Wx = glorot_uniform(rng, dh, dx);
      Wh = glorot_uniform(rng, dh, dh);
      b = Tensor(1, dh);
    };
    gate(lstm.W_ix, lstm.W_ih, lstm.b_i);
    gate(lstm.W_fx, lstm.W_fh, lstm.b_f);
    gate(lstm.W_cx, lstm.W_ch, lstm.b_c);
    gate(lstm.W_ox, lstm.W_oh, lstm.b_o);
    lstm.b_f.fill(1);  // forget gate starts open
    lstm.peepholes = cfg.peepholes;
    if (cfg.peepholes) {
      real range = real(1) / std::sqrt(real(dh));
      lstm.p_i = uniform_init(rng, 1, dh, range);
      lstm.p_f = uniform_init(rng, 1, dh, range);
      lstm.p_o = uniform_init(rng, 1, dh, range);
    }
    if (cfg.forget != ForgetKind::None) affine(wm);
  }
  forget.kind = cfg.forget;
  if (cfg.forget == ForgetKind::F1) {
    forget.W_f = glorot_uniform(rng, dh, dh);
    forget.b_f = Tensor(1, dh);
  }
}

const WmParams& Cell::wm_params() const {
  return cfg_.unit == UnitKind::Rnn ? rnn : wm;
}
WmParams& Cell::wm_params() {
  return cfg_.unit == UnitKind::Rnn ? rnn : wm;
}

std::size_t Cell::parameter_count() const {
  std::size_t n = 0;
  for_each_param([&](const char*, const Tensor& t) { n += t.size(); });
  return n;
}

RecurrentState Cell::initial_state() const {
  RecurrentState s;
  s.h = Tensor(1, cfg_.d_h);
  if (cfg_.unit == UnitKind::Lstm) s.c = Tensor(1, cfg_.d_h);
  return s;
}

CellGrads CellGrads::zeros_like(const Cell& cell) {
  CellGrads g;
  auto z = [](const Tensor& t) { return Tensor(t.rows(), t.cols()); };
  const CellConfig& c = cell.config();
  if (c.unit == UnitKind::Rnn) {
    g.rnn = {z(cell.rnn.W), z(cell.rnn.U), z(cell.rnn.b)};
  } else {
    const LstmParams& p = cell.lstm;
    g.lstm.W_ix = z(p.W_ix); g.lstm.W_ih = z(p.W_ih); g.lstm.b_i = z(p.b_i);
    g.lstm.W_fx = z(p.W_fx); g.lstm.W_fh = z(p.W_fh); g.lstm.b_f = z(p.b_f);
    g.lstm.W_cx = z(p.W_cx); g.lstm.W_ch = z(p.W_ch); g.lstm.b_c = z(p.b_c);
    g.lstm.W_ox = z(p.W_ox); g.lstm.W_oh = z(p.W_oh); g.lstm.b_o = z(p.b_o);
    g.lstm.peepholes = p.peepholes;
    if (p.peepholes) {
      g.lstm.p_i = z(p.p_i); g.lstm.p_f = z(p.p_f); g.lstm.p_o = z(p.p_o);
    }
    if (c.forget != ForgetKind::None) {
      g.wm = {z(cell.wm.W), z(cell.wm.U), z(cell.wm.b)};
    }
  }
  g.forget.kind = c.forget;
  if (c.forget == ForgetKind::F1) {
    g.forget.W_f = z(cell.forget.W_f);
    g.forget.b_f = z(cell.forget.b_f);
  }
  return g;
}

std::pair<Tensor, StepTrace> rnn_step(const RnnParams& p, Nonlinearity g,
                                      const Tensor& x, const Tensor& h_prev) {
  StepTrace t;
  t.x = x;
  t.h_prev = h_prev;
  t.h_out = apply_g(g, affine_recurrent(p, x, h_prev));
  return {t.h_out, std::move(t)};
}

std::pair<RecurrentState, StepTrace> lstm_step(const LstmParams& p, const Tensor& x,
                                               const RecurrentState& state) {
  StepTrace t;
  t.x = x;
  t.h_prev = state.h;
  t.c_prev = state.c;
  lstm_body(p, x, state.h, state.h, state.c, t);
  return {RecurrentState{t.h_out, t.c}, std::move(t)};
}

Tensor working_memory(const WmParams& p, Nonlinearity g, const Tensor& x,
                      const Tensor& h_prev) {
  return apply_g(g, affine_recurrent(p, x, h_prev));
}

Tensor forget_weight(const ForgetParams& p, const Tensor& h_wm, const Tensor& h_prev) {
  switch (p.kind) {
    case ForgetKind::F1:
      if (p.W_f.empty() || p.b_f.empty()) {
        throw ConfigError("forget_weight: F1 requires W_f and b_f");
      }
      return sigmoid(add(matvec(p.W_f, h_wm), p.b_f));
    case ForgetKind::F2:
      return sigmoid(hadamard(h_wm, h_prev));
    default:
      throw ConfigError("forget_weight: no forget function configured");
  }
}

Tensor apply_forget(const Tensor& F, const Tensor& h_prev) {
  return hadamard(F, h_prev);
}

RecurrentState framework_step(const Cell& cell, const Tensor& x,
                              const RecurrentState& prev, StepTrace& trace,
                              const StepHooks& hooks) {
  const CellConfig& cfg = cell.config();
  trace = StepTrace{};
  trace.x = x;
  trace.h_prev = prev.h;
  trace.c_prev = prev.c;

  const Tensor* h_rec = &prev.h;
  if (cfg.forget != ForgetKind::None) {
    trace.h_wm = working_memory(cell.wm_params(), cfg.g, x, prev.h);
    if (hooks.force_forget != nullptr) {
      trace.F = *hooks.force_forget;
      trace.forget_forced = true;
    } else {
      trace.F = forget_weight(cell.forget, trace.h_wm, prev.h);
    }
    trace.h_fwm = apply_forget(trace.F, prev.h);
    h_rec = &trace.h_fwm;
  }

  RecurrentState next;
  if (cfg.unit == UnitKind::Rnn) {
    // Eq. 14: long-term store reuses the working-memory weights.
    trace.h_out = apply_g(cfg.g, affine_recurrent(cell.rnn, x, *h_rec));
    next.h = trace.h_out;
  } else {
    const Tensor& h_og =
        (cfg.forget != ForgetKind::None &&
         cfg.output_gate_input == OutputGateInput::ForgottenState)
            ? trace.h_fwm
            : prev.h;
    lstm_body(cell.lstm, x, *h_rec, h_og, prev.c, trace);
    next.h = trace.h_out;
    next.c = trace.c;
  }
  return next;
}

StepBackward framework_step_backward(const Cell& cell, const StepTrace& trace,
                                     const Tensor& dh, const Tensor& dc,
                                     CellGrads& grads) {
  const CellConfig& cfg = cell.config();
  const bool has_forget = cfg.forget != ForgetKind::None;
  const Tensor& h_rec = has_forget ? trace.h_fwm : trace.h_prev;

  StepBackward out;
  out.dh_prev = Tensor(1, cfg.d_h);
  Tensor dh_rec(1, cfg.d_h);

  if (cfg.unit == UnitKind::Rnn) {
    Tensor da = hadamard(dh, g_prime_from_value(cfg.g, trace.h_out));
    add_outer(grads.rnn.W, da, trace.x);
    add_outer(grads.rnn.U, da, h_rec);
    axpy(grads.rnn.b, 1, da);
    out.dx = matvec_t(cell.rnn.W, da);
    dh_rec = matvec_t(cell.rnn.U, da);
  } else {
    const bool og_forgotten = has_forget && cfg.output_gate_input ==
                                                OutputGateInput::ForgottenState;
    const Tensor& h_og = og_forgotten ? trace.h_fwm : trace.h_prev;
    Tensor dh_og;
    Tensor dc_in = dc.empty() ? Tensor(1, cfg.d_h) : dc;
    lstm_body_backward(cell.lstm, trace, h_rec, h_og, dh, dc_in, grads.lstm,
                       out.dx, dh_rec, dh_og, out.dc_prev);
    if (og_forgotten) {
      axpy(dh_rec, 1, dh_og);
    } else {
      axpy(out.dh_prev, 1, dh_og);
    }
  }

  if (!has_forget) {
    axpy(out.dh_prev, 1, dh_rec);
    return out;
  }

  // Stage 2 backward: h_fwm = F .* h_prev.
  const Tensor& dh_fwm = dh_rec;
  axpy(out.dh_prev, 1, hadamard(dh_fwm, trace.F));
  Tensor dh_wm(1, cfg.d_h);
  if (!trace.forget_forced) {
    Tensor dF = hadamard(dh_fwm, trace.h_prev);
    Tensor da_F(1, cfg.d_h);
    for (std::size_t k = 0; k < da_F.size(); ++k) {
      da_F[k] = dF[k] * trace.F[k] * (real(1) - trace.F[k]);
    }
    if (cfg.forget == ForgetKind::F1) {
      add_outer(grads.forget.W_f, da_F, trace.h_wm);
      axpy(grads.forget.b_f, 1, da_F);
      dh_wm = matvec_t(cell.forget.W_f, da_F);
    } else {  // F2: preactivation is h_wm .* h_prev
      dh_wm = hadamard(da_F, trace.h_prev);
      axpy(out.dh_prev, 1, hadamard(da_F, trace.h_wm));
    }
  }

  // Stage 1 backward; with the RNN unit these grads land in the shared bundle.
  RnnParams& wm_grads = cfg.unit == UnitKind::Rnn ? grads.rnn : grads.wm;
  const WmParams& wm_p = cell.wm_params();
  Tensor da_wm = hadamard(dh_wm, g_prime_from_value(cfg.g, trace.h_wm));
  add_outer(wm_grads.W, da_wm, trace.x);
  add_outer(wm_grads.U, da_wm, trace.h_prev);
  axpy(wm_grads.b, 1, da_wm);
  axpy(out.dx, 1, matvec_t(wm_p.W, da_wm));
  axpy(out.dh_prev, 1, matvec_t(wm_p.U, da_wm));
  return out;
}

}  // namespace memrnn
