// SPDX-License-Identifier: Apache-2.0
//
// Recurrent units and the three-stage step that wraps them.
//
// A framework step runs three stages:
//   1. working memory   h_wm   = g(W_wm x + U_wm h_prev + b_wm)
//   2. forget           F      = f(h_wm, h_prev),  h_fwm = F .* h_prev
//   3. long-term store  h      = unit(x, h_fwm)
// The unit in stage 3 is a basic RNN cell or an LSTM cell. For the RNN unit
// the stage-3 weights are the same storage as the stage-1 weights; for the
// LSTM unit stage 1 has its own bundle and the cell keeps its usual gates,
// reading h_fwm instead of h_prev everywhere except (optionally) the output
// gate.

#pragma once

#include <cstddef>
#include <string>
#include <utility>

#include "memrnn/tensor.hpp"

namespace memrnn {

enum class UnitKind { Rnn, Lstm };
enum class ForgetKind { None, F1, F2 };
enum class Nonlinearity { Tanh, Sigmoid };
/// Which recurrent vector the LSTM output gate reads in a framework step.
enum class OutputGateInput { PrevState, ForgottenState };

const char* to_string(UnitKind k);
const char* to_string(ForgetKind k);
const char* to_string(Nonlinearity k);
const char* to_string(OutputGateInput k);

/// Weights of one affine recurrent map h' = g(W x + U h + b).
/// Doubles as the working-memory bundle; with the RNN unit the same object
/// also provides the long-term-store weights (shared storage, not a copy).
struct RnnParams {
  Tensor W;  // d_h x d_x
  Tensor U;  // d_h x d_h
  Tensor b;  // 1 x d_h
};
using WmParams = RnnParams;

/// LSTM gate weights with diagonal peephole vectors.
struct LstmParams {
  Tensor W_ix, W_ih, b_i;
  Tensor W_fx, W_fh, b_f;
  Tensor W_cx, W_ch, b_c;
  Tensor W_ox, W_oh, b_o;
  Tensor p_i, p_f, p_o;  // 1 x d_h, elementwise on the memory cell
  bool peepholes = true;
};

/// Forget-weight function parameters. F2 is parameter free.
struct ForgetParams {
  ForgetKind kind = ForgetKind::None;
  Tensor W_f;  // d_h x d_h, F1 only
  Tensor b_f;  // 1 x d_h,   F1 only
};

struct RecurrentState {
  Tensor h;  // 1 x d_h
  Tensor c;  // 1 x d_h for LSTM, empty otherwise
};

/// Everything one forward step consumed and produced. Replaying the step
/// from the recorded inputs reproduces the recorded activations exactly,
/// and the backward pass reads only from here.
struct StepTrace {
  Tensor x, h_prev, c_prev;       // inputs
  Tensor h_wm, F, h_fwm;          // framework stages (empty when forget=None)
  Tensor i, f, o, cand, c, c_tanh;  // LSTM internals
  Tensor h_out;
  bool forget_forced = false;     // F was overridden by a test hook
};

struct CellConfig {
  UnitKind unit = UnitKind::Rnn;
  ForgetKind forget = ForgetKind::None;
  Nonlinearity g = Nonlinearity::Tanh;
  OutputGateInput output_gate_input = OutputGateInput::PrevState;
  bool peepholes = true;
  std::size_t d_x = 0;
  std::size_t d_h = 0;
};

/// Parameter storage for one recurrent layer. Which bundles are live depends
/// on the configuration; dead bundles stay empty.
class Cell {
 public:
  Cell() = default;
  Cell(const CellConfig& cfg, Rng& rng);

  const CellConfig& config() const { return cfg_; }

  RnnParams rnn;        // unit=Rnn: working memory AND long-term store (Eq. 14 sharing)
  LstmParams lstm;      // unit=Lstm
  WmParams wm;          // unit=Lstm with a forget stage
  ForgetParams forget;  // kind=F1 carries W_f / b_f

  /// Working-memory bundle in use; for the RNN unit this is `rnn` itself.
  const WmParams& wm_params() const;
  WmParams& wm_params();

  std::size_t parameter_count() const;

  /// Visits every live parameter tensor in a fixed order as (name, tensor).
  template <typename Fn>
  void for_each_param(Fn&& fn) {
    visit(*this, fn);
  }
  template <typename Fn>
  void for_each_param(Fn&& fn) const {
    visit(*this, fn);
  }

  RecurrentState initial_state() const;

 private:
  template <typename CellT, typename Fn>
  static void visit(CellT& cell, Fn& fn) {
    const CellConfig& c = cell.cfg_;
    if (c.unit == UnitKind::Rnn) {
      fn("rnn.W", cell.rnn.W);
      fn("rnn.U", cell.rnn.U);
      fn("rnn.b", cell.rnn.b);
    } else {
      fn("lstm.W_ix", cell.lstm.W_ix);
      fn("lstm.W_ih", cell.lstm.W_ih);
      fn("lstm.b_i", cell.lstm.b_i);
      fn("lstm.W_fx", cell.lstm.W_fx);
      fn("lstm.W_fh", cell.lstm.W_fh);
      fn("lstm.b_f", cell.lstm.b_f);
      fn("lstm.W_cx", cell.lstm.W_cx);
      fn("lstm.W_ch", cell.lstm.W_ch);
      fn("lstm.b_c", cell.lstm.b_c);
      fn("lstm.W_ox", cell.lstm.W_ox);
      fn("lstm.W_oh", cell.lstm.W_oh);
      fn("lstm.b_o", cell.lstm.b_o);
      if (c.peepholes) {
        fn("lstm.p_i", cell.lstm.p_i);
        fn("lstm.p_f", cell.lstm.p_f);
        fn("lstm.p_o", cell.lstm.p_o);
      }
      if (c.forget != ForgetKind::None) {
        fn("wm.W", cell.wm.W);
        fn("wm.U", cell.wm.U);
        fn("wm.b", cell.wm.b);
      }
    }
    if (c.forget == ForgetKind::F1) {
      fn("forget.W_f", cell.forget.W_f);
      fn("forget.b_f", cell.forget.b_f);
    }
  }

  CellConfig cfg_;
};

/// Gradient tensors shaped like a cell's live parameters, visited in the
/// same order and under the same names.
struct CellGrads {
  RnnParams rnn;
  LstmParams lstm;
  WmParams wm;
  ForgetParams forget;

  static CellGrads zeros_like(const Cell& cell);
};

// --- single operations ------------------------------------------------------

/// Basic recurrent update h = g(W x + U h_prev + b).
std::pair<Tensor, StepTrace> rnn_step(const RnnParams& p, Nonlinearity g,
                                      const Tensor& x, const Tensor& h_prev);

/// LSTM update: sigmoid gates, tanh candidate, peepholes when enabled.
std::pair<RecurrentState, StepTrace> lstm_step(const LstmParams& p, const Tensor& x,
                                               const RecurrentState& state);

/// Stage 1: preliminary recurrent state from the current input and the
/// previous long-term store. Same form as rnn_step.
Tensor working_memory(const WmParams& p, Nonlinearity g, const Tensor& x,
                      const Tensor& h_prev);

/// Stage 2 weight: F1 = sigmoid(W_f h_wm + b_f) (ignores h_prev),
/// F2 = sigmoid(h_wm .* h_prev). Output is strictly inside (0,1).
Tensor forget_weight(const ForgetParams& p, const Tensor& h_wm, const Tensor& h_prev);

/// Stage 2 application: h_fwm = F .* h_prev.
Tensor apply_forget(const Tensor& F, const Tensor& h_prev);

/// Test hook: when force_forget is set, stage 2 uses that tensor as F and the
/// backward pass treats it as a constant.
struct StepHooks {
  const Tensor* force_forget = nullptr;
};

/// Full three-stage step (or the bare unit step when forget=None).
RecurrentState framework_step(const Cell& cell, const Tensor& x,
                              const RecurrentState& prev, StepTrace& trace,
                              const StepHooks& hooks = {});

/// Gradients flowing out of one step into its inputs.
struct StepBackward {
  Tensor dx;
  Tensor dh_prev;
  Tensor dc_prev;  // LSTM only
};

/// Reverse-mode step: dh/dc are the loss gradients w.r.t. the step outputs.
/// Parameter gradients accumulate into `grads`.
StepBackward framework_step_backward(const Cell& cell, const StepTrace& trace,
                                     const Tensor& dh, const Tensor& dc,
                                     CellGrads& grads);

}  // namespace memrnn
