// SPDX-License-Identifier: Apache-2.0
#include "memrnn/training.hpp"

#include <cmath>
#include <thread>

namespace memrnn {

AdamState::AdamState(const SequenceModel& model)
    : m_(ModelGrads::zeros_like(model)), v_(ModelGrads::zeros_like(model)) {}

void AdamState::update(SequenceModel& model, const ModelGrads& grads,
                       const AdamConfig& cfg) {
  std::vector<const Tensor*> gs;
  grads.for_each([&](const std::string& name, const Tensor& t) {
    if (!t.all_finite()) throw NumericError("non-finite gradient in " + name);
    gs.push_back(&t);
  });
  std::vector<Tensor*> ms, vs;
  m_.for_each([&](const std::string&, Tensor& t) { ms.push_back(&t); });
  v_.for_each([&](const std::string&, Tensor& t) { vs.push_back(&t); });

  ++t_;
  const real bc1 = real(1) - std::pow(cfg.beta1, real(t_));
  const real bc2 = real(1) - std::pow(cfg.beta2, real(t_));

  std::size_t idx = 0;
  model.for_each_param([&](const std::string&, Tensor& p) {
    const Tensor& g = *gs[idx];
    Tensor& m = *ms[idx];
    Tensor& v = *vs[idx];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (real(1) - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (real(1) - cfg.beta2) * g[i] * g[i];
      const real m_hat = m[i] / bc1;
      const real v_hat = v[i] / bc2;
      p[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
    ++idx;
  });
}

Tensor dropout_mask(Rng& rng, real rate, std::size_t len) {
  if (rate < 0 || rate >= 1) throw ConfigError("dropout rate must be in [0, 1)");
  Tensor mask(1, len, real(1));
  if (rate == 0) return mask;
  const real keep_scale = real(1) / (real(1) - rate);
  for (std::size_t i = 0; i < len; ++i) {
    mask[i] = rng.uniform() < double(rate) ? real(0) : keep_scale;
  }
  return mask;
}

real clip_global_norm(ModelGrads& grads, real max_norm) {
  real total = 0;
  grads.for_each([&](const std::string&, const Tensor& t) {
    total += squared_l2_norm(t);
  });
  const real norm = std::sqrt(total);
  if (max_norm > 0 && norm > max_norm) {
    grads.scale(max_norm / norm);
  }
  return norm;
}

namespace {

ForwardCache run_forward(const SequenceModel& model, const SeqInput& input,
                         Rng* dropout_rng) {
  return model.config.head == HeadKind::Classifier
             ? forward_classify(model, input, dropout_rng)
             : forward_lm(model, input, dropout_rng);
}

real sequence_pass(const SequenceModel& model, const SeqInput& input,
                   std::uint64_t dropout_seed, std::uint64_t stream,
                   ModelGrads& grads) {
  Rng rng = Rng(dropout_seed).split(stream);
  Rng* rng_ptr = model.config.dropout > 0 ? &rng : nullptr;
  ForwardCache cache = run_forward(model, input, rng_ptr);
  backward(model, input, cache, grads);
  return cache.loss;
}

}  // namespace

BpttResult bptt(const SequenceModel& model, const std::vector<SeqInput>& batch,
                std::uint64_t dropout_seed, std::size_t threads) {
  if (batch.empty()) throw ConfigError("bptt: empty batch");
  const std::size_t n = batch.size();

  BpttResult result;
  result.grads = ModelGrads::zeros_like(model);

  if (threads <= 1 || n == 1) {
    real total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      total += sequence_pass(model, batch[i], dropout_seed, i, result.grads);
    }
    result.grads.scale(real(1) / real(n));
    result.loss = total / real(n);
    return result;
  }

  // Per-sequence partials reduced in sequence order: bitwise identical to
  // the single-threaded path for any worker count.
  std::vector<ModelGrads> partial;
  partial.reserve(n);
  for (std::size_t i = 0; i < n; ++i) partial.push_back(ModelGrads::zeros_like(model));
  std::vector<real> losses(n, 0);

  const std::size_t workers = std::min(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) {
        losses[i] = sequence_pass(model, batch[i], dropout_seed, i, partial[i]);
      }
    });
  }
  for (auto& th : pool) th.join();

  real total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total += losses[i];
    result.grads.add_scaled(partial[i], 1);
  }
  result.grads.scale(real(1) / real(n));
  result.loss = total / real(n);
  return result;
}

namespace {

real loss_at(SequenceModel& model, const SeqInput& sample, std::uint64_t dropout_seed) {
  Rng rng = Rng(dropout_seed).split(0);
  Rng* rng_ptr = model.config.dropout > 0 ? &rng : nullptr;
  return run_forward(model, sample, rng_ptr).loss;
}

}  // namespace

GradCheckReport compare_to_fd(SequenceModel& model, const SeqInput& sample,
                              const ModelGrads& analytic, const GradCheckOptions& opts) {
  std::vector<std::pair<std::string, const Tensor*>> gs;
  analytic.for_each([&](const std::string& n, const Tensor& t) { gs.emplace_back(n, &t); });

  GradCheckReport report;
  report.tolerance = opts.tolerance;
  const real h = opts.fd_step;

  std::size_t idx = 0;
  model.for_each_param([&](const std::string& name, Tensor& p) {
    const Tensor& g = *gs[idx].second;
    std::size_t stride = 1;
    if (opts.max_coords_per_tensor > 0 && p.size() > opts.max_coords_per_tensor) {
      stride = (p.size() + opts.max_coords_per_tensor - 1) / opts.max_coords_per_tensor;
    }
    for (std::size_t i = 0; i < p.size(); i += stride) {
      const real saved = p[i];
      p[i] = saved + h;
      const real up = loss_at(model, sample, opts.dropout_seed);
      p[i] = saved - h;
      const real down = loss_at(model, sample, opts.dropout_seed);
      p[i] = saved;
      const real numeric = (up - down) / (2 * h);
      const real a = g[i];
      const real denom = std::max({std::abs(a), std::abs(numeric), real(1e-8)});
      const real rel = std::abs(a - numeric) / denom;
      ++report.coords_checked;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = name;
        report.worst_index = i;
        report.analytic = a;
        report.numeric = numeric;
      }
    }
    ++idx;
  });
  report.pass = report.max_rel_err < opts.tolerance;
  return report;
}

GradCheckReport grad_check(SequenceModel& model, const SeqInput& sample,
                           const GradCheckOptions& opts) {
  BpttResult analytic = bptt(model, {sample}, opts.dropout_seed, 1);
  return compare_to_fd(model, sample, analytic.grads, opts);
}

}  // namespace memrnn
