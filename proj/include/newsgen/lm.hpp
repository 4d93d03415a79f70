#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "newsgen/corpus.hpp"
#include "newsgen/error.hpp"
#include "newsgen/random.hpp"

namespace newsgen {

/// Architecture and optimizer settings for one word-level LSTM language model.
///
/// Defaults: two layers of 128 units; the rest (embedding width, window, optimizer,
/// clipping, init range) are this toolkit's choices and can be overridden per topic.
struct LMConfig {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 128;
  std::size_t layers = 2;
  std::size_t units = 128;
  std::size_t seq_len = 50;
  std::size_t batch_size = 16;
  double learning_rate = 0.1;
  double momentum = 0.9;
  double grad_clip = 5.0;
  double init_scale = 0.05;
  std::uint64_t seed = 0;

  void validate() const {
    if (vocab_size <= static_cast<std::size_t>(kNumSpecials)) throw ArgumentError("vocab_size must exceed the 4 special tokens");
    if (embed_dim < 1) throw ArgumentError("embed_dim must be >= 1");
    if (layers < 1) throw ArgumentError("layers must be >= 1");
    if (units < 1) throw ArgumentError("units must be >= 1");
    if (seq_len < 2) throw ArgumentError("seq_len must be >= 2");
    if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
    if (!(grad_clip > 0.0)) throw ArgumentError("grad_clip must be > 0");
    if (!(learning_rate > 0.0)) throw ArgumentError("learning_rate must be > 0");
  }

  std::size_t layer_input(std::size_t layer) const { return layer == 0 ? embed_dim : units; }

  /// Closed form: embedding + per-layer (input, recurrent, bias) + output projection.
  std::size_t parameter_count() const {
    std::size_t n = vocab_size * embed_dim;
    for (std::size_t l = 0; l < layers; ++l) n += 4 * units * (layer_input(l) + units + 1);
    return n + units * vocab_size + vocab_size;
  }

  bool operator==(const LMConfig&) const = default;
};

inline json to_json(const LMConfig& c) {
  return {{"vocab_size", c.vocab_size},   {"embed_dim", c.embed_dim},
          {"layers", c.layers},           {"units", c.units},
          {"seq_len", c.seq_len},         {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate}, {"momentum", c.momentum},
          {"grad_clip", c.grad_clip},     {"init_scale", c.init_scale},
          {"seed", c.seed}};
}

/// Reads the fields present in `j` over `base`.
inline LMConfig lm_config_from_json(const json& j, LMConfig base = {}) {
  base.vocab_size = j.value("vocab_size", base.vocab_size);
  base.embed_dim = j.value("embed_dim", base.embed_dim);
  base.layers = j.value("layers", base.layers);
  base.units = j.value("units", base.units);
  base.seq_len = j.value("seq_len", base.seq_len);
  base.batch_size = j.value("batch_size", base.batch_size);
  base.learning_rate = j.value("learning_rate", base.learning_rate);
  base.momentum = j.value("momentum", base.momentum);
  base.grad_clip = j.value("grad_clip", base.grad_clip);
  base.init_scale = j.value("init_scale", base.init_scale);
  base.seed = j.value("seed", base.seed);
  return base;
}

template <typename T>
struct Tensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<T> data;

  std::size_t size() const { return data.size(); }
};

namespace kernels {

template <typename T>
inline void axpy(T* y, T a, const T* x, std::size_t n) {
#pragma omp simd
  for (std::size_t j = 0; j < n; ++j) y[j] += a * x[j];
}

template <typename T>
inline T dot(const T* x, const T* y, std::size_t n) {
  T acc = 0;
#pragma omp simd reduction(+ : acc)
  for (std::size_t j = 0; j < n; ++j) acc += x[j] * y[j];
  return acc;
}

// z[0..out) += x[0..in) * W, W row-major in x out
template <typename T>
inline void vec_mat(const T* x, const T* w, T* z, std::size_t in, std::size_t out) {
  for (std::size_t i = 0; i < in; ++i) axpy(z, x[i], w + i * out, out);
}

// dx[0..in) += W * dz
template <typename T>
inline void mat_vec(const T* w, const T* dz, T* dx, std::size_t in, std::size_t out) {
  for (std::size_t i = 0; i < in; ++i) dx[i] += dot(w + i * out, dz, out);
}

// dW += x^T dz
template <typename T>
inline void outer_acc(T* dw, const T* x, const T* dz, std::size_t in, std::size_t out) {
  for (std::size_t i = 0; i < in; ++i) axpy(dw + i * out, x[i], dz, out);
}

template <typename T>
inline T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

/// ln softmax in 64-bit.
template <typename T>
inline std::vector<double> log_softmax(std::span<const T> logits) {
  double mx = -std::numeric_limits<double>::infinity();
  for (T v : logits) mx = std::max(mx, static_cast<double>(v));
  double sum = 0.0;
  for (T v : logits) sum += std::exp(static_cast<double>(v) - mx);
  const double lse = mx + std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = static_cast<double>(logits[i]) - lse;
  return out;
}

template <typename T>
inline std::vector<double> softmax(std::span<const T> logits) {
  auto out = log_softmax(logits);
  for (double& v : out) v = std::exp(v);
  return out;
}

}  // namespace kernels

/// Parameter set of an LSTM language model. Gate blocks within each 4*units row are
/// ordered input, forget, output, candidate.
template <typename T>
class BasicLanguageModel {
 public:
  BasicLanguageModel() = default;

  /// All-zero parameters with shapes derived from the config.
  explicit BasicLanguageModel(const LMConfig& config) : config_(config) {
    config_.validate();
    const std::size_t v = config_.vocab_size, e = config_.embed_dim, h = config_.units;
    tensors_.push_back({"embedding", {v, e}, std::vector<T>(v * e)});
    for (std::size_t l = 0; l < config_.layers; ++l) {
      const std::string p = "lstm" + std::to_string(l);
      const std::size_t in = config_.layer_input(l);
      tensors_.push_back({p + ".w_input", {in, 4 * h}, std::vector<T>(in * 4 * h)});
      tensors_.push_back({p + ".w_recurrent", {h, 4 * h}, std::vector<T>(h * 4 * h)});
      tensors_.push_back({p + ".bias", {4 * h}, std::vector<T>(4 * h)});
    }
    tensors_.push_back({"output.weight", {h, v}, std::vector<T>(h * v)});
    tensors_.push_back({"output.bias", {v}, std::vector<T>(v)});
  }

  /// Uniform init in +-init_scale, zero biases except forget-gate bias 1.0.
  static BasicLanguageModel initialized(const LMConfig& config) {
    BasicLanguageModel m(config);
    Rng rng(config.seed);
    for (auto& t : m.tensors_) {
      if (t.shape.size() == 1) continue;
      for (T& x : t.data) x = static_cast<T>(uniform(rng, -config.init_scale, config.init_scale));
    }
    const std::size_t h = config.units;
    for (std::size_t l = 0; l < config.layers; ++l) {
      auto& b = m.bias(l);
      std::fill(b.begin() + static_cast<std::ptrdiff_t>(h), b.begin() + static_cast<std::ptrdiff_t>(2 * h), T(1));
    }
    return m;
  }

  const LMConfig& config() const { return config_; }
  std::vector<Tensor<T>>& tensors() { return tensors_; }
  const std::vector<Tensor<T>>& tensors() const { return tensors_; }

  std::vector<T>& embedding() { return tensors_[0].data; }
  const std::vector<T>& embedding() const { return tensors_[0].data; }
  std::vector<T>& w_input(std::size_t l) { return tensors_[1 + 3 * l].data; }
  const std::vector<T>& w_input(std::size_t l) const { return tensors_[1 + 3 * l].data; }
  std::vector<T>& w_recurrent(std::size_t l) { return tensors_[2 + 3 * l].data; }
  const std::vector<T>& w_recurrent(std::size_t l) const { return tensors_[2 + 3 * l].data; }
  std::vector<T>& bias(std::size_t l) { return tensors_[3 + 3 * l].data; }
  const std::vector<T>& bias(std::size_t l) const { return tensors_[3 + 3 * l].data; }
  std::vector<T>& output_weight() { return tensors_[1 + 3 * config_.layers].data; }
  const std::vector<T>& output_weight() const { return tensors_[1 + 3 * config_.layers].data; }
  std::vector<T>& output_bias() { return tensors_[2 + 3 * config_.layers].data; }
  const std::vector<T>& output_bias() const { return tensors_[2 + 3 * config_.layers].data; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += t.size();
    return n;
  }

  std::uint64_t step_count() const { return step_count_; }
  void set_step_count(std::uint64_t s) { step_count_ = s; }

  bool all_finite() const {
    for (const auto& t : tensors_) {
      for (T x : t.data) {
        if (!std::isfinite(x)) return false;
      }
    }
    return true;
  }

  /// Zero tensors with the same names and shapes.
  std::vector<Tensor<T>> zeros_like() const {
    std::vector<Tensor<T>> out;
    for (const auto& t : tensors_) out.push_back({t.name, t.shape, std::vector<T>(t.size())});
    return out;
  }

  template <typename U>
  BasicLanguageModel<U> cast() const {
    BasicLanguageModel<U> m(config_);
    for (std::size_t i = 0; i < tensors_.size(); ++i) {
      std::transform(tensors_[i].data.begin(), tensors_[i].data.end(), m.tensors()[i].data.begin(),
                     [](T x) { return static_cast<U>(x); });
    }
    m.set_step_count(step_count_);
    return m;
  }

 private:
  LMConfig config_;
  std::vector<Tensor<T>> tensors_;
  std::uint64_t step_count_ = 0;
};

using LanguageModel = BasicLanguageModel<float>;

/// Recurrent state: per-layer hidden and cell vectors.
template <typename T>
struct BasicLMState {
  std::vector<std::vector<T>> h;
  std::vector<std::vector<T>> c;

  static BasicLMState zeros(const LMConfig& config) {
    return {std::vector<std::vector<T>>(config.layers, std::vector<T>(config.units)),
            std::vector<std::vector<T>>(config.layers, std::vector<T>(config.units))};
  }
};

using LMState = BasicLMState<float>;

inline void check_token(TokenId id, std::size_t vocab_size) {
  if (id < 0 || static_cast<std::size_t>(id) >= vocab_size) {
    throw ArgumentError("token id " + std::to_string(id) + " out of range for vocabulary of " +
                        std::to_string(vocab_size));
  }
}

/// One inference step: consumes `token`, advances `state`, writes next-token logits.
template <typename T>
void lm_step(const BasicLanguageModel<T>& model, TokenId token, BasicLMState<T>& state, std::vector<T>& logits) {
  const auto& cfg = model.config();
  check_token(token, cfg.vocab_size);
  const std::size_t h = cfg.units;
  std::vector<T> x(model.embedding().begin() + static_cast<std::ptrdiff_t>(token * cfg.embed_dim),
                   model.embedding().begin() + static_cast<std::ptrdiff_t>((token + 1) * cfg.embed_dim));
  std::vector<T> z(4 * h);
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const std::size_t in = cfg.layer_input(l);
    std::copy(model.bias(l).begin(), model.bias(l).end(), z.begin());
    kernels::vec_mat(x.data(), model.w_input(l).data(), z.data(), in, 4 * h);
    kernels::vec_mat(state.h[l].data(), model.w_recurrent(l).data(), z.data(), h, 4 * h);
    auto& hs = state.h[l];
    auto& cs = state.c[l];
    for (std::size_t j = 0; j < h; ++j) {
      const T ig = kernels::sigmoid(z[j]);
      const T fg = kernels::sigmoid(z[h + j]);
      const T og = kernels::sigmoid(z[2 * h + j]);
      const T gg = std::tanh(z[3 * h + j]);
      cs[j] = fg * cs[j] + ig * gg;
      hs[j] = og * std::tanh(cs[j]);
    }
    x = hs;
  }
  logits.assign(model.output_bias().begin(), model.output_bias().end());
  kernels::vec_mat(x.data(), model.output_weight().data(), logits.data(), h, cfg.vocab_size);
}

/// Next-token probability rows, one per input token.
template <typename T>
struct ForwardResult {
  std::size_t vocab_size = 0;
  std::vector<double> probs;  // steps x vocab_size
  BasicLMState<T> state;

  std::size_t steps() const { return vocab_size ? probs.size() / vocab_size : 0; }
  std::span<const double> row(std::size_t t) const { return {probs.data() + t * vocab_size, vocab_size}; }
};

template <typename T>
ForwardResult<T> forward(const BasicLanguageModel<T>& model, const TokenSequence& ids, BasicLMState<T> state) {
  if (ids.empty()) throw ArgumentError("forward() needs a non-empty token sequence");
  const std::size_t v = model.config().vocab_size;
  for (TokenId id : ids) check_token(id, v);
  ForwardResult<T> out;
  out.vocab_size = v;
  out.probs.reserve(ids.size() * v);
  std::vector<T> logits;
  for (TokenId id : ids) {
    lm_step(model, id, state, logits);
    auto p = kernels::softmax(std::span<const T>(logits));
    out.probs.insert(out.probs.end(), p.begin(), p.end());
  }
  out.state = std::move(state);
  return out;
}

template <typename T>
ForwardResult<T> forward(const BasicLanguageModel<T>& model, const TokenSequence& ids) {
  return forward(model, ids, BasicLMState<T>::zeros(model.config()));
}

/// Natural-log probability of the sequence, conditioning from BOS.
template <typename T>
double sequence_logprob(const BasicLanguageModel<T>& model, const TokenSequence& ids) {
  if (ids.empty()) throw ArgumentError("sequence_logprob() needs a non-empty token sequence");
  const std::size_t v = model.config().vocab_size;
  for (TokenId id : ids) check_token(id, v);
  auto state = BasicLMState<T>::zeros(model.config());
  std::vector<T> logits;
  double total = 0.0;
  TokenId prev = kBos;
  for (TokenId id : ids) {
    lm_step(model, prev, state, logits);
    total += kernels::log_softmax(std::span<const T>(logits))[static_cast<std::size_t>(id)];
    prev = id;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Training

/// Token matrix of rows x cols (cols = seq_len + 1: inputs are [0, seq_len), targets shifted by one).
struct TokenBatch {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<TokenId> ids;

  TokenId at(std::size_t r, std::size_t c) const { return ids[r * cols + c]; }
};

template <typename T>
struct LossAndGrads {
  double loss = 0.0;
  std::vector<Tensor<T>> grads;
  std::vector<BasicLMState<T>> final_states;
};

/// Mean next-token cross-entropy over the window and its full BPTT gradient.
/// `initial` carries per-row state from the previous window (empty = zeros); no
/// gradient flows into it. With `with_grads` false only the loss is computed.
template <typename T>
LossAndGrads<T> loss_and_grads(const BasicLanguageModel<T>& model, const TokenBatch& batch,
                               const std::vector<BasicLMState<T>>& initial = {}, bool with_grads = true) {
  const auto& cfg = model.config();
  if (batch.rows != cfg.batch_size || batch.cols != cfg.seq_len + 1 || batch.ids.size() != batch.rows * batch.cols) {
    throw ArgumentError("batch is " + std::to_string(batch.rows) + "x" + std::to_string(batch.cols) +
                        ", config expects " + std::to_string(cfg.batch_size) + "x" + std::to_string(cfg.seq_len + 1));
  }
  if (!initial.empty() && initial.size() != batch.rows) throw ArgumentError("initial state count != batch rows");
  for (TokenId id : batch.ids) check_token(id, cfg.vocab_size);

  const std::size_t B = batch.rows, S = cfg.seq_len, H = cfg.units, G = 4 * H, V = cfg.vocab_size,
                    E = cfg.embed_dim, L = cfg.layers;
  auto idx = [&](std::size_t t, std::size_t b) { return t * B + b; };

  // Per layer caches indexed [t][b].
  std::vector<std::vector<T>> hs(L, std::vector<T>(S * B * H)), cs(L, std::vector<T>(S * B * H)),
      tcs(L, std::vector<T>(S * B * H)), gates(L, std::vector<T>(S * B * G));
  std::vector<std::vector<T>> h0(L, std::vector<T>(B * H)), c0(L, std::vector<T>(B * H));
  for (std::size_t b = 0; b < B && !initial.empty(); ++b) {
    for (std::size_t l = 0; l < L; ++l) {
      std::copy(initial[b].h[l].begin(), initial[b].h[l].end(), h0[l].begin() + static_cast<std::ptrdiff_t>(b * H));
      std::copy(initial[b].c[l].begin(), initial[b].c[l].end(), c0[l].begin() + static_cast<std::ptrdiff_t>(b * H));
    }
  }

  LossAndGrads<T> out;
  if (with_grads) out.grads = model.zeros_like();
  std::vector<T> dh_top(with_grads ? S * B * H : 0);

  std::vector<T> logits(V), dlogits(V);
  const double inv_n = 1.0 / static_cast<double>(S * B);
  double total = 0.0;

  for (std::size_t t = 0; t < S; ++t) {
    for (std::size_t b = 0; b < B; ++b) {
      const T* x = model.embedding().data() + static_cast<std::size_t>(batch.at(b, t)) * E;
      for (std::size_t l = 0; l < L; ++l) {
        const std::size_t in = cfg.layer_input(l);
        const T* h_prev = t ? hs[l].data() + idx(t - 1, b) * H : h0[l].data() + b * H;
        const T* c_prev = t ? cs[l].data() + idx(t - 1, b) * H : c0[l].data() + b * H;
        T* z = gates[l].data() + idx(t, b) * G;
        std::copy(model.bias(l).begin(), model.bias(l).end(), z);
        kernels::vec_mat(x, model.w_input(l).data(), z, in, G);
        kernels::vec_mat(h_prev, model.w_recurrent(l).data(), z, H, G);
        T* hc = hs[l].data() + idx(t, b) * H;
        T* cc = cs[l].data() + idx(t, b) * H;
        T* tc = tcs[l].data() + idx(t, b) * H;
        for (std::size_t j = 0; j < H; ++j) {
          z[j] = kernels::sigmoid(z[j]);
          z[H + j] = kernels::sigmoid(z[H + j]);
          z[2 * H + j] = kernels::sigmoid(z[2 * H + j]);
          z[3 * H + j] = std::tanh(z[3 * H + j]);
          cc[j] = z[H + j] * c_prev[j] + z[j] * z[3 * H + j];
          tc[j] = std::tanh(cc[j]);
          hc[j] = z[2 * H + j] * tc[j];
        }
        x = hc;
      }
      // Output layer; its gradient is folded in immediately.
      std::copy(model.output_bias().begin(), model.output_bias().end(), logits.begin());
      kernels::vec_mat(x, model.output_weight().data(), logits.data(), H, V);
      auto lp = kernels::log_softmax(std::span<const T>(logits));
      const auto target = static_cast<std::size_t>(batch.at(b, t + 1));
      if (!std::isfinite(lp[target])) {
        throw TrainingError("non-finite log-probability at window step " + std::to_string(t), static_cast<long>(t));
      }
      total -= lp[target];
      if (with_grads) {
        for (std::size_t k = 0; k < V; ++k) dlogits[k] = static_cast<T>(std::exp(lp[k]) * inv_n);
        dlogits[target] -= static_cast<T>(inv_n);
        kernels::outer_acc(out.grads[1 + 3 * L].data.data(), x, dlogits.data(), H, V);
        kernels::axpy(out.grads[2 + 3 * L].data.data(), T(1), dlogits.data(), V);
        kernels::mat_vec(model.output_weight().data(), dlogits.data(), dh_top.data() + idx(t, b) * H, H, V);
      }
    }
  }
  out.loss = total * inv_n;
  if (!std::isfinite(out.loss)) throw TrainingError("non-finite loss", 0);

  out.final_states.resize(B);
  for (std::size_t b = 0; b < B; ++b) {
    out.final_states[b] = BasicLMState<T>::zeros(cfg);
    for (std::size_t l = 0; l < L; ++l) {
      const std::size_t off = idx(S - 1, b) * H;
      std::copy_n(hs[l].begin() + static_cast<std::ptrdiff_t>(off), H, out.final_states[b].h[l].begin());
      std::copy_n(cs[l].begin() + static_cast<std::ptrdiff_t>(off), H, out.final_states[b].c[l].begin());
    }
  }
  if (!with_grads) return out;

  // Backward through time, top layer first. dh_in holds dLoss/dh from above for layer l.
  std::vector<T> dh_in = std::move(dh_top);
  std::vector<T> dh_below(S * B * H);
  std::vector<T> dh_next(B * H), dc_next(B * H), dz(G);
  for (std::size_t li = L; li-- > 0;) {
    const std::size_t in = cfg.layer_input(li);
    auto& dwx = out.grads[1 + 3 * li].data;
    auto& dwh = out.grads[2 + 3 * li].data;
    auto& db = out.grads[3 + 3 * li].data;
    std::fill(dh_next.begin(), dh_next.end(), T(0));
    std::fill(dc_next.begin(), dc_next.end(), T(0));
    std::fill(dh_below.begin(), dh_below.end(), T(0));
    for (std::size_t t = S; t-- > 0;) {
      for (std::size_t b = 0; b < B; ++b) {
        const T* gt = gates[li].data() + idx(t, b) * G;
        const T* tc = tcs[li].data() + idx(t, b) * H;
        const T* c_prev = t ? cs[li].data() + idx(t - 1, b) * H : c0[li].data() + b * H;
        const T* h_prev = t ? hs[li].data() + idx(t - 1, b) * H : h0[li].data() + b * H;
        const T* dh_up = dh_in.data() + idx(t, b) * H;
        T* dhn = dh_next.data() + b * H;
        T* dcn = dc_next.data() + b * H;
        for (std::size_t j = 0; j < H; ++j) {
          const T ig = gt[j], fg = gt[H + j], og = gt[2 * H + j], gg = gt[3 * H + j];
          const T dh = dh_up[j] + dhn[j];
          const T dc = dcn[j] + dh * og * (T(1) - tc[j] * tc[j]);
          dz[j] = dc * gg * ig * (T(1) - ig);
          dz[H + j] = dc * c_prev[j] * fg * (T(1) - fg);
          dz[2 * H + j] = dh * tc[j] * og * (T(1) - og);
          dz[3 * H + j] = dc * ig * (T(1) - gg * gg);
          dcn[j] = dc * fg;
        }
        const T* x = li == 0 ? model.embedding().data() + static_cast<std::size_t>(batch.at(b, t)) * E
                             : hs[li - 1].data() + idx(t, b) * H;
        kernels::outer_acc(dwx.data(), x, dz.data(), in, G);
        kernels::outer_acc(dwh.data(), h_prev, dz.data(), H, G);
        kernels::axpy(db.data(), T(1), dz.data(), G);
        std::fill(dhn, dhn + H, T(0));
        kernels::mat_vec(model.w_recurrent(li).data(), dz.data(), dhn, H, G);
        T* dx = li == 0 ? out.grads[0].data.data() + static_cast<std::size_t>(batch.at(b, t)) * E
                        : dh_below.data() + idx(t, b) * H;
        kernels::mat_vec(model.w_input(li).data(), dz.data(), dx, in, G);
      }
    }
    std::swap(dh_in, dh_below);
  }
  return out;
}

struct TrainLogEntry {
  std::uint64_t step = 0;
  double loss = 0.0;
  double tokens_per_sec = 0.0;
};

struct TrainCallbacks {
  std::function<void(const TrainLogEntry&)> on_step;
};

/// Stateful SGD-with-momentum trainer. Row b starts at offset b * N / batch_size of the
/// N-token corpus and walks it cyclically one window at a time, carrying LSTM state, so
/// every token is a training target once per N / seq_len steps.
template <typename T>
class Trainer {
 public:
  Trainer(BasicLanguageModel<T>& model, const TokenSequence& corpus) : model_(model), corpus_(corpus) {
    const auto& cfg = model_.config();
    cfg.validate();
    if (corpus_.size() <= cfg.seq_len * cfg.batch_size) {
      throw ArgumentError("corpus of " + std::to_string(corpus_.size()) + " tokens is too short for " +
                          std::to_string(cfg.batch_size) + " rows of " + std::to_string(cfg.seq_len) + "-token windows");
    }
    for (TokenId id : corpus_) check_token(id, cfg.vocab_size);
    positions_.resize(cfg.batch_size);
    for (std::size_t b = 0; b < cfg.batch_size; ++b) positions_[b] = b * corpus_.size() / cfg.batch_size;
    states_.assign(cfg.batch_size, BasicLMState<T>::zeros(cfg));
    velocity_ = model_.zeros_like();
  }

  TrainLogEntry step() {
    const auto start = std::chrono::steady_clock::now();
    const auto& cfg = model_.config();
    const std::size_t S = cfg.seq_len;
    TokenBatch batch{cfg.batch_size, S + 1, std::vector<TokenId>(cfg.batch_size * (S + 1))};
    const std::size_t n = corpus_.size();
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      for (std::size_t k = 0; k <= S; ++k) batch.ids[b * (S + 1) + k] = corpus_[(positions_[b] + k) % n];
    }
    auto result = loss_and_grads(model_, batch, states_);
    const double limit = 1e3 * std::log(static_cast<double>(cfg.vocab_size));
    if (result.loss > limit) {
      throw TrainingError("training diverged at step " + std::to_string(model_.step_count()) + ": loss " +
                              std::to_string(result.loss) + " exceeds " + std::to_string(limit),
                          static_cast<long>(model_.step_count()));
    }
    clip_and_update(result.grads);
    states_ = std::move(result.final_states);
    for (auto& p : positions_) p = (p + S) % corpus_.size();
    model_.set_step_count(model_.step_count() + 1);

    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {model_.step_count(), result.loss, secs > 0 ? static_cast<double>(cfg.batch_size * S) / secs : 0.0};
  }

 private:
  void clip_and_update(std::vector<Tensor<T>>& grads) {
    const auto& cfg = model_.config();
    double sq = 0.0;
    for (const auto& g : grads) {
      for (T x : g.data) sq += static_cast<double>(x) * static_cast<double>(x);
    }
    const double norm = std::sqrt(sq);
    const T scale = norm > cfg.grad_clip ? static_cast<T>(cfg.grad_clip / norm) : T(1);
    const T mu = static_cast<T>(cfg.momentum), lr = static_cast<T>(cfg.learning_rate);
    auto& params = model_.tensors();
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = params[i].data;
      auto& v = velocity_[i].data;
      const auto& g = grads[i].data;
      for (std::size_t k = 0; k < p.size(); ++k) {
        v[k] = mu * v[k] + scale * g[k];
        p[k] -= lr * v[k];
      }
    }
  }

  BasicLanguageModel<T>& model_;
  const TokenSequence& corpus_;
  std::vector<std::size_t> positions_;
  std::vector<BasicLMState<T>> states_;
  std::vector<Tensor<T>> velocity_;
};

template <typename T>
std::vector<TrainLogEntry> train(BasicLanguageModel<T>& model, const TokenSequence& corpus, std::uint64_t steps,
                                 const TrainCallbacks& callbacks = {}) {
  std::vector<TrainLogEntry> log;
  if (steps == 0) return log;
  Trainer<T> trainer(model, corpus);
  log.reserve(steps);
  for (std::uint64_t s = 0; s < steps; ++s) {
    log.push_back(trainer.step());
    if (callbacks.on_step) callbacks.on_step(log.back());
  }
  return log;
}

inline std::string train_log_csv(const std::vector<TrainLogEntry>& log) {
  std::string out = "step,loss,tokens_per_sec\n";
  char buf[96];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof buf, "%llu,%.9g,%.1f\n", static_cast<unsigned long long>(e.step), e.loss, e.tokens_per_sec);
    out += buf;
  }
  return out;
}

}  // namespace newsgen
