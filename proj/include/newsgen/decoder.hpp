#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "newsgen/corpus.hpp"
#include "newsgen/error.hpp"
#include "newsgen/lm.hpp"
#include "newsgen/parallel.hpp"
#include "newsgen/random.hpp"

namespace newsgen {

enum class DecodeMode { sample, beam };

struct DecodeParams {
  DecodeMode mode = DecodeMode::sample;
  double temperature = 1.0;
  std::size_t beam_width = 8;
  std::size_t max_tokens = 400;
  double length_norm_alpha = 0.7;
  std::uint64_t seed = 0;
  bool ban_unk = true;

  void validate() const {
    if (!(temperature > 0.0)) throw ArgumentError("temperature must be > 0");
    if (beam_width < 1) throw ArgumentError("beam_width must be >= 1");
    if (max_tokens < 1) throw ArgumentError("max_tokens must be >= 1");
    if (length_norm_alpha < 0.0 || length_norm_alpha > 1.0) throw ArgumentError("length_norm_alpha must be in [0,1]");
  }
};

inline json to_json(const DecodeParams& p) {
  return {{"mode", p.mode == DecodeMode::sample ? "sample" : "beam"},
          {"temperature", p.temperature},
          {"beam_width", p.beam_width},
          {"max_tokens", p.max_tokens},
          {"length_norm_alpha", p.length_norm_alpha},
          {"seed", p.seed},
          {"ban_unk", p.ban_unk}};
}

inline DecodeParams decode_params_from_json(const json& j, DecodeParams base = {}) {
  if (j.contains("mode")) {
    const auto m = j.at("mode").get<std::string>();
    if (m == "sample") {
      base.mode = DecodeMode::sample;
    } else if (m == "beam") {
      base.mode = DecodeMode::beam;
    } else {
      throw FormatError("unknown decode mode '" + m + "'");
    }
  }
  base.temperature = j.value("temperature", base.temperature);
  base.beam_width = j.value("beam_width", base.beam_width);
  base.max_tokens = j.value("max_tokens", base.max_tokens);
  base.length_norm_alpha = j.value("length_norm_alpha", base.length_norm_alpha);
  base.seed = j.value("seed", base.seed);
  base.ban_unk = j.value("ban_unk", base.ban_unk);
  return base;
}

struct GeneratedSample {
  std::string id;
  std::string topic;
  TokenSequence ids;  // prompt + generated tokens, EOS included when emitted
  std::string text;
  double logprob = 0.0;
  DecodeParams params;
  std::string model_checkpoint;
};

inline json to_json(const GeneratedSample& s) {
  return {{"id", s.id},         {"topic", s.topic},   {"ids", s.ids},
          {"text", s.text},     {"logprob", s.logprob}, {"params", to_json(s.params)},
          {"model_checkpoint", s.model_checkpoint}};
}

inline GeneratedSample sample_from_json(const json& j) {
  GeneratedSample s;
  s.id = j.at("id").get<std::string>();
  s.topic = j.value("topic", std::string{});
  s.ids = j.value("ids", TokenSequence{});
  s.text = j.at("text").get<std::string>();
  s.logprob = j.value("logprob", 0.0);
  if (j.contains("params")) s.params = decode_params_from_json(j.at("params"));
  s.model_checkpoint = j.value("model_checkpoint", std::string{});
  return s;
}

inline std::string pool_jsonl(const std::vector<GeneratedSample>& pool) {
  std::string out;
  for (const auto& s : pool) out += to_json(s).dump() + "\n";
  return out;
}

inline std::vector<GeneratedSample> read_pool(const fs::path& path) {
  std::vector<GeneratedSample> out;
  std::size_t n = 0;
  for (const auto& line : read_lines(path)) {
    ++n;
    if (trim(line).empty()) continue;
    try {
      out.push_back(sample_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw FormatError(path.string() + " line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

namespace detail {

inline bool banned(TokenId id, const DecodeParams& p) { return id == kBos || (p.ban_unk && id == kUnk); }

// Lowest-id argmax over allowed tokens.
inline TokenId argmax_allowed(const std::vector<double>& scores, const DecodeParams& p) {
  TokenId best = -1;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto id = static_cast<TokenId>(i);
    if (banned(id, p)) continue;
    if (best < 0 || scores[i] > scores[static_cast<std::size_t>(best)]) best = id;
  }
  return best;
}

template <typename T>
struct Primed {
  BasicLMState<T> state;
  std::vector<T> logits;
  double logprob = 0.0;
};

// Feeds BOS and the prompt; logits predict the first generated token.
template <typename T>
Primed<T> prime(const BasicLanguageModel<T>& model, const TokenSequence& prompt) {
  Primed<T> out{BasicLMState<T>::zeros(model.config()), {}, 0.0};
  lm_step(model, kBos, out.state, out.logits);
  for (TokenId id : prompt) {
    out.logprob += kernels::log_softmax(std::span<const T>(out.logits))[static_cast<std::size_t>(id)];
    lm_step(model, id, out.state, out.logits);
  }
  return out;
}

}  // namespace detail

/// Draws an index from a probability vector by inverse CDF on one uniform draw.
inline std::size_t draw_index(const std::vector<double>& probs, Rng& rng) {
  const double u = uniform01(rng);
  double cum = 0.0;
  std::size_t last = probs.size();
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    cum += probs[i];
    last = i;
    if (u < cum) return i;
  }
  return last;
}

/// Temperature-scaled next-token distribution with banned tokens zeroed.
inline std::vector<double> sampling_distribution(const std::vector<double>& logprobs, const DecodeParams& p) {
  std::vector<double> scaled(logprobs.size(), -std::numeric_limits<double>::infinity());
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logprobs.size(); ++i) {
    if (detail::banned(static_cast<TokenId>(i), p)) continue;
    scaled[i] = logprobs[i] / p.temperature;
    mx = std::max(mx, scaled[i]);
  }
  double sum = 0.0;
  for (double& v : scaled) {
    v = std::isinf(v) ? 0.0 : std::exp(v - mx);
    sum += v;
  }
  for (double& v : scaled) v /= sum;
  return scaled;
}

/// Stepwise sampling from softmax(logits / temperature) until EOS or max_tokens.
/// Temperatures below 1e-6 decode greedily. The stored logprob is under the
/// unscaled, unmasked model so it re-validates against sequence_logprob.
template <typename T>
GeneratedSample sample(const BasicLanguageModel<T>& model, const Vocabulary& vocab, const DecodeParams& params,
                       const TokenSequence& prompt = {}) {
  params.validate();
  for (TokenId id : prompt) check_token(id, model.config().vocab_size);
  Rng rng(params.seed);
  auto primed = detail::prime(model, prompt);
  GeneratedSample out;
  out.ids = prompt;
  out.params = params;
  out.params.mode = DecodeMode::sample;
  double lp = primed.logprob;
  for (std::size_t n = 0; n < params.max_tokens; ++n) {
    auto logprobs = kernels::log_softmax(std::span<const T>(primed.logits));
    TokenId next;
    if (params.temperature < 1e-6) {
      next = detail::argmax_allowed(logprobs, params);
    } else {
      next = static_cast<TokenId>(draw_index(sampling_distribution(logprobs, params), rng));
    }
    lp += logprobs[static_cast<std::size_t>(next)];
    out.ids.push_back(next);
    if (next == kEos) break;
    lm_step(model, next, primed.state, primed.logits);
  }
  out.logprob = lp;
  out.text = vocab.decode(out.ids);
  return out;
}

struct BeamResult {
  TokenSequence ids;  // prompt + generated
  double logprob = 0.0;
  double score = 0.0;
};

/// Beam search. Each step keeps the beam_width best expansions by
/// logprob / length^alpha (length counts generated tokens); hypotheses ending in EOS,
/// and all survivors after max_tokens, retire to the result pool. Equal scores are
/// ordered by lexicographic token ids. Returns up to beam_width results, best first.
template <typename T>
std::vector<BeamResult> beam_search(const BasicLanguageModel<T>& model, const DecodeParams& params,
                                    const TokenSequence& prompt = {}) {
  params.validate();
  for (TokenId id : prompt) check_token(id, model.config().vocab_size);
  struct Hyp {
    TokenSequence gen;
    double logprob;
    BasicLMState<T> state;
    std::vector<T> logits;
  };
  struct Cand {
    std::size_t parent;
    TokenId token;
    double logprob;
    double score;
  };
  auto score_of = [&](double lp, std::size_t len) {
    return params.length_norm_alpha == 0.0 ? lp : lp / std::pow(static_cast<double>(len), params.length_norm_alpha);
  };
  auto primed = detail::prime(model, prompt);
  std::vector<Hyp> live;
  live.push_back({{}, 0.0, std::move(primed.state), std::move(primed.logits)});
  std::vector<BeamResult> finished;
  auto retire = [&](TokenSequence gen, double lp) {
    BeamResult r;
    r.score = score_of(lp, gen.size());
    r.logprob = primed.logprob + lp;
    r.ids = prompt;
    r.ids.insert(r.ids.end(), gen.begin(), gen.end());
    finished.push_back(std::move(r));
  };
  auto seq_less = [&](const Cand& a, const Cand& b) {
    const auto& ga = live[a.parent].gen;
    const auto& gb = live[b.parent].gen;
    if (a.parent != b.parent) {
      auto r = std::lexicographical_compare(ga.begin(), ga.end(), gb.begin(), gb.end());
      if (r || std::lexicographical_compare(gb.begin(), gb.end(), ga.begin(), ga.end())) return r;
    }
    return a.token < b.token;
  };

  for (std::size_t step = 0; step < params.max_tokens && !live.empty(); ++step) {
    std::vector<Cand> cands;
    for (std::size_t h = 0; h < live.size(); ++h) {
      auto lps = kernels::log_softmax(std::span<const T>(live[h].logits));
      for (std::size_t k = 0; k < lps.size(); ++k) {
        const auto id = static_cast<TokenId>(k);
        if (detail::banned(id, params)) continue;
        const double lp = live[h].logprob + lps[k];
        cands.push_back({h, id, lp, score_of(lp, live[h].gen.size() + 1)});
      }
    }
    const std::size_t keep = std::min(params.beam_width, cands.size());
    auto better = [&](const Cand& a, const Cand& b) { return a.score != b.score ? a.score > b.score : seq_less(a, b); };
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(), better);
    cands.resize(keep);

    std::vector<Hyp> next;
    const bool last_step = step + 1 == params.max_tokens;
    for (const auto& c : cands) {
      TokenSequence gen = live[c.parent].gen;
      gen.push_back(c.token);
      if (c.token == kEos || last_step) {
        retire(std::move(gen), c.logprob);
        continue;
      }
      Hyp h{std::move(gen), c.logprob, live[c.parent].state, {}};
      lm_step(model, c.token, h.state, h.logits);
      next.push_back(std::move(h));
    }
    live = std::move(next);
  }
  std::sort(finished.begin(), finished.end(), [](const BeamResult& a, const BeamResult& b) {
    if (a.score != b.score) return a.score > b.score;
    return std::lexicographical_compare(a.ids.begin(), a.ids.end(), b.ids.begin(), b.ids.end());
  });
  if (finished.size() > params.beam_width) finished.resize(params.beam_width);
  return finished;
}

/// One sample in the configured mode (beam mode returns the best hypothesis).
template <typename T>
GeneratedSample generate_one(const BasicLanguageModel<T>& model, const Vocabulary& vocab, const DecodeParams& params,
                             const TokenSequence& prompt = {}) {
  if (params.mode == DecodeMode::sample) return sample(model, vocab, params, prompt);
  auto results = beam_search(model, params, prompt);
  GeneratedSample out;
  out.params = params;
  if (!results.empty()) {
    out.ids = std::move(results.front().ids);
    out.logprob = results.front().logprob;
  }
  out.text = vocab.decode(out.ids);
  return out;
}

/// `count` samples with seeds seed, seed+1, ...; each sample owns its RNG, so the
/// pool is identical for any thread count.
template <typename T>
std::vector<GeneratedSample> generate_pool(const BasicLanguageModel<T>& model, const Vocabulary& vocab,
                                           const DecodeParams& params, std::size_t count,
                                           const std::string& topic = {}, const std::string& checkpoint = {},
                                           unsigned threads = 1) {
  if (count < 1) throw ArgumentError("pool count must be >= 1");
  params.validate();
  std::vector<GeneratedSample> pool(count);
  parallel_for(count, threads, [&](std::size_t i) {
    DecodeParams p = params;
    p.seed = params.seed + i;
    auto s = generate_one(model, vocab, p);
    char id[32];
    std::snprintf(id, sizeof id, "g%06zu", i);
    s.id = id;
    s.topic = topic;
    s.model_checkpoint = checkpoint;
    pool[i] = std::move(s);
  });
  return pool;
}

}  // namespace newsgen
