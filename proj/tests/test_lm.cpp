#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "newsgen/lm.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace newsgen;

namespace {

LMConfig tiny(std::size_t v = 9, std::size_t layers = 2) {
  LMConfig c;
  c.vocab_size = v;
  c.embed_dim = 4;
  c.layers = layers;
  c.units = 6;
  c.seq_len = 4;
  c.batch_size = 3;
  c.init_scale = 0.5;
  return c;
}

TokenSequence random_ids(std::size_t n, std::size_t v, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TokenSequence out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(static_cast<TokenId>(rng() % v));
  return out;
}

TokenBatch random_batch(const LMConfig& c, std::uint64_t seed) {
  return {c.batch_size, c.seq_len + 1, random_ids(c.batch_size * (c.seq_len + 1), c.vocab_size, seed)};
}

}  // namespace

TEST(LMConfig, ParameterCountMatchesHandFormula) {
  LMConfig c;
  c.vocab_size = 20000;
  const std::size_t hand = 20000 * 128                 // embedding
                           + 4 * 128 * (128 + 128 + 1)  // layer 0
                           + 4 * 128 * (128 + 128 + 1)  // layer 1
                           + 128 * 20000 + 20000;       // output projection
  EXPECT_EQ(c.parameter_count(), hand);
  EXPECT_EQ(LanguageModel(c).parameter_count(), hand);
}

TEST(LMConfig, ValidatesShapes) {
  LMConfig c = tiny();
  c.seq_len = 1;
  EXPECT_THROW(c.validate(), ArgumentError);
  c = tiny();
  c.vocab_size = 4;
  EXPECT_THROW(c.validate(), ArgumentError);
  c = tiny();
  c.grad_clip = 0;
  EXPECT_THROW(c.validate(), ArgumentError);
  EXPECT_EQ(lm_config_from_json(to_json(tiny())), tiny());
}

TEST(LanguageModel, InitializationHasForgetBiasOne) {
  auto c = tiny();
  c.seed = 5;
  const auto m = LanguageModel::initialized(c);
  for (std::size_t l = 0; l < c.layers; ++l) {
    for (std::size_t j = 0; j < 4 * c.units; ++j) {
      EXPECT_EQ(m.bias(l)[j], (j >= c.units && j < 2 * c.units) ? 1.0f : 0.0f);
    }
  }
  for (float x : m.embedding()) EXPECT_LE(std::abs(x), 0.5f);
  EXPECT_EQ(LanguageModel::initialized(c).embedding(), m.embedding());
}

TEST(Forward, RowsAreDistributions) {
  auto c = tiny();
  c.seed = 3;
  const auto m = LanguageModel::initialized(c);
  const auto f = forward(m, random_ids(25, c.vocab_size, 1));
  ASSERT_EQ(f.steps(), 25u);
  for (std::size_t t = 0; t < f.steps(); ++t) {
    const auto row = f.row(t);
    EXPECT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 1.0, 1e-6);
    for (double p : row) EXPECT_TRUE(std::isfinite(p) && p >= 0);
  }
  EXPECT_THROW(forward(m, TokenSequence{}), ArgumentError);
  EXPECT_THROW(forward(m, TokenSequence{99}), ArgumentError);
}

TEST(Forward, OutputBiasOnlyModelIgnoresInput) {
  auto c = tiny(6);
  LanguageModel m(c);
  const std::vector<float> b = {0.5f, -1.0f, 2.0f, 0.0f, 1.5f, -0.25f};
  m.output_bias() = b;
  const double z = std::accumulate(b.begin(), b.end(), 0.0, [](double s, float x) { return s + std::exp(double(x)); });
  const auto f = forward(m, TokenSequence{1, 4, 5, 2, 3});
  for (std::size_t t = 0; t < f.steps(); ++t) {
    for (std::size_t k = 0; k < b.size(); ++k) EXPECT_NEAR(f.row(t)[k], std::exp(double(b[k])) / z, 1e-12);
  }
}

TEST(Forward, SplitStateEqualsFullSequence) {
  auto c = tiny();
  c.seed = 8;
  const auto m = LanguageModel::initialized(c);
  const auto ids = random_ids(20, c.vocab_size, 2);
  const auto full = forward(m, ids);
  const auto head = forward(m, TokenSequence(ids.begin(), ids.begin() + 9));
  const auto tail = forward(m, TokenSequence(ids.begin() + 9, ids.end()), head.state);
  for (std::size_t t = 0; t < 11; ++t) {
    for (std::size_t k = 0; k < c.vocab_size; ++k) EXPECT_EQ(full.row(9 + t)[k], tail.row(t)[k]);
  }
  EXPECT_EQ(full.state.h, tail.state.h);
}

TEST(SequenceLogprob, EqualsStepwiseSum) {
  auto c = tiny();
  c.seed = 4;
  const auto m = LanguageModel::initialized(c);
  const auto ids = random_ids(30, c.vocab_size, 9);
  TokenSequence inputs{kBos};
  inputs.insert(inputs.end(), ids.begin(), ids.end() - 1);
  const auto f = forward(m, inputs);
  double sum = 0;
  for (std::size_t t = 0; t < ids.size(); ++t) sum += std::log(f.row(t)[static_cast<std::size_t>(ids[t])]);
  EXPECT_NEAR(sequence_logprob(m, ids), sum, 1e-9);
  const auto one = forward(m, TokenSequence{kBos});
  EXPECT_NEAR(sequence_logprob(m, TokenSequence{5}), std::log(one.row(0)[5]), 1e-12);
}

TEST(SequenceLogprob, UniformModel) {
  const LanguageModel m(tiny(11));
  EXPECT_DOUBLE_EQ(sequence_logprob(m, TokenSequence(7, 5)), -7 * std::log(11.0));
}

TEST(LossAndGrads, UniformModelLossIsLnV) {
  const auto c = tiny(13);
  const LanguageModel m(c);
  EXPECT_DOUBLE_EQ(loss_and_grads(m, random_batch(c, 1)).loss, std::log(13.0));
}

TEST(LossAndGrads, RejectsWrongBatchShape) {
  const auto c = tiny();
  const LanguageModel m(c);
  TokenBatch b{c.batch_size, c.seq_len, std::vector<TokenId>(c.batch_size * c.seq_len)};
  EXPECT_THROW(loss_and_grads(m, b), ArgumentError);
}

TEST(LossAndGrads, MatchesFiniteDifferencesSingleLayer) {
  const auto c = tiny(7, 1);
  auto m = oracle::random_model<double>(c, 21, 0.7);
  const auto r = oracle::check_gradients(m, random_batch(c, 3), {});
  EXPECT_EQ(r.params, c.parameter_count());
  EXPECT_LT(r.max_rel_error, 1e-3) << r.worst;
}

TEST(LossAndGrads, MatchesFiniteDifferencesWithCarriedState) {
  const auto c = tiny(8, 2);
  auto m = oracle::random_model<double>(c, 22, 0.5);
  std::vector<BasicLMState<double>> init(c.batch_size, BasicLMState<double>::zeros(c));
  for (auto& s : init) {
    s.h[1][2] = 0.4;
    s.c[0][1] = -0.7;
  }
  const auto r = oracle::check_gradients(m, random_batch(c, 4), init);
  EXPECT_LT(r.max_rel_error, 1e-3) << r.worst;
}

TEST(LossAndGrads, LargerTargetMarginLowersLoss) {
  const auto c = tiny(6, 1);
  LanguageModel m(c);
  TokenBatch b{c.batch_size, c.seq_len + 1, std::vector<TokenId>(c.batch_size * (c.seq_len + 1), 4)};
  m.output_bias()[4] = 1.0f;
  const double l1 = loss_and_grads(m, b, {}, false).loss;
  m.output_bias()[4] = 2.0f;
  const double l2 = loss_and_grads(m, b, {}, false).loss;
  EXPECT_LT(l2, l1);
}

TEST(LossAndGrads, FloatAgreesWithDouble) {
  auto c = tiny();
  c.seed = 12;
  const auto m = LanguageModel::initialized(c);
  const auto b = random_batch(c, 6);
  EXPECT_NEAR(loss_and_grads(m, b).loss, loss_and_grads(m.cast<double>(), b).loss, 1e-5);
}

TEST(Train, ZeroStepsLeavesParametersUnchanged) {
  auto c = tiny();
  c.seed = 1;
  auto m = LanguageModel::initialized(c);
  const auto before = m.tensors();
  EXPECT_TRUE(train(m, random_ids(200, c.vocab_size, 1), 0).empty());
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(before[i].data, m.tensors()[i].data);
}

TEST(Train, SameSeedGivesIdenticalLogs) {
  auto c = tiny();
  c.seed = 2;
  const auto corpus = random_ids(300, c.vocab_size, 5);
  auto a = LanguageModel::initialized(c);
  auto b = LanguageModel::initialized(c);
  const auto la = train(a, corpus, 30);
  const auto lb = train(b, corpus, 30);
  ASSERT_EQ(la.size(), 30u);
  for (std::size_t i = 0; i < la.size(); ++i) {
    EXPECT_EQ(la[i].step, i + 1);
    EXPECT_EQ(la[i].loss, lb[i].loss);
  }
  EXPECT_EQ(a.step_count(), 30u);
  EXPECT_EQ(train_log_csv(la).substr(0, 24), "step,loss,tokens_per_sec");
}

TEST(Train, RejectsShortCorpus) {
  const auto c = tiny();
  auto m = LanguageModel::initialized(c);
  EXPECT_THROW(train(m, random_ids(c.seq_len * c.batch_size, c.vocab_size, 1), 1), ArgumentError);
}

TEST(Train, PerplexityFallsOnOverfitFixture) {
  const auto text = read_file(testing_support::fixture("overfit.txt"));
  const Article a{"o", "", text, "", {}, {}};
  const auto vocab = build_vocab({a}, 1);
  const auto ids = encode_corpus({a}, vocab);
  LMConfig c;
  c.vocab_size = vocab.size();
  c.embed_dim = 16;
  c.layers = 1;
  c.units = 24;
  c.seq_len = 20;
  c.batch_size = 4;
  c.learning_rate = 0.5;
  c.seed = 1;
  auto m = LanguageModel::initialized(c);
  Trainer<float> trainer(m, ids);
  const std::size_t epoch = ids.size() / (c.seq_len * c.batch_size);
  auto perplexity = [&] { return std::exp(-sequence_logprob(m, TokenSequence(ids.begin() + 1, ids.end())) / double(ids.size() - 1)); };
  double prev = perplexity();
  for (int e = 0; e < 6; ++e) {
    for (std::size_t s = 0; s < 10 * epoch; ++s) trainer.step();
    const double now = perplexity();
    EXPECT_LT(now, prev) << "epoch block " << e;
    prev = now;
  }
}
