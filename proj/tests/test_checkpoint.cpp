#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <limits>

#include "newsgen/checkpoint.hpp"
#include "support.hpp"

using namespace newsgen;
namespace ts = testing_support;

namespace {

LMConfig small() {
  LMConfig c;
  c.vocab_size = 11;
  c.embed_dim = 3;
  c.layers = 2;
  c.units = 5;
  c.seed = 17;
  c.init_scale = 0.3;
  return c;
}

bool bit_equal(const LanguageModel& a, const LanguageModel& b) {
  if (a.tensors().size() != b.tensors().size()) return false;
  for (std::size_t i = 0; i < a.tensors().size(); ++i) {
    const auto& x = a.tensors()[i].data;
    const auto& y = b.tensors()[i].data;
    if (x.size() != y.size() || std::memcmp(x.data(), y.data(), x.size() * sizeof(float)) != 0) return false;
  }
  return true;
}

}  // namespace

TEST(Checkpoint, RoundTripIsBitExact) {
  ts::TempDir dir;
  auto m = LanguageModel::initialized(small());
  m.set_step_count(1234);
  m.embedding()[0] = -0.0f;
  m.embedding()[1] = std::numeric_limits<float>::denorm_min();
  m.embedding()[2] = std::numeric_limits<float>::max();
  save_checkpoint(m, dir / "ckpt");
  const auto back = load_checkpoint(dir / "ckpt");
  EXPECT_TRUE(bit_equal(m, back));
  EXPECT_EQ(back.config(), m.config());
  EXPECT_EQ(back.step_count(), 1234u);
  EXPECT_TRUE(std::signbit(back.embedding()[0]));
  EXPECT_EQ(fs::file_size(dir / "ckpt/weights.bin"), 4 * m.parameter_count());
}

TEST(Checkpoint, WeightsAreLittleEndianFloat32) {
  LanguageModel m(small());
  m.embedding()[0] = 1.0f;
  const auto blobs = encode_checkpoint(m);
  const unsigned char want[4] = {0x00, 0x00, 0x80, 0x3f};
  EXPECT_EQ(std::memcmp(blobs.weights.data(), want, 4), 0);
}

TEST(Checkpoint, SavesVocabularyAlongside) {
  ts::TempDir dir;
  const auto vocab = build_vocab({{"a", "", "one two three four five six seven", "", {}, {}}}, 1);
  auto c = small();
  c.vocab_size = vocab.size();
  save_checkpoint(LanguageModel(c), dir / "ck", &vocab);
  EXPECT_EQ(load_vocab(dir / "ck/vocab.json"), vocab);
}

TEST(Checkpoint, ConfigShapeMismatchIsShapeError) {
  auto blobs = encode_checkpoint(LanguageModel::initialized(small()));
  auto manifest = json::parse(blobs.manifest);
  manifest["config"]["vocab_size"] = 12;
  EXPECT_THROW(decode_checkpoint(manifest.dump(), blobs.weights), ShapeError);
  manifest = json::parse(blobs.manifest);
  manifest["tensors"].erase(manifest["tensors"].size() - 1);
  EXPECT_THROW(decode_checkpoint(manifest.dump(), blobs.weights), ShapeError);
}

TEST(Checkpoint, TruncatedWeightsAreRejected) {
  ts::TempDir dir;
  save_checkpoint(LanguageModel::initialized(small()), dir / "ck");
  const auto bytes = read_file(dir / "ck/weights.bin");
  write_file_atomic(dir / "ck/weights.bin", bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(load_checkpoint(dir / "ck"), TruncatedError);
  fs::remove(dir / "ck/weights.bin");
  EXPECT_THROW(load_checkpoint(dir / "ck"), TruncatedError);
}

TEST(Checkpoint, UnknownVersionIsRejected) {
  auto blobs = encode_checkpoint(LanguageModel(small()));
  auto manifest = json::parse(blobs.manifest);
  manifest["version"] = 2;
  EXPECT_THROW(decode_checkpoint(manifest.dump(), blobs.weights), VersionError);
  EXPECT_THROW(decode_checkpoint("{not json", blobs.weights), FormatError);
}

TEST(Checkpoint, LoadsFrozenFixture) {
  const auto m = load_checkpoint(ts::fixture("frozen_checkpoint"));
  EXPECT_EQ(m.config().vocab_size, 6u);
  EXPECT_EQ(m.step_count(), 42u);
  std::size_t k = 0;
  for (const auto& t : m.tensors()) {
    for (float x : t.data) {
      EXPECT_EQ(x, static_cast<float>(static_cast<int>(k % 17) - 8) / 16.0f) << t.name << " " << k;
      ++k;
    }
  }
  EXPECT_EQ(k, m.parameter_count());
}
