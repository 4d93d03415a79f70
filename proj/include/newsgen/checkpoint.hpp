#pragma once

#include <bit>
#include <cstdint>
#include <string>

#include <json.hpp>

#include "newsgen/corpus.hpp"
#include "newsgen/error.hpp"
#include "newsgen/lm.hpp"
#include "newsgen/text.hpp"

namespace newsgen {

// Checkpoint directory layout:
//   manifest.json  config, step count, tensor registry (name, shape, byte offset)
//   weights.bin    little-endian float32, row-major, registry order
//   vocab.json     vocabulary (optional on load)

inline constexpr int kCheckpointVersion = 1;

inline void append_f32le(std::string& out, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
}

inline float read_f32le(const char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return std::bit_cast<float>(bits);
}

struct CheckpointBlobs {
  std::string manifest;
  std::string weights;
};

inline CheckpointBlobs encode_checkpoint(const LanguageModel& model) {
  CheckpointBlobs out;
  json registry = json::array();
  std::size_t offset = 0;
  for (const auto& t : model.tensors()) {
    registry.push_back({{"name", t.name}, {"shape", t.shape}, {"offset", offset}});
    for (float v : t.data) append_f32le(out.weights, v);
    offset += t.size() * 4;
  }
  json manifest = {{"format", "newsgen-lstm-lm"},
                   {"version", kCheckpointVersion},
                   {"dtype", "float32-le"},
                   {"config", to_json(model.config())},
                   {"step_count", model.step_count()},
                   {"total_bytes", offset},
                   {"tensors", registry}};
  out.manifest = manifest.dump(1) + "\n";
  return out;
}

inline LanguageModel decode_checkpoint(const std::string& manifest_text, const std::string& weights) {
  json manifest;
  try {
    manifest = json::parse(manifest_text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint manifest is not valid JSON: ") + e.what());
  }
  const int version = manifest.value("version", -1);
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                       std::to_string(kCheckpointVersion) + ")");
  }
  LMConfig cfg = lm_config_from_json(manifest.at("config"));
  LanguageModel model;
  try {
    model = LanguageModel(cfg);
  } catch (const ArgumentError& e) {
    throw ShapeError(std::string("checkpoint config is inconsistent: ") + e.what());
  }
  const auto& registry = manifest.at("tensors");
  if (registry.size() != model.tensors().size()) {
    throw ShapeError("checkpoint lists " + std::to_string(registry.size()) + " tensors, config implies " +
                     std::to_string(model.tensors().size()));
  }
  for (std::size_t i = 0; i < registry.size(); ++i) {
    auto& t = model.tensors()[i];
    const auto name = registry[i].at("name").get<std::string>();
    const auto shape = registry[i].at("shape").get<std::vector<std::size_t>>();
    if (name != t.name || shape != t.shape) {
      throw ShapeError("tensor '" + name + "' has shape " + json(shape).dump() + ", config implies '" + t.name +
                       "' with shape " + json(t.shape).dump());
    }
    const auto offset = registry[i].at("offset").get<std::size_t>();
    if (offset + t.size() * 4 > weights.size()) {
      throw TruncatedError("weights.bin holds " + std::to_string(weights.size()) + " bytes; tensor '" + name +
                           "' needs bytes up to " + std::to_string(offset + t.size() * 4));
    }
    for (std::size_t k = 0; k < t.size(); ++k) t.data[k] = read_f32le(weights.data() + offset + 4 * k);
  }
  model.set_step_count(manifest.value("step_count", std::uint64_t{0}));
  return model;
}

inline void save_checkpoint(const LanguageModel& model, const fs::path& dir, const Vocabulary* vocab = nullptr) {
  fs::create_directories(dir);
  auto blobs = encode_checkpoint(model);
  write_file_atomic(dir / "weights.bin", blobs.weights);
  if (vocab) save_vocab(*vocab, dir / "vocab.json");
  // Manifest last: its presence marks a complete checkpoint.
  write_file_atomic(dir / "manifest.json", blobs.manifest);
}

inline LanguageModel load_checkpoint(const fs::path& dir) {
  if (!fs::exists(dir / "manifest.json")) throw ArgumentError("no checkpoint manifest in " + dir.string());
  if (!fs::exists(dir / "weights.bin")) throw TruncatedError("checkpoint " + dir.string() + " has no weights.bin");
  return decode_checkpoint(read_file(dir / "manifest.json"), read_file(dir / "weights.bin"));
}

}  // namespace newsgen
