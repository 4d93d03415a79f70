#pragma once

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "newsgen/checkpoint.hpp"
#include "newsgen/corpus.hpp"
#include "newsgen/decoder.hpp"
#include "newsgen/error.hpp"
#include "newsgen/lm.hpp"
#include "newsgen/novelty.hpp"
#include "newsgen/site.hpp"
#include "newsgen/tagger.hpp"
#include "newsgen/text.hpp"

namespace newsgen {

inline std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xF]);
  }
  return out;
}

enum class Stage { ingest, tag, subsets, train, generate, filter, site, all };

inline constexpr std::array<Stage, 7> kStageOrder = {Stage::ingest,   Stage::tag,    Stage::subsets, Stage::train,
                                                     Stage::generate, Stage::filter, Stage::site};

inline std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::ingest: return "ingest";
    case Stage::tag: return "tag";
    case Stage::subsets: return "subsets";
    case Stage::train: return "train";
    case Stage::generate: return "generate";
    case Stage::filter: return "filter";
    case Stage::site: return "site";
    case Stage::all: return "all";
  }
  return "all";
}

inline Stage parse_stage(std::string_view s) {
  for (auto st : kStageOrder) {
    if (stage_name(st) == s) return st;
  }
  if (s == "all") return Stage::all;
  throw ArgumentError("unknown stage '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Configuration

struct PipelinePaths {
  fs::path corpus_source;
  fs::path topics;
  fs::path stopwords;  // optional; built-in list when empty
  fs::path corpus;
  fs::path tags;
  fs::path subsets;
  fs::path checkpoints;
  fs::path pools;
  fs::path reports;
  fs::path logs;
  fs::path manifests;
  fs::path published;
  fs::path site;
  fs::path site_config;
};

struct PipelineConfig {
  fs::path base_dir;  // every relative path is resolved against this
  PipelinePaths paths;
  CorpusFormat corpus_format = CorpusFormat::jsonl;
  std::size_t tag_k = 12;
  std::uint64_t vocab_min_count = 3;
  std::size_t vocab_max_size = 20000;
  LMConfig model;
  std::map<std::string, json> topic_overrides;
  std::uint64_t train_steps = 1000;
  DecodeParams decode;
  std::size_t samples_per_topic = 20;
  double threshold = 0.30;
  bool exact = false;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  json raw;  // the parsed file; sections feed the per-stage config hashes

  void validate() const {
    if (!(threshold > 0.0 && threshold < 1.0)) throw ValidationError("novelty threshold must be in (0,1)");
    if (tag_k < 1) throw ValidationError("tagging.k must be >= 1");
    if (samples_per_topic < 1) throw ValidationError("generate.samples must be >= 1");
    if (threads < 1) throw ValidationError("threads must be >= 1");
    try {
      decode.validate();
    } catch (const ArgumentError& e) {
      throw ValidationError(std::string("decode: ") + e.what());
    }
  }
};

inline PipelineConfig pipeline_config_from_json(const json& j, const fs::path& base_dir) {
  PipelineConfig c;
  c.base_dir = base_dir;
  c.raw = j;
  try {
    const auto& p = j.at("paths");
    auto path = [&](const char* key, bool required = true) -> fs::path {
      if (!p.contains(key)) {
        if (required) throw ValidationError(std::string("pipeline config: paths.") + key + " is not declared");
        return {};
      }
      fs::path v = p.at(key).get<std::string>();
      return v.is_relative() ? base_dir / v : v;
    };
    c.paths.corpus_source = path("corpus_source");
    c.paths.topics = path("topics");
    c.paths.stopwords = path("stopwords", false);
    c.paths.corpus = path("corpus");
    c.paths.tags = path("tags");
    c.paths.subsets = path("subsets");
    c.paths.checkpoints = path("checkpoints");
    c.paths.pools = path("pools");
    c.paths.reports = path("reports");
    c.paths.logs = path("logs");
    c.paths.manifests = path("manifests");
    c.paths.published = path("published");
    c.paths.site = path("site");
    c.paths.site_config = path("site_config");
    c.corpus_format = parse_corpus_format(j.value("corpus_format", std::string("jsonl")));
    c.seed = j.value("seed", std::uint64_t{0});
    c.threads = j.value("threads", 1u);
    if (j.contains("tagging")) c.tag_k = j.at("tagging").value("k", c.tag_k);
    if (j.contains("vocab")) {
      c.vocab_min_count = j.at("vocab").value("min_count", c.vocab_min_count);
      c.vocab_max_size = j.at("vocab").value("max_size", c.vocab_max_size);
    }
    if (j.contains("training")) {
      const auto& t = j.at("training");
      c.train_steps = t.value("steps", c.train_steps);
      if (t.contains("model")) c.model = lm_config_from_json(t.at("model"));
      if (t.contains("topics")) {
        for (const auto& [name, o] : t.at("topics").items()) c.topic_overrides[name] = o;
      }
    }
    if (j.contains("decode")) c.decode = decode_params_from_json(j.at("decode"));
    if (j.contains("generate")) c.samples_per_topic = j.at("generate").value("samples", c.samples_per_topic);
    if (j.contains("novelty")) {
      c.threshold = j.at("novelty").value("threshold", c.threshold);
      c.exact = j.at("novelty").value("exact", c.exact);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("pipeline config: ") + e.what());
  }
  c.validate();
  return c;
}

inline PipelineConfig load_pipeline_config(const fs::path& path) {
  if (!fs::exists(path)) throw ValidationError("pipeline config " + path.string() + " does not exist");
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ValidationError("pipeline config " + path.string() + ": " + e.what());
  }
  return pipeline_config_from_json(j, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

// ---------------------------------------------------------------------------
// Stage reports

struct StageReport {
  Stage stage = Stage::ingest;
  bool skipped = false;
  std::string config_hash;
  std::map<std::string, std::string> inputs;   // relative path -> sha256
  std::map<std::string, std::string> outputs;  // relative path -> sha256
  json details = json::object();
};

inline json to_json(const StageReport& r) {
  return {{"stage", stage_name(r.stage)},
          {"config_hash", r.config_hash},
          {"inputs", r.inputs},
          {"outputs", r.outputs},
          {"details", r.details}};
}

/// Drives the stages of the generation pipeline over files on disk.
class Pipeline {
 public:
  using Logger = std::function<void(const std::string&)>;

  explicit Pipeline(PipelineConfig config, Logger log = {})
      : cfg_(std::move(config)), log_(log ? std::move(log) : [](const std::string& m) { std::cerr << m << '\n'; }) {
    if (!fs::exists(cfg_.paths.topics)) throw ValidationError("topics file " + cfg_.paths.topics.string() + " does not exist");
    try {
      specs_ = load_topics(cfg_.paths.topics);
    } catch (const json::exception& e) {
      throw ValidationError("topics file: " + std::string(e.what()));
    } catch (const FormatError& e) {
      throw ValidationError("topics file: " + std::string(e.what()));
    }
    stop_ = cfg_.paths.stopwords.empty() ? Stopwords() : Stopwords::load(cfg_.paths.stopwords);
  }

  const PipelineConfig& config() const { return cfg_; }
  const std::vector<TopicSpec>& topics() const { return specs_; }

  static std::string topic_slug(const std::string& topic) { return slugify(topic); }
  fs::path checkpoint_dir(const std::string& topic) const { return cfg_.paths.checkpoints / topic_slug(topic); }
  fs::path generated_path(const std::string& topic) const { return cfg_.paths.pools / (topic_slug(topic) + ".generated.jsonl"); }
  fs::path kept_path(const std::string& topic) const { return cfg_.paths.pools / (topic_slug(topic) + ".kept.jsonl"); }
  fs::path subset_path(const std::string& topic) const { return cfg_.paths.subsets / (topic_slug(topic) + ".json"); }
  fs::path idf_path() const { return cfg_.paths.tags.parent_path() / "idf.json"; }
  fs::path report_path(Stage s) const { return cfg_.paths.reports / (std::string(stage_name(s)) + ".json"); }

  /// Runs one stage, or every stage in order for Stage::all.
  std::vector<StageReport> run(Stage stage) {
    std::vector<StageReport> out;
    if (stage == Stage::all) {
      for (auto s : kStageOrder) out.push_back(run_one(s));
    } else {
      out.push_back(run_one(stage));
    }
    return out;
  }

  StageReport run_one(Stage stage) {
    const auto t0 = std::chrono::steady_clock::now();
    StageReport r;
    r.stage = stage;
    r.config_hash = sha256_hex(stage_config(stage).dump());
    for (const auto& p : inputs(stage)) {
      if (!fs::exists(p.path)) {
        throw PrerequisiteError("stage '" + std::string(stage_name(stage)) + "' needs " + rel(p.path) +
                                    "; run stage '" + std::string(stage_name(p.producer)) + "' first",
                                std::string(stage_name(p.producer)));
      }
    }
    for (const auto& f : input_files(stage)) r.inputs[rel(f)] = sha256_hex(read_file(f));
    if (up_to_date(r)) {
      r.skipped = true;
      log_("[" + std::string(stage_name(stage)) + "] up to date, skipped");
      return r;
    }
    log_("[" + std::string(stage_name(stage)) + "] running");
    std::vector<fs::path> written;
    switch (stage) {
      case Stage::ingest: written = do_ingest(r); break;
      case Stage::tag: written = do_tag(r); break;
      case Stage::subsets: written = do_subsets(r); break;
      case Stage::train: written = do_train(r); break;
      case Stage::generate: written = do_generate(r); break;
      case Stage::filter: written = do_filter(r); break;
      case Stage::site: written = do_site(r); break;
      case Stage::all: break;
    }
    for (const auto& f : written) r.outputs[rel(f)] = sha256_hex(read_file(f));
    write_file_atomic(report_path(stage), to_json(r).dump(1) + "\n");
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2fs", secs);
    log_("[" + std::string(stage_name(stage)) + "] done in " + buf + ", " + std::to_string(written.size()) + " outputs");
    return r;
  }

 private:
  struct Prerequisite {
    fs::path path;
    Stage producer;
  };

  std::string rel(const fs::path& p) const { return fs::relative(p, cfg_.base_dir).generic_string(); }

  json stage_config(Stage s) const {
    const auto& j = cfg_.raw;
    json c = {{"stage", stage_name(s)}};
    auto copy = [&](const char* key) { c[key] = j.contains(key) ? j.at(key) : json(nullptr); };
    switch (s) {
      case Stage::ingest: c["format"] = j.value("corpus_format", std::string("jsonl")); break;
      case Stage::tag: copy("tagging"); break;
      case Stage::subsets: break;
      case Stage::train:
        copy("vocab");
        copy("training");
        c["seed"] = cfg_.seed;
        break;
      case Stage::generate:
        copy("decode");
        copy("generate");
        c["seed"] = cfg_.seed;
        break;
      case Stage::filter: copy("novelty"); break;
      case Stage::site: break;
      case Stage::all: break;
    }
    return c;
  }

  std::vector<Prerequisite> inputs(Stage s) const {
    std::vector<Prerequisite> out;
    switch (s) {
      case Stage::ingest: break;
      case Stage::tag: out.push_back({cfg_.paths.corpus, Stage::ingest}); break;
      case Stage::subsets:
        out.push_back({cfg_.paths.corpus, Stage::ingest});
        out.push_back({cfg_.paths.tags, Stage::tag});
        break;
      case Stage::train:
        out.push_back({cfg_.paths.corpus, Stage::ingest});
        for (const auto& t : specs_) out.push_back({subset_path(t.name), Stage::subsets});
        break;
      case Stage::generate:
        for (const auto& t : specs_) {
          out.push_back({checkpoint_dir(t.name) / "manifest.json", Stage::train});
          out.push_back({checkpoint_dir(t.name) / "vocab.json", Stage::train});
        }
        break;
      case Stage::filter:
        out.push_back({cfg_.paths.corpus, Stage::ingest});
        for (const auto& t : specs_) {
          out.push_back({subset_path(t.name), Stage::subsets});
          out.push_back({generated_path(t.name), Stage::generate});
        }
        break;
      case Stage::site: break;
      case Stage::all: break;
    }
    return out;
  }

  /// Every file whose content feeds the stage (hashed for the skip check).
  std::vector<fs::path> input_files(Stage s) const {
    std::vector<fs::path> files;
    if (s == Stage::ingest) {
      if (!fs::exists(cfg_.paths.corpus_source)) {
        throw ValidationError("corpus source " + cfg_.paths.corpus_source.string() + " does not exist");
      }
      if (fs::is_directory(cfg_.paths.corpus_source)) {
        for (const auto& e : fs::directory_iterator(cfg_.paths.corpus_source)) {
          if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
        }
      } else {
        files.push_back(cfg_.paths.corpus_source);
      }
    } else if (s == Stage::site) {
      files.push_back(cfg_.paths.site_config);
      if (fs::exists(cfg_.paths.published)) {
        for (const auto& e : fs::directory_iterator(cfg_.paths.published)) {
          if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
        }
      }
    } else {
      for (const auto& p : inputs(s)) files.push_back(p.path);
      if (s == Stage::tag && !cfg_.paths.stopwords.empty()) files.push_back(cfg_.paths.stopwords);
      if (s == Stage::subsets) files.push_back(cfg_.paths.topics);
      if (s == Stage::generate) {
        for (const auto& t : specs_) files.push_back(checkpoint_dir(t.name) / "weights.bin");
      }
    }
    std::sort(files.begin(), files.end());
    return files;
  }

  bool up_to_date(const StageReport& fresh) const {
    const auto path = report_path(fresh.stage);
    if (!fs::exists(path)) return false;
    json prev;
    try {
      prev = json::parse(read_file(path));
    } catch (const json::exception&) {
      return false;
    }
    if (prev.value("config_hash", std::string{}) != fresh.config_hash) return false;
    if (prev.value("inputs", json::object()) != json(fresh.inputs)) return false;
    const json outputs = prev.value("outputs", json::object());
    for (const auto& [file, hash] : outputs.items()) {
      const auto p = cfg_.base_dir / file;
      if (!fs::exists(p) || sha256_hex(read_file(p)) != hash.get<std::string>()) return false;
    }
    return true;
  }

  std::vector<Article> corpus() const { return parse_corpus_jsonl(read_file(cfg_.paths.corpus)); }

  std::vector<Article> subset_articles(const std::string& topic, const std::vector<Article>& all) const {
    const auto subset = subset_from_json(json::parse(read_file(subset_path(topic))));
    std::unordered_map<std::string, const Article*> by_id;
    for (const auto& a : all) by_id.emplace(a.id, &a);
    std::vector<Article> out;
    for (const auto& id : subset.article_ids) {
      auto it = by_id.find(id);
      if (it == by_id.end()) throw ValidationError("subset '" + topic + "' names unknown article '" + id + "'");
      out.push_back(*it->second);
    }
    return out;
  }

  std::vector<fs::path> do_ingest(StageReport& r) {
    fs::path staging = cfg_.paths.corpus;
    staging += ".ingest";
    fs::remove(staging);
    CorpusStats s;
    try {
      CorpusStore store(staging);
      s = store.ingest(cfg_.paths.corpus_source, cfg_.corpus_format);
    } catch (const FormatError& e) {
      fs::remove(staging);
      throw ValidationError(std::string("ingest: ") + e.what());
    }
    fs::rename(staging, cfg_.paths.corpus);
    r.details = to_json(s);
    log_("[ingest] " + std::to_string(s.article_count) + " articles, " + std::to_string(s.word_count) + " words");
    return {cfg_.paths.corpus};
  }

  std::vector<fs::path> do_tag(StageReport& r) {
    const auto articles = corpus();
    const auto idf = compute_idf(articles);
    std::string lines;
    for (const auto& a : articles) lines += to_json(extract_tags(a, idf, cfg_.tag_k, stop_)).dump() + "\n";
    write_file_atomic(cfg_.paths.tags, lines);
    write_file_atomic(idf_path(), to_json(idf).dump() + "\n");
    r.details = {{"articles", articles.size()}, {"k", cfg_.tag_k}};
    return {cfg_.paths.tags, idf_path()};
  }

  std::vector<fs::path> do_subsets(StageReport& r) {
    const auto articles = corpus();
    std::unordered_map<std::string, TagSet> tagsets;
    for (const auto& line : read_lines(cfg_.paths.tags)) {
      if (trim(line).empty()) continue;
      auto ts = tagset_from_json(json::parse(line));
      tagsets.emplace(ts.article_id, std::move(ts));
    }
    std::vector<fs::path> written;
    r.details = json::object();
    for (const auto& s : build_subsets(articles, tagsets, specs_)) {
      write_file_atomic(subset_path(s.topic), to_json(s).dump(1) + "\n");
      written.push_back(subset_path(s.topic));
      r.details[s.topic] = to_json(s.stats);
      log_("[subsets] " + s.topic + ": " + std::to_string(s.stats.article_count) + " articles");
    }
    return written;
  }

  LMConfig topic_model_config(const std::string& topic, std::size_t index, std::size_t vocab_size) const {
    LMConfig c = cfg_.model;
    if (auto it = cfg_.topic_overrides.find(topic); it != cfg_.topic_overrides.end()) c = lm_config_from_json(it->second, c);
    c.vocab_size = vocab_size;
    c.seed = cfg_.seed + 1000 * index + c.seed;
    return c;
  }

  std::vector<fs::path> do_train(StageReport& r) {
    const auto all = corpus();
    std::vector<fs::path> written;
    r.details = json::object();
    for (std::size_t i = 0; i < specs_.size(); ++i) {
      const auto& topic = specs_[i].name;
      const auto articles = subset_articles(topic, all);
      if (articles.empty()) throw ValidationError("topic '" + topic + "' has no articles to train on");
      const auto vocab = build_vocab(articles, cfg_.vocab_min_count, cfg_.vocab_max_size);
      const auto mc = topic_model_config(topic, i, vocab.size());
      try {
        mc.validate();
      } catch (const ArgumentError& e) {
        throw ValidationError("model config for '" + topic + "': " + e.what());
      }
      auto model = LanguageModel::initialized(mc);
      const auto ids = encode_corpus(articles, vocab);
      log_("[train] " + topic + ": vocab " + std::to_string(vocab.size()) + ", " + std::to_string(ids.size()) +
           " tokens, " + std::to_string(mc.parameter_count()) + " parameters");
      TrainCallbacks cb;
      const std::uint64_t every = std::max<std::uint64_t>(1, cfg_.train_steps / 10);
      cb.on_step = [&](const TrainLogEntry& e) {
        if (e.step % every == 0) {
          char buf[96];
          std::snprintf(buf, sizeof buf, "step %llu loss %.4f", static_cast<unsigned long long>(e.step), e.loss);
          log_("[train] " + topic + ": " + buf);
        }
      };
      const auto log = train(model, ids, cfg_.train_steps, cb);
      const auto dir = checkpoint_dir(topic);
      save_checkpoint(model, dir, &vocab);
      // Timing columns vary run to run, so logs sit outside the hashed outputs.
      write_file_atomic(cfg_.paths.logs / (topic_slug(topic) + ".train.csv"), train_log_csv(log));
      for (const char* f : {"weights.bin", "vocab.json", "manifest.json"}) written.push_back(dir / f);
      r.details[topic] = {{"vocab_size", vocab.size()},
                          {"tokens", ids.size()},
                          {"steps", cfg_.train_steps},
                          {"final_loss", log.empty() ? json(nullptr) : json(log.back().loss)}};
    }
    return written;
  }

  std::vector<fs::path> do_generate(StageReport& r) {
    std::vector<fs::path> written;
    r.details = json::object();
    for (std::size_t i = 0; i < specs_.size(); ++i) {
      const auto& topic = specs_[i].name;
      const auto dir = checkpoint_dir(topic);
      const auto model = load_checkpoint(dir);
      const auto vocab = load_vocab(dir / "vocab.json");
      DecodeParams p = cfg_.decode;
      p.seed = cfg_.seed + 1000 * i + cfg_.decode.seed;
      auto pool = generate_pool(model, vocab, p, cfg_.samples_per_topic, topic, rel(dir), cfg_.threads);
      for (auto& s : pool) s.id = topic_slug(topic) + "-" + s.id;
      write_file_atomic(generated_path(topic), pool_jsonl(pool));
      written.push_back(generated_path(topic));
      r.details[topic] = {{"samples", pool.size()}};
    }
    return written;
  }

  std::vector<fs::path> do_filter(StageReport& r) {
    const auto all = corpus();
    std::vector<fs::path> written;
    r.details = json::object();
    for (const auto& spec : specs_) {
      const auto& topic = spec.name;
      const auto index = CorpusIndex::from_articles(subset_articles(topic, all));
      FilterOptions opts;
      opts.threshold = cfg_.threshold;
      opts.exact = cfg_.exact;
      opts.threads = cfg_.threads;
      opts.topic = topic;
      const auto result = filter_pool(read_pool(generated_path(topic)), index, opts);
      const auto report = cfg_.paths.reports / (topic_slug(topic) + ".novelty.jsonl");
      write_file_atomic(report, report_jsonl(result, index));
      write_file_atomic(kept_path(topic), kept_jsonl(result.kept));
      written.push_back(report);
      written.push_back(kept_path(topic));
      r.details[topic] = {{"sentences", result.reports.size()}, {"kept", result.kept.size()}};
      log_("[filter] " + topic + ": kept " + std::to_string(result.kept.size()) + " of " +
           std::to_string(result.reports.size()) + " sentences");
    }
    return written;
  }

  std::vector<fs::path> do_site(StageReport& r) {
    SiteConfig sc;
    try {
      sc = load_site_config(cfg_.paths.site_config);
    } catch (const json::exception& e) {
      throw ValidationError("site config: " + std::string(e.what()));
    }
    const auto articles = load_published_dir(cfg_.paths.published);
    const auto files = build_site(articles, sc, cfg_.paths.site, cfg_.threads);
    std::vector<fs::path> written;
    for (const auto& [relpath, bytes] : files) written.push_back(cfg_.paths.site / relpath);
    r.details = {{"articles", articles.size()}, {"files", files.size()}};
    return written;
  }

  PipelineConfig cfg_;
  Logger log_;
  std::vector<TopicSpec> specs_;
  Stopwords stop_;
};

/// Exit code for an error escaping a pipeline run: 3 missing prerequisite, 2 validation, 1 other.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const PrerequisiteError*>(&e)) return 3;
  if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const FormatError*>(&e) ||
      dynamic_cast<const ArgumentError*>(&e)) {
    return 2;
  }
  return 1;
}

}  // namespace newsgen
