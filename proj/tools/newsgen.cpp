#include <csignal>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "newsgen/checkpoint.hpp"
#include "newsgen/corpus.hpp"
#include "newsgen/curation.hpp"
#include "newsgen/decoder.hpp"
#include "newsgen/lm.hpp"
#include "newsgen/novelty.hpp"
#include "newsgen/pipeline.hpp"
#include "newsgen/service.hpp"
#include "newsgen/site.hpp"
#include "newsgen/tagger.hpp"

namespace {

using namespace newsgen;

std::vector<Article> load_articles(const fs::path& path) {
  if (!fs::exists(path)) throw ArgumentError("corpus " + path.string() + " does not exist");
  return fs::is_directory(path) ? read_plain_dir(path) : parse_corpus_jsonl(read_file(path));
}

void write_or_print(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
  } else {
    write_file_atomic(path, content);
  }
}

CurationService* g_service = nullptr;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"newsgen: topical news generation, novelty filtering and blog publishing"};
  app.require_subcommand(1);
  app.fallthrough();
  unsigned threads = 1;
  app.add_option("--threads", threads, "Worker thread cap")->check(CLI::PositiveNumber);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Append a corpus (JSONL file or directory of .txt) to a store");
  std::string ingest_src, ingest_store, ingest_format = "jsonl";
  ingest->add_option("source", ingest_src, "Corpus JSONL file or plain-text directory")->required();
  ingest->add_option("--store", ingest_store, "Store JSONL file")->required();
  ingest->add_option("--format", ingest_format, "jsonl or plain")->check(CLI::IsMember({"jsonl", "plain"}));

  // tag
  auto* tag = app.add_subcommand("tag", "TF-IDF tag every article of a corpus");
  std::string tag_corpus, tag_out, tag_stop;
  std::size_t tag_k = 12;
  tag->add_option("--corpus", tag_corpus, "Corpus JSONL")->required();
  tag->add_option("--k", tag_k, "Tags per kind")->check(CLI::PositiveNumber);
  tag->add_option("--stopwords", tag_stop, "Stopword list (one per line)");
  tag->add_option("--out", tag_out, "TagSet JSONL output (stdout if omitted)");

  // subsets
  auto* subsets = app.add_subcommand("subsets", "Build per-topic subsets from tags and topic keywords");
  std::string sub_corpus, sub_tags, sub_topics, sub_out;
  subsets->add_option("--corpus", sub_corpus, "Corpus JSONL")->required();
  subsets->add_option("--tags", sub_tags, "TagSet JSONL");
  subsets->add_option("--topics", sub_topics, "Topics JSON")->required();
  subsets->add_option("--out", sub_out, "Output JSON (stdout if omitted)");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a word-level LSTM language model");
  std::string tr_corpus, tr_out, tr_model_json, tr_log;
  std::uint64_t tr_steps = 1000, tr_seed = 0, tr_min_count = 3;
  std::size_t tr_max_vocab = 20000;
  train_cmd->add_option("--corpus", tr_corpus, "Corpus JSONL (all articles are used)")->required();
  train_cmd->add_option("--checkpoint", tr_out, "Checkpoint directory to write")->required();
  train_cmd->add_option("--steps", tr_steps, "Training steps");
  train_cmd->add_option("--seed", tr_seed, "Initialization/shuffling seed");
  train_cmd->add_option("--model", tr_model_json, "Model config overrides as inline JSON");
  train_cmd->add_option("--min-count", tr_min_count, "Vocabulary frequency cutoff");
  train_cmd->add_option("--max-vocab", tr_max_vocab, "Vocabulary size cap (excluding specials)");
  train_cmd->add_option("--log", tr_log, "Training log CSV");

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a pool of samples from a checkpoint");
  std::string gen_ckpt, gen_out, gen_mode = "sample", gen_topic;
  DecodeParams gen_params;
  std::size_t gen_count = 20;
  gen->add_option("--checkpoint", gen_ckpt, "Checkpoint directory")->required();
  gen->add_option("--count", gen_count, "Number of samples")->check(CLI::PositiveNumber);
  gen->add_option("--mode", gen_mode, "sample or beam")->check(CLI::IsMember({"sample", "beam"}));
  gen->add_option("--temperature", gen_params.temperature, "Sampling temperature");
  gen->add_option("--beam-width", gen_params.beam_width, "Beam width");
  gen->add_option("--max-tokens", gen_params.max_tokens, "Maximum generated tokens");
  gen->add_option("--alpha", gen_params.length_norm_alpha, "Beam length normalization exponent");
  gen->add_option("--seed", gen_params.seed, "Seed of the first sample");
  gen->add_flag("!--allow-unk", gen_params.ban_unk, "Allow <unk> in the output");
  gen->add_option("--topic", gen_topic, "Topic label stored with each sample");
  gen->add_option("--out", gen_out, "Pool JSONL output (stdout if omitted)");

  // novelty
  auto* nov = app.add_subcommand("novelty", "Filter generated sentences against a corpus");
  std::string nov_pool, nov_corpus, nov_out, nov_report, nov_topic;
  double nov_threshold = 0.30;
  bool nov_exact = false;
  nov->add_option("--pool", nov_pool, "Generated pool JSONL")->required();
  nov->add_option("--corpus", nov_corpus, "Corpus JSONL")->required();
  nov->add_option("--threshold", nov_threshold, "Keep sentences strictly more dissimilar than this");
  nov->add_flag("--exact", nov_exact, "Always find the exact closest match");
  nov->add_option("--out", nov_out, "Kept-sentence JSONL (stdout if omitted)");
  nov->add_option("--report", nov_report, "NoveltyReport JSONL");
  nov->add_option("--topic", nov_topic, "Topic label for kept sentences");

  // build-site
  auto* site = app.add_subcommand("build-site", "Render published articles into a static blog");
  std::string site_articles, site_config, site_now, site_out;
  site->add_option("--articles", site_articles, "Directory of published article JSON files")->required();
  site->add_option("--config", site_config, "Site config JSON")->required();
  site->add_option("--now", site_now, "Build timestamp (YYYY-MM-DDTHH:MM:SSZ)");
  site->add_option("--out", site_out, "Output directory (default: output_dir from the config)");

  // run
  auto* run = app.add_subcommand("run", "Run a pipeline stage (or all) from pipeline.json");
  std::string run_stage = "all", run_config = "pipeline.json";
  run->add_option("stage", run_stage, "ingest, tag, subsets, train, generate, filter, site or all")
      ->check(CLI::IsMember({"ingest", "tag", "subsets", "train", "generate", "filter", "site", "all"}));
  run->add_option("--config", run_config, "Pipeline config");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the curation HTTP service on localhost");
  std::string serve_config = "pipeline.json", serve_ui, serve_now;
  int serve_port = 8080;
  serve->add_option("--config", serve_config, "Pipeline config");
  serve->add_option("--port", serve_port, "Port");
  serve->add_option("--ui", serve_ui, "Directory with built UI assets");
  serve->add_option("--now", serve_now, "Fixed publication timestamp");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  try {
    if (*ingest) {
      CorpusStore store(ingest_store);
      const auto s = store.ingest(ingest_src, parse_corpus_format(ingest_format));
      std::cout << to_json(s).dump() << '\n';
    } else if (*tag) {
      const auto articles = load_articles(tag_corpus);
      const auto idf = compute_idf(articles);
      const auto stop = tag_stop.empty() ? Stopwords() : Stopwords::load(tag_stop);
      std::string out;
      for (const auto& a : articles) out += to_json(extract_tags(a, idf, tag_k, stop)).dump() + "\n";
      write_or_print(tag_out, out);
    } else if (*subsets) {
      const auto articles = load_articles(sub_corpus);
      std::unordered_map<std::string, TagSet> tagsets;
      if (!sub_tags.empty()) {
        for (const auto& line : read_lines(sub_tags)) {
          if (trim(line).empty()) continue;
          auto ts = tagset_from_json(json::parse(line));
          tagsets.emplace(ts.article_id, std::move(ts));
        }
      }
      json out = json::array();
      for (const auto& s : build_subsets(articles, tagsets, load_topics(sub_topics))) out.push_back(to_json(s));
      write_or_print(sub_out, out.dump(1) + "\n");
    } else if (*train_cmd) {
      const auto articles = load_articles(tr_corpus);
      const auto vocab = build_vocab(articles, tr_min_count, tr_max_vocab);
      LMConfig cfg = tr_model_json.empty() ? LMConfig{} : lm_config_from_json(json::parse(tr_model_json));
      cfg.vocab_size = vocab.size();
      cfg.seed = tr_seed;
      auto model = LanguageModel::initialized(cfg);
      TrainCallbacks cb;
      const std::uint64_t every = std::max<std::uint64_t>(1, tr_steps / 20);
      cb.on_step = [&](const TrainLogEntry& e) {
        if (e.step % every == 0) std::cerr << "step " << e.step << " loss " << e.loss << '\n';
      };
      const auto log = train(model, encode_corpus(articles, vocab), tr_steps, cb);
      save_checkpoint(model, tr_out, &vocab);
      if (!tr_log.empty()) write_file_atomic(tr_log, train_log_csv(log));
    } else if (*gen) {
      gen_params.mode = gen_mode == "beam" ? DecodeMode::beam : DecodeMode::sample;
      const auto model = load_checkpoint(gen_ckpt);
      const auto vocab = load_vocab(fs::path(gen_ckpt) / "vocab.json");
      const auto pool = generate_pool(model, vocab, gen_params, gen_count, gen_topic, gen_ckpt, threads);
      write_or_print(gen_out, pool_jsonl(pool));
    } else if (*nov) {
      const auto index = CorpusIndex::from_articles(load_articles(nov_corpus));
      FilterOptions opts;
      opts.threshold = nov_threshold;
      opts.exact = nov_exact;
      opts.threads = threads;
      opts.topic = nov_topic;
      const auto result = filter_pool(read_pool(nov_pool), index, opts);
      if (!nov_report.empty()) write_file_atomic(nov_report, report_jsonl(result, index));
      write_or_print(nov_out, kept_jsonl(result.kept));
      std::cerr << filter_summary(result).dump() << '\n';
    } else if (*site) {
      auto cfg = load_site_config(site_config);
      if (!site_now.empty()) cfg.now = site_now;
      cfg.validate();
      const fs::path out = site_out.empty() ? fs::path(site_config).parent_path() / cfg.output_dir : fs::path(site_out);
      const auto files = build_site(load_published_dir(site_articles), cfg, out, threads);
      std::cerr << "wrote " << files.size() << " files to " << out.string() << '\n';
    } else if (*run) {
      auto cfg = load_pipeline_config(run_config);
      if (app.count("--threads")) cfg.threads = threads;
      Pipeline pipeline(cfg);
      for (const auto& r : pipeline.run(parse_stage(run_stage))) {
        std::cout << stage_name(r.stage) << (r.skipped ? " up-to-date" : " done") << '\n';
      }
    } else if (*serve) {
      Pipeline pipeline(load_pipeline_config(serve_config));
      CurationDesk desk(curation_paths(pipeline), serve_now);
      ServiceOptions opts;
      opts.port = serve_port;
      opts.ui_dir = serve_ui;
      CurationService service(desk, opts);
      const int port = service.bind();
      g_service = &service;
      std::signal(SIGINT, [](int) {
        if (g_service) g_service->stop();
      });
      std::cerr << "curation service on http://127.0.0.1:" << port << '\n';
      service.listen();
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return 0;
}
