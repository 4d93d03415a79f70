#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>

#include "newsgen/pipeline.hpp"
#include "support.hpp"

using namespace newsgen;
namespace ts = testing_support;

namespace {

json small_config() {
  return json::parse(R"({
    "seed": 7,
    "paths": {
      "corpus_source": "corpus.jsonl", "topics": "topics.json", "stopwords": "stopwords.txt",
      "corpus": "work/corpus.jsonl", "tags": "work/tags.jsonl", "subsets": "work/subsets",
      "checkpoints": "work/checkpoints", "pools": "work/pools", "reports": "work/reports",
      "logs": "work/logs", "manifests": "work/manifests", "published": "work/published",
      "site": "work/site", "site_config": "site.json"
    },
    "vocab": {"min_count": 2},
    "training": {"steps": 5, "model": {"embed_dim": 8, "layers": 1, "units": 8, "seq_len": 10, "batch_size": 2}},
    "decode": {"temperature": 1.0, "max_tokens": 30},
    "generate": {"samples": 3},
    "novelty": {"threshold": 0.3}
  })");
}

void stage_inputs(const fs::path& dir, const json& cfg = small_config()) {
  const auto src = ts::source_dir() / "data";
  fs::copy_file(src / "toy/corpus.jsonl", dir / "corpus.jsonl", fs::copy_options::overwrite_existing);
  fs::copy_file(src / "topics.json", dir / "topics.json", fs::copy_options::overwrite_existing);
  fs::copy_file(src / "stopwords.txt", dir / "stopwords.txt", fs::copy_options::overwrite_existing);
  fs::copy_file(src / "toy/site.json", dir / "site.json", fs::copy_options::overwrite_existing);
  write_file_atomic(dir / "pipeline.json", cfg.dump(1));
}

Pipeline make(const fs::path& dir) {
  return Pipeline(load_pipeline_config(dir / "pipeline.json"), [](const std::string&) {});
}

std::map<std::string, std::string> snapshot_without_logs(const fs::path& dir) {
  auto s = ts::snapshot(dir);
  std::erase_if(s, [](const auto& kv) { return kv.first.find("/logs/") != std::string::npos; });
  return s;
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(NEWSGEN_CLI) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Pipeline, StageBeforeProducerNamesTheProducer) {
  ts::TempDir dir;
  stage_inputs(dir.path());
  auto p = make(dir.path());
  try {
    p.run(Stage::subsets);
    FAIL();
  } catch (const PrerequisiteError& e) {
    EXPECT_EQ(e.stage(), "ingest");
    EXPECT_NE(std::string(e.what()).find("run stage 'ingest' first"), std::string::npos);
  }
  p.run(Stage::ingest);
  try {
    p.run(Stage::subsets);
    FAIL();
  } catch (const PrerequisiteError& e) {
    EXPECT_EQ(e.stage(), "tag");
  }
  EXPECT_THROW(p.run(Stage::generate), PrerequisiteError);
}

TEST(Pipeline, RerunWithUnchangedInputsIsANoOp) {
  ts::TempDir dir;
  stage_inputs(dir.path());
  auto p = make(dir.path());
  for (const auto& r : p.run(Stage::all)) EXPECT_FALSE(r.skipped) << stage_name(r.stage);
  const auto before = snapshot_without_logs(dir.path());
  auto again = make(dir.path());
  for (const auto& r : again.run(Stage::all)) EXPECT_TRUE(r.skipped) << stage_name(r.stage);
  EXPECT_EQ(snapshot_without_logs(dir.path()), before);
}

TEST(Pipeline, ConfigChangeRerunsOnlyAffectedStages) {
  ts::TempDir dir;
  stage_inputs(dir.path());
  make(dir.path()).run(Stage::all);
  auto cfg = small_config();
  cfg["novelty"]["threshold"] = 0.25;
  write_file_atomic(dir / "pipeline.json", cfg.dump(1));
  std::map<Stage, bool> skipped;
  for (const auto& r : make(dir.path()).run(Stage::all)) skipped[r.stage] = r.skipped;
  for (auto s : {Stage::ingest, Stage::tag, Stage::subsets, Stage::train, Stage::generate, Stage::site}) {
    EXPECT_TRUE(skipped[s]) << stage_name(s);
  }
  EXPECT_FALSE(skipped[Stage::filter]);
}

TEST(Pipeline, TamperedOutputForcesRerun) {
  ts::TempDir dir;
  stage_inputs(dir.path());
  auto p = make(dir.path());
  p.run(Stage::ingest);
  const auto corpus = read_file(dir / "work/corpus.jsonl");
  write_file_atomic(dir / "work/corpus.jsonl", "");
  EXPECT_FALSE(p.run(Stage::ingest).front().skipped);
  EXPECT_EQ(read_file(dir / "work/corpus.jsonl"), corpus);
  EXPECT_TRUE(p.run(Stage::ingest).front().skipped);
}

TEST(PipelineConfig, Validation) {
  ts::TempDir dir;
  auto cfg = small_config();
  cfg["novelty"]["threshold"] = 1.5;
  EXPECT_THROW(pipeline_config_from_json(cfg, dir.path()), ValidationError);
  cfg = small_config();
  cfg["paths"].erase("corpus");
  EXPECT_THROW(pipeline_config_from_json(cfg, dir.path()), ValidationError);
  cfg = small_config();
  cfg["decode"]["temperature"] = -1;
  EXPECT_THROW(pipeline_config_from_json(cfg, dir.path()), ValidationError);
  EXPECT_THROW(load_pipeline_config(dir / "missing.json"), ValidationError);
  EXPECT_THROW(Pipeline(pipeline_config_from_json(small_config(), dir.path())), ValidationError);
  EXPECT_NO_THROW(load_pipeline_config(ts::source_dir() / "data/toy/pipeline.json"));
}

TEST(PipelineConfig, StageNames) {
  for (auto s : kStageOrder) EXPECT_EQ(parse_stage(stage_name(s)), s);
  EXPECT_EQ(parse_stage("all"), Stage::all);
  EXPECT_THROW(parse_stage("deploy"), Error);
}

TEST(Cli, ExitCodes) {
  ts::TempDir dir;
  stage_inputs(dir.path());
  const auto cfg = (dir / "pipeline.json").string();
  EXPECT_EQ(run_cli("run train --config " + cfg), 3);
  EXPECT_EQ(run_cli("run all --config " + (dir / "missing.json").string()), 2);
  EXPECT_EQ(run_cli("run nonsense --config " + (dir / "missing.json").string()), 2);
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli("run ingest --config " + cfg), 0);
  write_file_atomic(dir / "blocker", "x");
  EXPECT_EQ(run_cli("train --corpus " + (dir / "work/corpus.jsonl").string() + " --steps 1 --checkpoint " +
                    (dir / "blocker/ck").string() + " --model '{\"embed_dim\":4,\"units\":4,\"layers\":1,\"seq_len\":5,\"batch_size\":1}'"),
            1);
  EXPECT_EQ(exit_code_for(PrerequisiteError("x", "ingest")), 3);
  EXPECT_EQ(exit_code_for(ValidationError("x")), 2);
  EXPECT_EQ(exit_code_for(std::runtime_error("x")), 1);
}
