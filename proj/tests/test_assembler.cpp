#include <gtest/gtest.h>

#include <algorithm>

#include "newsgen/assembler.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace newsgen;

namespace {

// Ten words per sentence, so excerpt word counts are easy to reason about.
SentencePool ten_word_pool(std::size_t n) {
  SentencePool pool;
  for (std::size_t i = 0; i < n; ++i) {
    std::string s = "Sentence" + std::to_string(i);
    for (int w = 1; w < 10; ++w) s += " word" + std::to_string(w);
    pool["g." + std::to_string(i)] = s + ".";
  }
  return pool;
}

ManifestEntry entry(std::string id) { return {std::move(id), std::nullopt, {}, false}; }

ArticleManifest excerpt_of(std::size_t n) {
  ArticleManifest m;
  for (std::size_t i = 0; i < n; ++i) m.excerpt.push_back(entry("g." + std::to_string(i)));
  return m;
}

bool has_rule(const EditVerdict& v, const std::string& rule) {
  return std::any_of(v.violations.begin(), v.violations.end(), [&](const Violation& x) { return x.rule == rule; });
}

std::string random_edit(oracle::SentenceFactory& f, const std::string& s) {
  auto& rng = f.rng();
  auto words = oracle::words_of(s);
  switch (rng() % 6) {
    case 0: {
      std::string t = s;
      t.erase(rng() % t.size(), 1);
      return t;
    }
    case 1: {
      std::string t = s;
      t[rng() % t.size()] = static_cast<char>('a' + rng() % 26);
      return t;
    }
    case 2:
    case 3: {
      const std::size_t q = rng() % words.size();
      if (rng() % 2) {
        words.erase(words.begin() + static_cast<std::ptrdiff_t>(q));
      } else {
        words[q] = f.word();
      }
      return detokenize_words(words);
    }
    case 4:
      return f.perturb(s, 2 + rng() % 3);
    default:
      return s;
  }
}

}  // namespace

TEST(ClassifyEdit, Examples) {
  EXPECT_EQ(classify_edit("The cat sat.", "The cat sat.")->kind, EditKind::none);
  EXPECT_EQ(*classify_edit("The cat sat.", "The ct sat."), (EditOp{EditKind::delete_char, 5, ""}));
  EXPECT_EQ(*classify_edit("The cat sat.", "The cot sat."), (EditOp{EditKind::replace_char, 5, "o"}));
  EXPECT_EQ(*classify_edit("The big cat sat.", "The cat sat."), (EditOp{EditKind::delete_word, 1, ""}));
  EXPECT_EQ(*classify_edit("The cat sat.", "The dog sat."), (EditOp{EditKind::replace_word, 1, "dog"}));
  EXPECT_FALSE(classify_edit("The cat sat.", "A dog sat."));
  EXPECT_FALSE(classify_edit("The cat sat.", "The cat sat down."));
  EXPECT_EQ(classify_edit("평양 시", "평 시")->kind, EditKind::delete_char);
}

TEST(ClassifyEdit, AgreesWithEnumerationOracle) {
  oracle::SentenceFactory f(11, 200);
  for (int i = 0; i < 10000; ++i) {
    const auto s = f.sentence(2, 8);
    const auto e = random_edit(f, s);
    const auto want = oracle::enumerate_single_edit(s, e);
    const auto got = classify_edit(s, e);
    ASSERT_EQ(got.has_value(), want.valid) << s << " -> " << e;
    if (!got) continue;
    ASSERT_EQ(got->kind, want.kind) << s << " -> " << e;
    if (got->kind != EditKind::none) {
      EXPECT_NE(std::find(want.positions.begin(), want.positions.end(), got->position), want.positions.end());
    }
    EXPECT_EQ(validate_sentence_edit(s, e).valid(), want.valid);
  }
}

TEST(Excerpt, WordBoundsAreInclusive) {
  const auto pool = ten_word_pool(12);
  EXPECT_TRUE(has_rule(validate_excerpt(excerpt_of(4), pool), "word_count"));
  EXPECT_TRUE(validate_excerpt(excerpt_of(5), pool).valid());
  EXPECT_TRUE(validate_excerpt(excerpt_of(10), pool).valid());
  EXPECT_TRUE(has_rule(validate_excerpt(excerpt_of(11), pool), "word_count"));
}

TEST(Excerpt, AllowsOneEditPerSentenceAndReordering) {
  const auto pool = ten_word_pool(7);
  auto m = excerpt_of(7);
  std::reverse(m.excerpt.begin(), m.excerpt.end());
  m.excerpt[0].text = "Sentence6 word1 word2 word3 word4 word5 word6 word7 word8.";
  m.excerpt[1].text = "Sentence5 word1 word2 word3 word4 word5 word6 word7 word8 wor9.";
  m.excerpt[2].edit.kind = EditKind::drop_sentence;
  EXPECT_TRUE(validate_excerpt(m, pool).valid()) << to_json(validate_excerpt(m, pool)).dump();
  m.excerpt[1].text = "Sentence5 word1 word2 word3 word4 word5 word6 word7 wor8 wor9.";
  EXPECT_TRUE(has_rule(validate_excerpt(m, pool), "single_edit"));
}

TEST(Excerpt, RejectsUnknownDuplicateAndMismatchedEntries) {
  const auto pool = ten_word_pool(7);
  auto m = excerpt_of(6);
  m.excerpt.push_back(entry("g.0"));
  m.excerpt.push_back(entry("missing"));
  m.excerpt[1].edit.kind = EditKind::replace_word;
  m.excerpt[1].text = pool.at("g.1").substr(1);
  const auto v = validate_excerpt(m, pool);
  EXPECT_TRUE(has_rule(v, "duplicate_sentence"));
  EXPECT_TRUE(has_rule(v, "unknown_sentence"));
  EXPECT_TRUE(has_rule(v, "edit_kind_mismatch"));
}

TEST(Body, OnlyVerbatimSentences) {
  const auto pool = ten_word_pool(3);
  ArticleManifest m;
  m.body = {entry("g.2"), entry("g.0")};
  EXPECT_TRUE(validate_body(m, pool).valid());
  m.body[0].text = pool.at("g.2").substr(1);
  EXPECT_TRUE(has_rule(validate_body(m, pool), "body_edit"));
  m.body[0] = entry("g.2");
  m.body[0].edit.kind = EditKind::drop_sentence;
  m.body[1].edit.kind = EditKind::drop_sentence;
  EXPECT_TRUE(has_rule(validate_body(m, pool), "empty_body"));
}

TEST(Title, MustBeATokenRunFromTheArticle) {
  SentencePool pool = {{"g.0", "Officials in Seoul said the talks would resume."},
                       {"g.1", "Analysts expect markets to rally on Friday."}};
  ArticleManifest m;
  m.body = {entry("g.0")};
  for (const auto* ok : {"Officials in Seoul", "\"Talks Would Resume!\"", "seoul said the talks", "Markets to rally"}) {
    m.title = ok;
    EXPECT_TRUE(validate_title(m, pool).valid()) << ok;
  }
  for (const auto* bad : {"Seoul talks", "", "   ", "Officials in Tokyo"}) {
    m.title = bad;
    EXPECT_FALSE(validate_title(m, pool).valid()) << bad;
  }
}

TEST(Manifest, ImageNeedsFullAttribution) {
  auto pool = ten_word_pool(6);
  auto m = excerpt_of(5);
  m.body = {entry("g.5")};
  m.title = "Sentence5 word1";
  EXPECT_TRUE(validate_manifest(m, pool).valid());
  m.image = ImageCredit{"https://example.org/p.jpg", "", "Harbour"};
  EXPECT_FALSE(validate_manifest(m, pool).valid());
  m.image->author = "A. Person";
  EXPECT_TRUE(validate_manifest(m, pool).valid());
}

TEST(Manifest, JsonRoundTrip) {
  ArticleManifest m;
  m.id = "asia-0001";
  m.topic = "asia";
  m.title = "T";
  m.excerpt = {entry("a.0"), entry("a.1")};
  m.excerpt[1].text = "edited";
  m.excerpt[1].edit = {EditKind::replace_word, 2, "x"};
  m.body = {entry("a.2"), entry("a.3")};
  m.body[1].paragraph_break = true;
  m.image = ImageCredit{"u", "a", "w"};
  m.status = ManifestStatus::validated;
  const auto back = manifest_from_json(json::parse(to_json(m).dump()));
  EXPECT_EQ(to_json(back), to_json(m));
  EXPECT_EQ(back.excerpt[1].edit, m.excerpt[1].edit);
  EXPECT_TRUE(back.body[1].paragraph_break);
  EXPECT_THROW(manifest_from_json(json{{"status", "lost"}}), FormatError);
  EXPECT_THROW(manifest_from_json(json{{"body", {{{"text", "no id"}}}}}), FormatError);
}

namespace {

// Checks the subset of JSON Schema the shipped manifest schema uses.
bool conforms(const json& v, const json& schema, const json& root) {
  if (schema.contains("$ref")) {
    const auto name = schema["$ref"].get<std::string>().substr(std::string("#/$defs/").size());
    return conforms(v, root["$defs"][name], root);
  }
  if (schema.contains("oneOf")) {
    int hits = 0;
    for (const auto& alt : schema["oneOf"]) hits += conforms(v, alt, root);
    return hits == 1;
  }
  if (schema.contains("enum")) return std::find(schema["enum"].begin(), schema["enum"].end(), v) != schema["enum"].end();
  const auto type = schema.value("type", std::string{});
  if (type == "null") return v.is_null();
  if (type == "string") return v.is_string();
  if (type == "boolean") return v.is_boolean();
  if (type == "integer") return v.is_number_integer() && v.get<long long>() >= schema.value("minimum", 0LL);
  if (type == "array") {
    if (!v.is_array()) return false;
    return std::all_of(v.begin(), v.end(), [&](const json& x) { return conforms(x, schema["items"], root); });
  }
  if (type == "object") {
    if (!v.is_object()) return false;
    for (const auto& key : schema.value("required", json::array())) {
      if (!v.contains(key.get<std::string>())) return false;
    }
    for (const auto& [key, value] : v.items()) {
      if (!schema["properties"].contains(key)) return false;
      if (!conforms(value, schema["properties"][key], root)) return false;
    }
    return true;
  }
  return false;
}

}  // namespace

TEST(Manifest, SerializationConformsToShippedSchema) {
  const auto schema = json::parse(read_file(testing_support::source_dir() / "docs/manifest.schema.json"));
  ArticleManifest m;
  m.id = "asia-0001";
  m.topic = "asia";
  m.title = "T";
  m.excerpt = {entry("a.0"), entry("a.1")};
  m.excerpt[1].text = "edited";
  m.excerpt[1].edit = {EditKind::replace_char, 2, "x"};
  m.body = {entry("a.2"), entry("a.3")};
  m.body[1].paragraph_break = true;
  EXPECT_TRUE(conforms(to_json(m), schema, schema));
  m.image = ImageCredit{"u", "a", "w"};
  m.status = ManifestStatus::published;
  EXPECT_TRUE(conforms(to_json(m), schema, schema));
  auto bad = to_json(m);
  bad["excerpt"][0]["edit"]["kind"] = "rewrite";
  EXPECT_FALSE(conforms(bad, schema, schema));
  bad = to_json(m);
  bad["extra"] = 1;
  EXPECT_FALSE(conforms(bad, schema, schema));
}

TEST(Render, GoldenText) {
  const SentencePool pool = {{"g.0", "The harbour was quiet."},
                             {"g.1", "Boats stayed in port."},
                             {"g.2", "Fishermen mended their nets."},
                             {"g.3", "Prices at the market rose."}};
  ArticleManifest m;
  m.id = "a1";
  m.title = "  The harbour was quiet ";
  m.excerpt = {entry("g.1"), entry("g.0")};
  m.excerpt[1].text = "The harbor was quiet.";
  m.body = {entry("g.0"), entry("g.2"), entry("g.1"), entry("g.3")};
  m.body[2].edit.kind = EditKind::drop_sentence;
  m.body[3].paragraph_break = true;
  m.image = ImageCredit{"https://example.org/h.jpg", "J. Doe", "Harbour at dawn"};
  const auto a = render_article(m, pool);
  const std::string want =
      "The harbour was quiet\n"
      "\n"
      "Boats stayed in port. The harbor was quiet.\n"
      "\n"
      "The harbour was quiet. Fishermen mended their nets.\n"
      "\n"
      "Prices at the market rose.\n"
      "\n"
      "Image: \"Harbour at dawn\" by J. Doe via Creative Commons (https://example.org/h.jpg)\n";
  EXPECT_EQ(a.text(), want);
  ASSERT_EQ(a.provenance.size(), 5u);
  EXPECT_EQ(a.provenance[1].edit, EditKind::delete_char);
  EXPECT_EQ(a.provenance[1].section, "excerpt");
  EXPECT_EQ(a.provenance[4].sentence_id, "g.3");
  const auto back = assembled_from_json(to_json(a));
  EXPECT_EQ(back.text(), a.text());
  EXPECT_EQ(back.provenance.size(), a.provenance.size());
}
