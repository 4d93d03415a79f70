#include <gtest/gtest.h>

#include <regex>
#include <sstream>

#include "newsgen/corpus.hpp"
#include "support.hpp"

using namespace newsgen;
namespace ts = testing_support;

namespace {

std::string words(std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += (i ? " w" : "w") + std::to_string(i);
  return s;
}

std::string jsonl(const std::vector<Article>& articles) {
  std::string out;
  for (const auto& a : articles) out += to_json(a).dump() + "\n";
  return out;
}

// Independent frequency count: lowercase, then every maximal run of non-space,
// non-punctuation characters is a word and every listed punctuation mark a token.
std::map<std::string, std::uint64_t> regex_counts(const std::string& text) {
  std::map<std::string, std::uint64_t> out;
  const std::regex token(R"([^\s.,!?;:"()']+|[.,!?;:"()'])");
  std::string lower = text;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  for (auto it = std::sregex_iterator(lower.begin(), lower.end(), token); it != std::sregex_iterator(); ++it) {
    ++out[it->str()];
  }
  return out;
}

}  // namespace

TEST(CorpusStore, IngestCountsArticlesAndWords) {
  ts::TempDir dir;
  write_file_atomic(dir / "src.jsonl", jsonl({{"a", "A", words(10), "s", {}, {}},
                                              {"b", "B", words(20), "s", {}, {}},
                                              {"c", "C", words(30), "s", {}, {}}}));
  CorpusStore store(dir / "store.jsonl");
  EXPECT_EQ(store.ingest(dir / "src.jsonl", CorpusFormat::jsonl), (CorpusStats{3, 60}));
  EXPECT_EQ(stats(store), store.running_stats());
  CorpusStore reopened(dir / "store.jsonl");
  EXPECT_EQ(reopened.size(), 3u);
  EXPECT_EQ(reopened.find("b")->body, words(20));
}

TEST(CorpusStore, EmptyFileGivesZeroStats) {
  ts::TempDir dir;
  write_file_atomic(dir / "empty.jsonl", "");
  CorpusStore store;
  EXPECT_EQ(store.ingest(dir / "empty.jsonl", CorpusFormat::jsonl), (CorpusStats{0, 0}));
  EXPECT_EQ(stats(CorpusStore()), (CorpusStats{0, 0}));
}

TEST(CorpusStore, SingleArticleStats) {
  EXPECT_EQ(stats(std::vector<Article>{{"x", "", "one two three", "", {}, {}}}), (CorpusStats{1, 3}));
}

TEST(CorpusStore, RejectsDuplicateIdsAtomically) {
  ts::TempDir dir;
  CorpusStore store(dir / "store.jsonl");
  store.append({{"a", "", "body", "", {}, {}}});
  EXPECT_THROW(store.append({{"b", "", "body", "", {}, {}}, {"a", "", "again", "", {}, {}}}), FormatError);
  EXPECT_EQ(store.size(), 1u);
  EXPECT_EQ(CorpusStore(dir / "store.jsonl").size(), 1u);
}

TEST(CorpusStore, MalformedLineNamesLineNumber) {
  try {
    parse_corpus_jsonl("{\"id\":\"a\",\"title\":\"t\",\"body\":\"b\"}\n{not json}\n");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_THROW(parse_corpus_jsonl("{\"id\":\"a\",\"title\":\"t\"}"), FormatError);
  EXPECT_THROW(parse_corpus_jsonl("{\"id\":\"a\",\"title\":\"t\",\"body\":\"  \"}"), FormatError);
}

TEST(CorpusStore, ReadsPlainTextDirectory) {
  ts::TempDir dir;
  write_file_atomic(dir / "in/b.txt", "\nSecond title\nBody two.\n");
  write_file_atomic(dir / "in/a.txt", "First title\n\nBody one here.\n");
  write_file_atomic(dir / "in/skip.md", "ignored");
  CorpusStore store;
  EXPECT_EQ(store.ingest(dir / "in", CorpusFormat::plain_dir), (CorpusStats{2, 5}));
  EXPECT_EQ(store.articles()[0].id, "a");
  EXPECT_EQ(store.articles()[0].title, "First title");
  EXPECT_EQ(store.articles()[1].body, "Body two.");
}

TEST(CorpusStore, BundledFixtureMatchesIndependentWordCount) {
  const auto articles = parse_corpus_jsonl(read_file(ts::source_dir() / "data/toy/corpus.jsonl"));
  std::uint64_t words = 0;
  for (const auto& a : articles) {
    std::istringstream in(a.body);
    std::string w;
    while (in >> w) ++words;
  }
  EXPECT_EQ(stats(articles), (CorpusStats{articles.size(), words}));
  EXPECT_GE(articles.size(), 45u);
}

TEST(Tokenize, SplitsPunctuationAndLowercases) {
  EXPECT_EQ(tokenize_words("Trump said, \"No.\""),
            (std::vector<std::string>{"trump", "said", ",", "\"", "no", ".", "\""}));
  EXPECT_TRUE(tokenize_words("").empty());
  EXPECT_EQ(tokenize_words("It's", Casing::preserve), (std::vector<std::string>{"It", "'", "s"}));
}

TEST(Tokenize, BlankLinesBecomeParagraphMarkers) {
  EXPECT_EQ(tokenize_words("a b.\n\n\nc\n"), (std::vector<std::string>{"a", "b", ".", "<eop>", "c"}));
  EXPECT_EQ(tokenize_words("\n\na\n"), (std::vector<std::string>{"a"}));
}

TEST(Tokenize, DetokenizedTextRetokenizesIdentically) {
  const auto text = read_file(ts::fixture("overfit.txt")) + "\n\nHe said: \"It's (mostly) fine!\" Then left.";
  const Article a{"x", "", text, "", {}, {}};
  const auto vocab = build_vocab({a}, 1);
  const auto ids = tokenize(text, vocab);
  const auto again = tokenize(vocab.decode(ids), vocab);
  EXPECT_EQ(ids, again);
  const auto words = tokenize_words(text);
  EXPECT_EQ(tokenize_words(detokenize_words(words)), words);
}

TEST(Tokenize, IsIdempotentOnTokenizedText) {
  const auto once = tokenize_words("The U.S. (and others) said: \"no\"!");
  std::string joined;
  for (const auto& w : once) joined += w + " ";
  EXPECT_EQ(tokenize_words(joined), once);
}

TEST(Vocabulary, MinCountAndFrequencyOrder) {
  const auto v = build_vocab({{"a", "", "a a b", "", {}, {}}}, 2);
  EXPECT_EQ(v.words(), std::vector<std::string>{"a"});
  const auto w = build_vocab({{"a", "", "a a b c c c", "", {}, {}}}, 1, 4);
  EXPECT_EQ(w.words(), (std::vector<std::string>{"c", "a", "b"}));
  const auto capped = build_vocab({{"a", "", "a a b c c c", "", {}, {}}}, 1, 2);
  EXPECT_EQ(capped.words(), (std::vector<std::string>{"c", "a"}));
  EXPECT_THROW(build_vocab(std::vector<Article>{}, 1), ArgumentError);
}

TEST(Vocabulary, MatchesIndependentFrequencyCount) {
  const auto text = read_file(ts::fixture("overfit.txt"));
  const auto v = build_vocab({{"x", "", text, "", {}, {}}}, 2);
  std::vector<std::pair<std::string, std::uint64_t>> expected;
  for (const auto& [w, c] : regex_counts(text)) {
    if (c >= 2) expected.emplace_back(w, c);
  }
  std::sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> want;
  for (const auto& [w, c] : expected) want.push_back(w);
  EXPECT_EQ(v.words(), want);
}

TEST(Vocabulary, SpecialsAreFixedAndIdsInvert) {
  const auto v = build_vocab({{"a", "", "x y z x", "", {}, {}}}, 1);
  EXPECT_EQ(v.id_of("<unk>"), kUnk);
  EXPECT_EQ(v.id_of("<bos>"), kBos);
  EXPECT_EQ(v.id_of("<eos>"), kEos);
  EXPECT_EQ(v.id_of("<eop>"), kEop);
  for (TokenId i = 0; i < static_cast<TokenId>(v.size()); ++i) EXPECT_EQ(v.id_of(v.word_of(i)), i);
  EXPECT_EQ(v.id_of("never-seen"), kUnk);
  EXPECT_THROW(v.word_of(99), ArgumentError);
  EXPECT_EQ(Vocabulary::from_json(v.to_json()), v);
}

TEST(Vocabulary, RejectsForeignSpecialLayout) {
  auto j = Vocabulary().to_json();
  j["specials"]["eos"] = 7;
  EXPECT_THROW(Vocabulary::from_json(j), FormatError);
}

TEST(Vocabulary, EncodeCorpusWrapsArticles) {
  const std::vector<Article> arts = {{"a", "", "x y", "", {}, {}}, {"b", "", "y\n\nx", "", {}, {}}};
  const auto v = build_vocab(arts, 1);
  const auto ids = encode_corpus(arts, v);
  const TokenSequence want = {kBos, v.id_of("x"), v.id_of("y"), kEos, kBos, v.id_of("y"), kEop, v.id_of("x"), kEos};
  EXPECT_EQ(ids, want);
}
