#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "newsgen/error.hpp"
#include "newsgen/text.hpp"

namespace newsgen {

using json = nlohmann::json;

struct Article {
  std::string id;
  std::string title;
  std::string body;
  std::string source;
  std::vector<std::string> tags;
  std::vector<std::string> topics;

  bool operator==(const Article&) const = default;
};

inline json to_json(const Article& a) {
  json j = {{"id", a.id}, {"title", a.title}, {"body", a.body}, {"source", a.source}};
  if (!a.tags.empty()) j["tags"] = a.tags;
  if (!a.topics.empty()) j["topics"] = a.topics;
  return j;
}

inline Article article_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("record is not a JSON object");
  auto required = [&](const char* key) -> std::string {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) {
      throw FormatError(std::string("missing or non-string field '") + key + "'");
    }
    return it->get<std::string>();
  };
  Article a;
  a.id = required("id");
  a.title = required("title");
  a.body = required("body");
  if (auto it = j.find("source"); it != j.end() && it->is_string()) a.source = it->get<std::string>();
  if (auto it = j.find("tags"); it != j.end()) {
    if (!it->is_array()) throw FormatError("field 'tags' must be an array of strings");
    for (const auto& t : *it) a.tags.push_back(to_lower(t.get<std::string>()));
  }
  if (auto it = j.find("topics"); it != j.end() && it->is_array()) {
    a.topics = it->get<std::vector<std::string>>();
  }
  if (a.id.empty()) throw FormatError("empty article id");
  if (trim(a.body).empty()) throw FormatError("empty body for article '" + a.id + "'");
  return a;
}

struct CorpusStats {
  std::uint64_t article_count = 0;
  std::uint64_t word_count = 0;

  void add(const Article& a) {
    ++article_count;
    word_count += count_words(a.body);
  }
  bool operator==(const CorpusStats&) const = default;
};

inline json to_json(const CorpusStats& s) {
  return {{"article_count", s.article_count}, {"word_count", s.word_count}};
}

// ---------------------------------------------------------------------------
// Tokenization

using TokenId = std::int32_t;
using TokenSequence = std::vector<TokenId>;

inline constexpr TokenId kUnk = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kEop = 3;
inline constexpr TokenId kNumSpecials = 4;

inline constexpr std::string_view kUnkWord = "<unk>";
inline constexpr std::string_view kBosWord = "<bos>";
inline constexpr std::string_view kEosWord = "<eos>";
inline constexpr std::string_view kEopWord = "<eop>";

inline bool is_split_punct(char c) {
  switch (c) {
    case '.': case ',': case '!': case '?': case ';': case ':':
    case '"': case '(': case ')': case '\'':
      return true;
    default:
      return false;
  }
}

inline bool is_punct_token(std::string_view w) {
  return !w.empty() && std::all_of(w.begin(), w.end(), [](char c) { return is_split_punct(c); });
}

enum class Casing { lower, preserve };

/// Splits text into word strings. Blank lines between non-empty paragraphs become "<eop>".
inline std::vector<std::string> tokenize_words(std::string_view text, Casing casing = Casing::lower) {
  std::vector<std::string> out;
  bool pending_break = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (trim(line).empty()) {
      if (!out.empty()) pending_break = true;
      if (nl == text.size()) break;
      continue;
    }
    if (pending_break) {
      out.emplace_back(kEopWord);
      pending_break = false;
    }
    for (std::string_view chunk : split_whitespace(line)) {
      std::string cur;
      for (char c : chunk) {
        if (is_split_punct(c)) {
          if (!cur.empty()) out.push_back(std::move(cur));
          cur.clear();
          out.emplace_back(1, c);
        } else {
          cur.push_back(casing == Casing::lower ? ascii_lower(c) : c);
        }
      }
      if (!cur.empty()) out.push_back(std::move(cur));
    }
    if (nl == text.size()) break;
  }
  return out;
}

/// Word frequencies of the text, specials excluded.
inline std::map<std::string, std::uint64_t> word_frequencies(std::string_view text) {
  std::map<std::string, std::uint64_t> freq;
  for (auto& w : tokenize_words(text)) {
    if (w != kEopWord) ++freq[w];
  }
  return freq;
}

/// Joins word strings back into readable text. Inverse of tokenize_words up to spacing.
inline std::string detokenize_words(const std::vector<std::string>& words) {
  std::string out;
  bool no_space_next = true;
  bool quote_open = false;
  for (const auto& w : words) {
    if (w == kEopWord) {
      while (!out.empty() && out.back() == ' ') out.pop_back();
      out += "\n\n";
      no_space_next = true;
      quote_open = false;
      continue;
    }
    if (w == kBosWord || w == kEosWord) continue;
    bool attach_left = false;
    bool attach_right = false;
    if (w.size() == 1) {
      switch (w[0]) {
        case '.': case ',': case '!': case '?': case ';': case ':': case ')':
          attach_left = true;
          break;
        case '(':
          attach_right = true;
          break;
        case '\'':
          attach_left = attach_right = true;
          break;
        case '"':
          if (quote_open) {
            attach_left = true;
          } else {
            attach_right = true;
          }
          quote_open = !quote_open;
          break;
        default:
          break;
      }
    }
    if (!out.empty() && !no_space_next && !attach_left) out.push_back(' ');
    out += w;
    no_space_next = attach_right;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Vocabulary

class Vocabulary {
 public:
  Vocabulary() { reset_specials(); }

  /// Specials plus the given words, ids assigned in order from 4.
  static Vocabulary from_words(const std::vector<std::string>& words, std::uint64_t min_count = 1) {
    Vocabulary v;
    v.min_count_ = min_count;
    for (const auto& w : words) {
      if (v.id_of_.count(w)) throw FormatError("duplicate vocabulary word '" + w + "'");
      v.id_of_.emplace(w, static_cast<TokenId>(v.word_of_.size()));
      v.word_of_.push_back(w);
    }
    return v;
  }

  std::size_t size() const { return word_of_.size(); }
  std::uint64_t min_count() const { return min_count_; }

  TokenId id_of(std::string_view word) const {
    auto it = id_of_.find(std::string(word));
    return it == id_of_.end() ? kUnk : it->second;
  }
  bool contains(std::string_view word) const { return id_of_.count(std::string(word)) > 0; }

  const std::string& word_of(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= word_of_.size()) {
      throw ArgumentError("token id " + std::to_string(id) + " outside vocabulary");
    }
    return word_of_[static_cast<std::size_t>(id)];
  }

  /// Non-special words in id order.
  std::vector<std::string> words() const {
    return {word_of_.begin() + kNumSpecials, word_of_.end()};
  }

  TokenSequence encode(const std::vector<std::string>& words) const {
    TokenSequence ids;
    ids.reserve(words.size());
    for (const auto& w : words) ids.push_back(w == kEopWord ? kEop : id_of(w));
    return ids;
  }

  std::string decode(const TokenSequence& ids) const {
    std::vector<std::string> words;
    words.reserve(ids.size());
    for (TokenId id : ids) words.push_back(word_of(id));
    return detokenize_words(words);
  }

  json to_json() const {
    return {{"specials", {{"unk", kUnk}, {"bos", kBos}, {"eos", kEos}, {"eop", kEop}}},
            {"words", words()},
            {"min_count", min_count_}};
  }

  static Vocabulary from_json(const json& j) {
    const auto& sp = j.at("specials");
    if (sp.at("unk") != kUnk || sp.at("bos") != kBos || sp.at("eos") != kEos || sp.at("eop") != kEop) {
      throw FormatError("vocabulary special ids differ from the fixed 0-3 layout");
    }
    return from_words(j.at("words").get<std::vector<std::string>>(), j.value("min_count", std::uint64_t{1}));
  }

  bool operator==(const Vocabulary& o) const { return word_of_ == o.word_of_; }

 private:
  void reset_specials() {
    word_of_ = {std::string(kUnkWord), std::string(kBosWord), std::string(kEosWord), std::string(kEopWord)};
    id_of_.clear();
    for (std::size_t i = 0; i < word_of_.size(); ++i) id_of_.emplace(word_of_[i], static_cast<TokenId>(i));
  }

  std::unordered_map<std::string, TokenId> id_of_;
  std::vector<std::string> word_of_;
  std::uint64_t min_count_ = 1;
};

/// tokenize() with a vocabulary: words below min_count or unseen map to UNK.
inline TokenSequence tokenize(std::string_view text, const Vocabulary& vocab) {
  return vocab.encode(tokenize_words(text));
}

/// Keeps the `max_size` most frequent words with count >= min_count; ties broken lexicographically.
inline Vocabulary build_vocab_from_counts(const std::map<std::string, std::uint64_t>& freq,
                                          std::uint64_t min_count, std::size_t max_size) {
  if (min_count < 1) throw ArgumentError("min_count must be >= 1");
  std::vector<std::pair<std::string, std::uint64_t>> ranked;
  for (const auto& [w, c] : freq) {
    if (c >= min_count && w != kUnkWord && w != kBosWord && w != kEosWord && w != kEopWord) {
      ranked.emplace_back(w, c);
    }
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (ranked.size() > max_size) ranked.resize(max_size);
  std::vector<std::string> words;
  words.reserve(ranked.size());
  for (auto& [w, c] : ranked) words.push_back(w);
  return Vocabulary::from_words(words, min_count);
}

inline Vocabulary load_vocab(const fs::path& path) { return Vocabulary::from_json(json::parse(read_file(path))); }

inline void save_vocab(const Vocabulary& v, const fs::path& path) {
  write_file_atomic(path, v.to_json().dump(1) + "\n");
}

// ---------------------------------------------------------------------------
// Store

enum class CorpusFormat { jsonl, plain_dir };

inline CorpusFormat parse_corpus_format(std::string_view s) {
  if (s == "jsonl") return CorpusFormat::jsonl;
  if (s == "plain_dir") return CorpusFormat::plain_dir;
  throw ArgumentError("unknown corpus format '" + std::string(s) + "'");
}

/// Parses corpus JSONL text; errors name the 1-based line number.
inline std::vector<Article> parse_corpus_jsonl(std::string_view content) {
  std::vector<Article> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    std::string_view line = content.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      out.push_back(article_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw FormatError("line " + std::to_string(line_no) + ": malformed JSON record (" + e.what() + ")");
    } catch (const FormatError& e) {
      throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

/// Each *.txt file is one article: first non-empty line is the title, the rest the body.
inline std::vector<Article> read_plain_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ArgumentError(dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Article> out;
  for (const auto& f : files) {
    std::string content = read_file(f);
    std::string_view rest = content;
    std::string title;
    while (!rest.empty()) {
      std::size_t nl = rest.find('\n');
      std::string_view line = rest.substr(0, nl);
      rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
      if (!trim(line).empty()) {
        title = std::string(trim(line));
        break;
      }
    }
    Article a;
    a.id = f.stem().string();
    a.title = title;
    a.body = std::string(trim(rest));
    a.source = dir.filename().string();
    if (a.body.empty()) throw FormatError("empty body in " + f.string());
    out.push_back(std::move(a));
  }
  return out;
}

/// Append-only JSONL article store with an in-memory id index.
class CorpusStore {
 public:
  CorpusStore() = default;

  /// Opens (or creates) a store backed by `path`; an empty path keeps it in memory only.
  explicit CorpusStore(fs::path path) : path_(std::move(path)) {
    if (!path_.empty() && fs::exists(path_)) {
      for (auto& a : parse_corpus_jsonl(read_file(path_))) insert(std::move(a));
    }
  }

  /// Adds articles, rejecting duplicate ids before anything is written.
  void append(std::vector<Article> batch) {
    std::unordered_map<std::string, bool> seen;
    for (const auto& a : batch) {
      if (a.id.empty()) throw FormatError("empty article id");
      if (trim(a.body).empty()) throw FormatError("empty body for article '" + a.id + "'");
      if (index_.count(a.id) || !seen.emplace(a.id, true).second) {
        throw FormatError("duplicate article id '" + a.id + "'");
      }
    }
    if (!path_.empty()) {
      if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
      std::ofstream out(path_, std::ios::binary | std::ios::app);
      if (!out) throw Error("cannot append to " + path_.string());
      for (const auto& a : batch) out << to_json(a).dump() << '\n';
      if (!out) throw Error("write failed for " + path_.string());
    }
    for (auto& a : batch) insert(std::move(a));
  }

  /// Reads a source corpus and appends it; returns stats over the whole store.
  CorpusStats ingest(const fs::path& source, CorpusFormat format) {
    if (!fs::exists(source)) throw ArgumentError("corpus path " + source.string() + " does not exist");
    append(format == CorpusFormat::jsonl ? parse_corpus_jsonl(read_file(source)) : read_plain_dir(source));
    return running_;
  }

  const std::vector<Article>& articles() const { return articles_; }
  std::size_t size() const { return articles_.size(); }
  bool empty() const { return articles_.empty(); }

  const Article* find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    return it == index_.end() ? nullptr : &articles_[it->second];
  }

  /// Counts accumulated during insertion.
  const CorpusStats& running_stats() const { return running_; }

 private:
  void insert(Article a) {
    if (index_.count(a.id)) throw FormatError("duplicate article id '" + a.id + "'");
    running_.add(a);
    index_.emplace(a.id, articles_.size());
    articles_.push_back(std::move(a));
  }

  fs::path path_;
  std::vector<Article> articles_;
  std::unordered_map<std::string, std::size_t> index_;
  CorpusStats running_;
};

inline CorpusStats stats(const std::vector<Article>& articles) {
  CorpusStats s;
  for (const auto& a : articles) s.add(a);
  return s;
}

inline CorpusStats stats(const CorpusStore& store) { return stats(store.articles()); }

inline std::map<std::string, std::uint64_t> word_frequencies(const std::vector<Article>& articles) {
  std::map<std::string, std::uint64_t> freq;
  for (const auto& a : articles) {
    for (auto& [w, c] : word_frequencies(a.body)) freq[w] += c;
  }
  return freq;
}

inline Vocabulary build_vocab(const std::vector<Article>& articles, std::uint64_t min_count = 3,
                              std::size_t max_size = 20000) {
  if (articles.empty()) throw ArgumentError("cannot build a vocabulary from an empty store");
  return build_vocab_from_counts(word_frequencies(articles), min_count, max_size);
}

inline Vocabulary build_vocab(const CorpusStore& store, std::uint64_t min_count = 3,
                              std::size_t max_size = 20000) {
  return build_vocab(store.articles(), min_count, max_size);
}

/// Training stream: BOS, body tokens, EOS for each article in order.
inline TokenSequence encode_corpus(const std::vector<Article>& articles, const Vocabulary& vocab) {
  TokenSequence out;
  for (const auto& a : articles) {
    out.push_back(kBos);
    auto ids = tokenize(a.body, vocab);
    out.insert(out.end(), ids.begin(), ids.end());
    out.push_back(kEos);
  }
  return out;
}

}  // namespace newsgen
