#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "newsgen/corpus.hpp"
#include "newsgen/error.hpp"
#include "newsgen/text.hpp"

namespace newsgen {

// Standard English stopword list; data/stopwords.txt carries the same entries.
inline const std::vector<std::string_view>& builtin_stopwords() {
  static const std::vector<std::string_view> words = {
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are",
    "aren't", "as", "at", "be", "because", "been", "before", "being", "below", "between", "both",
    "but", "by", "can't", "cannot", "could", "couldn't", "did", "didn't", "do", "does", "doesn't",
    "doing", "don't", "down", "during", "each", "few", "for", "from", "further", "had", "hadn't",
    "has", "hasn't", "have", "haven't", "having", "he", "he'd", "he'll", "he's", "her", "here",
    "here's", "hers", "herself", "him", "himself", "his", "how", "how's", "i", "i'd", "i'll",
    "i'm", "i've", "if", "in", "into", "is", "isn't", "it", "it's", "its", "itself", "let's", "me",
    "more", "most", "mustn't", "my", "myself", "no", "nor", "not", "of", "off", "on", "once",
    "only", "or", "other", "ought", "our", "ours", "ourselves", "out", "over", "own", "same",
    "shan't", "she", "she'd", "she'll", "she's", "should", "shouldn't", "so", "some", "such",
    "than", "that", "that's", "the", "their", "theirs", "them", "themselves", "then", "there",
    "there's", "these", "they", "they'd", "they'll", "they're", "they've", "this", "those",
    "through", "to", "too", "under", "until", "up", "very", "was", "wasn't", "we", "we'd", "we'll",
    "we're", "we've", "were", "weren't", "what", "what's", "when", "when's", "where", "where's",
    "which", "while", "who", "who's", "whom", "why", "why's", "with", "won't", "would", "wouldn't",
    "you", "you'd", "you'll", "you're", "you've", "your", "yours", "yourself", "yourselves",
  };
  return words;
}

/// Stopword lookup over tokenizer output. Contractions such as "don't" contribute their
/// fragments ("don", "t") since the tokenizer splits on apostrophes.
class Stopwords {
 public:
  Stopwords() : Stopwords(builtin_stopwords()) {}

  template <typename Range>
  explicit Stopwords(const Range& entries) {
    for (const auto& e : entries) {
      for (auto& w : tokenize_words(std::string_view(e))) {
        if (!is_punct_token(w)) words_.insert(w);
      }
    }
  }

  static Stopwords load(const fs::path& path) {
    std::vector<std::string> entries;
    for (auto& line : read_lines(path)) {
      auto t = trim(line);
      if (!t.empty() && t.front() != '#') entries.emplace_back(t);
    }
    return Stopwords(entries);
  }

  bool contains(const std::string& w) const { return words_.count(w) > 0; }
  std::size_t size() const { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

/// Inverse document frequencies, idf = ln(N / df).
struct CorpusIdf {
  std::uint64_t doc_count = 0;
  std::map<std::string, double> idf;

  /// Words absent from the corpus score as if rarer than any seen word.
  double lookup(const std::string& w) const {
    auto it = idf.find(w);
    if (it != idf.end()) return it->second;
    return std::log(static_cast<double>(doc_count) + 1.0);
  }
};

inline CorpusIdf compute_idf(const std::vector<Article>& articles) {
  CorpusIdf out;
  out.doc_count = articles.size();
  std::map<std::string, std::uint64_t> df;
  for (const auto& a : articles) {
    std::set<std::string> seen;
    for (auto& w : tokenize_words(a.body)) {
      if (w != kEopWord && !is_punct_token(w)) seen.insert(std::move(w));
    }
    for (const auto& w : seen) ++df[w];
  }
  const double n = static_cast<double>(out.doc_count);
  for (const auto& [w, d] : df) out.idf.emplace(w, std::log(n / static_cast<double>(d)));
  return out;
}

inline json to_json(const CorpusIdf& idf) { return {{"doc_count", idf.doc_count}, {"idf", idf.idf}}; }

inline CorpusIdf idf_from_json(const json& j) {
  CorpusIdf out;
  out.doc_count = j.at("doc_count").get<std::uint64_t>();
  out.idf = j.at("idf").get<std::map<std::string, double>>();
  return out;
}

struct Tag {
  std::string tag;
  double score = 0.0;
  bool operator==(const Tag&) const = default;
};

struct TagSet {
  std::string article_id;
  std::vector<Tag> tags;  // descending score, unique

  bool has(std::string_view t) const {
    return std::any_of(tags.begin(), tags.end(), [&](const Tag& x) { return x.tag == t; });
  }
  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& t : tags) out.push_back(t.tag);
    return out;
  }
};

inline json to_json(const TagSet& ts) {
  json tags = json::array();
  for (const auto& t : ts.tags) tags.push_back({{"tag", t.tag}, {"score", t.score}});
  return {{"article_id", ts.article_id}, {"tags", tags}};
}

inline TagSet tagset_from_json(const json& j) {
  TagSet ts;
  ts.article_id = j.at("article_id").get<std::string>();
  for (const auto& t : j.at("tags")) ts.tags.push_back({t.at("tag").get<std::string>(), t.at("score").get<double>()});
  return ts;
}

inline void sort_tags(std::vector<Tag>& tags) {
  std::sort(tags.begin(), tags.end(), [](const Tag& a, const Tag& b) {
    return a.score != b.score ? a.score > b.score : a.tag < b.tag;
  });
}

namespace detail {

inline bool is_capitalized(const std::string& w) { return !w.empty() && w[0] >= 'A' && w[0] <= 'Z'; }

// Runs of capitalized words, trimmed of stopwords at both ends, joined with '_'.
inline std::map<std::string, std::pair<std::uint64_t, std::vector<std::string>>> entity_spans(
    const std::string& text, const Stopwords& stop) {
  std::map<std::string, std::pair<std::uint64_t, std::vector<std::string>>> spans;
  std::vector<std::string> run;
  auto flush = [&] {
    std::size_t lo = 0, hi = run.size();
    while (lo < hi && stop.contains(to_lower(run[lo]))) ++lo;
    while (hi > lo && stop.contains(to_lower(run[hi - 1]))) --hi;
    if (hi - lo >= 2) {
      std::vector<std::string> parts;
      std::string joined;
      for (std::size_t i = lo; i < hi; ++i) {
        parts.push_back(to_lower(run[i]));
        if (!joined.empty()) joined.push_back('_');
        joined += parts.back();
      }
      auto& slot = spans[joined];
      ++slot.first;
      slot.second = std::move(parts);
    }
    run.clear();
  };
  for (auto& w : tokenize_words(text, Casing::preserve)) {
    if (is_capitalized(w) && !is_punct_token(w) && w != kEopWord) {
      run.push_back(std::move(w));
    } else {
      flush();
    }
  }
  flush();
  return spans;
}

}  // namespace detail

/// Top-k TF-IDF word tags plus up to k capitalized-span entity tags. Zero-score tags are dropped.
inline TagSet extract_tags(const std::string& article_id, const std::string& text, const CorpusIdf& idf,
                           std::size_t k, const Stopwords& stop = Stopwords()) {
  if (k < 1) throw ArgumentError("tag count k must be >= 1");
  std::map<std::string, std::uint64_t> tf;
  for (auto& w : tokenize_words(text)) {
    if (w == kEopWord || is_punct_token(w) || stop.contains(w)) continue;
    ++tf[w];
  }
  std::vector<Tag> words;
  for (const auto& [w, c] : tf) {
    double s = static_cast<double>(c) * idf.lookup(w);
    if (s > 0.0) words.push_back({w, s});
  }
  sort_tags(words);
  if (words.size() > k) words.resize(k);

  std::vector<Tag> entities;
  for (const auto& [name, entry] : detail::entity_spans(text, stop)) {
    double max_idf = 0.0;
    for (const auto& part : entry.second) max_idf = std::max(max_idf, idf.lookup(part));
    double s = static_cast<double>(entry.first) * max_idf;
    if (s > 0.0) entities.push_back({name, s});
  }
  sort_tags(entities);
  if (entities.size() > k) entities.resize(k);

  TagSet out{article_id, std::move(words)};
  out.tags.insert(out.tags.end(), entities.begin(), entities.end());
  sort_tags(out.tags);
  return out;
}

inline TagSet extract_tags(const Article& a, const CorpusIdf& idf, std::size_t k,
                           const Stopwords& stop = Stopwords()) {
  return extract_tags(a.id, a.body, idf, k, stop);
}

struct TopicSpec {
  std::string name;
  std::set<std::string> keywords;
};

inline std::vector<TopicSpec> topics_from_json(const json& j) {
  if (!j.is_array()) throw FormatError("topic file must be a JSON array");
  std::vector<TopicSpec> out;
  for (const auto& e : j) {
    TopicSpec t;
    t.name = e.at("name").get<std::string>();
    for (const auto& kw : e.at("keywords")) {
      auto s = kw.get<std::string>();
      if (s.empty() || s != to_lower(s) || tokenize_words(s).size() != 1) {
        throw FormatError("topic '" + t.name + "': keyword '" + s + "' is not a lowercase single token");
      }
      t.keywords.insert(s);
    }
    if (t.keywords.empty()) throw FormatError("topic '" + t.name + "' has no keywords");
    out.push_back(std::move(t));
  }
  return out;
}

inline std::vector<TopicSpec> load_topics(const fs::path& path) { return topics_from_json(json::parse(read_file(path))); }

inline json to_json(const std::vector<TopicSpec>& specs) {
  json out = json::array();
  for (const auto& t : specs) out.push_back({{"name", t.name}, {"keywords", t.keywords}});
  return out;
}

/// Names of every topic sharing at least one keyword with the tags, sorted by name.
template <typename TagRange>
std::vector<std::string> match_topics(const TagRange& tags, const std::vector<TopicSpec>& specs) {
  std::vector<std::string> out;
  for (const auto& spec : specs) {
    bool hit = std::any_of(std::begin(tags), std::end(tags),
                           [&](const auto& t) { return spec.keywords.count(std::string(t)) > 0; });
    if (hit) out.push_back(spec.name);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline std::vector<std::string> match_topics(const TagSet& ts, const std::vector<TopicSpec>& specs) {
  return match_topics(ts.names(), specs);
}

struct TopicSubset {
  std::string topic;
  std::vector<std::string> article_ids;
  CorpusStats stats;
};

/// Builds one subset per spec (in spec order). Articles carry tags either from the corpus
/// file or from a sidecar TagSet; an article with neither is an error.
inline std::vector<TopicSubset> build_subsets(const std::vector<Article>& articles,
                                              const std::unordered_map<std::string, TagSet>& tagsets,
                                              const std::vector<TopicSpec>& specs) {
  if (specs.empty()) throw ArgumentError("no topic specs given");
  std::vector<TopicSubset> out;
  for (const auto& s : specs) out.push_back({s.name, {}, {}});
  for (const auto& a : articles) {
    auto it = tagsets.find(a.id);
    if (it == tagsets.end() && a.tags.empty()) {
      throw ArgumentError("article '" + a.id + "' has no tags; run extract_tags (the tag stage) first");
    }
    std::vector<std::string> tags = a.tags;
    if (it != tagsets.end()) {
      for (const auto& t : it->second.tags) tags.push_back(t.tag);
    }
    for (std::size_t i = 0; i < specs.size(); ++i) {
      bool hit = std::any_of(tags.begin(), tags.end(),
                             [&](const std::string& t) { return specs[i].keywords.count(t) > 0; });
      if (hit) {
        out[i].article_ids.push_back(a.id);
        out[i].stats.add(a);
      }
    }
  }
  return out;
}

inline json to_json(const TopicSubset& s) {
  return {{"topic", s.topic}, {"article_ids", s.article_ids}, {"stats", to_json(s.stats)}};
}

inline TopicSubset subset_from_json(const json& j) {
  TopicSubset s;
  s.topic = j.at("topic").get<std::string>();
  s.article_ids = j.at("article_ids").get<std::vector<std::string>>();
  s.stats.article_count = j.at("stats").at("article_count").get<std::uint64_t>();
  s.stats.word_count = j.at("stats").at("word_count").get<std::uint64_t>();
  return s;
}

}  // namespace newsgen
