#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "newsgen/corpus.hpp"
#include "newsgen/decoder.hpp"
#include "newsgen/error.hpp"
#include "newsgen/parallel.hpp"
#include "newsgen/text.hpp"

namespace newsgen {

// ---------------------------------------------------------------------------
// Sentence segmentation

enum class Origin { corpus, generated };

struct Sentence {
  std::string text;
  Origin origin = Origin::corpus;
  std::string parent_id;
  std::size_t index = 0;
};

// Abbreviations that end in '.' without ending a sentence; data/abbreviations.txt has the same list.
inline const std::vector<std::string>& builtin_abbreviations() {
  static const std::vector<std::string> words = {
      "u.s.", "u.k.", "u.n.", "mr.",  "mrs.", "ms.",  "dr.",  "st.",  "vs.",   "jr.",  "sr.",
      "prof.", "gen.", "sen.", "rep.", "gov.", "lt.",  "col.", "inc.", "corp.", "ltd.", "e.g.",
      "i.e.", "etc.", "jan.", "feb.", "aug.", "sept.", "oct.", "nov.", "dec."};
  return words;
}

class Abbreviations {
 public:
  Abbreviations() : Abbreviations(builtin_abbreviations()) {}
  explicit Abbreviations(const std::vector<std::string>& words) {
    for (const auto& w : words) words_.insert(to_lower(w));
  }
  static Abbreviations load(const fs::path& path) {
    std::vector<std::string> words;
    for (auto& line : read_lines(path)) {
      auto t = trim(line);
      if (!t.empty() && t.front() != '#') words.emplace_back(t);
    }
    return Abbreviations(words);
  }
  bool contains(std::string_view w) const { return words_.count(to_lower(w)) > 0; }

 private:
  std::unordered_set<std::string> words_;
};

/// Splits on '.', '!' or '?' (runs allowed, optionally followed by closing quotes or
/// parentheses) when followed by whitespace or end of text, and on blank lines.
/// A '.' closing a listed abbreviation does not split.
inline std::vector<Sentence> split_sentences(std::string_view text, Origin origin = Origin::corpus,
                                             const std::string& parent_id = {},
                                             const Abbreviations& abbrev = Abbreviations()) {
  std::vector<Sentence> out;
  auto emit = [&](std::size_t begin, std::size_t end) {
    auto s = trim(text.substr(begin, end - begin));
    if (!s.empty()) out.push_back({std::string(s), origin, parent_id, out.size()});
  };
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == '\n') {
      std::size_t j = i + 1;
      while (j < text.size() && (text[j] == ' ' || text[j] == '\t' || text[j] == '\r')) ++j;
      if (j < text.size() && text[j] == '\n') {
        emit(start, i);
        start = j + 1;
        i = j + 1;
        continue;
      }
      ++i;
      continue;
    }
    if (c != '.' && c != '!' && c != '?') {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && (text[j] == '.' || text[j] == '!' || text[j] == '?')) ++j;
    const std::size_t term_end = j;
    while (j < text.size() && (text[j] == '"' || text[j] == '\'' || text[j] == ')')) ++j;
    if (j < text.size() && !is_space(text[j])) {
      i = term_end;
      continue;
    }
    if (term_end == i + 1 && c == '.') {
      std::size_t w = i;
      while (w > start && !is_space(text[w - 1])) --w;
      if (abbrev.contains(text.substr(w, i + 1 - w))) {
        i = term_end;
        continue;
      }
    }
    emit(start, j);
    start = j;
    i = j;
  }
  emit(start, text.size());
  return out;
}

// ---------------------------------------------------------------------------
// Edit distance

/// Unit-cost Levenshtein distance over code points, full dynamic program.
inline std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  if (a.size() > b.size()) std::swap(a, b);
  std::vector<std::size_t> row(a.size() + 1);
  for (std::size_t i = 0; i <= a.size(); ++i) row[i] = i;
  for (std::size_t j = 1; j <= b.size(); ++j) {
    std::size_t diag = row[0];
    row[0] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
      const std::size_t up = row[i];
      row[i] = std::min({up + 1, row[i - 1] + 1, diag + (a[i - 1] != b[j - 1] ? 1u : 0u)});
      diag = up;
    }
  }
  return row[a.size()];
}

/// Levenshtein distance if it is <= cutoff, otherwise nullopt. Only the diagonal band
/// of width 2*cutoff+1 is evaluated, and the scan stops once a whole band row exceeds
/// the cutoff.
inline std::optional<std::size_t> levenshtein(std::u32string_view a, std::u32string_view b, std::size_t cutoff) {
  if (a.size() > b.size()) std::swap(a, b);
  const std::size_t n = a.size(), m = b.size();
  if (m - n > cutoff) return std::nullopt;
  if (n == 0) return m;
  const std::size_t k = std::min(cutoff, m);
  const std::size_t inf = k + 1;
  thread_local std::vector<std::size_t> prev_buf, cur_buf;
  prev_buf.assign(m + 2, inf);
  cur_buf.assign(m + 2, inf);
  std::size_t* prev = prev_buf.data();
  std::size_t* cur = cur_buf.data();
  for (std::size_t j = 0; j <= std::min(m, k); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    const std::size_t lo = i > k ? i - k : 1;
    const std::size_t hi = std::min(m, i + k);
    cur[lo - 1] = lo == 1 ? std::min(i, inf) : inf;
    std::size_t row_min = cur[lo - 1];
    const char32_t ac = a[i - 1];
    for (std::size_t j = lo; j <= hi; ++j) {
      std::size_t v = prev[j - 1] + (ac != b[j - 1] ? 1 : 0);
      v = std::min(v, prev[j] + 1);
      v = std::min(v, cur[j - 1] + 1);
      v = std::min(v, inf);
      cur[j] = v;
      row_min = std::min(row_min, v);
    }
    if (hi < m) cur[hi + 1] = inf;
    if (row_min > k) return std::nullopt;
    std::swap(prev, cur);
  }
  return prev[m] <= k ? std::optional<std::size_t>(prev[m]) : std::nullopt;
}

/// Bit-parallel Levenshtein (Myers 1999, multi-word blocks after Hyyrö 2003) for one
/// fixed pattern against many texts: one pass over the text, 64 pattern rows per word.
class BitPattern {
 public:
  explicit BitPattern(std::u32string_view pattern) : m_(pattern.size()), blocks_((pattern.size() + 63) / 64) {
    ascii_.assign(128 * blocks_, 0);
    std::vector<char32_t> others;
    for (char32_t c : pattern) {
      if (c >= 128) others.push_back(c);
    }
    std::sort(others.begin(), others.end());
    others.erase(std::unique(others.begin(), others.end()), others.end());
    others_ = std::move(others);
    other_masks_.assign(others_.size() * blocks_, 0);
    zero_.assign(blocks_, 0);
    for (std::size_t i = 0; i < m_; ++i) {
      const char32_t c = pattern[i];
      std::uint64_t* row = c < 128 ? &ascii_[c * blocks_] : mask_slot(c);
      row[i / 64] |= std::uint64_t{1} << (i % 64);
    }
  }

  std::size_t size() const { return m_; }

  /// Distance to `text` if it is <= cutoff, otherwise nullopt. Gives up as soon as the
  /// running last-row score minus the remaining text length exceeds the cutoff.
  std::optional<std::size_t> distance(std::u32string_view text, std::size_t cutoff) const {
    const std::size_t n = text.size();
    if (m_ == 0) return n <= cutoff ? std::optional<std::size_t>(n) : std::nullopt;
    thread_local std::vector<std::uint64_t> pv, mv;
    pv.assign(blocks_, ~std::uint64_t{0});
    mv.assign(blocks_, 0);
    const std::uint64_t high = std::uint64_t{1} << ((m_ - 1) % 64);
    std::size_t score = m_;
    for (std::size_t j = 0; j < n; ++j) {
      const std::uint64_t* eq_row = peq(text[j]);
      int carry = 1;
      for (std::size_t b = 0; b < blocks_; ++b) {
        std::uint64_t eq = eq_row[b];
        const std::uint64_t p = pv[b], q = mv[b];
        const std::uint64_t xv = eq | q;
        if (carry < 0) eq |= 1;
        const std::uint64_t xh = (((eq & p) + p) ^ p) | eq;
        std::uint64_t ph = q | ~(xh | p);
        std::uint64_t mh = p & xh;
        const std::uint64_t top = b + 1 == blocks_ ? high : std::uint64_t{1} << 63;
        const int out = (ph & top) ? 1 : ((mh & top) ? -1 : 0);
        ph <<= 1;
        mh <<= 1;
        if (carry < 0) {
          mh |= 1;
        } else if (carry > 0) {
          ph |= 1;
        }
        pv[b] = mh | ~(xv | ph);
        mv[b] = ph & xv;
        carry = out;
      }
      score = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(score) + carry);
      if (score > cutoff && score - cutoff > n - j - 1) return std::nullopt;
    }
    return score <= cutoff ? std::optional<std::size_t>(score) : std::nullopt;
  }

 private:
  std::uint64_t* mask_slot(char32_t c) {
    const auto it = std::lower_bound(others_.begin(), others_.end(), c);
    return &other_masks_[static_cast<std::size_t>(it - others_.begin()) * blocks_];
  }

  const std::uint64_t* peq(char32_t c) const {
    if (c < 128) return &ascii_[c * blocks_];
    const auto it = std::lower_bound(others_.begin(), others_.end(), c);
    if (it == others_.end() || *it != c) return zero_.data();
    return &other_masks_[static_cast<std::size_t>(it - others_.begin()) * blocks_];
  }

  std::size_t m_;
  std::size_t blocks_;
  std::vector<std::uint64_t> ascii_;
  std::vector<char32_t> others_;
  std::vector<std::uint64_t> other_masks_;
  std::vector<std::uint64_t> zero_;
};

inline std::size_t levenshtein(std::string_view a, std::string_view b) { return levenshtein(utf8_decode(a), utf8_decode(b)); }

inline std::optional<std::size_t> levenshtein(std::string_view a, std::string_view b, std::size_t cutoff) {
  return levenshtein(utf8_decode(a), utf8_decode(b), cutoff);
}

inline double dissimilarity(std::size_t distance, std::size_t len_a, std::size_t len_b) {
  const std::size_t den = std::max(len_a, len_b);
  return den == 0 ? 0.0 : static_cast<double>(distance) / static_cast<double>(den);
}

// ---------------------------------------------------------------------------
// Corpus index and closest-match search

namespace detail {

inline constexpr std::size_t kHistBuckets = 32;
using CharHistogram = std::array<std::uint16_t, kHistBuckets>;

inline CharHistogram char_histogram(std::u32string_view s) {
  CharHistogram h{};
  for (char32_t c : s) {
    auto& slot = h[c % kHistBuckets];
    if (slot < UINT16_MAX) ++slot;
  }
  return h;
}

// Lower bound on edit distance from bucketed character counts: every unmatched
// character surplus on either side needs at least one edit.
inline std::size_t histogram_bound(const CharHistogram& a, const CharHistogram& b) {
  std::size_t pos = 0, neg = 0;
  for (std::size_t i = 0; i < kHistBuckets; ++i) {
    if (a[i] > b[i]) {
      pos += a[i] - b[i];
    } else {
      neg += b[i] - a[i];
    }
  }
  return std::max(pos, neg);
}

inline std::vector<std::string> index_words(std::string_view text) {
  std::vector<std::string> out;
  for (auto& w : tokenize_words(text)) {
    if (!is_punct_token(w) && w != kEopWord) out.push_back(std::move(w));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Code points compared by the novelty search. ASCII case is folded: generated text is
/// lowercase by construction, so capitals in the corpus carry no novelty.
inline std::u32string comparison_form(std::string_view text) { return utf8_decode(to_lower(text)); }

}  // namespace detail

/// Deduplicated, immutable corpus sentence set. Sentence ids are assigned in order
/// of first occurrence.
class CorpusIndex {
 public:
  struct Entry {
    Sentence sentence;
    std::u32string chars;
    detail::CharHistogram histogram;
  };

  CorpusIndex() = default;

  explicit CorpusIndex(const std::vector<Sentence>& sentences) {
    std::unordered_map<std::string, std::size_t> seen;
    for (const auto& s : sentences) {
      if (!seen.emplace(s.text, entries_.size()).second) continue;
      Entry e{s, detail::comparison_form(s.text), {}};
      e.histogram = detail::char_histogram(e.chars);
      const std::size_t id = entries_.size();
      if (by_length_.size() <= e.chars.size()) by_length_.resize(e.chars.size() + 1);
      by_length_[e.chars.size()].push_back(id);
      for (auto& w : detail::index_words(s.text)) postings_[w].push_back(static_cast<std::uint32_t>(id));
      entries_.push_back(std::move(e));
    }
  }

  static CorpusIndex from_articles(const std::vector<Article>& articles, const Abbreviations& abbrev = Abbreviations()) {
    std::vector<Sentence> all;
    for (const auto& a : articles) {
      auto s = split_sentences(a.body, Origin::corpus, a.id, abbrev);
      all.insert(all.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
    }
    return CorpusIndex(all);
  }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const Entry& at(std::size_t id) const { return entries_.at(id); }
  const std::vector<Entry>& entries() const { return entries_; }

  /// Ids of sentences with exactly `length` code points, ascending.
  const std::vector<std::size_t>& with_length(std::size_t length) const {
    static const std::vector<std::size_t> none;
    return length < by_length_.size() ? by_length_[length] : none;
  }
  std::size_t max_length() const { return by_length_.empty() ? 0 : by_length_.size() - 1; }

  /// Sentence ids containing `word` (lowercased token), ascending.
  const std::vector<std::uint32_t>* postings(const std::string& word) const {
    auto it = postings_.find(word);
    return it == postings_.end() ? nullptr : &it->second;
  }

 private:
  std::vector<Entry> entries_;
  std::vector<std::vector<std::size_t>> by_length_;
  std::unordered_map<std::string, std::vector<std::uint32_t>> postings_;
};

struct Match {
  std::size_t id = 0;
  std::size_t distance = 0;
  bool operator==(const Match&) const = default;
};

struct MatchOptions {
  /// When set, stop once the best distance so far is within this fraction of the query length.
  std::optional<double> reject_at;
  /// Candidates sharing the most words with the query, evaluated first to tighten the cutoff.
  std::size_t seed_candidates = 8;
};

/// Exact minimum edit distance over the index; ties go to the lowest sentence id.
/// Candidates are visited by ascending length difference, each with cutoff best-1
/// (best for ids below the current winner); a handful of high word-overlap candidates
/// are scored first so the cutoff is tight early. Distances come from the bit-parallel
/// kernel, which abandons a candidate as soon as it cannot beat the cutoff.
inline Match closest_match(std::string_view text, const CorpusIndex& index, const MatchOptions& opts = {}) {
  if (index.empty()) throw ArgumentError("closest_match() on an empty corpus index");
  const std::u32string q = detail::comparison_form(text);
  const auto qh = detail::char_histogram(q);
  const std::size_t L = q.size();
  constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
  std::size_t best = none, best_id = none;
  std::vector<char> visited(index.size(), 0);
  bool done = false;
  const BitPattern pattern(q);

  auto consider = [&](std::size_t id) {
    visited[id] = 1;
    const auto& e = index.at(id);
    std::size_t cutoff = none;
    if (best != none) {
      if (id < best_id) {
        cutoff = best;
      } else if (best == 0) {
        return;
      } else {
        cutoff = best - 1;
      }
      const std::size_t len_diff = L > e.chars.size() ? L - e.chars.size() : e.chars.size() - L;
      if (len_diff > cutoff) return;
      if (detail::histogram_bound(qh, e.histogram) > cutoff) return;
    }
    const auto d = pattern.distance(e.chars, cutoff);
    if (!d) return;
    if (*d < best || (*d == best && id < best_id)) {
      best = *d;
      best_id = id;
      // Any closer sentence has distance <= best and length-normalizer >= L, so once
      // best / L is within the threshold the reject verdict cannot change.
      if (opts.reject_at && dissimilarity(best, L, L) <= *opts.reject_at) done = true;
    }
  };

  if (opts.seed_candidates > 0) {
    std::unordered_map<std::uint32_t, std::uint32_t> overlap;
    for (const auto& w : detail::index_words(text)) {
      if (const auto* p = index.postings(w)) {
        for (auto id : *p) ++overlap[id];
      }
    }
    std::vector<std::pair<std::uint32_t, std::uint32_t>> ranked(overlap.begin(), overlap.end());
    const std::size_t take = std::min(opts.seed_candidates, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(take), ranked.end(),
                      [](const auto& a, const auto& b) { return a.second != b.second ? a.second > b.second : a.first < b.first; });
    for (std::size_t i = 0; i < take && !done; ++i) consider(ranked[i].first);
  }

  const std::size_t max_delta = std::max(L, index.max_length());
  for (std::size_t delta = 0; delta <= max_delta && !done; ++delta) {
    if (best != none && delta > best) break;
    for (int side = 0; side < 2 && !done; ++side) {
      if (side == 1 && delta == 0) break;
      if (side == 0 && delta > L) continue;
      const std::size_t len = side == 0 ? L - delta : L + delta;
      for (std::size_t id : index.with_length(len)) {
        if (!visited[id]) consider(id);
        if (done) break;
      }
    }
  }
  return {best_id, best};
}

/// Reference scan: full dynamic program against every corpus sentence.
inline Match closest_match_naive(std::string_view text, const CorpusIndex& index) {
  if (index.empty()) throw ArgumentError("closest_match() on an empty corpus index");
  const std::u32string q = detail::comparison_form(text);
  Match best{0, std::numeric_limits<std::size_t>::max()};
  for (std::size_t id = 0; id < index.size(); ++id) {
    const std::size_t d = levenshtein(q, index.at(id).chars);
    if (d < best.distance) best = {id, d};
  }
  return best;
}

// ---------------------------------------------------------------------------
// Pool filtering

enum class Verdict { keep, reject };

struct NoveltyReport {
  Sentence sentence;
  std::optional<std::size_t> closest_match;
  std::size_t distance = 0;
  double dissimilarity = 0.0;
  Verdict verdict = Verdict::reject;
};

/// A generated sentence that survived filtering, as served to the editor.
struct KeptSentence {
  std::string id;
  std::string topic;
  std::string text;
  std::string parent_id;
  std::size_t index = 0;
  std::optional<std::size_t> closest_match;
  std::string closest_text;
  std::size_t distance = 0;
  double dissimilarity = 0.0;
};

struct FilterResult {
  std::vector<NoveltyReport> reports;
  std::vector<KeptSentence> kept;
};

struct FilterOptions {
  double threshold = 0.30;
  bool exact = false;
  unsigned threads = 1;
  std::string topic;
};

/// Keep iff dissimilarity to the closest corpus sentence is strictly greater than the threshold.
inline Verdict novelty_verdict(double dissimilarity, double threshold) {
  return dissimilarity > threshold ? Verdict::keep : Verdict::reject;
}

inline FilterResult filter_sentences(const std::vector<Sentence>& sentences, const CorpusIndex& index,
                                     const FilterOptions& opts) {
  if (!(opts.threshold > 0.0 && opts.threshold < 1.0)) throw ArgumentError("threshold must be in (0,1)");
  if (index.empty()) throw ArgumentError("corpus index is empty");
  FilterResult out;
  out.reports.resize(sentences.size());
  MatchOptions mo;
  if (!opts.exact) mo.reject_at = opts.threshold;
  parallel_for(sentences.size(), opts.threads, [&](std::size_t i) {
    const auto& s = sentences[i];
    const Match m = closest_match(s.text, index, mo);
    NoveltyReport r{s, m.id, m.distance, 0.0, Verdict::reject};
    r.dissimilarity = dissimilarity(m.distance, utf8_length(s.text), index.at(m.id).chars.size());
    r.verdict = novelty_verdict(r.dissimilarity, opts.threshold);
    out.reports[i] = std::move(r);
  });
  for (const auto& r : out.reports) {
    if (r.verdict != Verdict::keep) continue;
    KeptSentence k;
    k.id = r.sentence.parent_id + "." + std::to_string(r.sentence.index);
    k.topic = opts.topic;
    k.text = r.sentence.text;
    k.parent_id = r.sentence.parent_id;
    k.index = r.sentence.index;
    k.closest_match = r.closest_match;
    if (r.closest_match) k.closest_text = index.at(*r.closest_match).sentence.text;
    k.distance = r.distance;
    k.dissimilarity = r.dissimilarity;
    out.kept.push_back(std::move(k));
  }
  return out;
}

/// Splits every generated sample into sentences and filters them against the corpus.
inline FilterResult filter_pool(const std::vector<GeneratedSample>& pool, const CorpusIndex& index,
                                const FilterOptions& opts, const Abbreviations& abbrev = Abbreviations()) {
  std::vector<Sentence> sentences;
  for (const auto& s : pool) {
    auto parts = split_sentences(s.text, Origin::generated, s.id, abbrev);
    sentences.insert(sentences.end(), std::make_move_iterator(parts.begin()), std::make_move_iterator(parts.end()));
  }
  return filter_sentences(sentences, index, opts);
}

inline json to_json(const Sentence& s) {
  return {{"text", s.text},
          {"origin", s.origin == Origin::corpus ? "corpus" : "generated"},
          {"parent_id", s.parent_id},
          {"index", s.index}};
}

inline json to_json(const NoveltyReport& r, const CorpusIndex& index) {
  json cm = nullptr;
  if (r.closest_match) {
    const auto& m = index.at(*r.closest_match).sentence;
    cm = {{"id", *r.closest_match}, {"parent_id", m.parent_id}, {"index", m.index}, {"text", m.text}};
  }
  return {{"sentence", to_json(r.sentence)},
          {"closest_match", cm},
          {"distance", r.distance},
          {"dissimilarity", r.dissimilarity},
          {"verdict", r.verdict == Verdict::keep ? "keep" : "reject"}};
}

inline json to_json(const KeptSentence& k) {
  json j = {{"id", k.id},
            {"topic", k.topic},
            {"text", k.text},
            {"parent_id", k.parent_id},
            {"index", k.index},
            {"distance", k.distance},
            {"dissimilarity", k.dissimilarity}};
  j["closest_match"] = k.closest_match ? json(*k.closest_match) : json(nullptr);
  j["closest_text"] = k.closest_text;
  return j;
}

inline KeptSentence kept_from_json(const json& j) {
  KeptSentence k;
  k.id = j.at("id").get<std::string>();
  k.topic = j.value("topic", std::string{});
  k.text = j.at("text").get<std::string>();
  k.parent_id = j.value("parent_id", std::string{});
  k.index = j.value("index", std::size_t{0});
  if (j.contains("closest_match") && !j.at("closest_match").is_null()) k.closest_match = j.at("closest_match").get<std::size_t>();
  k.closest_text = j.value("closest_text", std::string{});
  k.distance = j.value("distance", std::size_t{0});
  k.dissimilarity = j.value("dissimilarity", 0.0);
  return k;
}

inline std::vector<KeptSentence> read_kept_pool(const fs::path& path) {
  std::vector<KeptSentence> out;
  for (const auto& line : read_lines(path)) {
    if (!trim(line).empty()) out.push_back(kept_from_json(json::parse(line)));
  }
  return out;
}

/// Kept/rejected counts and a 10-bin dissimilarity histogram.
inline json filter_summary(const FilterResult& r) {
  std::vector<std::size_t> bins(10, 0);
  std::size_t kept = 0;
  for (const auto& rep : r.reports) {
    if (rep.verdict == Verdict::keep) ++kept;
    bins[std::min<std::size_t>(9, static_cast<std::size_t>(rep.dissimilarity * 10.0))]++;
  }
  return {{"summary", {{"kept", kept}, {"rejected", r.reports.size() - kept}, {"dissimilarity_histogram", bins}}}};
}

inline std::string report_jsonl(const FilterResult& r, const CorpusIndex& index) {
  std::string out;
  for (const auto& rep : r.reports) out += to_json(rep, index).dump() + "\n";
  out += filter_summary(r).dump() + "\n";
  return out;
}

inline std::string kept_jsonl(const std::vector<KeptSentence>& kept) {
  std::string out;
  for (const auto& k : kept) out += to_json(k).dump() + "\n";
  return out;
}

}  // namespace newsgen
