#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "newsgen/corpus.hpp"
#include "newsgen/error.hpp"
#include "newsgen/novelty.hpp"
#include "newsgen/text.hpp"

namespace newsgen {

enum class EditKind { none, delete_char, replace_char, delete_word, replace_word, drop_sentence, reorder };

inline std::string_view edit_kind_name(EditKind k) {
  switch (k) {
    case EditKind::none: return "none";
    case EditKind::delete_char: return "delete_char";
    case EditKind::replace_char: return "replace_char";
    case EditKind::delete_word: return "delete_word";
    case EditKind::replace_word: return "replace_word";
    case EditKind::drop_sentence: return "drop_sentence";
    case EditKind::reorder: return "reorder";
  }
  return "none";
}

inline EditKind parse_edit_kind(std::string_view s) {
  for (auto k : {EditKind::none, EditKind::delete_char, EditKind::replace_char, EditKind::delete_word,
                 EditKind::replace_word, EditKind::drop_sentence, EditKind::reorder}) {
    if (edit_kind_name(k) == s) return k;
  }
  throw FormatError("unknown edit kind '" + std::string(s) + "'");
}

inline bool is_text_edit(EditKind k) {
  return k == EditKind::delete_char || k == EditKind::replace_char || k == EditKind::delete_word ||
         k == EditKind::replace_word;
}

struct EditOp {
  EditKind kind = EditKind::none;
  std::size_t position = 0;  // code point index (char edits) or token index (word edits)
  std::string replacement;
  bool operator==(const EditOp&) const = default;
};

struct Violation {
  std::string rule;
  std::string message;
  std::string location;
};

struct EditVerdict {
  std::vector<Violation> violations;

  bool valid() const { return violations.empty(); }
  void add(std::string rule, std::string message, std::string location = {}) {
    violations.push_back({std::move(rule), std::move(message), std::move(location)});
  }
  void merge(const EditVerdict& o) { violations.insert(violations.end(), o.violations.begin(), o.violations.end()); }
};

inline json to_json(const EditVerdict& v) {
  json arr = json::array();
  for (const auto& x : v.violations) arr.push_back({{"rule", x.rule}, {"message", x.message}, {"location", x.location}});
  return {{"valid", v.valid()}, {"violations", arr}};
}

/// Classifies `edited` as one of: no change, one code-point deletion/substitution, or one
/// word-token deletion/substitution (case-preserving tokenizer). nullopt for anything else.
inline std::optional<EditOp> classify_edit(std::string_view original, std::string_view edited) {
  if (original == edited) return EditOp{};
  const auto o = utf8_decode(original);
  const auto e = utf8_decode(edited);
  std::size_t p = 0;
  while (p < o.size() && p < e.size() && o[p] == e[p]) ++p;
  if (e.size() + 1 == o.size() && std::u32string_view(o).substr(p + 1) == std::u32string_view(e).substr(p)) {
    return EditOp{EditKind::delete_char, p, {}};
  }
  if (e.size() == o.size() && std::u32string_view(o).substr(p + 1) == std::u32string_view(e).substr(p + 1)) {
    return EditOp{EditKind::replace_char, p, utf8_encode(std::u32string(1, e[p]))};
  }
  const auto wo = tokenize_words(original, Casing::preserve);
  const auto we = tokenize_words(edited, Casing::preserve);
  std::size_t q = 0;
  while (q < wo.size() && q < we.size() && wo[q] == we[q]) ++q;
  if (we.size() + 1 == wo.size() && std::equal(wo.begin() + static_cast<std::ptrdiff_t>(q) + 1, wo.end(),
                                               we.begin() + static_cast<std::ptrdiff_t>(q))) {
    return EditOp{EditKind::delete_word, q, {}};
  }
  if (we.size() == wo.size() && q < wo.size() &&
      std::equal(wo.begin() + static_cast<std::ptrdiff_t>(q) + 1, wo.end(), we.begin() + static_cast<std::ptrdiff_t>(q) + 1)) {
    return EditOp{EditKind::replace_word, q, we[q]};
  }
  return std::nullopt;
}

inline EditVerdict validate_sentence_edit(std::string_view original, std::string_view edited,
                                          const std::string& location = {}) {
  EditVerdict v;
  if (!classify_edit(original, edited)) {
    v.add("single_edit",
          "edit exceeds one letter or one word: only deleting/replacing a single letter or a single word is allowed",
          location);
  }
  return v;
}

// ---------------------------------------------------------------------------
// Manifest

struct ManifestEntry {
  std::string sentence_id;
  std::optional<std::string> text;  // edited text; absent means verbatim
  EditOp edit;
  bool paragraph_break = false;  // body: start a new paragraph before this sentence
};

struct ImageCredit {
  std::string url;
  std::string author;
  std::string work_title;
};

enum class ManifestStatus { draft, validated, published };

inline std::string_view status_name(ManifestStatus s) {
  switch (s) {
    case ManifestStatus::draft: return "draft";
    case ManifestStatus::validated: return "validated";
    case ManifestStatus::published: return "published";
  }
  return "draft";
}

inline ManifestStatus parse_status(std::string_view s) {
  if (s == "draft") return ManifestStatus::draft;
  if (s == "validated") return ManifestStatus::validated;
  if (s == "published") return ManifestStatus::published;
  throw FormatError("unknown manifest status '" + std::string(s) + "'");
}

struct ArticleManifest {
  std::string id;
  std::string topic;
  std::string title;
  std::vector<ManifestEntry> excerpt;
  std::vector<ManifestEntry> body;
  std::optional<ImageCredit> image;
  ManifestStatus status = ManifestStatus::draft;
};

inline json to_json(const ManifestEntry& e) {
  json j = {{"sentence_id", e.sentence_id}, {"edit", {{"kind", edit_kind_name(e.edit.kind)}}}};
  if (is_text_edit(e.edit.kind)) {
    j["edit"]["position"] = e.edit.position;
    if (!e.edit.replacement.empty()) j["edit"]["replacement"] = e.edit.replacement;
  }
  if (e.text) j["text"] = *e.text;
  if (e.paragraph_break) j["paragraph_break"] = true;
  return j;
}

inline ManifestEntry entry_from_json(const json& j) {
  ManifestEntry e;
  e.sentence_id = j.at("sentence_id").get<std::string>();
  if (j.contains("text") && !j.at("text").is_null()) e.text = j.at("text").get<std::string>();
  if (j.contains("edit")) {
    const auto& ed = j.at("edit");
    e.edit.kind = parse_edit_kind(ed.value("kind", std::string("none")));
    e.edit.position = ed.value("position", std::size_t{0});
    e.edit.replacement = ed.value("replacement", std::string{});
  }
  e.paragraph_break = j.value("paragraph_break", false);
  return e;
}

inline json to_json(const ArticleManifest& m) {
  json ex = json::array(), body = json::array();
  for (const auto& e : m.excerpt) ex.push_back(to_json(e));
  for (const auto& e : m.body) body.push_back(to_json(e));
  json j = {{"id", m.id},   {"topic", m.topic}, {"title", m.title},
            {"excerpt", ex}, {"body", body},     {"status", status_name(m.status)}};
  j["image"] = m.image ? json{{"url", m.image->url}, {"author", m.image->author}, {"work_title", m.image->work_title}}
                       : json(nullptr);
  return j;
}

inline ArticleManifest manifest_from_json(const json& j) {
  try {
    ArticleManifest m;
    m.id = j.value("id", std::string{});
    m.topic = j.value("topic", std::string{});
    m.title = j.value("title", std::string{});
    if (j.contains("excerpt")) {
      for (const auto& e : j.at("excerpt")) m.excerpt.push_back(entry_from_json(e));
    }
    if (j.contains("body")) {
      for (const auto& e : j.at("body")) m.body.push_back(entry_from_json(e));
    }
    if (j.contains("image") && !j.at("image").is_null()) {
      const auto& im = j.at("image");
      m.image = ImageCredit{im.value("url", std::string{}), im.value("author", std::string{}),
                            im.value("work_title", std::string{})};
    }
    m.status = parse_status(j.value("status", std::string("draft")));
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  }
}

/// Kept-pool sentences by id.
using SentencePool = std::map<std::string, std::string>;

inline SentencePool make_pool(const std::vector<KeptSentence>& kept) {
  SentencePool pool;
  for (const auto& k : kept) pool.emplace(k.id, k.text);
  return pool;
}

namespace detail {

inline std::string entry_location(std::string_view section, std::size_t i, const ManifestEntry& e) {
  return std::string(section) + "[" + std::to_string(i) + "] (" + e.sentence_id + ")";
}

inline std::string effective_text(const ManifestEntry& e, const SentencePool& pool) {
  if (e.text) return *e.text;
  auto it = pool.find(e.sentence_id);
  return it == pool.end() ? std::string{} : it->second;
}

}  // namespace detail

/// Excerpt: 50-100 words (inclusive), each sentence at most one letter/word edit, any order,
/// dropped sentences allowed.
inline EditVerdict validate_excerpt(const ArticleManifest& m, const SentencePool& pool) {
  EditVerdict v;
  std::size_t words = 0, used = 0;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < m.excerpt.size(); ++i) {
    const auto& e = m.excerpt[i];
    const auto loc = detail::entry_location("excerpt", i, e);
    if (e.edit.kind == EditKind::drop_sentence) continue;
    auto it = pool.find(e.sentence_id);
    if (it == pool.end()) {
      v.add("unknown_sentence", "sentence id is not in the kept pool", loc);
      continue;
    }
    if (!seen.insert(e.sentence_id).second) v.add("duplicate_sentence", "sentence used twice in the excerpt", loc);
    const std::string text = detail::effective_text(e, pool);
    auto op = classify_edit(it->second, text);
    if (!op) {
      v.merge(validate_sentence_edit(it->second, text, loc));
    } else if (is_text_edit(e.edit.kind) && e.edit.kind != op->kind) {
      v.add("edit_kind_mismatch",
            "declared edit '" + std::string(edit_kind_name(e.edit.kind)) + "' but the text shows '" +
                std::string(edit_kind_name(op->kind)) + "'",
            loc);
    }
    words += count_words(text);
    ++used;
  }
  if (used == 0) v.add("empty_excerpt", "excerpt has no sentences", "excerpt");
  if (words < 50 || words > 100) {
    v.add("word_count", "excerpt has " + std::to_string(words) + " words; it must have between 50 and 100", "excerpt");
  }
  return v;
}

/// Body: verbatim pool sentences only; omissions and ordering are free.
inline EditVerdict validate_body(const ArticleManifest& m, const SentencePool& pool) {
  EditVerdict v;
  std::size_t used = 0;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < m.body.size(); ++i) {
    const auto& e = m.body[i];
    const auto loc = detail::entry_location("body", i, e);
    if (e.edit.kind == EditKind::drop_sentence) continue;
    auto it = pool.find(e.sentence_id);
    if (it == pool.end()) {
      v.add("unknown_sentence", "sentence id is not in the kept pool", loc);
      continue;
    }
    if (!seen.insert(e.sentence_id).second) v.add("duplicate_sentence", "sentence used twice in the body", loc);
    if (is_text_edit(e.edit.kind) || (e.text && *e.text != it->second)) {
      v.add("body_edit", "body sentences must be used verbatim; only dropping whole sentences is allowed", loc);
    }
    ++used;
  }
  if (used == 0) v.add("empty_body", "article body has no sentences", "body");
  return v;
}

namespace detail {

inline bool is_edge_punct(char c) {
  return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E);
}

inline std::vector<std::string> title_tokens(std::string_view title) {
  auto t = trim(title);
  while (!t.empty() && (is_edge_punct(t.front()) || is_space(t.front()))) t.remove_prefix(1);
  while (!t.empty() && (is_edge_punct(t.back()) || is_space(t.back()))) t.remove_suffix(1);
  return tokenize_words(t);
}

inline bool contains_run(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > hay.size()) return false;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

}  // namespace detail

/// Title must be, case-insensitively and ignoring edge punctuation, a contiguous token
/// run of some body or kept-pool sentence.
inline EditVerdict validate_title(const ArticleManifest& m, const SentencePool& pool) {
  EditVerdict v;
  const auto needle = detail::title_tokens(m.title);
  if (needle.empty()) {
    v.add("title_empty", "article has no title", "title");
    return v;
  }
  for (const auto& e : m.body) {
    if (detail::contains_run(tokenize_words(detail::effective_text(e, pool)), needle)) return v;
  }
  for (const auto& [id, text] : pool) {
    if (detail::contains_run(tokenize_words(text), needle)) return v;
  }
  v.add("title_not_from_body", "title must be taken from a sentence of the article body or kept pool", "title");
  return v;
}

struct ManifestVerdicts {
  EditVerdict title;
  EditVerdict excerpt;
  EditVerdict body;

  bool valid() const { return title.valid() && excerpt.valid() && body.valid(); }
  EditVerdict combined() const {
    EditVerdict all = title;
    all.merge(excerpt);
    all.merge(body);
    return all;
  }
};

inline ManifestVerdicts validate_manifest(const ArticleManifest& m, const SentencePool& pool) {
  ManifestVerdicts out{validate_title(m, pool), validate_excerpt(m, pool), validate_body(m, pool)};
  if (m.image && (m.image->url.empty() || m.image->author.empty() || m.image->work_title.empty())) {
    out.title.add("image_attribution", "an image needs url, author and work title for the credit line", "image");
  }
  return out;
}

inline json to_json(const ManifestVerdicts& v) {
  return {{"valid", v.valid()}, {"title", to_json(v.title)}, {"excerpt", to_json(v.excerpt)}, {"body", to_json(v.body)}};
}

// ---------------------------------------------------------------------------
// Rendering

struct ProvenanceRecord {
  std::string section;
  std::string sentence_id;
  EditKind edit = EditKind::none;
  std::string text;
};

struct AssembledArticle {
  std::string id;
  std::string topic;
  std::string title;
  std::string excerpt;
  std::vector<std::string> body;  // paragraphs
  std::optional<ImageCredit> image;
  std::vector<ProvenanceRecord> provenance;

  std::string credit_line() const {
    if (!image) return {};
    return "Image: \"" + image->work_title + "\" by " + image->author + " via Creative Commons (" + image->url + ")";
  }

  /// Plain text: title, excerpt, body paragraphs, optional credit, blank-line separated.
  std::string text() const {
    std::string out = title + "\n\n" + excerpt + "\n";
    for (const auto& p : body) out += "\n" + p + "\n";
    if (image) out += "\n" + credit_line() + "\n";
    return out;
  }
};

inline AssembledArticle render_article(const ArticleManifest& m, const SentencePool& pool) {
  AssembledArticle a;
  a.id = m.id;
  a.topic = m.topic;
  a.title = std::string(trim(m.title));
  a.image = m.image;
  for (const auto& e : m.excerpt) {
    if (e.edit.kind == EditKind::drop_sentence) continue;
    const auto text = std::string(trim(detail::effective_text(e, pool)));
    if (!a.excerpt.empty()) a.excerpt.push_back(' ');
    a.excerpt += text;
    auto op = pool.count(e.sentence_id) ? classify_edit(pool.at(e.sentence_id), text) : std::nullopt;
    a.provenance.push_back({"excerpt", e.sentence_id, op ? op->kind : e.edit.kind, text});
  }
  for (const auto& e : m.body) {
    if (e.edit.kind == EditKind::drop_sentence) continue;
    const auto text = std::string(trim(detail::effective_text(e, pool)));
    if (a.body.empty() || e.paragraph_break) {
      a.body.push_back(text);
    } else {
      a.body.back() += " " + text;
    }
    a.provenance.push_back({"body", e.sentence_id, EditKind::none, text});
  }
  return a;
}

inline json to_json(const AssembledArticle& a) {
  json prov = json::array();
  for (const auto& p : a.provenance) {
    prov.push_back({{"section", p.section}, {"sentence_id", p.sentence_id}, {"edit", edit_kind_name(p.edit)}, {"text", p.text}});
  }
  json j = {{"id", a.id}, {"topic", a.topic}, {"title", a.title}, {"excerpt", a.excerpt}, {"body", a.body}, {"provenance", prov}};
  j["image"] = a.image ? json{{"url", a.image->url}, {"author", a.image->author}, {"work_title", a.image->work_title}}
                       : json(nullptr);
  return j;
}

inline AssembledArticle assembled_from_json(const json& j) {
  AssembledArticle a;
  a.id = j.value("id", std::string{});
  a.topic = j.value("topic", std::string{});
  a.title = j.at("title").get<std::string>();
  a.excerpt = j.value("excerpt", std::string{});
  a.body = j.value("body", std::vector<std::string>{});
  if (j.contains("image") && !j.at("image").is_null()) {
    const auto& im = j.at("image");
    a.image = ImageCredit{im.value("url", std::string{}), im.value("author", std::string{}), im.value("work_title", std::string{})};
  }
  if (j.contains("provenance")) {
    for (const auto& p : j.at("provenance")) {
      a.provenance.push_back({p.value("section", std::string{}), p.value("sentence_id", std::string{}),
                              parse_edit_kind(p.value("edit", std::string("none"))), p.value("text", std::string{})});
    }
  }
  return a;
}

}  // namespace newsgen
