#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "newsgen/text.hpp"

namespace testing_support {

namespace fs = std::filesystem;

inline fs::path source_dir() { return fs::path(NEWSGEN_SOURCE_DIR); }
inline fs::path fixture(const std::string& rel) { return source_dir() / "tests" / "fixtures" / rel; }

/// Fresh directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "newsgen") {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = fs::temp_directory_path() /
            (tag + "-" + std::to_string(stamp) + "-" + std::to_string(counter.fetch_add(1)));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

/// Relative path -> bytes for every regular file under `root`.
inline std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = newsgen::read_file(e.path());
  }
  return out;
}

inline void copy_tree(const fs::path& from, const fs::path& to) {
  fs::create_directories(to);
  fs::copy(from, to, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
}

// ---------------------------------------------------------------------------
// Markup checks for generated pages. Pages are emitted in the XML-compatible
// serialization of HTML5, so a strict tag-balance parse is a valid conformance check:
// every element closes in order, void elements self-close, attributes are quoted, and
// text contains no raw '<' or bare '&'.

struct MarkupReport {
  bool ok = true;
  std::string error;
  std::vector<std::string> hrefs;  // href and src attribute values
  std::multiset<std::string> elements;
};

inline MarkupReport check_markup(const std::string& doc) {
  static const std::set<std::string> kVoid = {"area", "base", "br",   "col",   "embed",  "hr",    "img",
                                              "input", "link", "meta", "param", "source", "track", "wbr"};
  MarkupReport r;
  auto fail = [&](const std::string& why, std::size_t at) {
    r.ok = false;
    r.error = why + " at byte " + std::to_string(at);
    return r;
  };
  auto check_entities = [&](std::string_view text, std::size_t base) -> bool {
    for (std::size_t i = 0; i < text.size(); ++i) {
      if (text[i] == '<' || text[i] == '>') return false;
      if (text[i] == '&') {
        const auto semi = text.find(';', i);
        if (semi == std::string_view::npos || semi - i > 8 || semi == i + 1) return false;
        const auto name = text.substr(i + 1, semi - i - 1);
        if (name[0] == '#') {
          if (name.size() < 2) return false;
          for (char c : name.substr(1)) {
            if (c < '0' || c > '9') return false;
          }
        } else {
          for (char c : name) {
            if (!((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'))) return false;
          }
        }
        i = semi;
      }
    }
    (void)base;
    return true;
  };

  std::size_t pos = 0;
  const std::string doctype = "<!DOCTYPE html>";
  if (doc.compare(0, doctype.size(), doctype) != 0) return fail("missing <!DOCTYPE html>", 0);
  pos = doctype.size();
  std::vector<std::string> stack;
  bool seen_root = false;
  while (pos < doc.size()) {
    const auto lt = doc.find('<', pos);
    const std::string_view text(doc.data() + pos, (lt == std::string::npos ? doc.size() : lt) - pos);
    if (!check_entities(text, pos)) return fail("bad character data", pos);
    if (stack.empty() && text.find_first_not_of(" \t\r\n") != std::string_view::npos) {
      return fail("text outside the root element", pos);
    }
    if (lt == std::string::npos) break;
    const auto gt = doc.find('>', lt);
    if (gt == std::string::npos) return fail("unterminated tag", lt);
    std::string_view tag(doc.data() + lt + 1, gt - lt - 1);
    if (tag.starts_with("!--")) {
      const auto end = doc.find("-->", lt);
      if (end == std::string::npos) return fail("unterminated comment", lt);
      pos = end + 3;
      continue;
    }
    if (tag.starts_with("/")) {
      const std::string name(tag.substr(1));
      if (stack.empty() || stack.back() != name) return fail("mismatched </" + name + ">", lt);
      stack.pop_back();
      pos = gt + 1;
      continue;
    }
    const bool self_close = tag.ends_with("/");
    if (self_close) tag.remove_suffix(1);
    std::size_t i = 0;
    while (i < tag.size() && tag[i] != ' ' && tag[i] != '\n') ++i;
    const std::string name(tag.substr(0, i));
    if (name.empty() || !std::all_of(name.begin(), name.end(), [](char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'); })) {
      return fail("bad element name '" + name + "'", lt);
    }
    if (stack.empty()) {
      if (seen_root || name != "html") return fail("root element must be a single <html>", lt);
      seen_root = true;
    }
    // Attributes: name="value" pairs.
    while (i < tag.size()) {
      while (i < tag.size() && (tag[i] == ' ' || tag[i] == '\n')) ++i;
      if (i >= tag.size()) break;
      std::size_t eq = tag.find('=', i);
      if (eq == std::string_view::npos) return fail("attribute without value in <" + name + ">", lt);
      const std::string attr(tag.substr(i, eq - i));
      if (eq + 1 >= tag.size() || tag[eq + 1] != '"') return fail("unquoted attribute in <" + name + ">", lt);
      const auto close = tag.find('"', eq + 2);
      if (close == std::string_view::npos) return fail("unterminated attribute in <" + name + ">", lt);
      const auto value = tag.substr(eq + 2, close - eq - 2);
      if (!check_entities(value, lt)) return fail("bad attribute value in <" + name + ">", lt);
      if (attr == "href" || attr == "src") r.hrefs.emplace_back(value);
      i = close + 1;
    }
    r.elements.insert(name);
    if (kVoid.count(name)) {
      if (!self_close) return fail("void element <" + name + "> not self-closed", lt);
    } else if (self_close) {
      return fail("non-void element <" + name + "/> self-closed", lt);
    } else {
      stack.push_back(name);
    }
    pos = gt + 1;
  }
  if (!stack.empty()) return fail("unclosed <" + stack.back() + ">", doc.size());
  if (!seen_root) return fail("no <html> element", 0);
  for (const char* required : {"head", "title", "body", "meta"}) {
    if (!r.elements.count(required)) return fail(std::string("missing <") + required + ">", 0);
  }
  return r;
}

/// Resolves `href` relative to the page at `page` (a site-relative path). External
/// URLs resolve to an empty string.
inline std::string resolve_link(const std::string& page, const std::string& href) {
  if (href.find("://") != std::string::npos || href.starts_with("mailto:")) return {};
  fs::path base = fs::path(page).parent_path();
  return (base / href).lexically_normal().generic_string();
}

}  // namespace testing_support
