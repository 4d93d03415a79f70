#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "newsgen/assembler.hpp"
#include "newsgen/error.hpp"
#include "newsgen/parallel.hpp"
#include "newsgen/tagger.hpp"
#include "newsgen/text.hpp"

namespace newsgen {

struct Persona {
  std::string name;
  std::string bio;
  std::string portrait;  // path to an image file; empty -> generated placeholder
};

struct SiteConfig {
  std::string title = "News Desk";
  std::string tagline;
  std::string base_url;
  Persona author;
  std::map<std::string, std::string> theme;
  std::string output_dir = "site";
  std::string now;  // ISO 8601 UTC build timestamp, e.g. 2019-01-01T00:00:00Z

  void validate() const;
};

inline std::map<std::string, std::string> default_theme() {
  return {{"background", "#fbfaf7"},
          {"text", "#1f1f1f"},
          {"muted", "#6b6b6b"},
          {"accent", "#a4161a"},
          {"rule", "#dddddd"},
          {"font-body", "Georgia, 'Times New Roman', serif"},
          {"font-heading", "'Helvetica Neue', Arial, sans-serif"}};
}

// ---------------------------------------------------------------------------
// Timestamps

struct Timestamp {
  int year = 1970, month = 1, day = 1, hour = 0, minute = 0, second = 0;
  auto operator<=>(const Timestamp&) const = default;
};

inline Timestamp parse_timestamp(std::string_view s) {
  Timestamp t;
  char tail = 0;
  const std::string str(s);
  const int n = std::sscanf(str.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c", &t.year, &t.month, &t.day, &t.hour, &t.minute,
                            &t.second, &tail);
  const auto ymd = std::chrono::year_month_day(std::chrono::year(t.year), std::chrono::month(static_cast<unsigned>(t.month)),
                                               std::chrono::day(static_cast<unsigned>(t.day)));
  if (n != 7 || tail != 'Z' || str.size() != 20 || !ymd.ok() || t.hour > 23 || t.minute > 59 || t.second > 60) {
    throw ArgumentError("timestamp '" + str + "' is not of the form YYYY-MM-DDTHH:MM:SSZ");
  }
  return t;
}

inline std::string format_iso(const Timestamp& t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", t.year, t.month, t.day, t.hour, t.minute, t.second);
  return buf;
}

inline std::string format_rfc822(const Timestamp& t) {
  static const char* days[] = {"Sun", "Mon", "Tue", "Wed", "Thu", "Fri", "Sat"};
  static const char* months[] = {"Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
  const std::chrono::sys_days sd = std::chrono::year_month_day(
      std::chrono::year(t.year), std::chrono::month(static_cast<unsigned>(t.month)), std::chrono::day(static_cast<unsigned>(t.day)));
  const auto wd = std::chrono::weekday(sd).c_encoding();
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s, %02d %s %04d %02d:%02d:%02d +0000", days[wd], t.day, months[t.month - 1], t.year,
                t.hour, t.minute, t.second);
  return buf;
}

inline std::string format_display_date(const Timestamp& t) {
  static const char* months[] = {"January", "February", "March",     "April",   "May",      "June",
                                 "July",    "August",   "September", "October", "November", "December"};
  return std::string(months[t.month - 1]) + " " + std::to_string(t.day) + ", " + std::to_string(t.year);
}

inline void SiteConfig::validate() const {
  if (base_url.empty()) throw ArgumentError("site config: base_url must not be empty");
  if (title.empty()) throw ArgumentError("site config: title must not be empty");
  if (author.name.empty()) throw ArgumentError("site config: author.name must not be empty");
  if (!author.portrait.empty() && !fs::exists(author.portrait)) {
    throw ArgumentError("site config: portrait '" + author.portrait + "' does not exist");
  }
  for (const auto& [k, v] : theme) {
    const bool key_ok = !k.empty() && std::all_of(k.begin(), k.end(), [](char c) {
      return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
    });
    if (!key_ok) throw ArgumentError("site config: theme token '" + k + "' must match [a-z0-9-]+");
    if (v.find_first_of(";{}<>\\") != std::string::npos) {
      throw ArgumentError("site config: theme value for '" + k + "' contains forbidden characters");
    }
  }
  if (!now.empty()) parse_timestamp(now);
}

inline json to_json(const SiteConfig& c) {
  return {{"title", c.title},
          {"tagline", c.tagline},
          {"base_url", c.base_url},
          {"author", {{"name", c.author.name}, {"bio", c.author.bio}, {"portrait", c.author.portrait}}},
          {"theme", c.theme},
          {"output_dir", c.output_dir},
          {"now", c.now}};
}

/// Relative portrait paths are resolved against `base_dir` (the config file's directory).
inline SiteConfig site_config_from_json(const json& j, const fs::path& base_dir = {}) {
  SiteConfig c;
  try {
    c.title = j.value("title", c.title);
    c.tagline = j.value("tagline", c.tagline);
    c.base_url = j.value("base_url", c.base_url);
    if (j.contains("author")) {
      const auto& a = j.at("author");
      c.author.name = a.value("name", std::string{});
      c.author.bio = a.value("bio", std::string{});
      c.author.portrait = a.value("portrait", std::string{});
    }
    c.theme = default_theme();
    if (j.contains("theme")) {
      for (const auto& [k, v] : j.at("theme").items()) c.theme[k] = v.get<std::string>();
    }
    c.output_dir = j.value("output_dir", c.output_dir);
    c.now = j.value("now", std::string{});
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed site config: ") + e.what());
  }
  if (!c.author.portrait.empty() && fs::path(c.author.portrait).is_relative() && !base_dir.empty()) {
    c.author.portrait = (base_dir / c.author.portrait).string();
  }
  c.validate();
  return c;
}

inline SiteConfig load_site_config(const fs::path& path) {
  return site_config_from_json(json::parse(read_file(path)), path.parent_path());
}

// ---------------------------------------------------------------------------
// Published articles

struct PublishedArticle {
  AssembledArticle article;
  std::string slug;
  std::string published;  // ISO 8601 UTC
  std::vector<std::string> tags;
};

inline json to_json(const PublishedArticle& p) {
  json j = to_json(p.article);
  j["slug"] = p.slug;
  j["published"] = p.published;
  j["tags"] = p.tags;
  return j;
}

inline PublishedArticle published_from_json(const json& j) {
  try {
    PublishedArticle p{assembled_from_json(j), j.at("slug").get<std::string>(), j.at("published").get<std::string>(),
                       j.value("tags", std::vector<std::string>{})};
    parse_timestamp(p.published);
    return p;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed published article: ") + e.what());
  }
}

/// Reads every *.json file of `dir` (sorted by file name).
inline std::vector<PublishedArticle> load_published_dir(const fs::path& dir) {
  std::vector<PublishedArticle> out;
  if (!fs::exists(dir)) return out;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    try {
      out.push_back(published_from_json(json::parse(read_file(f))));
    } catch (const json::exception& e) {
      throw FormatError(f.string() + ": " + e.what());
    }
  }
  return out;
}

/// Lowercase ASCII letters and digits joined by single hyphens.
inline std::string slugify(std::string_view title) {
  std::string out;
  bool pending = false;
  for (char c : title) {
    const char l = ascii_lower(c);
    if ((l >= 'a' && l <= 'z') || (l >= '0' && l <= '9')) {
      if (pending && !out.empty()) out.push_back('-');
      out.push_back(l);
      pending = false;
    } else {
      pending = true;
    }
  }
  if (out.size() > 80) {
    out.resize(80);
    while (!out.empty() && out.back() == '-') out.pop_back();
  }
  return out.empty() ? "article" : out;
}

inline std::string unique_slug(const std::string& base, const std::set<std::string>& taken) {
  if (!taken.count(base)) return base;
  for (int i = 2;; ++i) {
    auto s = base + "-" + std::to_string(i);
    if (!taken.count(s)) return s;
  }
}

inline std::vector<std::string> tag_published(const AssembledArticle& a, const CorpusIdf& idf,
                                              const Stopwords& stop = Stopwords()) {
  std::string text = a.title + "\n\n" + a.excerpt;
  for (const auto& p : a.body) text += "\n\n" + p;
  return extract_tags(a.id, text, idf, 8, stop).names();
}

inline PublishedArticle make_published(const AssembledArticle& a, const CorpusIdf& idf, const std::string& now,
                                       const std::set<std::string>& taken_slugs = {},
                                       const Stopwords& stop = Stopwords()) {
  parse_timestamp(now);
  return {a, unique_slug(slugify(a.title), taken_slugs), now, tag_published(a, idf, stop)};
}

// ---------------------------------------------------------------------------
// Rendering

inline std::string html_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

/// Replaces `{{name}}` tokens; an unknown token is a programming error.
inline std::string fill_template(std::string_view tpl, const std::map<std::string, std::string>& vars) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const auto open = tpl.find("{{", pos);
    if (open == std::string_view::npos) break;
    const auto close = tpl.find("}}", open);
    if (close == std::string_view::npos) break;
    out.append(tpl.substr(pos, open - pos));
    const std::string key(tpl.substr(open + 2, close - open - 2));
    auto it = vars.find(key);
    if (it == vars.end()) throw ArgumentError("template token '" + key + "' has no value");
    out += it->second;
    pos = close + 2;
  }
  out.append(tpl.substr(pos));
  return out;
}

namespace detail {

inline constexpr std::string_view kPageTemplate = R"(<!DOCTYPE html>
<html lang="en">
<head>
<meta charset="utf-8" />
<meta name="viewport" content="width=device-width, initial-scale=1" />
<title>{{page_title}}</title>
<link rel="stylesheet" href="{{root}}assets/style.css" />
<link rel="alternate" type="application/rss+xml" title="{{site_title}}" href="{{root}}feed.xml" />
</head>
<body>
<header class="site-header">
<a class="brand" href="{{root}}index.html">{{site_title}}</a>
<p class="tagline">{{tagline}}</p>
<nav><a href="{{root}}index.html">Latest</a> <a href="{{root}}author.html">About {{author_name}}</a> <a href="{{root}}feed.xml">RSS</a></nav>
</header>
<div class="layout">
<main>
{{content}}</main>
<aside class="sidebar">
<img class="avatar" src="{{root}}{{portrait}}" alt="{{author_name}}" width="96" height="96" />
<p class="author-name"><a href="{{root}}author.html">{{author_name}}</a></p>
<p class="author-bio">{{author_bio}}</p>
</aside>
</div>
<footer><p>{{site_title}}</p></footer>
</body>
</html>
)";

inline constexpr std::string_view kStyleTemplate = R"(body {
  margin: 0;
  background: var(--background);
  color: var(--text);
  font-family: var(--font-body);
  line-height: 1.6;
}
a { color: var(--accent); text-decoration: none; }
a:hover { text-decoration: underline; }
.site-header { border-bottom: 4px solid var(--accent); padding: 1.5rem 2rem 1rem; }
.brand { font-family: var(--font-heading); font-size: 2rem; font-weight: 700; color: var(--text); }
.tagline { color: var(--muted); margin: 0.25rem 0; }
nav a { margin-right: 1rem; font-family: var(--font-heading); text-transform: uppercase; font-size: 0.85rem; }
.layout { display: flex; gap: 2rem; max-width: 70rem; margin: 0 auto; padding: 1.5rem 2rem; }
main { flex: 3; }
.sidebar { flex: 1; border-left: 1px solid var(--rule); padding-left: 1.5rem; }
.avatar { border-radius: 50%; }
.summary { border-bottom: 1px solid var(--rule); padding-bottom: 1rem; margin-bottom: 1.5rem; }
h1, h2 { font-family: var(--font-heading); line-height: 1.2; }
.meta, .byline, figcaption { color: var(--muted); font-size: 0.9rem; }
.excerpt { font-size: 1.15rem; font-style: italic; }
.tags { list-style: none; padding: 0; }
.tags li { display: inline-block; margin-right: 0.5rem; }
.tags a { border: 1px solid var(--rule); padding: 0.1rem 0.5rem; font-size: 0.85rem; }
figure { margin: 1rem 0; }
figure img { max-width: 100%; }
footer { border-top: 1px solid var(--rule); color: var(--muted); padding: 1rem 2rem; }
)";

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// Mirror-symmetric 5x5 block avatar seeded by the persona name.
inline std::string placeholder_avatar(std::string_view name) {
  const auto h = fnv1a(name);
  char color[8];
  std::snprintf(color, sizeof color, "#%02x%02x%02x", static_cast<unsigned>(h >> 40 & 0x7f) + 40,
                static_cast<unsigned>(h >> 48 & 0x7f) + 40, static_cast<unsigned>(h >> 56 & 0x7f) + 40);
  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"120\" height=\"120\" viewBox=\"0 0 5 5\" "
      "shape-rendering=\"crispEdges\">\n<rect width=\"5\" height=\"5\" fill=\"#eeeeee\"/>\n";
  for (int row = 0; row < 5; ++row) {
    for (int col = 0; col < 3; ++col) {
      if (!(h >> (row * 3 + col) & 1u)) continue;
      for (int x : {col, 4 - col}) {
        svg += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(row) + "\" width=\"1\" height=\"1\" fill=\"" +
               color + "\"/>\n";
        if (x == 2) break;
      }
    }
  }
  return svg + "</svg>\n";
}

struct TagPage {
  std::string name;
  std::string slug;
  std::vector<const PublishedArticle*> articles;
};

}  // namespace detail

/// Relative path -> file bytes for the whole site. Pure and deterministic.
inline std::map<std::string, std::string> render_site(const std::vector<PublishedArticle>& input, const SiteConfig& cfg,
                                                      std::size_t threads = 1) {
  cfg.validate();
  std::map<std::string, const PublishedArticle*> by_slug;
  for (const auto& a : input) {
    if (a.slug.empty() || a.slug != slugify(a.slug)) {
      throw ValidationError("article '" + a.article.id + "' has slug '" + a.slug + "' which is not URL-safe");
    }
    auto [it, fresh] = by_slug.emplace(a.slug, &a);
    if (!fresh) {
      throw ValidationError("slug collision on '" + a.slug + "': article '" + it->second->article.id + "' (\"" +
                            it->second->article.title + "\") and article '" + a.article.id + "' (\"" + a.article.title +
                            "\")");
    }
  }
  std::vector<const PublishedArticle*> articles;
  for (const auto& a : input) articles.push_back(&a);
  std::sort(articles.begin(), articles.end(), [](const PublishedArticle* x, const PublishedArticle* y) {
    const auto tx = parse_timestamp(x->published), ty = parse_timestamp(y->published);
    if (tx != ty) return tx > ty;
    return x->slug < y->slug;
  });

  std::map<std::string, detail::TagPage> tag_pages;
  for (const auto* a : articles) {
    for (const auto& t : a->tags) {
      const auto s = slugify(t);
      auto& page = tag_pages[s];
      if (page.slug.empty() || t < page.name) page.name = t;
      page.slug = s;
      if (page.articles.empty() || page.articles.back() != a) page.articles.push_back(a);
    }
  }

  std::map<std::string, std::string> files;
  const std::string portrait =
      cfg.author.portrait.empty() ? "assets/avatar.svg" : "assets/portrait" + fs::path(cfg.author.portrait).extension().string();
  if (cfg.author.portrait.empty()) {
    files[portrait] = detail::placeholder_avatar(cfg.author.name);
  } else {
    files[portrait] = read_file(cfg.author.portrait);
  }
  std::string css = ":root {\n";
  for (const auto& [k, v] : cfg.theme) css += "  --" + k + ": " + v + ";\n";
  files["assets/style.css"] = css + "}\n" + std::string(detail::kStyleTemplate);

  auto page = [&](const std::string& root, const std::string& title, const std::string& content) {
    return fill_template(detail::kPageTemplate, {{"root", root},
                                                 {"page_title", html_escape(title)},
                                                 {"site_title", html_escape(cfg.title)},
                                                 {"tagline", html_escape(cfg.tagline)},
                                                 {"author_name", html_escape(cfg.author.name)},
                                                 {"author_bio", html_escape(cfg.author.bio)},
                                                 {"portrait", portrait},
                                                 {"content", content}});
  };
  auto tag_list = [&](const PublishedArticle& a, const std::string& root) {
    if (a.tags.empty()) return std::string{};
    std::string out = "<ul class=\"tags\">\n";
    for (const auto& t : a.tags) {
      out += "<li><a href=\"" + root + "tags/" + slugify(t) + ".html\">" + html_escape(t) + "</a></li>\n";
    }
    return out + "</ul>\n";
  };
  auto summary = [&](const PublishedArticle& a, const std::string& root) {
    const auto ts = parse_timestamp(a.published);
    return "<article class=\"summary\">\n<h2><a href=\"" + root + "articles/" + a.slug + ".html\">" +
           html_escape(a.article.title) + "</a></h2>\n<p class=\"meta\"><time datetime=\"" + a.published + "\">" +
           format_display_date(ts) + "</time>" + (a.article.topic.empty() ? "" : " | " + html_escape(a.article.topic)) +
           "</p>\n<p>" + html_escape(a.article.excerpt) + "</p>\n" + tag_list(a, root) + "</article>\n";
  };
  auto summaries = [&](const std::vector<const PublishedArticle*>& list, const std::string& root) {
    if (list.empty()) return std::string("<p class=\"empty\">No articles yet.</p>\n");
    std::string out;
    for (const auto* a : list) out += summary(*a, root);
    return out;
  };

  files["index.html"] = page("", cfg.title, "<h1>Latest stories</h1>\n" + summaries(articles, ""));
  files["author.html"] =
      page("", cfg.author.name, "<h1>" + html_escape(cfg.author.name) + "</h1>\n<img class=\"avatar\" src=\"" + portrait +
                                    "\" alt=\"" + html_escape(cfg.author.name) +
                                    "\" width=\"160\" height=\"160\" />\n<p>" + html_escape(cfg.author.bio) +
                                    "</p>\n<h2>Stories</h2>\n" + summaries(articles, ""));

  std::vector<std::string> article_pages(articles.size());
  parallel_for(articles.size(), threads, [&](std::size_t i) {
    const auto& a = *articles[i];
    const auto ts = parse_timestamp(a.published);
    std::string c = "<article class=\"story\">\n<h1>" + html_escape(a.article.title) +
                    "</h1>\n<p class=\"byline\">By <a href=\"../author.html\">" + html_escape(cfg.author.name) +
                    "</a> | <time datetime=\"" + a.published + "\">" + format_display_date(ts) + "</time></p>\n";
    if (a.article.image) {
      c += "<figure>\n<img src=\"" + html_escape(a.article.image->url) + "\" alt=\"" +
           html_escape(a.article.image->work_title) + "\" />\n<figcaption>" + html_escape(a.article.credit_line()) +
           "</figcaption>\n</figure>\n";
    }
    c += "<p class=\"excerpt\">" + html_escape(a.article.excerpt) + "</p>\n";
    for (const auto& p : a.article.body) c += "<p>" + html_escape(p) + "</p>\n";
    c += tag_list(a, "../") + "</article>\n";
    article_pages[i] = page("../", a.article.title, c);
  });
  for (std::size_t i = 0; i < articles.size(); ++i) files["articles/" + articles[i]->slug + ".html"] = std::move(article_pages[i]);

  for (const auto& [slug, tp] : tag_pages) {
    files["tags/" + slug + ".html"] =
        page("../", "Tagged: " + tp.name, "<h1>Tagged: " + html_escape(tp.name) + "</h1>\n" + summaries(tp.articles, "../"));
  }

  std::string base = cfg.base_url;
  while (!base.empty() && base.back() == '/') base.pop_back();
  const std::string build_time = cfg.now.empty() ? (articles.empty() ? "1970-01-01T00:00:00Z" : articles.front()->published) : cfg.now;
  std::string feed = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<rss version=\"2.0\">\n<channel>\n<title>" +
                     html_escape(cfg.title) + "</title>\n<link>" + html_escape(base) + "/index.html</link>\n<description>" +
                     html_escape(cfg.tagline.empty() ? cfg.title : cfg.tagline) + "</description>\n<lastBuildDate>" +
                     format_rfc822(parse_timestamp(build_time)) + "</lastBuildDate>\n";
  for (const auto* a : articles) {
    const auto url = html_escape(base + "/articles/" + a->slug + ".html");
    feed += "<item>\n<title>" + html_escape(a->article.title) + "</title>\n<link>" + url + "</link>\n<guid>" + url +
            "</guid>\n<pubDate>" + format_rfc822(parse_timestamp(a->published)) + "</pubDate>\n<description>" +
            html_escape(a->article.excerpt) + "</description>\n";
    for (const auto& t : a->tags) feed += "<category>" + html_escape(t) + "</category>\n";
    feed += "</item>\n";
  }
  files["feed.xml"] = feed + "</channel>\n</rss>\n";

  std::string sitemap;
  for (const auto& [path, bytes] : files) {
    if (path.size() > 5 && path.ends_with(".html")) sitemap += base + "/" + path + "\n";
  }
  files["sitemap.txt"] = sitemap;
  return files;
}

/// Renders the site and replaces `out_dir` with it.
inline std::map<std::string, std::string> build_site(const std::vector<PublishedArticle>& articles, const SiteConfig& cfg,
                                                     const fs::path& out_dir, std::size_t threads = 1) {
  auto files = render_site(articles, cfg, threads);
  fs::path staging = out_dir;
  staging += ".staging";
  fs::remove_all(staging);
  for (const auto& [rel, bytes] : files) write_file_atomic(staging / rel, bytes);
  fs::remove_all(out_dir);
  fs::rename(staging, out_dir);
  return files;
}

}  // namespace newsgen
