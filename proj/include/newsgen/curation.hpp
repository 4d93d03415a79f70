#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "newsgen/assembler.hpp"
#include "newsgen/error.hpp"
#include "newsgen/novelty.hpp"
#include "newsgen/pipeline.hpp"
#include "newsgen/site.hpp"
#include "newsgen/tagger.hpp"
#include "newsgen/text.hpp"

namespace newsgen {

/// A request the curation workflow refuses; `status` follows HTTP conventions.
class CurationError : public Error {
 public:
  CurationError(int status, std::string code, const std::string& message, std::vector<Violation> violations = {})
      : Error(message), status_(status), code_(std::move(code)), violations_(std::move(violations)) {}

  int status() const { return status_; }
  const std::string& code() const { return code_; }
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  int status_;
  std::string code_;
  std::vector<Violation> violations_;
};

struct DraftRecord {
  ArticleManifest manifest;
  std::uint64_t revision = 0;
  ManifestVerdicts verdicts;
};

inline json to_json(const DraftRecord& d) {
  return {{"revision", d.revision}, {"manifest", to_json(d.manifest)}, {"verdicts", to_json(d.verdicts)}};
}

struct CurationPaths {
  fs::path topics;
  fs::path pools;       // <topic-slug>.kept.jsonl files
  fs::path manifests;   // draft records
  fs::path published;   // PublishedArticle JSON files
  fs::path site;
  fs::path site_config;
  fs::path idf;         // optional; tags score zero without it
};

inline CurationPaths curation_paths(const Pipeline& p) {
  const auto& c = p.config().paths;
  return {c.topics, c.pools, c.manifests, c.published, c.site, c.site_config, p.idf_path()};
}

/// Draft storage, validation and publishing shared by the HTTP service and tests.
/// Every draft mutation is serialized; site rebuilds are single-flight.
class CurationDesk {
 public:
  explicit CurationDesk(CurationPaths paths, std::string fixed_now = {})
      : paths_(std::move(paths)), fixed_now_(std::move(fixed_now)) {
    specs_ = load_topics(paths_.topics);
    if (!paths_.idf.empty() && fs::exists(paths_.idf)) idf_ = idf_from_json(json::parse(read_file(paths_.idf)));
    if (fs::exists(paths_.manifests)) {
      for (const auto& e : fs::directory_iterator(paths_.manifests)) {
        if (e.path().extension() != ".json") continue;
        const auto j = json::parse(read_file(e.path()));
        DraftRecord d;
        d.manifest = manifest_from_json(j.at("manifest"));
        d.revision = j.at("revision").get<std::uint64_t>();
        d.verdicts = validate_manifest(d.manifest, pool_for(d.manifest.topic));
        drafts_.emplace(d.manifest.id, std::move(d));
      }
    }
  }

  const std::vector<TopicSpec>& topics() const { return specs_; }

  /// Topic by exact name or slug.
  const TopicSpec& topic(const std::string& key) const {
    for (const auto& t : specs_) {
      if (t.name == key || slugify(t.name) == key) return t;
    }
    throw CurationError(404, "not_found", "unknown topic '" + key + "'");
  }

  std::vector<KeptSentence> kept(const std::string& topic_key) const {
    const auto path = paths_.pools / (slugify(topic(topic_key).name) + ".kept.jsonl");
    return fs::exists(path) ? read_kept_pool(path) : std::vector<KeptSentence>{};
  }

  SentencePool pool_for(const std::string& topic_key) const {
    for (const auto& t : specs_) {
      if (t.name == topic_key || slugify(t.name) == topic_key) return make_pool(kept(topic_key));
    }
    return {};
  }

  std::vector<DraftRecord> drafts() const {
    std::lock_guard lock(mu_);
    std::vector<DraftRecord> out;
    for (const auto& [id, d] : drafts_) out.push_back(d);
    return out;
  }

  DraftRecord get(const std::string& id) const {
    std::lock_guard lock(mu_);
    return find(id);
  }

  DraftRecord create(ArticleManifest m) {
    topic(m.topic);
    std::lock_guard lock(mu_);
    m.id = next_id();
    m.status = ManifestStatus::draft;
    DraftRecord d{std::move(m), 1, {}};
    check_and_store(d);
    return d;
  }

  /// Replaces the manifest if `revision` matches the stored one.
  DraftRecord update(const std::string& id, ArticleManifest m, std::uint64_t revision) {
    std::lock_guard lock(mu_);
    DraftRecord d = find(id);
    if (revision != d.revision) {
      throw CurationError(409, "revision_conflict",
                          "draft '" + id + "' is at revision " + std::to_string(d.revision) + ", update was based on " +
                              std::to_string(revision));
    }
    if (d.manifest.status == ManifestStatus::published) {
      throw CurationError(409, "already_published", "draft '" + id + "' is published and frozen");
    }
    topic(m.topic);
    m.id = id;
    d.manifest = std::move(m);
    d.revision += 1;
    check_and_store(d);
    return d;
  }

  ManifestVerdicts validate(const std::string& id) const {
    std::lock_guard lock(mu_);
    const auto& d = find(id);
    return validate_manifest(d.manifest, pool_for(d.manifest.topic));
  }

  /// Re-validates, freezes the manifest and rebuilds the site. Publishing a published
  /// draft again returns the stored article without touching any file.
  PublishedArticle publish(const std::string& id) {
    std::lock_guard site_lock(site_mu_);
    DraftRecord d;
    {
      std::lock_guard lock(mu_);
      d = find(id);
    }
    const auto pool = pool_for(d.manifest.topic);
    const auto published_file = paths_.published / (id + ".json");
    if (d.manifest.status == ManifestStatus::published && fs::exists(published_file)) {
      return published_from_json(json::parse(read_file(published_file)));
    }
    const auto verdicts = validate_manifest(d.manifest, pool);
    if (!verdicts.valid()) {
      throw CurationError(409, "validation_failed", "draft '" + id + "' violates the editing rules",
                          verdicts.combined().violations);
    }
    std::set<std::string> taken;
    for (const auto& a : load_published_dir(paths_.published)) taken.insert(a.slug);
    const auto assembled = render_article(d.manifest, pool);
    const auto article = make_published(assembled, idf_, now(), taken);
    write_file_atomic(published_file, to_json(article).dump(1) + "\n");
    {
      std::lock_guard lock(mu_);
      DraftRecord& stored = drafts_.at(id);
      stored.manifest.status = ManifestStatus::published;
      stored.revision += 1;
      stored.verdicts = verdicts;
      persist(stored);
    }
    rebuild_site_locked();
    return article;
  }

  std::vector<PublishedArticle> articles() const { return load_published_dir(paths_.published); }

  void rebuild_site() {
    std::lock_guard site_lock(site_mu_);
    rebuild_site_locked();
  }

 private:
  const DraftRecord& find(const std::string& id) const {
    auto it = drafts_.find(id);
    if (it == drafts_.end()) throw CurationError(404, "not_found", "no draft '" + id + "'");
    return it->second;
  }

  std::string next_id() const {
    std::size_t n = drafts_.size() + 1;
    char buf[32];
    while (true) {
      std::snprintf(buf, sizeof buf, "d%04zu", n);
      if (!drafts_.count(buf)) return buf;
      ++n;
    }
  }

  /// Sentence-level rule breaks are refused at write time; article-level ones (word
  /// count, title, empty sections) stay in the stored verdicts until fixed.
  void check_and_store(DraftRecord& d) {
    const auto pool = pool_for(d.manifest.topic);
    d.verdicts = validate_manifest(d.manifest, pool);
    static const std::set<std::string> write_time = {"single_edit", "body_edit", "unknown_sentence",
                                                     "edit_kind_mismatch"};
    std::vector<Violation> refused;
    for (const auto& v : d.verdicts.combined().violations) {
      if (write_time.count(v.rule)) refused.push_back(v);
    }
    if (!refused.empty()) throw CurationError(422, "edit_rejected", "edit breaks the sentence editing rules", refused);
    d.manifest.status = d.verdicts.valid() ? ManifestStatus::validated : ManifestStatus::draft;
    persist(d);
    drafts_[d.manifest.id] = d;
  }

  void persist(const DraftRecord& d) const {
    json j = {{"revision", d.revision}, {"manifest", to_json(d.manifest)}};
    write_file_atomic(paths_.manifests / (d.manifest.id + ".json"), j.dump(1) + "\n");
  }

  std::string now() const {
    if (!fixed_now_.empty()) return fixed_now_;
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
  }

  void rebuild_site_locked() {
    build_site(load_published_dir(paths_.published), load_site_config(paths_.site_config), paths_.site);
  }

  CurationPaths paths_;
  std::string fixed_now_;
  std::vector<TopicSpec> specs_;
  CorpusIdf idf_;
  std::map<std::string, DraftRecord> drafts_;
  mutable std::mutex mu_;
  std::mutex site_mu_;
};

}  // namespace newsgen
