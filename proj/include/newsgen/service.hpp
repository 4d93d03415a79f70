#pragma once

#include <charconv>
#include <memory>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "newsgen/curation.hpp"

namespace newsgen {

struct ServiceOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  fs::path ui_dir;  // built UI assets, mounted at / when present
  unsigned threads = 8;
};

/// JSON-over-HTTP front end of a CurationDesk. No authentication: it binds to
/// localhost and is meant for a single editor.
class CurationService {
 public:
  CurationService(CurationDesk& desk, ServiceOptions opts) : desk_(desk), opts_(std::move(opts)) {
    const unsigned n = opts_.threads;
    server_.new_task_queue = [n] { return new httplib::ThreadPool(n); };
    routes();
  }

  /// Binds the port; throws if it is taken. Returns the bound port (useful with port 0).
  int bind() {
    if (opts_.port == 0) {
      port_ = server_.bind_to_any_port(opts_.host);
      if (port_ < 0) throw Error("cannot bind " + opts_.host);
    } else {
      if (!server_.bind_to_port(opts_.host, opts_.port)) {
        throw Error("cannot bind " + opts_.host + ":" + std::to_string(opts_.port) + " (port busy?)");
      }
      port_ = opts_.port;
    }
    return port_;
  }

  /// Serves until stop(); call bind() first.
  void listen() { server_.listen_after_bind(); }
  void stop() { server_.stop(); }
  void wait_until_ready() const { server_.wait_until_ready(); }
  int port() const { return port_; }

 private:
  static void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message,
                         const std::vector<Violation>* violations = nullptr) {
    json body = {{"code", code}, {"message", message}};
    if (violations) body["violations"] = to_json(EditVerdict{*violations})["violations"];
    send_json(res, status, body);
  }

  template <typename Fn>
  static httplib::Server::Handler guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const CurationError& e) {
        send_error(res, e.status(), e.code(), e.what(), e.violations().empty() ? nullptr : &e.violations());
      } catch (const json::exception& e) {
        send_error(res, 400, "bad_request", std::string("malformed JSON: ") + e.what());
      } catch (const FormatError& e) {
        send_error(res, 400, "bad_request", e.what());
      } catch (const ArgumentError& e) {
        send_error(res, 400, "bad_request", e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
      }
    };
  }

  static std::size_t query_size(const httplib::Request& req, const char* key, std::size_t fallback) {
    if (!req.has_param(key)) return fallback;
    const auto v = req.get_param_value(key);
    std::size_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) {
      throw CurationError(400, "bad_request", std::string("query parameter '") + key + "' must be a non-negative integer");
    }
    return out;
  }

  static json draft_body(const DraftRecord& d) { return to_json(d); }

  void routes() {
    server_.Get("/api/topics", guarded([this](const httplib::Request&, httplib::Response& res) {
      json out = json::array();
      for (const auto& t : desk_.topics()) {
        out.push_back({{"name", t.name},
                       {"slug", slugify(t.name)},
                       {"keywords", std::vector<std::string>(t.keywords.begin(), t.keywords.end())},
                       {"kept", desk_.kept(t.name).size()}});
      }
      send_json(res, 200, out);
    }));

    server_.Get("/api/pools/:topic", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto& topic = desk_.topic(req.path_params.at("topic"));
      const auto kept = desk_.kept(topic.name);
      const auto offset = query_size(req, "offset", 0);
      const auto limit = std::min<std::size_t>(query_size(req, "limit", 50), 1000);
      json items = json::array();
      for (std::size_t i = offset; i < kept.size() && i < offset + limit; ++i) items.push_back(to_json(kept[i]));
      send_json(res, 200,
                {{"topic", topic.name}, {"total", kept.size()}, {"offset", offset}, {"limit", limit}, {"sentences", items}});
    }));

    server_.Post("/api/drafts", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, 201, draft_body(desk_.create(manifest_from_json(json::parse(req.body)))));
    }));

    server_.Get("/api/drafts", guarded([this](const httplib::Request&, httplib::Response& res) {
      json out = json::array();
      for (const auto& d : desk_.drafts()) out.push_back(draft_body(d));
      send_json(res, 200, out);
    }));

    server_.Get("/api/drafts/:id", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, 200, draft_body(desk_.get(req.path_params.at("id"))));
    }));

    server_.Put("/api/drafts/:id", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto body = json::parse(req.body);
      if (!body.contains("revision")) throw CurationError(400, "bad_request", "PUT body needs the revision it was based on");
      const auto revision = body.at("revision").get<std::uint64_t>();
      const auto manifest = manifest_from_json(body.contains("manifest") ? body.at("manifest") : body);
      send_json(res, 200, draft_body(desk_.update(req.path_params.at("id"), manifest, revision)));
    }));

    server_.Post("/api/drafts/:id/validate", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, 200, to_json(desk_.validate(req.path_params.at("id"))));
    }));

    server_.Post("/api/drafts/:id/publish", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, 200, to_json(desk_.publish(req.path_params.at("id"))));
    }));

    server_.Get("/api/articles", guarded([this](const httplib::Request&, httplib::Response& res) {
      json out = json::array();
      for (const auto& a : desk_.articles()) out.push_back(to_json(a));
      send_json(res, 200, out);
    }));

    if (!opts_.ui_dir.empty() && fs::is_directory(opts_.ui_dir)) server_.set_mount_point("/", opts_.ui_dir.string());
  }

  CurationDesk& desk_;
  ServiceOptions opts_;
  httplib::Server server_;
  int port_ = -1;
};

}  // namespace newsgen
