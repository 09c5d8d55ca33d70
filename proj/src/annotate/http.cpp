#include "atsalign/annotate/http.hpp"

#include "atsalign/errors.hpp"
#include "httplib.h"

namespace atsalign::annotate {

using nlohmann::ordered_json;

namespace {

void send(httplib::Response& res, const Response& r) {
  res.status = r.status;
  if (!r.text.empty() || r.body.is_null())
    res.set_content(r.text, "application/x-ndjson");
  else
    res.set_content(r.body.dump(), "application/json");
}

// Empty bodies are allowed for navigation calls.
std::optional<ordered_json> parse_body(const httplib::Request& req, httplib::Response& res) {
  if (req.body.empty()) return ordered_json::object();
  try {
    auto j = ordered_json::parse(req.body);
    if (!j.is_object()) throw std::invalid_argument("body must be a JSON object");
    return j;
  } catch (const std::exception& e) {
    send(res, {400, ordered_json{{"error", std::string("invalid JSON body: ") + e.what()}}, {}});
    return std::nullopt;
  }
}

template <class F>
httplib::Server::Handler with_body(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    if (auto body = parse_body(req, res)) send(res, f(req, *body));
  };
}

}  // namespace

void register_routes(httplib::Server& server, AnnotationService& service) {
  server.Post("/session", with_body([&service](const httplib::Request&, const ordered_json& b) {
                return service.create_session(b);
              }));
  server.Get(R"(/session/([^/]+)/current)", [&service](const httplib::Request& req, httplib::Response& res) {
    send(res, service.current(req.matches[1]));
  });
  server.Post(R"(/session/([^/]+)/next)", with_body([&service](const httplib::Request& req, const ordered_json& b) {
                return service.next(req.matches[1], b);
              }));
  server.Post(R"(/session/([^/]+)/back)", with_body([&service](const httplib::Request& req, const ordered_json& b) {
                return service.back(req.matches[1], b);
              }));
  server.Post(R"(/session/([^/]+)/choice)", with_body([&service](const httplib::Request& req, const ordered_json& b) {
                return service.choice(req.matches[1], b);
              }));
  server.Post(R"(/session/([^/]+)/submit)", with_body([&service](const httplib::Request& req, const ordered_json& b) {
                return service.submit(req.matches[1], b);
              }));
  server.Get("/export", [&service](const httplib::Request& req, httplib::Response& res) {
    try {
      std::optional<corpus::Group> group;
      std::optional<std::int64_t> since, until;
      if (req.has_param("group") && !req.get_param_value("group").empty())
        group = corpus::parse_group(req.get_param_value("group"));
      if (req.has_param("since")) since = std::stoll(req.get_param_value("since"));
      if (req.has_param("until")) until = std::stoll(req.get_param_value("until"));
      auto r = service.export_annotations(group, since, until);
      res.status = 200;
      res.set_content(r.text, "application/x-ndjson");
    } catch (const std::exception& e) {
      send(res, {400, ordered_json{{"error", e.what()}}, {}});
    }
  });
}

void serve(AnnotationService& service, const std::string& host, int port) {
  httplib::Server server;
  register_routes(server, service);
  if (!server.listen(host, port)) throw ConfigError("cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace atsalign::annotate
