#include "atsalign/annotate/service.hpp"

#include <chrono>
#include <cstdio>
#include <mutex>
#include <set>

#include "atsalign/errors.hpp"
#include "atsalign/rng.hpp"
#include "atsalign/toylm/prompts.hpp"

namespace atsalign::annotate {

using nlohmann::ordered_json;

namespace {

struct HttpError : std::runtime_error {
  HttpError(int s, const std::string& m) : std::runtime_error(m), status(s) {}
  int status;
};

Response error(int status, const std::string& msg) { return {status, ordered_json{{"error", msg}}, {}}; }

std::string request_id(const ordered_json& body) {
  if (body.is_object() && body.contains("request_id")) {
    if (!body["request_id"].is_string()) throw HttpError(400, "request_id must be a string");
    return body["request_id"].get<std::string>();
  }
  return {};
}

template <class F>
Response guarded(F&& f) {
  try {
    return f();
  } catch (const HttpError& e) {
    return error(e.status, e.what());
  } catch (const nlohmann::json::exception& e) {
    return error(400, e.what());
  } catch (const DomainError& e) {
    return error(422, e.what());
  }
}

}  // namespace

ServiceConfig load_service_config(const std::filesystem::path& config_path, const std::filesystem::path& pairs_path) {
  ServiceConfig cfg;
  ordered_json j;
  try {
    j = ordered_json::parse(corpus::read_file(config_path));
    for (const auto& a : j.at("annotators")) cfg.annotators.push_back(profile_from_json(a));
    if (j.contains("shared_pool"))
      for (const auto& [g, ids] : j.at("shared_pool").items())
        cfg.shared_pool[corpus::parse_group(g)] = ids.get<std::vector<std::string>>();
    cfg.seed = j.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(config_path.string() + ": " + e.what());
  }
  cfg.pairs = corpus::load_preference_pairs(pairs_path);
  if (j.contains("log")) cfg.log_path = j.at("log").get<std::string>();
  return cfg;
}

AnnotationService::AnnotationService(ServiceConfig cfg) : cfg_(std::move(cfg)), log_(std::make_unique<EventLog>(cfg_.log_path)) {
  for (const auto& p : cfg_.pairs) pairs_.emplace(p.id, &p);
  std::set<std::string> ids;
  for (const auto& a : cfg_.annotators) {
    a.validate();
    if (!ids.insert(a.annotator_id).second) throw ConfigError("duplicate annotator " + a.annotator_id);
    if (!by_login_.emplace(a.login_id, &a).second) throw ConfigError("duplicate login id " + a.login_id);
    for (const auto& id : a.pool)
      if (!pairs_.contains(id)) throw ConfigError("annotator " + a.annotator_id + " references unknown pair " + id);
  }
  for (const auto& [g, pool] : cfg_.shared_pool)
    for (const auto& id : pool)
      if (!pairs_.contains(id)) throw ConfigError("shared pool references unknown pair " + id);
  for (const auto& ev : log_->replay()) apply(ev);
}

std::int64_t AnnotationService::now() const {
  if (cfg_.clock) return cfg_.clock();
  return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
}

AnnotationService::Session AnnotationService::open_session(const AnnotatorProfile& p, std::uint64_t seed) const {
  std::vector<std::string> own = p.pool;
  if (own.empty()) {
    std::set<std::string> shared;
    for (const auto& [g, pool] : cfg_.shared_pool) shared.insert(pool.begin(), pool.end());
    for (const auto& pair : cfg_.pairs)
      if (!shared.contains(pair.id)) own.push_back(pair.id);
  }
  static const std::vector<std::string> none;
  const auto it = cfg_.shared_pool.find(p.group);
  Session s;
  s.profile = &p;
  s.plan = plan_session(own, it == cfg_.shared_pool.end() ? none : it->second, seed);
  s.selected.assign(s.plan.queue.size(), std::nullopt);
  char buf[24];
  std::snprintf(buf, sizeof buf, "s%016llx",
                static_cast<unsigned long long>(Rng::mix(seed, toylm::string_key(p.login_id))));
  s.id = buf;
  return s;
}

void AnnotationService::apply(const ordered_json& ev) {
  const std::string type = ev.at("type").get<std::string>();
  if (type == "session") {
    const auto it = by_login_.find(ev.at("login_id").get<std::string>());
    if (it == by_login_.end()) throw DataError("log references an unknown login");
    auto s = open_session(*it->second, ev.at("seed").get<std::uint64_t>());
    session_of_login_[it->first] = s.id;
    sessions_[s.id] = std::move(s);
  } else if (type == "cursor") {
    auto& s = session(ev.at("session_id").get<std::string>());
    s.cursor = ev.at("cursor").get<std::size_t>();
    s.max_seen = std::max(s.max_seen, s.cursor);
  } else if (type == "annotation") {
    auto& s = session(ev.at("session_id").get<std::string>());
    const auto idx = ev.at("index").get<std::size_t>();
    s.selected.at(idx) = ev.at("side") == "left" ? Side::left : Side::right;
    records_.push_back(corpus::annotation_from_json(ev.at("record")));
  } else if (type == "submit") {
    session(ev.at("session_id").get<std::string>()).submitted = true;
  } else {
    throw DataError("unknown log event '" + type + "'");
  }
}

AnnotationService::Session& AnnotationService::session(const std::string& id) {
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw HttpError(404, "unknown session");
  return it->second;
}

const AnnotationService::Session& AnnotationService::session(const std::string& id) const {
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw HttpError(404, "unknown session");
  return it->second;
}

const SessionPlan& AnnotationService::plan(const std::string& session_id) const {
  std::shared_lock lock(mu_);
  return session(session_id).plan;
}

ordered_json AnnotationService::view_json(const Session& s) const {
  const auto& a = s.plan.queue[s.cursor];
  const auto& pair = *pairs_.at(a.pair_id);
  ordered_json v{{"view_id", s.id + "/" + std::to_string(s.cursor)},
                 {"index", s.cursor},
                 {"total", s.plan.queue.size()},
                 {"left_text", pair.text(a.display_left)},
                 {"right_text", pair.text(corpus::other(a.display_left))}};
  if (s.profile->show_original) v["original_text"] = pair.complex;
  if (s.selected[s.cursor]) v["selected"] = *s.selected[s.cursor] == Side::left ? "left" : "right";
  v["at_start"] = s.cursor == 0;
  v["at_end"] = s.cursor + 1 == s.plan.queue.size();
  v["submitted"] = s.submitted;
  return v;
}

std::optional<Response> AnnotationService::cached(const std::string& key) const {
  const auto it = idempotent_.find(key);
  if (it == idempotent_.end()) return std::nullopt;
  return it->second;
}

Response AnnotationService::remember(const std::string& key, Response r) {
  if (!key.empty()) idempotent_[key] = r;
  return r;
}

Response AnnotationService::create_session(const ordered_json& body) {
  return guarded([&]() -> Response {
    std::unique_lock lock(mu_);
    const std::string rid = request_id(body);
    const std::string login = body.at("login_id").get<std::string>();
    const std::string key = rid.empty() ? "" : "session|" + login + "|" + rid;
    if (auto c = cached(key)) return *c;
    const auto it = by_login_.find(login);
    if (it == by_login_.end()) throw HttpError(403, "unknown login id");
    if (const auto ex = session_of_login_.find(login); ex != session_of_login_.end()) {
      const auto& s = sessions_.at(ex->second);
      return remember(key, {200, {{"session_id", s.id}, {"view", view_json(s)}}, {}});
    }
    const std::uint64_t seed =
        body.contains("seed") ? body.at("seed").get<std::uint64_t>() : Rng::mix(cfg_.seed, toylm::string_key(login));
    ordered_json ev{{"type", "session"}, {"login_id", login}, {"seed", seed}};
    auto s = open_session(*it->second, seed);  // validates pools before logging
    log_->append(ev);
    const std::string id = s.id;
    session_of_login_[login] = id;
    sessions_[id] = std::move(s);
    return remember(key, {201, {{"session_id", id}, {"view", view_json(sessions_.at(id))}}, {}});
  });
}

Response AnnotationService::current(const std::string& session_id) const {
  return guarded([&]() -> Response {
    std::shared_lock lock(mu_);
    return {200, view_json(session(session_id)), {}};
  });
}

Response AnnotationService::move(const std::string& session_id, const ordered_json& body, int delta, const char* op) {
  return guarded([&]() -> Response {
    std::unique_lock lock(mu_);
    const std::string rid = request_id(body);
    const std::string key = rid.empty() ? "" : std::string(op) + "|" + session_id + "|" + rid;
    if (auto c = cached(key)) return *c;
    auto& s = session(session_id);
    if (s.submitted) throw HttpError(409, "session already submitted");
    const std::size_t last = s.plan.queue.size() - 1;
    const std::size_t target = delta > 0 ? std::min(last, s.cursor + 1) : (s.cursor == 0 ? 0 : s.cursor - 1);
    if (target != s.cursor) {
      log_->append({{"type", "cursor"}, {"session_id", s.id}, {"cursor", target}});
      s.cursor = target;
      s.max_seen = std::max(s.max_seen, target);
    }
    return remember(key, {200, view_json(s), {}});
  });
}

Response AnnotationService::next(const std::string& session_id, const ordered_json& body) {
  return move(session_id, body, +1, "next");
}

Response AnnotationService::back(const std::string& session_id, const ordered_json& body) {
  return move(session_id, body, -1, "back");
}

Response AnnotationService::choice(const std::string& session_id, const ordered_json& body) {
  return guarded([&]() -> Response {
    std::unique_lock lock(mu_);
    const std::string rid = request_id(body);
    const std::string key = rid.empty() ? "" : "choice|" + session_id + "|" + rid;
    if (auto c = cached(key)) return *c;
    auto& s = session(session_id);
    if (s.submitted) throw HttpError(409, "session already submitted");
    const std::string view_id = body.at("view_id").get<std::string>();
    const std::string prefix = s.id + "/";
    if (view_id.rfind(prefix, 0) != 0) throw HttpError(404, "unknown view id");
    std::size_t idx = 0;
    try {
      std::size_t used = 0;
      idx = std::stoul(view_id.substr(prefix.size()), &used);
      if (used != view_id.size() - prefix.size()) throw HttpError(404, "unknown view id");
    } catch (const std::logic_error&) {
      throw HttpError(404, "unknown view id");
    }
    if (idx > s.max_seen || idx >= s.plan.queue.size()) throw HttpError(404, "view was never displayed");
    const std::string side = body.at("side").get<std::string>();
    if (side != "left" && side != "right") throw HttpError(400, "side must be left or right");
    const auto& a = s.plan.queue[idx];
    corpus::AnnotationRecord r;
    r.pair_id = a.pair_id;
    r.annotator_id = s.profile->annotator_id;
    r.annotator_group = s.profile->group;
    r.displayed_left = a.display_left;
    r.chosen = side == "left" ? a.display_left : corpus::other(a.display_left);
    r.sanity_kind = a.sanity_kind;
    r.timestamp = now();
    ordered_json rec = r;
    log_->append({{"type", "annotation"}, {"session_id", s.id}, {"index", idx}, {"side", side}, {"record", rec}});
    s.selected[idx] = side == "left" ? Side::left : Side::right;
    records_.push_back(r);
    return remember(key, {200, {{"record", rec}, {"view", view_json(s)}}, {}});
  });
}

Response AnnotationService::submit(const std::string& session_id, const ordered_json& body) {
  return guarded([&]() -> Response {
    std::unique_lock lock(mu_);
    const std::string rid = request_id(body);
    const std::string key = rid.empty() ? "" : "submit|" + session_id + "|" + rid;
    if (auto c = cached(key)) return *c;
    auto& s = session(session_id);
    if (s.submitted) throw HttpError(409, "session already submitted");
    log_->append({{"type", "submit"}, {"session_id", s.id}});
    s.submitted = true;
    std::size_t answered = 0;
    for (const auto& v : s.selected) answered += v.has_value();
    return remember(key, {200, {{"submitted", true}, {"answered", answered}, {"total", s.selected.size()}}, {}});
  });
}

Response AnnotationService::export_annotations(std::optional<corpus::Group> group, std::optional<std::int64_t> since,
                                               std::optional<std::int64_t> until) const {
  std::shared_lock lock(mu_);
  Response r;
  for (const auto& rec : records_) {
    if (group && rec.annotator_group != *group) continue;
    if (since && rec.timestamp < *since) continue;
    if (until && rec.timestamp > *until) continue;
    r.text += corpus::to_jsonl_line(rec);
    r.text += '\n';
  }
  return r;
}

std::vector<corpus::AnnotationRecord> AnnotationService::records() const {
  std::shared_lock lock(mu_);
  return records_;
}

}  // namespace atsalign::annotate
