#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "atsalign/annotate/plan.hpp"
#include "atsalign/annotate/store.hpp"
#include "atsalign/corpus.hpp"

namespace atsalign::annotate {

struct ServiceConfig {
  std::vector<AnnotatorProfile> annotators;
  std::vector<corpus::PreferencePair> pairs;
  /// Ordered shared pool per group; plans take a prefix of it.
  std::map<corpus::Group, std::vector<std::string>> shared_pool;
  std::uint64_t seed = 0;
  std::filesystem::path log_path;  // empty: in-memory only
  /// Seconds since epoch; defaults to the system clock.
  std::function<std::int64_t()> clock;
};

/// Loads {"annotators": [...], "shared_pool": {"target": [...], ...}, "seed": n}.
/// Pairs come from a separate preference-pair file.
ServiceConfig load_service_config(const std::filesystem::path& config_path,
                                  const std::filesystem::path& pairs_path);

struct Response {
  int status = 200;
  nlohmann::ordered_json body;
  std::string text;  // set for JSONL payloads (export)
};

enum class Side { left, right };

/// Session-managed preference collection. All methods are thread-safe:
/// state changes take an exclusive lock and are logged before returning,
/// reads take a shared lock. Every state-changing call accepts an optional
/// client request id; repeating a request id replays the first response.
class AnnotationService {
 public:
  explicit AnnotationService(ServiceConfig cfg);

  /// body: {login_id, seed?, request_id?}. A login owns one session;
  /// asking again returns it.
  Response create_session(const nlohmann::ordered_json& body);
  Response current(const std::string& session_id) const;
  Response next(const std::string& session_id, const nlohmann::ordered_json& body);
  Response back(const std::string& session_id, const nlohmann::ordered_json& body);
  /// body: {view_id, side: "left"|"right", request_id?}
  Response choice(const std::string& session_id, const nlohmann::ordered_json& body);
  Response submit(const std::string& session_id, const nlohmann::ordered_json& body);
  /// JSONL in the annotation schema, in write order.
  Response export_annotations(std::optional<corpus::Group> group, std::optional<std::int64_t> since = std::nullopt,
                              std::optional<std::int64_t> until = std::nullopt) const;

  std::vector<corpus::AnnotationRecord> records() const;
  /// Plan of an open session (for inspection and tests).
  const SessionPlan& plan(const std::string& session_id) const;

 private:
  struct Session {
    std::string id;
    const AnnotatorProfile* profile = nullptr;
    SessionPlan plan;
    std::size_t cursor = 0;
    std::size_t max_seen = 0;
    std::vector<std::optional<Side>> selected;
    bool submitted = false;
  };

  Session& session(const std::string& id);
  const Session& session(const std::string& id) const;
  nlohmann::ordered_json view_json(const Session& s) const;
  Response move(const std::string& session_id, const nlohmann::ordered_json& body, int delta, const char* op);
  std::optional<Response> cached(const std::string& key) const;
  Response remember(const std::string& key, Response r);
  Session open_session(const AnnotatorProfile& p, std::uint64_t seed) const;
  void apply(const nlohmann::ordered_json& event);
  std::int64_t now() const;

  ServiceConfig cfg_;
  std::unordered_map<std::string, const corpus::PreferencePair*> pairs_;
  std::unordered_map<std::string, const AnnotatorProfile*> by_login_;
  std::map<std::string, Session> sessions_;
  std::unordered_map<std::string, std::string> session_of_login_;
  std::vector<corpus::AnnotationRecord> records_;
  std::unordered_map<std::string, Response> idempotent_;
  mutable std::shared_mutex mu_;
  std::unique_ptr<EventLog> log_;
};

}  // namespace atsalign::annotate
