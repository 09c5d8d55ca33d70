#pragma once

#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"

namespace atsalign::annotate {

/// Append-only event log. Each line is "<crc32 as 8 hex digits> <json>".
/// A torn or corrupt final line (crash mid-write) is dropped on replay; a
/// corrupt line followed by valid ones is a DataError. An empty path keeps
/// events in memory only.
class EventLog {
 public:
  explicit EventLog(std::filesystem::path path = {});

  /// Events already on disk, in write order.
  std::vector<nlohmann::ordered_json> replay();

  void append(const nlohmann::ordered_json& event);

  const std::filesystem::path& path() const { return path_; }
  std::size_t dropped_tail() const { return dropped_tail_; }

  static std::string encode(const nlohmann::ordered_json& event);

 private:
  std::filesystem::path path_;
  std::mutex mu_;
  std::size_t dropped_tail_ = 0;
};

}  // namespace atsalign::annotate
