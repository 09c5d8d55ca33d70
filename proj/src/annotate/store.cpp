#include "atsalign/annotate/store.hpp"

#include <fcntl.h>
#include <unistd.h>
#include <zlib.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <sstream>

#include "atsalign/corpus.hpp"
#include "atsalign/errors.hpp"

namespace atsalign::annotate {
namespace {

std::uint32_t crc(const std::string& s) {
  return static_cast<std::uint32_t>(crc32(0L, reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(s.size())));
}

}  // namespace

EventLog::EventLog(std::filesystem::path path) : path_(std::move(path)) {
  if (!path_.empty() && path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
}

std::string EventLog::encode(const nlohmann::ordered_json& event) {
  const std::string body = event.dump();
  char head[10];
  std::snprintf(head, sizeof head, "%08x ", crc(body));
  return std::string(head, 9) + body + "\n";
}

std::vector<nlohmann::ordered_json> EventLog::replay() {
  std::lock_guard lock(mu_);
  std::vector<nlohmann::ordered_json> out;
  if (path_.empty() || !std::filesystem::exists(path_)) return out;
  const std::string data = corpus::read_file(path_);
  std::size_t pos = 0, lineno = 0;
  std::size_t good_end = 0;
  while (pos < data.size()) {
    ++lineno;
    const std::size_t nl = data.find('\n', pos);
    const bool complete = nl != std::string::npos;
    const std::string line = data.substr(pos, complete ? nl - pos : std::string::npos);
    const std::size_t next = complete ? nl + 1 : data.size();
    bool ok = complete && line.size() > 9 && line[8] == ' ';
    if (ok) {
      const std::string body = line.substr(9);
      unsigned stored = 0;
      ok = std::sscanf(line.c_str(), "%8x", &stored) == 1 && stored == crc(body);
      if (ok) {
        try {
          out.push_back(nlohmann::ordered_json::parse(body));
        } catch (const nlohmann::json::exception&) {
          ok = false;
        }
      }
    }
    if (!ok) {
      if (next < data.size()) throw DataError(path_.string() + ":" + std::to_string(lineno) + ": corrupt log record");
      dropped_tail_ = 1;
      break;
    }
    good_end = next;
    pos = next;
  }
  if (dropped_tail_) {
    // Cut the torn record so later appends start on a clean line.
    std::filesystem::resize_file(path_, good_end);
  }
  return out;
}

void EventLog::append(const nlohmann::ordered_json& event) {
  const std::string line = encode(event);
  std::lock_guard lock(mu_);
  if (path_.empty()) return;
  const int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw DataError("cannot open " + path_.string() + ": " + std::strerror(errno));
  std::size_t done = 0;
  while (done < line.size()) {
    const ssize_t n = ::write(fd, line.data() + done, line.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      throw DataError("write to " + path_.string() + " failed: " + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
}

}  // namespace atsalign::annotate
