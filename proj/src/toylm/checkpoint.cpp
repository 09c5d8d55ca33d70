#include "atsalign/toylm/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>

#include "atsalign/corpus.hpp"
#include "atsalign/errors.hpp"

namespace atsalign::toylm {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'A', 'T', 'S', 'L', 'M', 'C', 'K', '1'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& b, std::size_t end) : b_(b), end_(end) {}
  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, b_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (end_ - pos_ < n) throw DataError("checkpoint truncated");
  }
  const std::string& b_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(const char* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (n > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data), chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::string checkpoint_id(const std::string& prefix, std::size_t instances) {
  return prefix + "-" + std::to_string(instances);
}

std::optional<std::size_t> checkpoint_instances(const std::string& id) {
  const auto dash = id.rfind('-');
  if (dash == std::string::npos || dash + 1 == id.size()) return std::nullopt;
  std::size_t v = 0;
  for (std::size_t i = dash + 1; i < id.size(); ++i) {
    if (id[i] < '0' || id[i] > '9') return std::nullopt;
    v = v * 10 + static_cast<std::size_t>(id[i] - '0');
  }
  return v;
}

std::string serialize_checkpoint(const PolicyModel& model) {
  std::string out(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kVersion);
  const auto& d = model.dims();
  put<std::uint64_t>(out, d.embed);
  put<std::uint64_t>(out, d.hidden);
  put<std::uint64_t>(out, d.local_context);
  put<std::uint64_t>(out, d.context_window);
  put<std::uint64_t>(out, model.vocab().size());
  for (const auto& t : model.vocab().tokens()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.size()));
    out += t;
  }
  put<std::uint64_t>(out, model.params().size());
  out.append(reinterpret_cast<const char*>(model.params().data()), model.params().size() * sizeof(double));
  put<std::uint32_t>(out, crc_of(out.data(), out.size()));
  return out;
}

void save_checkpoint(const PolicyModel& model, const std::filesystem::path& path) {
  corpus::write_file(path, serialize_checkpoint(model));
}

PolicyModel deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof kMagic + 8 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw DataError("not a toy-model checkpoint");
  const std::size_t body = bytes.size() - 4;
  std::uint32_t stored;
  std::memcpy(&stored, bytes.data() + body, 4);
  if (stored != crc_of(bytes.data(), body)) throw DataError("checkpoint checksum mismatch");
  Reader r(bytes, body);
  r.bytes(sizeof kMagic);
  if (r.get<std::uint32_t>() != kVersion) throw DataError("unsupported checkpoint version");
  Dims d;
  d.embed = r.get<std::uint64_t>();
  d.hidden = r.get<std::uint64_t>();
  d.local_context = r.get<std::uint64_t>();
  d.context_window = r.get<std::uint64_t>();
  const auto nv = r.get<std::uint64_t>();
  if (nv > body) throw DataError("checkpoint vocabulary count is implausible");
  std::vector<std::string> tokens;
  tokens.reserve(nv);
  for (std::uint64_t i = 0; i < nv; ++i) tokens.push_back(r.bytes(r.get<std::uint32_t>()));
  PolicyModel m(Vocabulary(std::move(tokens)), d);
  const auto np = r.get<std::uint64_t>();
  if (np != m.params().size())
    throw DataError("checkpoint holds " + std::to_string(np) + " parameters but its shape needs " +
                    std::to_string(m.params().size()));
  const std::string raw = r.bytes(np * sizeof(double));
  std::memcpy(m.params().data(), raw.data(), raw.size());
  if (r.pos() != body) throw DataError("trailing bytes in checkpoint");
  return m;
}

PolicyModel load_checkpoint(const std::filesystem::path& path) { return deserialize_checkpoint(corpus::read_file(path)); }

PolicyModel load_checkpoint(const std::filesystem::path& path, const Dims& expected) {
  auto m = load_checkpoint(path);
  if (!(m.dims() == expected)) throw DataError("checkpoint " + path.string() + " has unexpected dimensions");
  return m;
}

}  // namespace atsalign::toylm
