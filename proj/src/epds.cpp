#include "cardiograph/epds.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "cardiograph/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "container layout assumes a little-endian host");

namespace cardiograph::epds {

namespace {

std::array<std::uint32_t, 256> make_crc_table() {
  std::array<std::uint32_t, 256> t{};
  for (std::uint32_t i = 0; i < 256; ++i) {
    std::uint32_t c = i;
    for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
    t[i] = c;
  }
  return t;
}

std::uint32_t crc32_update(std::uint32_t state, const void* data, std::size_t len) {
  static const std::array<std::uint32_t, 256> table = make_crc_table();
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) state = table[(state ^ p[i]) & 0xFF] ^ (state >> 8);
  return state;
}

constexpr char kMagic[4] = {'E', 'P', 'D', 'S'};

struct Writer {
  std::ofstream out;
  std::uint32_t crc = 0;

  void raw(const void* data, std::size_t len) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
    crc = crc32_update(crc, data, len);
  }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void begin_block() { crc = 0xFFFFFFFFu; }
  void end_block() {
    const std::uint32_t stored = crc ^ 0xFFFFFFFFu;
    out.write(reinterpret_cast<const char*>(&stored), 4);
  }
};

struct Reader {
  std::vector<char> bytes;
  std::size_t pos = 0;
  std::uint32_t crc = 0;
  std::size_t block_start = 0;

  void need(std::size_t n) const {
    if (n > bytes.size() - pos)
      raise(errc::TruncatedFile, "file ends at byte " + std::to_string(bytes.size()) +
                                     " but " + std::to_string(n) + " more bytes were expected at byte " +
                                     std::to_string(pos));
  }
  void raw(void* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, bytes.data() + pos, n);
    crc = crc32_update(crc, bytes.data() + pos, n);
    pos += n;
  }
  std::uint32_t u32() { std::uint32_t v; raw(&v, 4); return v; }
  std::uint64_t u64() { std::uint64_t v; raw(&v, 8); return v; }
  void begin_block() { crc = 0xFFFFFFFFu; block_start = pos; }
  void end_block() {
    const std::uint32_t computed = crc ^ 0xFFFFFFFFu;
    need(4);
    std::uint32_t stored;
    std::memcpy(&stored, bytes.data() + pos, 4);
    pos += 4;
    if (stored != computed)
      raise(errc::ChecksumMismatch, "checksum mismatch in block at byte " +
                                        std::to_string(block_start) + ": stored " +
                                        std::to_string(stored) + ", computed " +
                                        std::to_string(computed));
  }
};

}  // namespace

std::uint32_t crc32(const void* data, std::size_t len) {
  return crc32_update(0xFFFFFFFFu, data, len) ^ 0xFFFFFFFFu;
}

void Container::add(std::string name, std::vector<std::uint64_t> dims, std::vector<double> data) {
  std::uint64_t count = 1;
  for (std::uint64_t d : dims) count *= d;
  if (count != data.size())
    raise(errc::ShapeMismatch, "array '" + name + "' dims imply " + std::to_string(count) +
                                   " elements, got " + std::to_string(data.size()));
  arrays.emplace_back(std::move(name), Array{std::move(dims), std::move(data)});
}

bool Container::has(const std::string& name) const {
  for (const auto& [n, a] : arrays)
    if (n == name) return true;
  return false;
}

const Array& Container::at(const std::string& name) const {
  for (const auto& [n, a] : arrays)
    if (n == name) return a;
  raise(errc::IoError, "container has no array named '" + name + "'");
}

void write_container(const Container& c, const std::string& path) {
  Writer w;
  w.out.open(path, std::ios::binary | std::ios::trunc);
  if (!w.out) raise(errc::IoError, "cannot open '" + path + "' for writing");

  w.out.write(kMagic, 4);
  const std::uint32_t version = kFormatVersion;
  w.out.write(reinterpret_cast<const char*>(&version), 4);

  const std::string meta = c.meta.dump();
  if (meta.size() > std::numeric_limits<std::uint32_t>::max())
    raise(errc::IoError, "metadata block too large");
  w.begin_block();
  w.u32(static_cast<std::uint32_t>(meta.size()));
  w.raw(meta.data(), meta.size());
  w.end_block();

  const std::uint32_t count = static_cast<std::uint32_t>(c.arrays.size());
  w.out.write(reinterpret_cast<const char*>(&count), 4);
  for (const auto& [name, arr] : c.arrays) {
    w.begin_block();
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.raw(name.data(), name.size());
    w.u32(static_cast<std::uint32_t>(arr.dims.size()));
    for (std::uint64_t d : arr.dims) w.u64(d);
    w.raw(arr.data.data(), arr.data.size() * sizeof(double));
    w.end_block();
  }
  w.out.flush();
  if (!w.out) raise(errc::IoError, "write to '" + path + "' failed");
}

Container read_container(const std::string& path) {
  Reader r;
  {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) raise(errc::IoError, "cannot open '" + path + "' for reading");
    r.bytes.resize(static_cast<std::size_t>(in.tellg()));
    in.seekg(0);
    in.read(r.bytes.data(), static_cast<std::streamsize>(r.bytes.size()));
    if (!in) raise(errc::IoError, "read from '" + path + "' failed");
  }

  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    raise(errc::BadMagic, "'" + path + "' is not an EPDS container");
  const std::uint32_t version = r.u32();
  if (version != kFormatVersion)
    raise(errc::VersionMismatch, "container version " + std::to_string(version) +
                                     ", this build reads version " + std::to_string(kFormatVersion));

  Container c;
  r.begin_block();
  const std::uint32_t meta_len = r.u32();
  r.need(meta_len);
  std::string meta(r.bytes.data() + r.pos, meta_len);
  r.crc = crc32_update(r.crc, meta.data(), meta.size());
  r.pos += meta_len;
  r.end_block();
  try {
    c.meta = nlohmann::json::parse(meta);
  } catch (const nlohmann::json::exception& e) {
    raise(errc::IoError, std::string("metadata block is not valid JSON: ") + e.what());
  }

  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    r.begin_block();
    const std::uint32_t name_len = r.u32();
    r.need(name_len);
    std::string name(r.bytes.data() + r.pos, name_len);
    r.crc = crc32_update(r.crc, name.data(), name.size());
    r.pos += name_len;

    Array arr;
    const std::uint32_t rank = r.u32();
    r.need(std::size_t{8} * rank);
    arr.dims.resize(rank);
    std::uint64_t elems = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      arr.dims[k] = r.u64();
      if (arr.dims[k] != 0 && elems > std::numeric_limits<std::uint64_t>::max() / arr.dims[k])
        raise(errc::TruncatedFile, "array '" + name + "' dims overflow");
      elems *= arr.dims[k];
    }
    if (elems > std::numeric_limits<std::uint64_t>::max() / sizeof(double))
      raise(errc::TruncatedFile, "array '" + name + "' dims overflow");
    r.need(elems * sizeof(double));
    arr.data.resize(elems);
    r.raw(arr.data.data(), elems * sizeof(double));
    r.end_block();
    c.arrays.emplace_back(std::move(name), std::move(arr));
  }
  if (r.pos != r.bytes.size())
    raise(errc::IoError, std::to_string(r.bytes.size() - r.pos) +
                             " unexpected trailing bytes at byte " + std::to_string(r.pos));
  return c;
}

}  // namespace cardiograph::epds
