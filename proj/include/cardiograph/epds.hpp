#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace cardiograph::epds {

inline constexpr std::uint32_t kFormatVersion = 1;

// IEEE CRC32 (reflected 0xEDB88320), the zlib convention.
std::uint32_t crc32(const void* data, std::size_t len);

struct Array {
  std::vector<std::uint64_t> dims;
  std::vector<double> data;
};

// A named-array container with a JSON metadata block. Array order is
// preserved so serialization is byte-stable.
struct Container {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<std::pair<std::string, Array>> arrays;

  void add(std::string name, std::vector<std::uint64_t> dims, std::vector<double> data);
  bool has(const std::string& name) const;
  const Array& at(const std::string& name) const;
};

void write_container(const Container& c, const std::string& path);
Container read_container(const std::string& path);

}  // namespace cardiograph::epds
