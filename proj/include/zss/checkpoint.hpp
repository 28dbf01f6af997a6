#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace zss {

// Binary tensor container. Layout (all little-endian):
//   magic "SIGNCKPT" (8 bytes)
//   u32 format version (currently 1)
//   u32 record count
//   per record: u32 name length, UTF-8 name, u32 rank, u64 extents,
//               payload of 32-bit floats, row-major
struct TensorRecord {
    std::string name;
    std::vector<std::uint64_t> shape;
    std::vector<float> data;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_container(const std::string& path, const std::vector<TensorRecord>& records);
std::vector<TensorRecord> read_container(const std::string& path);

// convenience: find by name, throws when absent
const TensorRecord& find_record(const std::vector<TensorRecord>& records,
                                const std::string& name);
bool has_record(const std::vector<TensorRecord>& records, const std::string& name);

} // namespace zss
