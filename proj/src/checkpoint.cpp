#include "zss/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace zss {

namespace {

constexpr char kMagic[8] = {'S', 'I', 'G', 'N', 'C', 'K', 'P', 'T'};

template <class T>
void put(std::ofstream& out, T v) {
    // little-endian hosts only; asserted at build time
    static_assert(sizeof(T) <= 8);
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    return v;
}

} // namespace

void write_container(const std::string& path, const std::vector<TensorRecord>& records) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint: cannot open for write: " + path);
    out.write(kMagic, 8);
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(records.size()));
    for (const auto& r : records) {
        std::uint64_t n = 1;
        for (auto e : r.shape) n *= e;
        if (n != r.data.size())
            throw std::runtime_error("checkpoint: record '" + r.name + "' shape/data mismatch");
        put<std::uint32_t>(out, static_cast<std::uint32_t>(r.name.size()));
        out.write(r.name.data(), static_cast<std::streamsize>(r.name.size()));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(r.shape.size()));
        for (auto e : r.shape) put<std::uint64_t>(out, e);
        out.write(reinterpret_cast<const char*>(r.data.data()),
                  static_cast<std::streamsize>(r.data.size() * sizeof(float)));
    }
    if (!out) throw std::runtime_error("checkpoint: write failed: " + path);
}

std::vector<TensorRecord> read_container(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    std::uint32_t version = get<std::uint32_t>(in);
    if (version != kCheckpointVersion)
        throw std::runtime_error("checkpoint: incompatible version " + std::to_string(version));
    std::uint32_t count = get<std::uint32_t>(in);
    std::vector<TensorRecord> records(count);
    for (auto& r : records) {
        std::uint32_t name_len = get<std::uint32_t>(in);
        r.name.resize(name_len);
        in.read(r.name.data(), name_len);
        std::uint32_t rank = get<std::uint32_t>(in);
        r.shape.resize(rank);
        std::uint64_t n = 1;
        for (auto& e : r.shape) {
            e = get<std::uint64_t>(in);
            n *= e;
        }
        r.data.resize(n);
        in.read(reinterpret_cast<char*>(r.data.data()),
                static_cast<std::streamsize>(n * sizeof(float)));
        if (!in) throw std::runtime_error("checkpoint: truncated record '" + r.name + "'");
    }
    return records;
}

const TensorRecord& find_record(const std::vector<TensorRecord>& records,
                                const std::string& name) {
    for (const auto& r : records)
        if (r.name == name) return r;
    throw std::runtime_error("checkpoint: missing record '" + name + "'");
}

bool has_record(const std::vector<TensorRecord>& records, const std::string& name) {
    for (const auto& r : records)
        if (r.name == name) return true;
    return false;
}

} // namespace zss
