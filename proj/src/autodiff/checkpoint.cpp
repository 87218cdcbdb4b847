#include "gesturelab/autodiff/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "gesturelab/core/error.hpp"

namespace gesturelab::autodiff {

namespace {

void write_u32(std::ofstream& f, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    f.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ofstream& f, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    f.write(reinterpret_cast<const char*>(b), 8);
}

void write_f64(std::ofstream& f, double x) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, 8);
    write_u64(f, bits);
}

std::uint32_t read_u32(std::ifstream& f, const char* what) {
    unsigned char b[4];
    f.read(reinterpret_cast<char*>(b), 4);
    if (!f) throw ParseError(std::string("checkpoint: truncated ") + what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint64_t read_u64(std::ifstream& f, const char* what) {
    unsigned char b[8];
    f.read(reinterpret_cast<char*>(b), 8);
    if (!f) throw ParseError(std::string("checkpoint: truncated ") + what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

double read_f64(std::ifstream& f, const char* what) {
    const std::uint64_t bits = read_u64(f, what);
    double x;
    std::memcpy(&x, &bits, 8);
    return x;
}

} // namespace

void save_checkpoint(const std::string& path, const ParameterStore& store) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open for writing: " + path);
    f.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    write_u32(f, kCheckpointVersion);
    write_u32(f, static_cast<std::uint32_t>(store.count()));
    for (std::size_t i = 0; i < store.count(); ++i) {
        const auto& e = store.entry(i);
        write_u32(f, static_cast<std::uint32_t>(e.name.size()));
        f.write(e.name.data(), static_cast<long>(e.name.size()));
        write_u32(f, static_cast<std::uint32_t>(e.value.rank()));
        for (std::size_t d : e.value.shape) write_u64(f, d);
        for (double x : e.value.v) write_f64(f, x);
    }
    if (!f) throw Error("write failed: " + path);
}

ParameterStore load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open: " + path);
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, kCheckpointMagic, 8) != 0)
        throw ParseError("checkpoint: bad magic in " + path);
    const std::uint32_t version = read_u32(f, "version");
    if (version != kCheckpointVersion)
        throw ParseError("checkpoint: unsupported version " + std::to_string(version) +
                         " in " + path);
    const std::uint32_t count = read_u32(f, "entry count");
    ParameterStore store;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = read_u32(f, "name length");
        std::string name(name_len, '\0');
        f.read(name.data(), name_len);
        if (!f) throw ParseError("checkpoint: truncated name");
        const std::uint32_t rank = read_u32(f, "rank");
        std::vector<std::size_t> shape(rank);
        std::size_t n = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            shape[d] = static_cast<std::size_t>(read_u64(f, "dimension"));
            n *= shape[d];
        }
        TensorData tensor = TensorData::zeros(shape);
        for (std::size_t j = 0; j < n; ++j) tensor.v[j] = read_f64(f, "data");
        store.add(name, std::move(tensor));
    }
    return store;
}

} // namespace gesturelab::autodiff
