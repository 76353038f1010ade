#include "camoseg/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace camoseg::nn {

namespace {
constexpr char kMagic[8] = {'C', 'S', 'E', 'G', 'C', 'K', 'P', '1'};

template <typename T>
void write_pod(std::ofstream& f, T v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& f) {
    T v{};
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}
}  // namespace

uint64_t fnv1a64(const std::string& s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    check_input(f.good(), "cannot open checkpoint for writing: " + path);
    f.write(kMagic, sizeof(kMagic));
    write_pod<uint64_t>(f, ckpt.fingerprint);
    write_pod<uint64_t>(f, ckpt.tensors.size());
    for (const auto& [name, t] : ckpt.tensors) {
        write_pod<uint32_t>(f, static_cast<uint32_t>(name.size()));
        f.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod<uint32_t>(f, static_cast<uint32_t>(t.shape.size()));
        for (int d : t.shape) write_pod<int32_t>(f, d);
        f.write(reinterpret_cast<const char*>(t.v.data()),
                static_cast<std::streamsize>(t.v.size() * sizeof(double)));
    }
    check_input(f.good(), "checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    check_input(f.good(), "cannot open checkpoint: " + path);
    char magic[8];
    f.read(magic, sizeof(magic));
    check_input(f.good() && std::memcmp(magic, kMagic, sizeof(kMagic)) == 0,
                "not a checkpoint file: " + path);
    Checkpoint c;
    c.fingerprint = read_pod<uint64_t>(f);
    const uint64_t count = read_pod<uint64_t>(f);
    for (uint64_t i = 0; i < count; ++i) {
        const uint32_t nl = read_pod<uint32_t>(f);
        std::string name(nl, '\0');
        f.read(name.data(), nl);
        const uint32_t rank = read_pod<uint32_t>(f);
        std::vector<int> shape;
        for (uint32_t d = 0; d < rank; ++d) shape.push_back(read_pod<int32_t>(f));
        Tensor t(shape);
        f.read(reinterpret_cast<char*>(t.v.data()),
               static_cast<std::streamsize>(t.v.size() * sizeof(double)));
        check_input(f.good(), "truncated checkpoint: " + path);
        c.tensors.emplace(std::move(name), std::move(t));
    }
    return c;
}

Checkpoint load_checkpoint(const std::string& path, uint64_t expected_fingerprint) {
    Checkpoint c = load_checkpoint(path);
    if (c.fingerprint != expected_fingerprint)
        throw InvalidInputError("checkpoint fingerprint mismatch: model configuration differs from the one that produced " + path);
    return c;
}

}  // namespace camoseg::nn
