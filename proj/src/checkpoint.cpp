#include "mgtn/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace mgtn {

namespace {

constexpr char kMagic[8] = {'M', 'G', 'T', 'N', 'C', 'K', 'P', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("checkpoint: truncated file");
    return v;
}

} // namespace

void save_checkpoint(const std::string& path, const std::vector<NamedArray>& arrays) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("checkpoint: cannot write " + path);
    os.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(os, kVersion);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(arrays.size()));
    for (const auto& a : arrays) {
        put<std::uint32_t>(os, static_cast<std::uint32_t>(a.name.size()));
        os.write(a.name.data(), static_cast<std::streamsize>(a.name.size()));
        put<std::uint32_t>(os, static_cast<std::uint32_t>(a.value.order()));
        for (std::size_t d : a.value.shape()) put<std::uint64_t>(os, d);
        os.write(reinterpret_cast<const char*>(a.value.data().data()),
                 static_cast<std::streamsize>(a.value.size() * sizeof(double)));
    }
    if (!os) throw std::runtime_error("checkpoint: write failure on " + path);
}

void save_checkpoint(const std::string& path, const AgentParams& params) {
    std::vector<NamedArray> arrays;
    for (const auto& [name, tensor] : params.arrays()) {
        arrays.push_back({name, *tensor});
    }
    save_checkpoint(path, arrays);
}

std::vector<NamedArray> load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("checkpoint: bad magic in " + path);
    }
    const auto version = get<std::uint32_t>(is);
    if (version != kVersion) {
        throw std::runtime_error("checkpoint: unsupported version " +
                                 std::to_string(version));
    }
    const auto count = get<std::uint32_t>(is);
    std::vector<NamedArray> arrays;
    arrays.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = get<std::uint32_t>(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        const auto order = get<std::uint32_t>(is);
        DenseTensor::shape_type shape(order);
        for (auto& d : shape) d = static_cast<std::size_t>(get<std::uint64_t>(is));
        std::vector<double> data(shape_product(shape));
        is.read(reinterpret_cast<char*>(data.data()),
                static_cast<std::streamsize>(data.size() * sizeof(double)));
        if (!is) throw std::runtime_error("checkpoint: truncated array " + name);
        arrays.push_back({std::move(name), DenseTensor(std::move(shape), std::move(data))});
    }
    return arrays;
}

void load_checkpoint_into(const std::string& path, AgentParams& params) {
    const auto arrays = load_checkpoint(path);
    for (auto& [name, tensor] : params.arrays()) {
        const NamedArray* found = nullptr;
        for (const auto& a : arrays) {
            if (a.name == name) {
                found = &a;
                break;
            }
        }
        if (!found) {
            throw std::runtime_error("checkpoint: missing array " + name);
        }
        if (found->value.shape() != tensor->shape()) {
            throw std::runtime_error("checkpoint: shape mismatch on array " + name);
        }
        *tensor = found->value;
    }
}

} // namespace mgtn
