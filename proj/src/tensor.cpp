#include "fgln/tensor.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace fgln {

std::int64_t Tensor::numel_of(const std::vector<int>& s) {
    std::int64_t n = 1;
    for (int e : s) {
        if (e < 0) throw DimError("negative extent in shape " + shape_str(s));
        n *= e;
    }
    return n;
}

std::string Tensor::shape_str(const std::vector<int>& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

bool Tensor::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

bool is_trainable_name(const std::string& name) {
    return name.find(".running_") == std::string::npos;
}

namespace {

void put_u16(std::ostream& os, std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>(v >> 8)};
    os.write(reinterpret_cast<char*>(b), 2);
}

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<char*>(b), 4);
}

std::uint16_t get_u16(std::istream& is) {
    unsigned char b[2];
    is.read(reinterpret_cast<char*>(b), 2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

}  // namespace

void save_checkpoint(const ParamStore& store, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ContractError("cannot open checkpoint for writing: " + path);
    os.write("FGLN", 4);
    put_u32(os, 1);
    put_u32(os, static_cast<std::uint32_t>(store.size()));
    for (const auto& [name, t] : store) {
        put_u16(os, static_cast<std::uint16_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        os.put(static_cast<char>(t.rank()));
        for (int e : t.shape) put_u32(os, static_cast<std::uint32_t>(e));
        static_assert(sizeof(double) == 8);
        os.write(reinterpret_cast<const char*>(t.data.data()),
                 static_cast<std::streamsize>(t.data.size() * 8));
    }
    if (!os) throw ContractError("checkpoint write failed: " + path);
}

ParamStore load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParseError("cannot open checkpoint: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "FGLN", 4) != 0)
        throw ParseError("bad checkpoint magic in " + path);
    std::uint32_t version = get_u32(is);
    if (version != 1)
        throw ParseError("unsupported checkpoint version " + std::to_string(version));
    std::uint32_t count = get_u32(is);
    ParamStore store;
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint16_t nlen = get_u16(is);
        std::string name(nlen, '\0');
        is.read(name.data(), nlen);
        int rank = is.get();
        if (rank < 0 || rank > 4) throw ParseError("bad rank in checkpoint entry " + name);
        std::vector<int> shape(static_cast<size_t>(rank));
        for (int d = 0; d < rank; ++d) shape[static_cast<size_t>(d)] = static_cast<int>(get_u32(is));
        Tensor t(shape);
        is.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * 8));
        if (!is) throw ParseError("truncated checkpoint payload at entry " + name);
        store.emplace(std::move(name), std::move(t));
    }
    return store;
}

}  // namespace fgln
