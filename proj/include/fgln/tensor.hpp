#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fgln/errors.hpp"

namespace fgln {

// Dense row-major double array with up to 4 extents. Feature maps use the
// N,C,H,W interpretation.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        data.assign(static_cast<size_t>(numel_of(shape)), 0.0);
    }
    Tensor(std::vector<int> s, std::vector<double> d)
        : shape(std::move(s)), data(std::move(d)) {
        if (static_cast<std::int64_t>(data.size()) != numel_of(shape))
            throw DimError("tensor data length " + std::to_string(data.size()) +
                           " does not match shape " + shape_str(shape));
    }

    static std::int64_t numel_of(const std::vector<int>& s);
    static std::string shape_str(const std::vector<int>& s);

    std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
    int rank() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[static_cast<size_t>(i)]; }
    std::string shape_str() const { return shape_str(shape); }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
    bool all_finite() const;

    // 4D accessors (N,C,H,W).
    double& at4(int n, int c, int h, int w) {
        return data[((static_cast<size_t>(n) * shape[1] + c) * shape[2] + h) * shape[3] + w];
    }
    const double& at4(int n, int c, int h, int w) const {
        return data[((static_cast<size_t>(n) * shape[1] + c) * shape[2] + h) * shape[3] + w];
    }

    static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape); }
    static Tensor full(std::vector<int> s, double v) {
        Tensor t(std::move(s));
        for (auto& x : t.data) x = v;
        return t;
    }
    static Tensor scalar(double v) { return Tensor({1}, {v}); }
};

// Named parameter/buffer storage. std::map keeps iteration order stable so
// optimizer sweeps and checkpoints are deterministic.
using ParamStore = std::map<std::string, Tensor>;

// BN running statistics and similar non-trainable entries carry ".running_"
// in their name; everything else is optimized.
bool is_trainable_name(const std::string& name);

// Checkpoint format: magic "FGLN", u32 version=1, u32 entry count, then per
// entry u16 name length, name bytes, u8 rank, u32 extents, raw LE f64 data.
void save_checkpoint(const ParamStore& store, const std::string& path);
ParamStore load_checkpoint(const std::string& path);

}  // namespace fgln
