#pragma once

#include <string>
#include <vector>

#include "fgln/errors.hpp"
#include "fgln/tensor.hpp"

namespace fgln {

// Row-major, channel-interleaved image with values in [0,1].
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;  // 1 or 3
    std::vector<double> data;

    Image() = default;
    Image(int w, int h, int c) : width(w), height(h), channels(c) {
        if (w < 1 || h < 1 || (c != 1 && c != 3))
            throw ContractError("image extents must be positive with 1 or 3 channels");
        data.assign(static_cast<size_t>(w) * h * c, 0.0);
    }

    double& at(int x, int y, int c) {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    double at(int x, int y, int c) const {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    void clamp01() {
        for (auto& v : data) v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    }
};

// Outputs of the guided-noise extractor.
struct GuidedNoiseResult {
    Image content;       // guided-filter estimate of the image content
    Image residual;      // |I - content|
    Image edges;         // Sobel magnitude, replicated to input channel count
    Image guided_noise;  // clamp(residual + edges)
};

// Binary PGM (P5) / PPM (P6), maxval 255. Parse errors name the byte offset.
Image read_image(const std::string& path);
void write_image(const Image& img, const std::string& path);

// Windowed mean over (2r+1)^2 with edge-replicated borders, per channel.
// Running-sum implementation, O(1) per pixel.
Image box_filter(const Image& img, int r);

// Self-guided edge-preserving filter: per channel a = var/(var+eps),
// b = (1-a)*mean, output box(a)*I + box(b).
Image guided_filter(const Image& img, const Image& guide, int r, double eps);

// Gradient magnitude sqrt(Gx^2+Gy^2)/(8*sqrt(2)), single channel output.
// 3-channel input is converted to luminance (0.299/0.587/0.114) first.
Image sobel(const Image& img);

GuidedNoiseResult guided_noise(const Image& img, int r, double eps);

// Channel-planar 1xCxHxW tensor; exact round-trip with from_tensor.
Tensor to_tensor(const Image& img);
Image from_tensor(const Tensor& t);

}  // namespace fgln
