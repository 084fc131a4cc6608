#pragma once

#include <cstdint>
#include <string>

#include "fgln/image.hpp"

namespace fgln {

enum class DistortKind { Resize, Blur, Noise, Jpeg };

// Post-processing distortion: resize factor in (0,1], odd blur kernel k >= 1,
// noise sigma in 8-bit units >= 0, jpeg quality in [1,100].
struct Distortion {
    DistortKind kind = DistortKind::Resize;
    double parameter = 1.0;

    void validate() const;
    // "resize:0.78", "blur:15", "noise:15", "jpeg:50"
    static Distortion parse(const std::string& spec);
    std::string str() const;
};

// Dimensions are always preserved: resize goes down and back up so masks stay
// aligned. Deterministic given (image, distortion, seed); only Noise uses the
// seed.
Image distort(const Image& img, const Distortion& d, std::uint64_t seed);

// Bilinear resampling to an arbitrary size (align-corners=false).
Image resize_bilinear(const Image& img, int out_w, int out_h);

}  // namespace fgln
