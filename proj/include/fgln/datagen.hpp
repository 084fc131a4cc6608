#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fgln/image.hpp"
#include "fgln/rng.hpp"

namespace fgln {

enum class ForgeryType { Splice, CopyMove, Removal, Authentic };
enum class RegionShape { Rectangle, Ellipse };

const char* forgery_name(ForgeryType t);
ForgeryType parse_forgery(const std::string& s);

struct SampleSpec {
    std::uint64_t seed = 0;
    int size = 64;
    ForgeryType type = ForgeryType::Splice;
    double fraction = 0.05;  // target forged-area fraction
    RegionShape shape = RegionShape::Rectangle;
};

struct Sample {
    Image image;
    Image mask;  // single channel, values exactly 0 or 1
    SampleSpec meta;
    double area_fraction = 0.0;  // achieved mask area / pixels
    // Copy-move provenance: destination pixel (x,y) came from (x+dx, y+dy).
    int cm_dx = 0, cm_dy = 0;
};

// Smooth low-frequency cosine mixture plus seeded per-pixel noise
// (std 2/255), clamped to [0,1]. Deterministic in (seed, s).
Image gen_background(std::uint64_t seed, int s);

// Applies the requested manipulation to a copy of the background. The mask
// marks exactly the modified pixels; pixels outside it are untouched.
// Achieved area stays within 20% of spec.fraction (down to the pixel floor).
Sample forge(const Image& background, const SampleSpec& spec);

struct DatasetMix {
    // Fractions must sum to 1; order: splice, copy-move, removal, authentic.
    double splice = 0.3, copy_move = 0.3, removal = 0.2, authentic = 0.2;
};

// Deterministic sequence of n samples. bucket_cap, if set, keeps every
// forged-area fraction strictly below the cap.
std::vector<Sample> make_dataset(int n, std::uint64_t seed, int size, const DatasetMix& mix,
                                 std::optional<double> bucket_cap = std::nullopt);

// Writes <root>/<split>/<idx>_img.ppm, <idx>_mask.pgm and manifest.tsv
// (idx, type, seed, area-fraction).
void write_dataset(const std::string& root, const std::string& split,
                   const std::vector<Sample>& samples);

struct ManifestRow {
    int idx;
    std::string type;
    std::uint64_t seed;
    double area_fraction;
};

std::vector<ManifestRow> read_manifest(const std::string& dir);

}  // namespace fgln
