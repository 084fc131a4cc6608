#include "fgln/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fgln {

namespace fs = std::filesystem;

const char* forgery_name(ForgeryType t) {
    switch (t) {
        case ForgeryType::Splice: return "splice";
        case ForgeryType::CopyMove: return "copy-move";
        case ForgeryType::Removal: return "removal";
        case ForgeryType::Authentic: return "authentic";
    }
    return "?";
}

ForgeryType parse_forgery(const std::string& s) {
    if (s == "splice") return ForgeryType::Splice;
    if (s == "copy-move") return ForgeryType::CopyMove;
    if (s == "removal") return ForgeryType::Removal;
    if (s == "authentic") return ForgeryType::Authentic;
    throw ParseError("unknown forgery type: " + s);
}

Image gen_background(std::uint64_t seed, int s) {
    if (s < 4) throw ContractError("background size must be >= 4");
    Rng rng(seed);
    Image img(s, s, 3);
    // Per-channel mixture of a few low-frequency cosine plaids around a random
    // mid-tone base, then faint sensor-like noise.
    for (int c = 0; c < 3; ++c) {
        double base = rng.uniform(0.3, 0.7);
        struct Wave { double fx, fy, phase, amp; };
        std::vector<Wave> waves;
        for (int k = 0; k < 3; ++k)
            waves.push_back({rng.uniform(0.5, 3.0), rng.uniform(0.5, 3.0),
                             rng.uniform(0.0, 6.2831853), rng.uniform(0.03, 0.12)});
        for (int y = 0; y < s; ++y)
            for (int x = 0; x < s; ++x) {
                double v = base;
                for (const auto& w : waves)
                    v += w.amp * std::cos(6.2831853 * (w.fx * x + w.fy * y) / s + w.phase);
                img.at(x, y, c) = v;
            }
    }
    const double noise_std = 2.0 / 255.0;
    for (auto& v : img.data) v += noise_std * rng.normal();
    img.clamp01();
    return img;
}

namespace {

// Region geometry: top-left anchor plus either full-extent rectangle or an
// inscribed ellipse. paint() visits member pixels.
struct Region {
    int x0, y0, w, h;
    RegionShape shape;

    template <typename F>
    void paint(F&& f) const {
        if (shape == RegionShape::Rectangle) {
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) f(x0 + x, y0 + y);
        } else {
            double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
            double ax = w / 2.0, ay = h / 2.0;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    double dx = (x - cx) / ax, dy = (y - cy) / ay;
                    if (dx * dx + dy * dy <= 1.0) f(x0 + x, y0 + y);
                }
        }
    }

    int area() const {
        int n = 0;
        paint([&](int, int) { ++n; });
        return n;
    }
};

// Picks extents whose painted pixel count lands within 10% of the target
// (or as close as the 1-pixel discretization floor allows).
Region choose_region(int s, double fraction, RegionShape shape, Rng& rng) {
    double target = fraction * s * s;
    if (target < 1.0) throw ContractError("region fraction below the 1-pixel floor");
    double aspect = rng.uniform(0.6, 1.7);
    Region best{0, 0, 1, 1, shape};
    double best_err = 1e18;
    for (double scale = 0.7; scale <= 1.45; scale += 0.016) {
        double a = target * scale;
        if (shape == RegionShape::Ellipse) a *= 4.0 / 3.14159265358979;  // bounding-box area
        int w = std::clamp(static_cast<int>(std::lround(std::sqrt(a * aspect))), 1, s - 1);
        int h = std::clamp(static_cast<int>(std::lround(a / w)), 1, s - 1);
        Region r{0, 0, w, h, shape};
        double err = std::abs(r.area() - target);
        if (err < best_err) {
            best_err = err;
            best = r;
        }
    }
    best.x0 = rng.uniform_int(0, s - best.w);
    best.y0 = rng.uniform_int(0, s - best.h);
    return best;
}

void inpaint_region(Image& img, const Region& r, int iters) {
    std::vector<std::pair<int, int>> cells;
    r.paint([&](int x, int y) { cells.emplace_back(x, y); });
    // Seed the hole with the image mean, then relax toward the 8-neighbor
    // average; pixels outside the hole act as fixed boundary conditions.
    for (int c = 0; c < img.channels; ++c) {
        double mean = 0;
        for (const auto& v : img.data) mean += v;
        mean /= static_cast<double>(img.data.size());
        for (auto [x, y] : cells) img.at(x, y, c) = mean;
        for (int it = 0; it < iters; ++it) {
            for (auto [x, y] : cells) {
                double sum = 0;
                int cnt = 0;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dx == 0 && dy == 0) continue;
                        int nx = x + dx, ny = y + dy;
                        if (nx < 0 || ny < 0 || nx >= img.width || ny >= img.height) continue;
                        sum += img.at(nx, ny, c);
                        ++cnt;
                    }
                img.at(x, y, c) = sum / cnt;
            }
        }
    }
}

}  // namespace

Sample forge(const Image& background, const SampleSpec& spec) {
    if (background.width != spec.size || background.height != spec.size)
        throw ContractError("background size does not match spec");
    Sample out;
    out.image = background;
    out.mask = Image(spec.size, spec.size, 1);
    out.meta = spec;
    if (spec.type == ForgeryType::Authentic) return out;

    Rng rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
    Region r = choose_region(spec.size, spec.fraction, spec.shape, rng);

    switch (spec.type) {
        case ForgeryType::Splice: {
            // Donor from an unrelated background with its own noise level, so
            // pasted content carries different statistics than the host.
            Image donor = gen_background(rng.next_u64(), spec.size);
            double extra = rng.uniform(2.0, 8.0) / 255.0;
            Rng noise_rng(rng.next_u64());
            r.paint([&](int x, int y) {
                for (int c = 0; c < 3; ++c) {
                    double v = donor.at(x, y, c) + extra * noise_rng.normal();
                    out.image.at(x, y, c) = std::clamp(v, 0.0, 1.0);
                }
                out.mask.at(x, y, 0) = 1.0;
            });
            break;
        }
        case ForgeryType::CopyMove: {
            // Seeded translation keeping the source inside the frame; the
            // destination region is what the mask records.
            int sx = rng.uniform_int(0, spec.size - r.w);
            int sy = rng.uniform_int(0, spec.size - r.h);
            for (int tries = 0; tries < 32 && std::abs(sx - r.x0) < r.w &&
                                std::abs(sy - r.y0) < r.h; ++tries) {
                sx = rng.uniform_int(0, spec.size - r.w);
                sy = rng.uniform_int(0, spec.size - r.h);
            }
            out.cm_dx = sx - r.x0;
            out.cm_dy = sy - r.y0;
            r.paint([&](int x, int y) {
                for (int c = 0; c < 3; ++c)
                    out.image.at(x, y, c) = background.at(x + out.cm_dx, y + out.cm_dy, c);
                out.mask.at(x, y, 0) = 1.0;
            });
            break;
        }
        case ForgeryType::Removal: {
            inpaint_region(out.image, r, 50);
            r.paint([&](int x, int y) { out.mask.at(x, y, 0) = 1.0; });
            break;
        }
        case ForgeryType::Authentic: break;
    }
    double area = 0;
    for (double v : out.mask.data) area += v;
    out.area_fraction = area / (static_cast<double>(spec.size) * spec.size);
    return out;
}

std::vector<Sample> make_dataset(int n, std::uint64_t seed, int size, const DatasetMix& mix,
                                 std::optional<double> bucket_cap) {
    double sum = mix.splice + mix.copy_move + mix.removal + mix.authentic;
    if (std::abs(sum - 1.0) > 1e-9) throw ContractError("dataset mix fractions must sum to 1");
    if (bucket_cap && *bucket_cap * size * size < 1.0)
        throw ContractError("bucket cap below the 1-pixel floor");

    // Deterministic partition: type of sample i from cumulative boundaries.
    auto type_of = [&](int i) {
        double u = (i + 0.5) / n;
        if (u < mix.splice) return ForgeryType::Splice;
        if (u < mix.splice + mix.copy_move) return ForgeryType::CopyMove;
        if (u < mix.splice + mix.copy_move + mix.removal) return ForgeryType::Removal;
        return ForgeryType::Authentic;
    };

    Rng master(seed);
    std::vector<Sample> out;
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        std::uint64_t sseed = master.next_u64();
        Rng srng(sseed);
        SampleSpec spec;
        spec.seed = sseed;
        spec.size = size;
        spec.type = type_of(i);
        spec.shape = srng.uniform() < 0.5 ? RegionShape::Rectangle : RegionShape::Ellipse;
        double lo = std::max(0.005, 2.0 / (static_cast<double>(size) * size));
        double hi = bucket_cap ? *bucket_cap / 1.3 : 0.20;
        if (hi <= lo) hi = bucket_cap ? *bucket_cap : lo * 1.5;  // tiny-bucket floor
        spec.fraction = srng.uniform(lo, hi);

        Image bg = gen_background(srng.next_u64(), size);
        Sample s = forge(bg, spec);
        if (bucket_cap && s.area_fraction >= *bucket_cap && spec.type != ForgeryType::Authentic) {
            // Discretization pushed the area over the cap: shrink and redo.
            for (int t = 0; t < 16 && s.area_fraction >= *bucket_cap; ++t) {
                spec.fraction *= 0.8;
                if (spec.fraction * size * size < 1.0) break;
                s = forge(bg, spec);
            }
        }
        out.push_back(std::move(s));
    }
    return out;
}

void write_dataset(const std::string& root, const std::string& split,
                   const std::vector<Sample>& samples) {
    fs::path dir = fs::path(root) / split;
    fs::create_directories(dir);
    std::ostringstream manifest;
    manifest << "idx\ttype\tseed\tarea_fraction\n";
    for (size_t i = 0; i < samples.size(); ++i) {
        const Sample& s = samples[i];
        write_image(s.image, (dir / (std::to_string(i) + "_img.ppm")).string());
        Image mask_img = s.mask;
        // PGM stores 0/255; the tensor loader rebinarizes at 0.5.
        for (auto& v : mask_img.data) v = v > 0.5 ? 1.0 : 0.0;
        write_image(mask_img, (dir / (std::to_string(i) + "_mask.pgm")).string());
        char frac[32];
        std::snprintf(frac, sizeof frac, "%.6f", s.area_fraction);
        manifest << i << '\t' << forgery_name(s.meta.type) << '\t' << s.meta.seed << '\t' << frac
                 << '\n';
    }
    std::ofstream f(dir / "manifest.tsv", std::ios::binary);
    if (!f) throw ContractError("cannot write manifest in " + dir.string());
    f << manifest.str();
}

std::vector<ManifestRow> read_manifest(const std::string& dir) {
    std::ifstream f(fs::path(dir) / "manifest.tsv");
    if (!f) throw ParseError("missing manifest.tsv in " + dir);
    std::vector<ManifestRow> rows;
    std::string line;
    std::getline(f, line);  // header
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        ManifestRow r;
        ss >> r.idx >> r.type >> r.seed >> r.area_fraction;
        if (!ss) throw ParseError("malformed manifest row: " + line);
        rows.push_back(r);
    }
    return rows;
}

}  // namespace fgln
