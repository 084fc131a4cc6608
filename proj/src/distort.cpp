#include "fgln/distort.hpp"

#include <algorithm>
#include <cmath>

#include "fgln/rng.hpp"

namespace fgln {

namespace {

// Standard JPEG luminance quantization table (zigzag-free, row-major).
constexpr int kLumaQuant[64] = {
    16, 11, 10, 16, 24,  40,  51,  61,   //
    12, 12, 14, 19, 26,  58,  60,  55,   //
    14, 13, 16, 24, 40,  57,  69,  56,   //
    14, 17, 22, 29, 51,  87,  80,  62,   //
    18, 22, 37, 56, 68,  109, 103, 77,   //
    24, 35, 55, 64, 81,  104, 113, 92,   //
    49, 64, 78, 87, 103, 121, 120, 101,  //
    72, 92, 95, 98, 112, 100, 103, 99};

void dct8(const double in[8][8], double out[8][8], bool inverse) {
    static double cosv[8][8];
    static bool init = false;
    if (!init) {
        for (int x = 0; x < 8; ++x)
            for (int u = 0; u < 8; ++u)
                cosv[x][u] = std::cos((2 * x + 1) * u * 3.14159265358979323846 / 16.0);
        init = true;
    }
    auto alpha = [](int u) { return u == 0 ? 1.0 / std::sqrt(2.0) : 1.0; };
    if (!inverse) {
        for (int u = 0; u < 8; ++u)
            for (int v = 0; v < 8; ++v) {
                double s = 0.0;
                for (int x = 0; x < 8; ++x)
                    for (int y = 0; y < 8; ++y) s += in[x][y] * cosv[x][u] * cosv[y][v];
                out[u][v] = 0.25 * alpha(u) * alpha(v) * s;
            }
    } else {
        for (int x = 0; x < 8; ++x)
            for (int y = 0; y < 8; ++y) {
                double s = 0.0;
                for (int u = 0; u < 8; ++u)
                    for (int v = 0; v < 8; ++v)
                        s += alpha(u) * alpha(v) * in[u][v] * cosv[x][u] * cosv[y][v];
                out[x][y] = 0.25 * s;
            }
    }
}

Image jpeg_roundtrip(const Image& img, int quality) {
    const double scale = quality < 50 ? 5000.0 / quality : 200.0 - 2.0 * quality;
    int qtab[64];
    for (int i = 0; i < 64; ++i)
        qtab[i] = std::max(1, static_cast<int>(std::floor((kLumaQuant[i] * scale + 50.0) / 100.0)));
    const int w = img.width, h = img.height;
    const int bw = (w + 7) / 8 * 8, bh = (h + 7) / 8 * 8;
    Image out(w, h, img.channels);
    for (int c = 0; c < img.channels; ++c) {
        for (int by = 0; by < bh; by += 8)
            for (int bx = 0; bx < bw; bx += 8) {
                double blk[8][8], coef[8][8];
                for (int y = 0; y < 8; ++y)
                    for (int x = 0; x < 8; ++x) {
                        const int sx = std::min(bx + x, w - 1), sy = std::min(by + y, h - 1);
                        blk[y][x] = img.at(sx, sy, c) * 255.0 - 128.0;
                    }
                dct8(blk, coef, false);
                for (int u = 0; u < 8; ++u)
                    for (int v = 0; v < 8; ++v) {
                        const double q = qtab[u * 8 + v];
                        coef[u][v] = std::round(coef[u][v] / q) * q;
                    }
                dct8(coef, blk, true);
                for (int y = 0; y < 8; ++y)
                    for (int x = 0; x < 8; ++x) {
                        const int sx = bx + x, sy = by + y;
                        if (sx < w && sy < h) out.at(sx, sy, c) = (blk[y][x] + 128.0) / 255.0;
                    }
            }
    }
    out.clamp01();
    return out;
}

Image gaussian_blur(const Image& img, int k) {
    if (k == 1) return img;
    const int r = (k - 1) / 2;
    const double sigma = 0.3 * ((k - 1) / 2.0 - 1.0) + 0.8;
    std::vector<double> kern(static_cast<size_t>(k));
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) {
        kern[static_cast<size_t>(i + r)] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        sum += kern[static_cast<size_t>(i + r)];
    }
    for (auto& v : kern) v /= sum;
    const int w = img.width, h = img.height, c_ = img.channels;
    auto cl = [](int v, int n) { return v < 0 ? 0 : (v >= n ? n - 1 : v); };
    Image tmp(w, h, c_), out(w, h, c_);
    for (int c = 0; c < c_; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double s = 0.0;
                for (int i = -r; i <= r; ++i)
                    s += kern[static_cast<size_t>(i + r)] * img.at(cl(x + i, w), y, c);
                tmp.at(x, y, c) = s;
            }
    for (int c = 0; c < c_; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double s = 0.0;
                for (int i = -r; i <= r; ++i)
                    s += kern[static_cast<size_t>(i + r)] * tmp.at(x, cl(y + i, h), c);
                out.at(x, y, c) = s;
            }
    out.clamp01();
    return out;
}

}  // namespace

Image resize_bilinear(const Image& img, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) throw ContractError("resize target extents must be >= 1");
    Image out(out_w, out_h, img.channels);
    for (int y = 0; y < out_h; ++y) {
        double sy = (y + 0.5) * static_cast<double>(img.height) / out_h - 0.5;
        int y0 = static_cast<int>(std::floor(sy));
        double fy = sy - y0;
        int y1 = std::clamp(y0 + 1, 0, img.height - 1);
        y0 = std::clamp(y0, 0, img.height - 1);
        for (int x = 0; x < out_w; ++x) {
            double sx = (x + 0.5) * static_cast<double>(img.width) / out_w - 0.5;
            int x0 = static_cast<int>(std::floor(sx));
            double fx = sx - x0;
            int x1 = std::clamp(x0 + 1, 0, img.width - 1);
            x0 = std::clamp(x0, 0, img.width - 1);
            for (int c = 0; c < img.channels; ++c)
                out.at(x, y, c) = (1 - fy) * ((1 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c)) +
                                  fy * ((1 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c));
        }
    }
    return out;
}

void Distortion::validate() const {
    switch (kind) {
        case DistortKind::Resize:
            if (!(parameter > 0.0 && parameter <= 1.0))
                throw ContractError("resize factor must be in (0,1]");
            break;
        case DistortKind::Blur: {
            const int k = static_cast<int>(parameter);
            if (k < 1 || k % 2 == 0 || parameter != k)
                throw ContractError("blur kernel size must be an odd integer >= 1");
            break;
        }
        case DistortKind::Noise:
            if (parameter < 0.0) throw ContractError("noise sigma must be >= 0");
            break;
        case DistortKind::Jpeg: {
            const int q = static_cast<int>(parameter);
            if (q < 1 || q > 100 || parameter != q)
                throw ContractError("jpeg quality must be an integer in [1,100]");
            break;
        }
    }
}

Distortion Distortion::parse(const std::string& spec) {
    auto pos = spec.find(':');
    if (pos == std::string::npos)
        throw ParseError("bad distortion spec '" + spec + "', expected kind:parameter");
    const std::string kind = spec.substr(0, pos);
    double param;
    try {
        param = std::stod(spec.substr(pos + 1));
    } catch (const std::exception&) {
        throw ParseError("bad distortion parameter in '" + spec + "'");
    }
    Distortion d;
    if (kind == "resize")
        d.kind = DistortKind::Resize;
    else if (kind == "blur")
        d.kind = DistortKind::Blur;
    else if (kind == "noise")
        d.kind = DistortKind::Noise;
    else if (kind == "jpeg")
        d.kind = DistortKind::Jpeg;
    else
        throw ParseError("unknown distortion kind '" + kind + "'");
    d.parameter = param;
    d.validate();
    return d;
}

std::string Distortion::str() const {
    const char* names[] = {"resize", "blur", "noise", "jpeg"};
    std::string p;
    if (kind == DistortKind::Resize) {
        p = std::to_string(parameter);
        p.erase(p.find_last_not_of('0') + 1);
        if (!p.empty() && p.back() == '.') p.pop_back();
    } else {
        p = std::to_string(static_cast<int>(parameter));
    }
    return std::string(names[static_cast<int>(kind)]) + ":" + p;
}

Image distort(const Image& img, const Distortion& d, std::uint64_t seed) {
    d.validate();
    switch (d.kind) {
        case DistortKind::Resize: {
            if (d.parameter == 1.0) return img;
            const int dw = std::max(1, static_cast<int>(std::round(img.width * d.parameter)));
            const int dh = std::max(1, static_cast<int>(std::round(img.height * d.parameter)));
            return resize_bilinear(resize_bilinear(img, dw, dh), img.width, img.height);
        }
        case DistortKind::Blur:
            return gaussian_blur(img, static_cast<int>(d.parameter));
        case DistortKind::Noise: {
            Image out = img;
            Rng rng(seed);
            const double sigma = d.parameter / 255.0;
            for (auto& v : out.data) v += sigma * rng.normal();
            out.clamp01();
            return out;
        }
        case DistortKind::Jpeg:
            return jpeg_roundtrip(img, static_cast<int>(d.parameter));
    }
    throw ContractError("unreachable distortion kind");
}

}  // namespace fgln
