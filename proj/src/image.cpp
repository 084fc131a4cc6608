#include "fgln/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace fgln {

namespace {

// Single-whitespace-delimited PNM header token reader that tracks byte offset.
int read_pnm_int(std::istream& is, std::int64_t* offset) {
    int c = is.get();
    ++*offset;
    while (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        c = is.get();
        ++*offset;
    }
    if (c == '#') {  // comment line
        while (c != '\n' && c != EOF) {
            c = is.get();
            ++*offset;
        }
        return read_pnm_int(is, offset);
    }
    if (c < '0' || c > '9')
        throw ParseError("malformed PNM header at byte offset " + std::to_string(*offset - 1));
    int v = 0;
    while (c >= '0' && c <= '9') {
        v = v * 10 + (c - '0');
        c = is.get();
        ++*offset;
    }
    return v;
}

}  // namespace

Image read_image(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ContractError("cannot open image: " + path);
    std::int64_t off = 0;
    char m0 = static_cast<char>(is.get());
    char m1 = static_cast<char>(is.get());
    off += 2;
    int channels;
    if (m0 == 'P' && m1 == '5')
        channels = 1;
    else if (m0 == 'P' && m1 == '6')
        channels = 3;
    else
        throw ParseError("unsupported PNM magic at byte offset 0 in " + path);
    const int w = read_pnm_int(is, &off);
    const int h = read_pnm_int(is, &off);
    const int maxval = read_pnm_int(is, &off);
    if (maxval != 255)
        throw ParseError("unsupported maxval " + std::to_string(maxval) + " at byte offset " +
                         std::to_string(off) + " in " + path);
    if (w < 1 || h < 1)
        throw ParseError("invalid dimensions at byte offset " + std::to_string(off) + " in " + path);
    Image img(w, h, channels);
    std::vector<unsigned char> buf(static_cast<size_t>(w) * h * channels);
    is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<size_t>(is.gcount()) != buf.size())
        throw ParseError("truncated payload at byte offset " +
                         std::to_string(off + is.gcount()) + " in " + path);
    for (size_t i = 0; i < buf.size(); ++i) img.data[i] = buf[i] / 255.0;
    return img;
}

void write_image(const Image& img, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ContractError("cannot open image for writing: " + path);
    os << (img.channels == 1 ? "P5" : "P6") << "\n"
       << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> buf(img.data.size());
    for (size_t i = 0; i < buf.size(); ++i) {
        double v = std::round(img.data[i] * 255.0);
        buf[i] = static_cast<unsigned char>(v < 0.0 ? 0.0 : (v > 255.0 ? 255.0 : v));
    }
    os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!os) throw ContractError("image write failed: " + path);
}

Image box_filter(const Image& img, int r) {
    if (r < 1) throw ContractError("box_filter radius must be >= 1");
    const int w = img.width, h = img.height, c_ = img.channels;
    const int k = 2 * r + 1;
    const double inv = 1.0 / (static_cast<double>(k) * k);
    Image out(w, h, c_);
    // Horizontal running sum with replicated borders, then vertical.
    std::vector<double> tmp(static_cast<size_t>(w) * h);
    std::vector<double> col(static_cast<size_t>(w));
    for (int c = 0; c < c_; ++c) {
        for (int y = 0; y < h; ++y) {
            double s = 0.0;
            for (int i = -r; i <= r; ++i) s += img.at(std::clamp(i, 0, w - 1), y, c);
            tmp[static_cast<size_t>(y) * w + 0] = s;
            for (int x = 1; x < w; ++x) {
                s += img.at(std::clamp(x + r, 0, w - 1), y, c) -
                     img.at(std::clamp(x - r - 1, 0, w - 1), y, c);
                tmp[static_cast<size_t>(y) * w + x] = s;
            }
        }
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int i = -r; i <= r; ++i) s += tmp[static_cast<size_t>(std::clamp(i, 0, h - 1)) * w + x];
            col[static_cast<size_t>(x)] = s;
        }
        for (int y = 0; y < h; ++y) {
            if (y > 0)
                for (int x = 0; x < w; ++x)
                    col[static_cast<size_t>(x)] +=
                        tmp[static_cast<size_t>(std::clamp(y + r, 0, h - 1)) * w + x] -
                        tmp[static_cast<size_t>(std::clamp(y - r - 1, 0, h - 1)) * w + x];
            for (int x = 0; x < w; ++x) out.at(x, y, c) = col[static_cast<size_t>(x)] * inv;
        }
    }
    return out;
}

Image guided_filter(const Image& img, const Image& guide, int r, double eps) {
    if (img.width != guide.width || img.height != guide.height ||
        img.channels != guide.channels)
        throw DimError("guided_filter: image and guide shapes differ");
    if (r < 1 || eps <= 0.0) throw ContractError("guided_filter: r >= 1 and eps > 0 required");
    // Work on the image shifted by its first pixel. The filter is
    // shift-equivariant, so adding the reference back at the end recovers the
    // same output, and a constant image reduces to all-zero sums: its
    // variance is exactly zero and the input passes through bit-exactly.
    const double ref = img.data.empty() ? 0.0 : img.data[0];
    Image shifted = img;
    for (auto& v : shifted.data) v -= ref;
    Image sq(img.width, img.height, img.channels);
    for (size_t i = 0; i < img.data.size(); ++i) sq.data[i] = shifted.data[i] * shifted.data[i];
    Image mu = box_filter(shifted, r);
    Image mu2 = box_filter(sq, r);
    Image a(img.width, img.height, img.channels), b(img.width, img.height, img.channels);
    for (size_t i = 0; i < img.data.size(); ++i) {
        double var = mu2.data[i] - mu.data[i] * mu.data[i];
        if (var < 0.0) var = 0.0;
        a.data[i] = var / (var + eps);
        b.data[i] = (1.0 - a.data[i]) * mu.data[i];
    }
    Image ab = box_filter(a, r);
    Image bb = box_filter(b, r);
    Image out(img.width, img.height, img.channels);
    for (size_t i = 0; i < img.data.size(); ++i)
        out.data[i] = ab.data[i] * shifted.data[i] + bb.data[i] + ref;
    return out;
}

Image sobel(const Image& img) {
    const int w = img.width, h = img.height;
    std::vector<double> lum(static_cast<size_t>(w) * h);
    if (img.channels == 3) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                lum[static_cast<size_t>(y) * w + x] =
                    0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
    } else {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) lum[static_cast<size_t>(y) * w + x] = img.at(x, y, 0);
    }
    static const double kx[9] = {-1, 0, 1, -2, 0, 2, -1, 0, 1};
    static const double ky[9] = {-1, -2, -1, 0, 0, 0, 1, 2, 1};
    const double norm = 1.0 / (8.0 * std::sqrt(2.0));
    Image out(w, h, 1);
    auto cl = [](int v, int n) { return v < 0 ? 0 : (v >= n ? n - 1 : v); };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            // Taps are taken relative to the center pixel. Each kernel's
            // weights sum to zero, so this is the same sum mathematically,
            // but constant neighborhoods now cancel exactly instead of
            // leaving rounding residue.
            const double c0 = lum[static_cast<size_t>(y) * w + x];
            double gx = 0.0, gy = 0.0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const double v =
                        lum[static_cast<size_t>(cl(y + dy, h)) * w + cl(x + dx, w)] - c0;
                    gx += kx[(dy + 1) * 3 + (dx + 1)] * v;
                    gy += ky[(dy + 1) * 3 + (dx + 1)] * v;
                }
            out.at(x, y, 0) = std::sqrt(gx * gx + gy * gy) * norm;
        }
    return out;
}

GuidedNoiseResult guided_noise(const Image& img, int r, double eps) {
    if (img.channels != 3) throw ContractError("guided_noise expects a 3-channel image");
    GuidedNoiseResult res;
    res.content = guided_filter(img, img, r, eps);
    res.residual = Image(img.width, img.height, 3);
    for (size_t i = 0; i < img.data.size(); ++i)
        res.residual.data[i] = std::fabs(img.data[i] - res.content.data[i]);
    Image s = sobel(img);
    res.edges = Image(img.width, img.height, 3);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) res.edges.at(x, y, c) = s.at(x, y, 0);
    res.guided_noise = Image(img.width, img.height, 3);
    for (size_t i = 0; i < img.data.size(); ++i)
        res.guided_noise.data[i] = res.residual.data[i] + res.edges.data[i];
    res.guided_noise.clamp01();
    return res;
}

Tensor to_tensor(const Image& img) {
    Tensor t({1, img.channels, img.height, img.width});
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) t.at4(0, c, y, x) = img.at(x, y, c);
    return t;
}

Image from_tensor(const Tensor& t) {
    if (t.rank() != 4 || t.dim(0) != 1)
        throw DimError("from_tensor expects 1xCxHxW, got " + t.shape_str());
    Image img(t.dim(3), t.dim(2), t.dim(1));
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) img.at(x, y, c) = t.at4(0, c, y, x);
    return img;
}

}  // namespace fgln
