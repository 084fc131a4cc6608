#pragma once

// Independent brute-force reference implementations used to cross-check the
// library. Deliberately written in the most literal style possible — nested
// loops and direct formulas — and kept free of any library internals beyond
// the Tensor container.

#include <algorithm>
#include <cmath>
#include <vector>

#include "fgln/tensor.hpp"

namespace oracle {

using fgln::Tensor;

// Six nested loops, nothing clever.
inline Tensor conv2d(const Tensor& x, const Tensor& w, const std::vector<double>& b, int stride,
                     int pad, int dil) {
    int n = x.shape[0], cin = x.shape[1], h = x.shape[2], ww = x.shape[3];
    int cout = w.shape[0], k = w.shape[2];
    int oh = (h + 2 * pad - dil * (k - 1) - 1) / stride + 1;
    int ow = (ww + 2 * pad - dil * (k - 1) - 1) / stride + 1;
    Tensor y({n, cout, oh, ow});
    for (int ni = 0; ni < n; ++ni)
        for (int co = 0; co < cout; ++co)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    double acc = b[static_cast<size_t>(co)];
                    for (int ci = 0; ci < cin; ++ci)
                        for (int ky = 0; ky < k; ++ky)
                            for (int kx = 0; kx < k; ++kx) {
                                int iy = oy * stride - pad + ky * dil;
                                int ix = ox * stride - pad + kx * dil;
                                if (iy < 0 || ix < 0 || iy >= h || ix >= ww) continue;
                                acc += x.at4(ni, ci, iy, ix) * w.at4(co, ci, ky, kx);
                            }
                    y.at4(ni, co, oy, ox) = acc;
                }
    return y;
}

inline std::vector<std::vector<double>> matmul(const std::vector<std::vector<double>>& a,
                                               const std::vector<std::vector<double>>& b) {
    size_t r = a.size(), k = b.size(), s = b[0].size();
    std::vector<std::vector<double>> c(r, std::vector<double>(s, 0.0));
    for (size_t i = 0; i < r; ++i)
        for (size_t j = 0; j < s; ++j)
            for (size_t t = 0; t < k; ++t) c[i][j] += a[i][t] * b[t][j];
    return c;
}

inline std::vector<double> softmax(const std::vector<double>& v) {
    std::vector<double> out(v.size());
    double sum = 0.0;
    for (size_t i = 0; i < v.size(); ++i) sum += (out[i] = std::exp(v[i]));
    for (auto& o : out) o /= sum;
    return out;
}

// Direct Adam recurrence on one scalar.
struct AdamScalar {
    double m = 0.0, v = 0.0;
    long t = 0;
    double step(double p, double g, double lr, double b1 = 0.9, double b2 = 0.999,
                double eps = 1e-8) {
        ++t;
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        double mh = m / (1 - std::pow(b1, t));
        double vh = v / (1 - std::pow(b2, t));
        return p - lr * mh / (std::sqrt(vh) + eps);
    }
};

inline double bce(const std::vector<double>& pred, const std::vector<double>& gt) {
    double sum = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        double p = std::clamp(pred[i], 1e-7, 1.0 - 1e-7);
        sum += -(gt[i] * std::log(p) + (1.0 - gt[i]) * std::log(1.0 - p));
    }
    return sum / static_cast<double>(pred.size());
}

// Fraction of (positive, negative) pairs ranked correctly, ties counting 1/2.
inline double auc_pairs(const std::vector<double>& pred, const std::vector<double>& gt) {
    double wins = 0.0;
    long pairs = 0;
    for (size_t i = 0; i < pred.size(); ++i) {
        if (gt[i] <= 0.5) continue;
        for (size_t j = 0; j < pred.size(); ++j) {
            if (gt[j] > 0.5) continue;
            ++pairs;
            if (pred[i] > pred[j]) wins += 1.0;
            else if (pred[i] == pred[j]) wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

// Per-pixel windowed mean with replicated borders, recomputed per window.
inline double box_at(const std::vector<std::vector<double>>& img, int x, int y, int r) {
    int h = static_cast<int>(img.size()), w = static_cast<int>(img[0].size());
    double sum = 0.0;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
            int yy = std::clamp(y + dy, 0, h - 1), xx = std::clamp(x + dx, 0, w - 1);
            sum += img[static_cast<size_t>(yy)][static_cast<size_t>(xx)];
        }
    return sum / ((2.0 * r + 1) * (2.0 * r + 1));
}

// Literal guided-filter derivation, one channel.
inline std::vector<std::vector<double>> guided_filter(
    const std::vector<std::vector<double>>& img, int r, double eps) {
    int h = static_cast<int>(img.size()), w = static_cast<int>(img[0].size());
    std::vector<std::vector<double>> a(static_cast<size_t>(h), std::vector<double>(w)), b = a,
                                     q = a, sq = a;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            sq[static_cast<size_t>(y)][static_cast<size_t>(x)] =
                img[static_cast<size_t>(y)][static_cast<size_t>(x)] *
                img[static_cast<size_t>(y)][static_cast<size_t>(x)];
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double mu = box_at(img, x, y, r);
            double var = box_at(sq, x, y, r) - mu * mu;
            a[static_cast<size_t>(y)][static_cast<size_t>(x)] = var / (var + eps);
            b[static_cast<size_t>(y)][static_cast<size_t>(x)] =
                (1.0 - var / (var + eps)) * mu;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            q[static_cast<size_t>(y)][static_cast<size_t>(x)] =
                box_at(a, x, y, r) * img[static_cast<size_t>(y)][static_cast<size_t>(x)] +
                box_at(b, x, y, r);
    return q;
}

}  // namespace oracle
