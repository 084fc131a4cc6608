#include <algorithm>
#include <cmath>

#include "fgln/graph.hpp"

namespace fgln {

namespace {

void require_4d(const Tensor& t, const char* what) {
    if (t.rank() != 4)
        throw DimError(std::string(what) + " must be 4D, got " + t.shape_str());
}

// Valid output-row range [oh0, oh1) for which ih = oh*stride - pad + k_off
// lands inside [0, h).
void row_range(int h, int out_h, int stride, int pad, int k_off, int* oh0, int* oh1) {
    int lo = pad - k_off;  // need oh*stride >= lo
    *oh0 = lo <= 0 ? 0 : (lo + stride - 1) / stride;
    int t = h - 1 + pad - k_off;  // need oh*stride <= t
    *oh1 = t < 0 ? 0 : std::min(out_h, t / stride + 1);
    if (*oh0 > *oh1) *oh0 = *oh1;
}

void conv_forward(const Tensor& x, const Tensor& w, const double* bias, Tensor& y,
                  int stride, int pad, int dil) {
    const int n_ = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const int cout = w.dim(0), k = w.dim(2);
    const int oh_n = y.dim(2), ow_n = y.dim(3);
    for (int n = 0; n < n_; ++n) {
        for (int co = 0; co < cout; ++co) {
            double* yp = &y.at4(n, co, 0, 0);
            const double bv = bias ? bias[co] : 0.0;
            for (int i = 0; i < oh_n * ow_n; ++i) yp[i] = bv;
            for (int ci = 0; ci < cin; ++ci) {
                const double* xp = &x.at4(n, ci, 0, 0);
                const double* wp = &w.at4(co, ci, 0, 0);
                for (int kh = 0; kh < k; ++kh) {
                    int oh0, oh1;
                    row_range(h, oh_n, stride, pad, kh * dil, &oh0, &oh1);
                    for (int kw = 0; kw < k; ++kw) {
                        const double wv = wp[kh * k + kw];
                        int ow0, ow1;
                        row_range(wd, ow_n, stride, pad, kw * dil, &ow0, &ow1);
                        const int off = kw * dil - pad;
                        for (int oh = oh0; oh < oh1; ++oh) {
                            const double* xr = xp + (oh * stride - pad + kh * dil) * wd;
                            double* yr = yp + oh * ow_n;
                            if (stride == 1) {
                                for (int ow = ow0; ow < ow1; ++ow) yr[ow] += wv * xr[ow + off];
                            } else {
                                for (int ow = ow0; ow < ow1; ++ow)
                                    yr[ow] += wv * xr[ow * stride + off];
                            }
                        }
                    }
                }
            }
        }
    }
}

void conv_backward(const Tensor& x, const Tensor& w, const Tensor& gy, Tensor* gx,
                   Tensor* gw, double* gb, int stride, int pad, int dil) {
    const int n_ = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const int cout = w.dim(0), k = w.dim(2);
    const int oh_n = gy.dim(2), ow_n = gy.dim(3);
    for (int n = 0; n < n_; ++n) {
        for (int co = 0; co < cout; ++co) {
            const double* gyp = &gy.at4(n, co, 0, 0);
            if (gb) {
                double acc = 0.0;
                for (int i = 0; i < oh_n * ow_n; ++i) acc += gyp[i];
                gb[co] += acc;
            }
            for (int ci = 0; ci < cin; ++ci) {
                const double* xp = &x.at4(n, ci, 0, 0);
                const double* wp = &w.at4(co, ci, 0, 0);
                double* gxp = gx ? &gx->at4(n, ci, 0, 0) : nullptr;
                double* gwp = gw ? &gw->at4(co, ci, 0, 0) : nullptr;
                for (int kh = 0; kh < k; ++kh) {
                    int oh0, oh1;
                    row_range(h, oh_n, stride, pad, kh * dil, &oh0, &oh1);
                    for (int kw = 0; kw < k; ++kw) {
                        int ow0, ow1;
                        row_range(wd, ow_n, stride, pad, kw * dil, &ow0, &ow1);
                        const int off = kw * dil - pad;
                        const double wv = wp[kh * k + kw];
                        double wacc = 0.0;
                        for (int oh = oh0; oh < oh1; ++oh) {
                            const int ih = oh * stride - pad + kh * dil;
                            const double* gyr = gyp + oh * ow_n;
                            const double* xr = xp + ih * wd;
                            double* gxr = gxp ? gxp + ih * wd : nullptr;
                            if (stride == 1) {
                                if (gxr)
                                    for (int ow = ow0; ow < ow1; ++ow)
                                        gxr[ow + off] += wv * gyr[ow];
                                if (gwp)
                                    for (int ow = ow0; ow < ow1; ++ow)
                                        wacc += xr[ow + off] * gyr[ow];
                            } else {
                                for (int ow = ow0; ow < ow1; ++ow) {
                                    const int iw = ow * stride + off;
                                    if (gxr) gxr[iw] += wv * gyr[ow];
                                    if (gwp) wacc += xr[iw] * gyr[ow];
                                }
                            }
                        }
                        if (gwp) gwp[kh * k + kw] += wacc;
                    }
                }
            }
        }
    }
}

constexpr double kSobelX[9] = {-1, 0, 1, -2, 0, 2, -1, 0, 1};
constexpr double kSobelY[9] = {-1, -2, -1, 0, 0, 0, 1, 2, 1};

}  // namespace

Graph::NodeId Graph::conv2d(NodeId xi, NodeId wi, NodeId bi, int stride, int padding,
                            int dilation) {
    const Tensor& x = value(xi);
    const Tensor& w = value(wi);
    const Tensor& b = value(bi);
    require_4d(x, "conv2d input");
    require_4d(w, "conv2d weight");
    if (padding < 0 || stride < 1 || dilation < 1)
        throw ContractError("conv2d: padding >= 0, stride >= 1, dilation >= 1 required");
    if (x.dim(1) != w.dim(1))
        throw DimError("conv2d channel mismatch: input " + x.shape_str() + " vs weight " +
                       w.shape_str());
    if (w.dim(2) != w.dim(3)) throw DimError("conv2d kernel must be square: " + w.shape_str());
    if (b.numel() != w.dim(0))
        throw DimError("conv2d bias length " + b.shape_str() + " vs Cout " +
                       std::to_string(w.dim(0)));
    const int k = w.dim(2);
    const int span = dilation * (k - 1) + 1;
    if (x.dim(2) + 2 * padding < span || x.dim(3) + 2 * padding < span)
        throw DimError("conv2d: padded extent smaller than dilated kernel span");
    const int oh = (x.dim(2) + 2 * padding - span) / stride + 1;
    const int ow = (x.dim(3) + 2 * padding - span) / stride + 1;
    Tensor y({x.dim(0), w.dim(0), oh, ow});
    conv_forward(x, w, b.data.data(), y, stride, padding, dilation);
    return add_node(std::move(y), {xi, wi, bi},
                    [stride, padding, dilation](Graph& g, NodeId self) {
                        const auto& in = g.nodes_[static_cast<size_t>(self)].inputs;
                        const Tensor& gy = g.grad_ref(self);
                        const Tensor& x = g.value(in[0]);
                        const Tensor& w = g.value(in[1]);
                        conv_backward(x, w, gy, &g.grad_buf(in[0]), &g.grad_buf(in[1]),
                                      g.grad_buf(in[2]).data.data(), stride, padding, dilation);
                    },
                    "conv2d");
}

Graph::NodeId Graph::bmm(NodeId ai, NodeId bi) {
    const Tensor& a = value(ai);
    const Tensor& b = value(bi);
    if (a.rank() != 3 || b.rank() != 3)
        throw DimError("bmm expects 3D operands, got " + a.shape_str() + " and " + b.shape_str());
    if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(1))
        throw DimError("bmm inner-extent mismatch: " + a.shape_str() + " vs " + b.shape_str());
    const int n_ = a.dim(0), p = a.dim(1), q = a.dim(2), s = b.dim(2);
    Tensor y({n_, p, s});
    for (int n = 0; n < n_; ++n) {
        const double* ap = a.data.data() + static_cast<size_t>(n) * p * q;
        const double* bp = b.data.data() + static_cast<size_t>(n) * q * s;
        double* yp = y.data.data() + static_cast<size_t>(n) * p * s;
        for (int i = 0; i < p; ++i)
            for (int kk = 0; kk < q; ++kk) {
                const double av = ap[i * q + kk];
                const double* br = bp + kk * s;
                double* yr = yp + i * s;
                for (int j = 0; j < s; ++j) yr[j] += av * br[j];
            }
    }
    return add_node(std::move(y), {ai, bi},
                    [](Graph& g, NodeId self) {
                        const auto& in = g.nodes_[static_cast<size_t>(self)].inputs;
                        const Tensor& gy = g.grad_ref(self);
                        const Tensor& a = g.value(in[0]);
                        const Tensor& b = g.value(in[1]);
                        Tensor& ga = g.grad_buf(in[0]);
                        Tensor& gb = g.grad_buf(in[1]);
                        const int n_ = a.dim(0), p = a.dim(1), q = a.dim(2), s = b.dim(2);
                        for (int n = 0; n < n_; ++n) {
                            const double* ap = a.data.data() + static_cast<size_t>(n) * p * q;
                            const double* bp = b.data.data() + static_cast<size_t>(n) * q * s;
                            const double* gp = gy.data.data() + static_cast<size_t>(n) * p * s;
                            double* gap = ga.data.data() + static_cast<size_t>(n) * p * q;
                            double* gbp = gb.data.data() + static_cast<size_t>(n) * q * s;
                            for (int i = 0; i < p; ++i) {
                                for (int j = 0; j < s; ++j) {
                                    const double gv = gp[i * s + j];
                                    if (gv == 0.0) continue;
                                    for (int kk = 0; kk < q; ++kk)
                                        gap[i * q + kk] += gv * bp[kk * s + j];
                                }
                                for (int kk = 0; kk < q; ++kk) {
                                    const double av = ap[i * q + kk];
                                    const double* gr = gp + i * s;
                                    double* gbr = gbp + kk * s;
                                    for (int j = 0; j < s; ++j) gbr[j] += av * gr[j];
                                }
                            }
                        }
                    },
                    "bmm");
}

Graph::NodeId Graph::matmul(NodeId ai, NodeId bi) {
    const Tensor& a = value(ai);
    const Tensor& b = value(bi);
    if (a.rank() != 2 || b.rank() != 2)
        throw DimError("matmul expects 2D operands, got " + a.shape_str() + " and " +
                       b.shape_str());
    if (a.dim(1) != b.dim(0))
        throw DimError("matmul inner-extent mismatch: " + a.shape_str() + " vs " + b.shape_str());
    // Route through bmm with a unit batch; reshape nodes keep gradients exact.
    Tensor a3({1, a.dim(0), a.dim(1)}, a.data);
    Tensor b3({1, b.dim(0), b.dim(1)}, b.data);
    NodeId a3i = add_node(std::move(a3), {ai},
                          [](Graph& g, NodeId self) {
                              const auto& in = g.nodes_[static_cast<size_t>(self)].inputs;
                              const Tensor& gy = g.grad_ref(self);
                              Tensor& gx = g.grad_buf(in[0]);
                              for (size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += gy.data[i];
                          },
                          "reshape");
    NodeId b3i = add_node(std::move(b3), {bi},
                          [](Graph& g, NodeId self) {
                              const auto& in = g.nodes_[static_cast<size_t>(self)].inputs;
                              const Tensor& gy = g.grad_ref(self);
                              Tensor& gx = g.grad_buf(in[0]);
                              for (size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += gy.data[i];
                          },
                          "reshape");
    NodeId y3 = bmm(a3i, b3i);
    const Tensor& y3v = value(y3);
    Tensor y({y3v.dim(1), y3v.dim(2)}, y3v.data);
    return add_node(std::move(y), {y3},
                    [](Graph& g, NodeId self) {
                        const auto& in = g.nodes_[static_cast<size_t>(self)].inputs;
                        const Tensor& gy = g.grad_ref(self);
                        Tensor& gx = g.grad_buf(in[0]);
                        for (size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += gy.data[i];
                    },
                    "reshape");
}

Graph::NodeId Graph::transpose12(NodeId xi) {
    const Tensor& x = value(xi);
    if (x.rank() != 3) throw DimError("transpose12 expects 3D, got " + x.shape_str());
    const int n_ = x.dim(0), p = x.dim(1), q = x.dim(2);
    Tensor y({n_, q, p});
    for (int n = 0; n < n_; ++n)
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < q; ++j)
                y.data[(static_cast<size_t>(n) * q + j) * p + i] =
                    x.data[(static_cast<size_t>(n) * p + i) * q + j];
    return add_node(std::move(y), {xi},
                    [n_, p, q](Graph& g, NodeId self) {
                        const auto& in = g.nodes_[static_cast<size_t>(self)].inputs;
                        const Tensor& gy = g.grad_ref(self);
                        Tensor& gx = g.grad_buf(in[0]);
                        for (int n = 0; n < n_; ++n)
                            for (int i = 0; i < p; ++i)
                                for (int j = 0; j < q; ++j)
                                    gx.data[(static_cast<size_t>(n) * p + i) * q + j] +=
                                        gy.data[(static_cast<size_t>(n) * q + j) * p + i];
                    },
                    "transpose12");
}

Graph::NodeId Graph::linear_last(NodeId xi, NodeId wi, NodeId bi) {
    const Tensor& x = value(xi);
    const Tensor& w = value(wi);
    const Tensor& b = value(bi);
    if (x.rank() != 3 || w.rank() != 2)
        throw DimError("linear_last expects 3D input and 2D weight, got " + x.shape_str() +
                       " and " + w.shape_str());
    if (x.dim(2) != w.dim(0))
        throw DimError("linear_last inner-extent mismatch: " + x.shape_str() + " vs " +
                       w.shape_str());
    if (b.numel() != w.dim(1))
        throw DimError("linear_last bias length mismatch: " + b.shape_str());
    const int n_ = x.dim(0), t_ = x.dim(1), d_ = x.dim(2), e_ = w.dim(1);
    Tensor y({n_, t_, e_});
    for (int nt = 0; nt < n_ * t_; ++nt) {
        const double* xr = x.data.data() + static_cast<size_t>(nt) * d_;
        double* yr = y.data.data() + static_cast<size_t>(nt) * e_;
        for (int e = 0; e < e_; ++e) yr[e] = b.data[static_cast<size_t>(e)];
        for (int d = 0; d < d_; ++d) {
            const double xv = xr[d];
            const double* wr = w.data.data() + static_cast<size_t>(d) * e_;
            for (int e = 0; e < e_; ++e) yr[e] += xv * wr[e];
        }
    }
    return add_node(std::move(y), {xi, wi, bi},
                    [n_, t_, d_, e_](Graph& g, NodeId self) {
                        const auto& in = g.nodes_[static_cast<size_t>(self)].inputs;
                        const Tensor& gy = g.grad_ref(self);
                        const Tensor& x = g.value(in[0]);
                        const Tensor& w = g.value(in[1]);
                        Tensor& gx = g.grad_buf(in[0]);
                        Tensor& gw = g.grad_buf(in[1]);
                        Tensor& gb = g.grad_buf(in[2]);
                        for (int nt = 0; nt < n_ * t_; ++nt) {
                            const double* gr = gy.data.data() + static_cast<size_t>(nt) * e_;
                            const double* xr = x.data.data() + static_cast<size_t>(nt) * d_;
                            double* gxr = gx.data.data() + static_cast<size_t>(nt) * d_;
                            for (int e = 0; e < e_; ++e) gb.data[static_cast<size_t>(e)] += gr[e];
                            for (int d = 0; d < d_; ++d) {
                                const double* wr = w.data.data() + static_cast<size_t>(d) * e_;
                                double* gwr = gw.data.data() + static_cast<size_t>(d) * e_;
                                double acc = 0.0;
                                const double xv = xr[d];
                                for (int e = 0; e < e_; ++e) {
                                    acc += gr[e] * wr[e];
                                    gwr[e] += xv * gr[e];
                                }
                                gxr[d] += acc;
                            }
                        }
                    },
                    "linear_last");
}

Graph::NodeId Graph::softmax(NodeId xi, int axis) {
    const Tensor& x = value(xi);
    if (axis < 0 || axis >= x.rank())
        throw ContractError("softmax axis " + std::to_string(axis) + " invalid for shape " +
                            x.shape_str());
    const int l = x.dim(axis);
    std::int64_t inner = 1, outer = 1;
    for (int i = axis + 1; i < x.rank(); ++i) inner *= x.dim(i);
    for (int i = 0; i < axis; ++i) outer *= x.dim(i);
    Tensor y(x.shape);
    for (std::int64_t o = 0; o < outer; ++o)
        for (std::int64_t in_ = 0; in_ < inner; ++in_) {
            const std::int64_t base = o * l * inner + in_;
            double mx = -1e300;
            for (int i = 0; i < l; ++i) mx = std::max(mx, x.data[base + i * inner]);
            double sum = 0.0;
            for (int i = 0; i < l; ++i) {
                double e = std::exp(x.data[base + i * inner] - mx);
                y.data[base + i * inner] = e;
                sum += e;
            }
            for (int i = 0; i < l; ++i) y.data[base + i * inner] /= sum;
        }
    return add_node(std::move(y), {xi},
                    [l, inner, outer](Graph& g, NodeId self) {
                        const auto& in = g.nodes_[static_cast<size_t>(self)].inputs;
                        const Tensor& gy = g.grad_ref(self);
                        const Tensor& y = g.value(self);
                        Tensor& gx = g.grad_buf(in[0]);
                        for (std::int64_t o = 0; o < outer; ++o)
                            for (std::int64_t ii = 0; ii < inner; ++ii) {
                                const std::int64_t base = o * l * inner + ii;
                                double dot = 0.0;
                                for (int i = 0; i < l; ++i)
                                    dot += gy.data[base + i * inner] * y.data[base + i * inner];
                                for (int i = 0; i < l; ++i)
                                    gx.data[base + i * inner] +=
                                        y.data[base + i * inner] * (gy.data[base + i * inner] - dot);
                            }
                    },
                    "softmax");
}

Graph::NodeId Graph::pool2d(NodeId xi, PoolMode mode, int k, int stride, int padding) {
    const Tensor& x = value(xi);
    require_4d(x, "pool2d input");
    const int n_ = x.dim(0), c_ = x.dim(1), h = x.dim(2), w = x.dim(3);
    if (mode == PoolMode::GlobalAvg) {
        Tensor y({n_, c_, 1, 1});
        const double inv = 1.0 / (h * w);
        for (int nc = 0; nc < n_ * c_; ++nc) {
            const double* xp = x.data.data() + static_cast<size_t>(nc) * h * w;
            double acc = 0.0;
            for (int i = 0; i < h * w; ++i) acc += xp[i];
            y.data[static_cast<size_t>(nc)] = acc * inv;
        }
        return add_node(std::move(y), {xi},
                        [h, w](Graph& g, NodeId self) {
                            const auto& in = g.nodes_[static_cast<size_t>(self)].inputs;
                            const Tensor& gy = g.grad_ref(self);
                            Tensor& gx = g.grad_buf(in[0]);
                            const double inv = 1.0 / (h * w);
                            const int nc_n = gy.dim(0) * gy.dim(1);
                            for (int nc = 0; nc < nc_n; ++nc) {
                                const double gv = gy.data[static_cast<size_t>(nc)] * inv;
                                double* gp = gx.data.data() + static_cast<size_t>(nc) * h * w;
                                for (int i = 0; i < h * w; ++i) gp[i] += gv;
                            }
                        },
                        "global_avg_pool");
    }
    if (k < 1 || stride < 1 || padding < 0)
        throw ContractError("pool2d: k >= 1, stride >= 1, padding >= 0 required");
    if (k > h + 2 * padding || k > w + 2 * padding)
        throw DimError("pool2d kernel " + std::to_string(k) + " larger than padded extent of " +
                       x.shape_str());
    const int oh_n = (h + 2 * padding - k) / stride + 1;
    const int ow_n = (w + 2 * padding - k) / stride + 1;
    Tensor y({n_, c_, oh_n, ow_n});
    if (mode == PoolMode::Max) {
        // Argmax in row-major window scan order; padded cells never win.
        std::vector<int> arg(static_cast<size_t>(y.numel()), -1);
        for (int nc = 0; nc < n_ * c_; ++nc) {
            const double* xp = x.data.data() + static_cast<size_t>(nc) * h * w;
            double* yp = y.data.data() + static_cast<size_t>(nc) * oh_n * ow_n;
            int* ap = arg.data() + static_cast<size_t>(nc) * oh_n * ow_n;
            for (int oh = 0; oh < oh_n; ++oh)
                for (int ow = 0; ow < ow_n; ++ow) {
                    double best = -1e300;
                    int besti = -1;
                    for (int kh = 0; kh < k; ++kh) {
                        const int ih = oh * stride - padding + kh;
                        if (ih < 0 || ih >= h) continue;
                        for (int kw = 0; kw < k; ++kw) {
                            const int iw = ow * stride - padding + kw;
                            if (iw < 0 || iw >= w) continue;
                            const double v = xp[ih * w + iw];
                            if (v > best) {
                                best = v;
                                besti = ih * w + iw;
                            }
                        }
                    }
                    yp[oh * ow_n + ow] = best;
                    ap[oh * ow_n + ow] = besti;
                }
        }
        return add_node(std::move(y), {xi},
                        [arg = std::move(arg), h, w](Graph& g, NodeId self) {
                            const auto& in = g.nodes_[static_cast<size_t>(self)].inputs;
                            const Tensor& gy = g.grad_ref(self);
                            Tensor& gx = g.grad_buf(in[0]);
                            const int plane = gy.dim(2) * gy.dim(3);
                            const int nc_n = gy.dim(0) * gy.dim(1);
                            for (int nc = 0; nc < nc_n; ++nc) {
                                const double* gp = gy.data.data() + static_cast<size_t>(nc) * plane;
                                const int* ap = arg.data() + static_cast<size_t>(nc) * plane;
                                double* gxp = gx.data.data() + static_cast<size_t>(nc) * h * w;
                                for (int i = 0; i < plane; ++i)
                                    if (ap[i] >= 0) gxp[ap[i]] += gp[i];
                            }
                        },
                        "max_pool");
    }
    // Average pool; padded cells count as zeros and the divisor stays k*k.
    const double inv = 1.0 / (k * k);
    for (int nc = 0; nc < n_ * c_; ++nc) {
        const double* xp = x.data.data() + static_cast<size_t>(nc) * h * w;
        double* yp = y.data.data() + static_cast<size_t>(nc) * oh_n * ow_n;
        for (int oh = 0; oh < oh_n; ++oh)
            for (int ow = 0; ow < ow_n; ++ow) {
                double acc = 0.0;
                for (int kh = 0; kh < k; ++kh) {
                    const int ih = oh * stride - padding + kh;
                    if (ih < 0 || ih >= h) continue;
                    for (int kw = 0; kw < k; ++kw) {
                        const int iw = ow * stride - padding + kw;
                        if (iw >= 0 && iw < w) acc += xp[ih * w + iw];
                    }
                }
                yp[oh * ow_n + ow] = acc * inv;
            }
    }
    return add_node(std::move(y), {xi},
                    [k, stride, padding, h, w, inv](Graph& g, NodeId self) {
                        const auto& in = g.nodes_[static_cast<size_t>(self)].inputs;
                        const Tensor& gy = g.grad_ref(self);
                        Tensor& gx = g.grad_buf(in[0]);
                        const int oh_n = gy.dim(2), ow_n = gy.dim(3);
                        const int nc_n = gy.dim(0) * gy.dim(1);
                        for (int nc = 0; nc < nc_n; ++nc) {
                            const double* gp = gy.data.data() + static_cast<size_t>(nc) * oh_n * ow_n;
                            double* gxp = gx.data.data() + static_cast<size_t>(nc) * h * w;
                            for (int oh = 0; oh < oh_n; ++oh)
                                for (int ow = 0; ow < ow_n; ++ow) {
                                    const double gv = gp[oh * ow_n + ow] * inv;
                                    for (int kh = 0; kh < k; ++kh) {
                                        const int ih = oh * stride - padding + kh;
                                        if (ih < 0 || ih >= h) continue;
                                        for (int kw = 0; kw < k; ++kw) {
                                            const int iw = ow * stride - padding + kw;
                                            if (iw >= 0 && iw < w) gxp[ih * w + iw] += gv;
                                        }
                                    }
                                }
                        }
                    },
                    "avg_pool");
}

Graph::NodeId Graph::batch_norm(NodeId xi, NodeId gi, NodeId bi, Tensor& running_mean,
                                Tensor& running_var, bool train, double eps, double momentum,
                                bool update_stats) {
    const Tensor& x = value(xi);
    const Tensor& gamma = value(gi);
    const Tensor& beta = value(bi);
    require_4d(x, "batch_norm input");
    const int n_ = x.dim(0), c_ = x.dim(1), h = x.dim(2), w = x.dim(3);
    if (gamma.numel() != c_ || beta.numel() != c_ || running_mean.numel() != c_ ||
        running_var.numel() != c_)
        throw DimError("batch_norm channel mismatch for input " + x.shape_str());
    const std::int64_t m = static_cast<std::int64_t>(n_) * h * w;
    Tensor y(x.shape);
    std::vector<double> mean(static_cast<size_t>(c_)), invstd(static_cast<size_t>(c_));
    for (int c = 0; c < c_; ++c) {
        double mu, var;
        if (train) {
            double s = 0.0, s2 = 0.0;
            for (int n = 0; n < n_; ++n) {
                const double* xp = &x.at4(n, c, 0, 0);
                for (int i = 0; i < h * w; ++i) {
                    s += xp[i];
                    s2 += xp[i] * xp[i];
                }
            }
            mu = s / static_cast<double>(m);
            var = s2 / static_cast<double>(m) - mu * mu;
            if (var < 0.0) var = 0.0;
            if (update_stats) {
                running_mean.data[static_cast<size_t>(c)] =
                    (1.0 - momentum) * running_mean.data[static_cast<size_t>(c)] + momentum * mu;
                running_var.data[static_cast<size_t>(c)] =
                    (1.0 - momentum) * running_var.data[static_cast<size_t>(c)] + momentum * var;
            }
        } else {
            mu = running_mean.data[static_cast<size_t>(c)];
            var = running_var.data[static_cast<size_t>(c)];
        }
        mean[static_cast<size_t>(c)] = mu;
        invstd[static_cast<size_t>(c)] = 1.0 / std::sqrt(var + eps);
        const double gv = gamma.data[static_cast<size_t>(c)];
        const double bv = beta.data[static_cast<size_t>(c)];
        const double a = gv * invstd[static_cast<size_t>(c)];
        for (int n = 0; n < n_; ++n) {
            const double* xp = &x.at4(n, c, 0, 0);
            double* yp = &y.at4(n, c, 0, 0);
            for (int i = 0; i < h * w; ++i) yp[i] = a * (xp[i] - mu) + bv;
        }
    }
    return add_node(
        std::move(y), {xi, gi, bi},
        [mean = std::move(mean), invstd = std::move(invstd), train, n_, c_, h, w,
         m](Graph& g, NodeId self) {
            const auto& in = g.nodes_[static_cast<size_t>(self)].inputs;
            const Tensor& gy = g.grad_ref(self);
            const Tensor& x = g.value(in[0]);
            const Tensor& gamma = g.value(in[1]);
            Tensor& gx = g.grad_buf(in[0]);
            Tensor& gg = g.grad_buf(in[1]);
            Tensor& gb = g.grad_buf(in[2]);
            for (int c = 0; c < c_; ++c) {
                const double mu = mean[static_cast<size_t>(c)];
                const double is = invstd[static_cast<size_t>(c)];
                double sum_gy = 0.0, sum_gy_xhat = 0.0;
                for (int n = 0; n < n_; ++n) {
                    const double* xp = &x.at4(n, c, 0, 0);
                    const double* gp = &gy.at4(n, c, 0, 0);
                    for (int i = 0; i < h * w; ++i) {
                        sum_gy += gp[i];
                        sum_gy_xhat += gp[i] * (xp[i] - mu) * is;
                    }
                }
                gb.data[static_cast<size_t>(c)] += sum_gy;
                gg.data[static_cast<size_t>(c)] += sum_gy_xhat;
                const double gv = gamma.data[static_cast<size_t>(c)];
                if (train) {
                    const double inv_m = 1.0 / static_cast<double>(m);
                    for (int n = 0; n < n_; ++n) {
                        const double* xp = &x.at4(n, c, 0, 0);
                        const double* gp = &gy.at4(n, c, 0, 0);
                        double* gxp = &gx.at4(n, c, 0, 0);
                        for (int i = 0; i < h * w; ++i) {
                            const double xhat = (xp[i] - mu) * is;
                            gxp[i] += gv * is *
                                      (gp[i] - sum_gy * inv_m - xhat * sum_gy_xhat * inv_m);
                        }
                    }
                } else {
                    const double a = gv * is;
                    for (int n = 0; n < n_; ++n) {
                        const double* gp = &gy.at4(n, c, 0, 0);
                        double* gxp = &gx.at4(n, c, 0, 0);
                        for (int i = 0; i < h * w; ++i) gxp[i] += a * gp[i];
                    }
                }
            }
        },
        "batch_norm");
}

Graph::NodeId Graph::elementwise(NodeId xi, NodeId yi, EwOp op) {
    const Tensor& x = value(xi);
    const Tensor& y = value(yi);
    if (!x.same_shape(y))
        throw DimError("elementwise shape mismatch: " + x.shape_str() + " vs " + y.shape_str());
    Tensor out(x.shape);
    switch (op) {
        case EwOp::Add:
            for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = x.data[i] + y.data[i];
            return add_node(std::move(out), {xi, yi},
                            [](Graph& g, NodeId self) {
                                const auto& in = g.nodes_[static_cast<size_t>(self)].inputs;
                                const Tensor& gy = g.grad_ref(self);
                                Tensor& ga = g.grad_buf(in[0]);
                                Tensor& gb = g.grad_buf(in[1]);
                                for (size_t i = 0; i < gy.data.size(); ++i) {
                                    ga.data[i] += gy.data[i];
                                    gb.data[i] += gy.data[i];
                                }
                            },
                            "add");
        case EwOp::Mul:
            for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = x.data[i] * y.data[i];
            return add_node(std::move(out), {xi, yi},
                            [](Graph& g, NodeId self) {
                                const auto& in = g.nodes_[static_cast<size_t>(self)].inputs;
                                const Tensor& gy = g.grad_ref(self);
                                const Tensor& a = g.value(in[0]);
                                const Tensor& b = g.value(in[1]);
                                Tensor& ga = g.grad_buf(in[0]);
                                Tensor& gb = g.grad_buf(in[1]);
                                for (size_t i = 0; i < gy.data.size(); ++i) {
                                    ga.data[i] += gy.data[i] * b.data[i];
                                    gb.data[i] += gy.data[i] * a.data[i];
                                }
                            },
                            "mul");
        default:
            throw ContractError("elementwise: unary op passed two operands");
    }
}

Graph::NodeId Graph::elementwise(NodeId xi, EwOp op) {
    const Tensor& x = value(xi);
    Tensor out(x.shape);
    switch (op) {
        case EwOp::Relu:
            for (size_t i = 0; i < out.data.size(); ++i)
                out.data[i] = x.data[i] > 0.0 ? x.data[i] : 0.0;
            return add_node(std::move(out), {xi},
                            [](Graph& g, NodeId self) {
                                const auto& in = g.nodes_[static_cast<size_t>(self)].inputs;
                                const Tensor& gy = g.grad_ref(self);
                                const Tensor& x = g.value(in[0]);
                                Tensor& gx = g.grad_buf(in[0]);
                                for (size_t i = 0; i < gy.data.size(); ++i)
                                    if (x.data[i] > 0.0) gx.data[i] += gy.data[i];
                            },
                            "relu");
        case EwOp::Sigmoid:
            for (size_t i = 0; i < out.data.size(); ++i)
                out.data[i] = 1.0 / (1.0 + std::exp(-x.data[i]));
            return add_node(std::move(out), {xi},
                            [](Graph& g, NodeId self) {
                                const auto& in = g.nodes_[static_cast<size_t>(self)].inputs;
                                const Tensor& gy = g.grad_ref(self);
                                const Tensor& y = g.value(self);
                                Tensor& gx = g.grad_buf(in[0]);
                                for (size_t i = 0; i < gy.data.size(); ++i)
                                    gx.data[i] += gy.data[i] * y.data[i] * (1.0 - y.data[i]);
                            },
                            "sigmoid");
        case EwOp::Abs:
            for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = std::fabs(x.data[i]);
            return add_node(std::move(out), {xi},
                            [](Graph& g, NodeId self) {
                                const auto& in = g.nodes_[static_cast<size_t>(self)].inputs;
                                const Tensor& gy = g.grad_ref(self);
                                const Tensor& x = g.value(in[0]);
                                Tensor& gx = g.grad_buf(in[0]);
                                // Subgradient 0 at x == 0.
                                for (size_t i = 0; i < gy.data.size(); ++i) {
                                    if (x.data[i] > 0.0)
                                        gx.data[i] += gy.data[i];
                                    else if (x.data[i] < 0.0)
                                        gx.data[i] -= gy.data[i];
                                }
                            },
                            "abs");
        default:
            throw ContractError("elementwise: binary op passed one operand");
    }
}

Graph::NodeId Graph::scale(NodeId xi, double c) {
    const Tensor& x = value(xi);
    Tensor out(x.shape);
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = c * x.data[i];
    return add_node(std::move(out), {xi},
                    [c](Graph& g, NodeId self) {
                        const auto& in = g.nodes_[static_cast<size_t>(self)].inputs;
                        const Tensor& gy = g.grad_ref(self);
                        Tensor& gx = g.grad_buf(in[0]);
                        for (size_t i = 0; i < gy.data.size(); ++i) gx.data[i] += c * gy.data[i];
                    },
                    "scale");
}

Graph::NodeId Graph::scale_by(NodeId xi, NodeId si) {
    const Tensor& x = value(xi);
    const Tensor& s = value(si);
    if (s.numel() != 1) throw DimError("scale_by factor must hold 1 element, got " + s.shape_str());
    const double sv = s.data[0];
    Tensor out(x.shape);
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = sv * x.data[i];
    return add_node(std::move(out), {xi, si},
                    [](Graph& g, NodeId self) {
                        const auto& in = g.nodes_[static_cast<size_t>(self)].inputs;
                        const Tensor& gy = g.grad_ref(self);
                        const Tensor& x = g.value(in[0]);
                        const double sv = g.value(in[1]).data[0];
                        Tensor& gx = g.grad_buf(in[0]);
                        Tensor& gs = g.grad_buf(in[1]);
                        double acc = 0.0;
                        for (size_t i = 0; i < gy.data.size(); ++i) {
                            gx.data[i] += sv * gy.data[i];
                            acc += x.data[i] * gy.data[i];
                        }
                        gs.data[0] += acc;
                    },
                    "scale_by");
}

Graph::NodeId Graph::concat_channels(const std::vector<NodeId>& parts) {
    if (parts.empty()) throw ContractError("concat_channels: no parts");
    const Tensor& first = value(parts[0]);
    require_4d(first, "concat_channels part");
    int total_c = 0;
    for (NodeId p : parts) {
        const Tensor& t = value(p);
        require_4d(t, "concat_channels part");
        if (t.dim(0) != first.dim(0) || t.dim(2) != first.dim(2) || t.dim(3) != first.dim(3))
            throw DimError("concat_channels spatial mismatch: " + first.shape_str() + " vs " +
                           t.shape_str());
        total_c += t.dim(1);
    }
    const int n_ = first.dim(0), h = first.dim(2), w = first.dim(3);
    Tensor y({n_, total_c, h, w});
    int c0 = 0;
    for (NodeId p : parts) {
        const Tensor& t = value(p);
        for (int n = 0; n < n_; ++n)
            std::copy_n(&t.at4(n, 0, 0, 0), static_cast<size_t>(t.dim(1)) * h * w,
                        &y.at4(n, c0, 0, 0));
        c0 += t.dim(1);
    }
    return add_node(std::move(y), parts,
                    [n_, h, w](Graph& g, NodeId self) {
                        const auto& in = g.nodes_[static_cast<size_t>(self)].inputs;
                        const Tensor& gy = g.grad_ref(self);
                        int c0 = 0;
                        for (NodeId p : in) {
                            Tensor& gp = g.grad_buf(p);
                            const int pc = gp.dim(1);
                            for (int n = 0; n < n_; ++n) {
                                const double* src = &gy.at4(n, c0, 0, 0);
                                double* dst = &gp.at4(n, 0, 0, 0);
                                for (int i = 0; i < pc * h * w; ++i) dst[i] += src[i];
                            }
                            c0 += pc;
                        }
                    },
                    "concat_channels");
}

Graph::NodeId Graph::slice_channels(NodeId xi, int c0, int c1) {
    const Tensor& x = value(xi);
    require_4d(x, "slice_channels input");
    if (c0 < 0 || c1 > x.dim(1) || c0 >= c1)
        throw ContractError("slice_channels range [" + std::to_string(c0) + "," +
                            std::to_string(c1) + ") invalid for " + x.shape_str());
    const int n_ = x.dim(0), h = x.dim(2), w = x.dim(3), cs = c1 - c0;
    Tensor y({n_, cs, h, w});
    for (int n = 0; n < n_; ++n)
        std::copy_n(&x.at4(n, c0, 0, 0), static_cast<size_t>(cs) * h * w, &y.at4(n, 0, 0, 0));
    return add_node(std::move(y), {xi},
                    [c0, cs, h, w, n_](Graph& g, NodeId self) {
                        const auto& in = g.nodes_[static_cast<size_t>(self)].inputs;
                        const Tensor& gy = g.grad_ref(self);
                        Tensor& gx = g.grad_buf(in[0]);
                        for (int n = 0; n < n_; ++n) {
                            const double* src = &gy.at4(n, 0, 0, 0);
                            double* dst = &gx.at4(n, c0, 0, 0);
                            for (int i = 0; i < cs * h * w; ++i) dst[i] += src[i];
                        }
                    },
                    "slice_channels");
}

Graph::NodeId Graph::upsample(NodeId xi, int out_h, int out_w, Interp mode) {
    const Tensor& x = value(xi);
    require_4d(x, "upsample input");
    if (out_h < 1 || out_w < 1) throw ContractError("upsample target extents must be >= 1");
    const int n_ = x.dim(0), c_ = x.dim(1), h = x.dim(2), w = x.dim(3);
    Tensor y({n_, c_, out_h, out_w});
    if (mode == Interp::Nearest) {
        std::vector<int> src_h(static_cast<size_t>(out_h)), src_w(static_cast<size_t>(out_w));
        for (int o = 0; o < out_h; ++o)
            src_h[static_cast<size_t>(o)] = std::min(
                h - 1, static_cast<int>(std::floor((o + 0.5) * static_cast<double>(h) / out_h)));
        for (int o = 0; o < out_w; ++o)
            src_w[static_cast<size_t>(o)] = std::min(
                w - 1, static_cast<int>(std::floor((o + 0.5) * static_cast<double>(w) / out_w)));
        for (int nc = 0; nc < n_ * c_; ++nc) {
            const double* xp = x.data.data() + static_cast<size_t>(nc) * h * w;
            double* yp = y.data.data() + static_cast<size_t>(nc) * out_h * out_w;
            for (int oh = 0; oh < out_h; ++oh)
                for (int ow = 0; ow < out_w; ++ow)
                    yp[oh * out_w + ow] =
                        xp[src_h[static_cast<size_t>(oh)] * w + src_w[static_cast<size_t>(ow)]];
        }
        return add_node(std::move(y), {xi},
                        [src_h = std::move(src_h), src_w = std::move(src_w), h, w,
                         out_h, out_w](Graph& g, NodeId self) {
                            const auto& in = g.nodes_[static_cast<size_t>(self)].inputs;
                            const Tensor& gy = g.grad_ref(self);
                            Tensor& gx = g.grad_buf(in[0]);
                            const int nc_n = gy.dim(0) * gy.dim(1);
                            for (int nc = 0; nc < nc_n; ++nc) {
                                const double* gp =
                                    gy.data.data() + static_cast<size_t>(nc) * out_h * out_w;
                                double* gxp = gx.data.data() + static_cast<size_t>(nc) * h * w;
                                for (int oh = 0; oh < out_h; ++oh)
                                    for (int ow = 0; ow < out_w; ++ow)
                                        gxp[src_h[static_cast<size_t>(oh)] * w +
                                            src_w[static_cast<size_t>(ow)]] += gp[oh * out_w + ow];
                            }
                        },
                        "upsample_nearest");
    }
    // Bilinear, align-corners=false.
    struct Lerp {
        int i0, i1;
        double w0, w1;
    };
    auto make = [](int in_n, int out_n) {
        std::vector<Lerp> v(static_cast<size_t>(out_n));
        for (int o = 0; o < out_n; ++o) {
            double s = (o + 0.5) * static_cast<double>(in_n) / out_n - 0.5;
            int i0 = static_cast<int>(std::floor(s));
            double f = s - i0;
            int i1 = i0 + 1;
            i0 = std::clamp(i0, 0, in_n - 1);
            i1 = std::clamp(i1, 0, in_n - 1);
            v[static_cast<size_t>(o)] = {i0, i1, 1.0 - f, f};
        }
        return v;
    };
    std::vector<Lerp> lh = make(h, out_h), lw = make(w, out_w);
    for (int nc = 0; nc < n_ * c_; ++nc) {
        const double* xp = x.data.data() + static_cast<size_t>(nc) * h * w;
        double* yp = y.data.data() + static_cast<size_t>(nc) * out_h * out_w;
        for (int oh = 0; oh < out_h; ++oh) {
            const Lerp& a = lh[static_cast<size_t>(oh)];
            for (int ow = 0; ow < out_w; ++ow) {
                const Lerp& b = lw[static_cast<size_t>(ow)];
                yp[oh * out_w + ow] = a.w0 * (b.w0 * xp[a.i0 * w + b.i0] + b.w1 * xp[a.i0 * w + b.i1]) +
                                      a.w1 * (b.w0 * xp[a.i1 * w + b.i0] + b.w1 * xp[a.i1 * w + b.i1]);
            }
        }
    }
    return add_node(std::move(y), {xi},
                    [lh = std::move(lh), lw = std::move(lw), h, w, out_h, out_w](Graph& g,
                                                                                 NodeId self) {
                        const auto& in = g.nodes_[static_cast<size_t>(self)].inputs;
                        const Tensor& gy = g.grad_ref(self);
                        Tensor& gx = g.grad_buf(in[0]);
                        const int nc_n = gy.dim(0) * gy.dim(1);
                        for (int nc = 0; nc < nc_n; ++nc) {
                            const double* gp = gy.data.data() + static_cast<size_t>(nc) * out_h * out_w;
                            double* gxp = gx.data.data() + static_cast<size_t>(nc) * h * w;
                            for (int oh = 0; oh < out_h; ++oh) {
                                const Lerp& a = lh[static_cast<size_t>(oh)];
                                for (int ow = 0; ow < out_w; ++ow) {
                                    const Lerp& b = lw[static_cast<size_t>(ow)];
                                    const double gv = gp[oh * out_w + ow];
                                    gxp[a.i0 * w + b.i0] += a.w0 * b.w0 * gv;
                                    gxp[a.i0 * w + b.i1] += a.w0 * b.w1 * gv;
                                    gxp[a.i1 * w + b.i0] += a.w1 * b.w0 * gv;
                                    gxp[a.i1 * w + b.i1] += a.w1 * b.w1 * gv;
                                }
                            }
                        }
                    },
                    "upsample_bilinear");
}

Graph::NodeId Graph::slice_batch(NodeId xi, int n) {
    const Tensor& x = value(xi);
    require_4d(x, "slice_batch input");
    if (n < 0 || n >= x.dim(0))
        throw ContractError("slice_batch index " + std::to_string(n) + " out of range for " +
                            x.shape_str());
    const std::int64_t plane = x.numel() / x.dim(0);
    Tensor y({1, x.dim(1), x.dim(2), x.dim(3)});
    std::copy_n(x.data.data() + n * plane, plane, y.data.data());
    return add_node(std::move(y), {xi},
                    [n, plane](Graph& g, NodeId self) {
                        const auto& in = g.nodes_[static_cast<size_t>(self)].inputs;
                        const Tensor& gy = g.grad_ref(self);
                        Tensor& gx = g.grad_buf(in[0]);
                        double* dst = gx.data.data() + n * plane;
                        for (std::int64_t i = 0; i < plane; ++i) dst[i] += gy.data[static_cast<size_t>(i)];
                    },
                    "slice_batch");
}

Graph::NodeId Graph::concat_batch(const std::vector<NodeId>& parts) {
    if (parts.empty()) throw ContractError("concat_batch: no parts");
    const Tensor& first = value(parts[0]);
    require_4d(first, "concat_batch part");
    int total_n = 0;
    for (NodeId p : parts) {
        const Tensor& t = value(p);
        if (t.dim(1) != first.dim(1) || t.dim(2) != first.dim(2) || t.dim(3) != first.dim(3))
            throw DimError("concat_batch shape mismatch: " + first.shape_str() + " vs " +
                           t.shape_str());
        total_n += t.dim(0);
    }
    Tensor y({total_n, first.dim(1), first.dim(2), first.dim(3)});
    std::int64_t off = 0;
    for (NodeId p : parts) {
        const Tensor& t = value(p);
        std::copy(t.data.begin(), t.data.end(), y.data.begin() + off);
        off += t.numel();
    }
    return add_node(std::move(y), parts,
                    [](Graph& g, NodeId self) {
                        const auto& in = g.nodes_[static_cast<size_t>(self)].inputs;
                        const Tensor& gy = g.grad_ref(self);
                        std::int64_t off = 0;
                        for (NodeId p : in) {
                            Tensor& gp = g.grad_buf(p);
                            for (std::int64_t i = 0; i < gp.numel(); ++i)
                                gp.data[static_cast<size_t>(i)] += gy.data[static_cast<size_t>(off + i)];
                            off += gp.numel();
                        }
                    },
                    "concat_batch");
}

namespace {
// y[n][bh*(W/r)+bw][c*r*r+py*r+px] = x[n][c][bh*r+py][bw*r+px]
void s2d_map(int c_, int h, int w, int r, bool inverse, const double* src, double* dst,
             bool accumulate) {
    const int bw_n = w / r;
    for (int c = 0; c < c_; ++c)
        for (int hh = 0; hh < h; ++hh)
            for (int ww = 0; ww < w; ++ww) {
                const int bh = hh / r, py = hh % r, bw = ww / r, px = ww % r;
                const std::int64_t t = static_cast<std::int64_t>(bh) * bw_n + bw;
                const std::int64_t d = static_cast<std::int64_t>(c) * r * r + py * r + px;
                const std::int64_t xoff = (static_cast<std::int64_t>(c) * h + hh) * w + ww;
                const std::int64_t yoff = t * (static_cast<std::int64_t>(c_) * r * r) + d;
                const std::int64_t s = inverse ? yoff : xoff;
                const std::int64_t dd = inverse ? xoff : yoff;
                if (accumulate)
                    dst[dd] += src[s];
                else
                    dst[dd] = src[s];
            }
}
}  // namespace

Graph::NodeId Graph::space_to_depth(NodeId xi, int r) {
    const Tensor& x = value(xi);
    require_4d(x, "space_to_depth input");
    if (r < 1 || x.dim(2) % r != 0 || x.dim(3) % r != 0)
        throw ContractError("space_to_depth: r=" + std::to_string(r) + " must divide extents of " +
                            x.shape_str());
    const int n_ = x.dim(0), c_ = x.dim(1), h = x.dim(2), w = x.dim(3);
    const int t_ = (h / r) * (w / r), d_ = c_ * r * r;
    Tensor y({n_, t_, d_});
    const std::int64_t plane = static_cast<std::int64_t>(c_) * h * w;
    for (int n = 0; n < n_; ++n)
        s2d_map(c_, h, w, r, false, x.data.data() + n * plane, y.data.data() + n * plane, false);
    return add_node(std::move(y), {xi},
                    [c_, h, w, r, plane, n_](Graph& g, NodeId self) {
                        const auto& in = g.nodes_[static_cast<size_t>(self)].inputs;
                        const Tensor& gy = g.grad_ref(self);
                        Tensor& gx = g.grad_buf(in[0]);
                        for (int n = 0; n < n_; ++n)
                            s2d_map(c_, h, w, r, true, gy.data.data() + n * plane,
                                    gx.data.data() + n * plane, true);
                    },
                    "space_to_depth");
}

Graph::NodeId Graph::depth_to_space(NodeId xi, int r, int c, int h, int w) {
    const Tensor& x = value(xi);
    if (x.rank() != 3) throw DimError("depth_to_space expects 3D, got " + x.shape_str());
    if (x.dim(1) != (h / r) * (w / r) || x.dim(2) != c * r * r || h % r != 0 || w % r != 0)
        throw ContractError("depth_to_space: target " + Tensor::shape_str({c, h, w}) +
                            " with r=" + std::to_string(r) + " inconsistent with " + x.shape_str());
    const int n_ = x.dim(0);
    Tensor y({n_, c, h, w});
    const std::int64_t plane = static_cast<std::int64_t>(c) * h * w;
    for (int n = 0; n < n_; ++n)
        s2d_map(c, h, w, r, true, x.data.data() + n * plane, y.data.data() + n * plane, false);
    return add_node(std::move(y), {xi},
                    [c, h, w, r, plane, n_](Graph& g, NodeId self) {
                        const auto& in = g.nodes_[static_cast<size_t>(self)].inputs;
                        const Tensor& gy = g.grad_ref(self);
                        Tensor& gx = g.grad_buf(in[0]);
                        for (int n = 0; n < n_; ++n)
                            s2d_map(c, h, w, r, false, gy.data.data() + n * plane,
                                    gx.data.data() + n * plane, true);
                    },
                    "depth_to_space");
}

Graph::NodeId Graph::index_elem(NodeId xi, int i) {
    const Tensor& x = value(xi);
    if (i < 0 || i >= x.numel())
        throw ContractError("index_elem " + std::to_string(i) + " out of range for " +
                            x.shape_str());
    Tensor y({1}, {x.data[static_cast<size_t>(i)]});
    return add_node(std::move(y), {xi},
                    [i](Graph& g, NodeId self) {
                        const auto& in = g.nodes_[static_cast<size_t>(self)].inputs;
                        g.grad_buf(in[0]).data[static_cast<size_t>(i)] += g.grad_ref(self).data[0];
                    },
                    "index_elem");
}

Graph::NodeId Graph::sum_all(NodeId xi) {
    const Tensor& x = value(xi);
    double acc = 0.0;
    for (double v : x.data) acc += v;
    return add_node(Tensor::scalar(acc), {xi},
                    [](Graph& g, NodeId self) {
                        const auto& in = g.nodes_[static_cast<size_t>(self)].inputs;
                        const double gv = g.grad_ref(self).data[0];
                        Tensor& gx = g.grad_buf(in[0]);
                        for (auto& v : gx.data) v += gv;
                    },
                    "sum_all");
}

Graph::NodeId Graph::bce(NodeId pi, Tensor target) {
    const Tensor& p = value(pi);
    if (!p.same_shape(target))
        throw DimError("bce shape mismatch: pred " + p.shape_str() + " vs target " +
                       Tensor::shape_str(target.shape));
    constexpr double lo = 1e-7, hi = 1.0 - 1e-7;
    const double inv_m = 1.0 / static_cast<double>(p.numel());
    double acc = 0.0;
    for (size_t i = 0; i < p.data.size(); ++i) {
        const double pc = std::clamp(p.data[i], lo, hi);
        const double gt = target.data[i];
        acc -= gt * std::log(pc) + (1.0 - gt) * std::log(1.0 - pc);
    }
    return add_node(Tensor::scalar(acc * inv_m), {pi},
                    [target = std::move(target), inv_m](Graph& g, NodeId self) {
                        const auto& in = g.nodes_[static_cast<size_t>(self)].inputs;
                        const double gv = g.grad_ref(self).data[0] * inv_m;
                        const Tensor& p = g.value(in[0]);
                        Tensor& gx = g.grad_buf(in[0]);
                        for (size_t i = 0; i < p.data.size(); ++i) {
                            const double pv = p.data[i];
                            if (pv <= lo || pv >= hi) continue;  // clamp region: zero slope
                            gx.data[i] += gv * (pv - target.data[i]) / (pv * (1.0 - pv));
                        }
                    },
                    "bce");
}

Graph::NodeId Graph::sobel_mag(NodeId xi) {
    const Tensor& x = value(xi);
    require_4d(x, "sobel_mag input");
    const int n_ = x.dim(0), c_ = x.dim(1), h = x.dim(2), w = x.dim(3);
    Tensor y(x.shape);
    Tensor gx_map(x.shape), gy_map(x.shape);  // saved for backward
    auto cl = [](int v, int n) { return v < 0 ? 0 : (v >= n ? n - 1 : v); };
    for (int nc = 0; nc < n_ * c_; ++nc) {
        const double* xp = x.data.data() + static_cast<size_t>(nc) * h * w;
        double* gxp = gx_map.data.data() + static_cast<size_t>(nc) * h * w;
        double* gyp = gy_map.data.data() + static_cast<size_t>(nc) * h * w;
        double* yp = y.data.data() + static_cast<size_t>(nc) * h * w;
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) {
                double sx = 0.0, sy = 0.0;
                for (int di = -1; di <= 1; ++di)
                    for (int dj = -1; dj <= 1; ++dj) {
                        const double v = xp[cl(i + di, h) * w + cl(j + dj, w)];
                        sx += kSobelX[(di + 1) * 3 + (dj + 1)] * v;
                        sy += kSobelY[(di + 1) * 3 + (dj + 1)] * v;
                    }
                gxp[i * w + j] = sx;
                gyp[i * w + j] = sy;
                yp[i * w + j] = std::sqrt(sx * sx + sy * sy + 1e-12);
            }
    }
    return add_node(std::move(y), {xi},
                    [gx_map = std::move(gx_map), gy_map = std::move(gy_map), h, w](Graph& g,
                                                                                   NodeId self) {
                        const auto& in = g.nodes_[static_cast<size_t>(self)].inputs;
                        const Tensor& gy = g.grad_ref(self);
                        const Tensor& y = g.value(self);
                        Tensor& gx = g.grad_buf(in[0]);
                        auto cl = [](int v, int n) { return v < 0 ? 0 : (v >= n ? n - 1 : v); };
                        const int nc_n = gy.dim(0) * gy.dim(1);
                        for (int nc = 0; nc < nc_n; ++nc) {
                            const double* gp = gy.data.data() + static_cast<size_t>(nc) * h * w;
                            const double* yp = y.data.data() + static_cast<size_t>(nc) * h * w;
                            const double* sxp = gx_map.data.data() + static_cast<size_t>(nc) * h * w;
                            const double* syp = gy_map.data.data() + static_cast<size_t>(nc) * h * w;
                            double* out = gx.data.data() + static_cast<size_t>(nc) * h * w;
                            for (int i = 0; i < h; ++i)
                                for (int j = 0; j < w; ++j) {
                                    const double m = yp[i * w + j];
                                    const double dsx = gp[i * w + j] * sxp[i * w + j] / m;
                                    const double dsy = gp[i * w + j] * syp[i * w + j] / m;
                                    for (int di = -1; di <= 1; ++di)
                                        for (int dj = -1; dj <= 1; ++dj) {
                                            const int ii = cl(i + di, h), jj = cl(j + dj, w);
                                            out[ii * w + jj] +=
                                                dsx * kSobelX[(di + 1) * 3 + (dj + 1)] +
                                                dsy * kSobelY[(di + 1) * 3 + (dj + 1)];
                                        }
                                }
                        }
                    },
                    "sobel_mag");
}

}  // namespace fgln
