#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hdrcm/image.hpp"
#include "hdrcm/tensor.hpp"

namespace hdrcm {

// Encoder-decoder consistency network: three downsampling and three
// upsampling stages with residual blocks, group normalization, SiLU, and
// a sinusoidal time embedding injected into every block. The input is the
// noisy state concatenated with the LDR condition along channels.
struct NetConfig {
    int base_channels = 32;
    int depth = 3;  // down/up stage count; the architecture is built for 3
    int blocks_per_stage = 2;
    int time_embed_dim = 128;
    int in_channels = 6;   // x_t (3) + y0 (3)
    int out_channels = 3;
    double data_scale = 0.5;  // s_d of the skip parameterization
    double eps_t = 0.002;     // boundary time

    void validate() const;
    std::array<int, 3> stage_channels() const {
        return {base_channels, 2 * base_channels, 4 * base_channels};
    }
};

template <typename T>
struct ParamRef {
    std::string name;
    std::vector<T>* value;
    std::vector<T>* grad;
    std::vector<int> shape;
};

namespace detail {

inline int norm_groups(int channels) {
    // Channel groups of size 8; narrow layers fall back to a single group.
    if (channels <= 8) return 1;
    if (channels % 8 != 0)
        throw std::invalid_argument("group norm: channels above 8 must be a multiple of 8");
    return channels / 8;
}

template <typename T>
inline T sigmoid(T x) {
    return T(1) / (T(1) + std::exp(-x));
}

template <typename T>
void silu_forward(const std::vector<T>& x, std::vector<T>& y) {
    y.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * sigmoid(x[i]);
}

template <typename T>
void silu_backward(const std::vector<T>& x, const std::vector<T>& dy, std::vector<T>& dx) {
    dx.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const T s = sigmoid(x[i]);
        dx[i] = dy[i] * (s + x[i] * s * (T(1) - s));
    }
}

}  // namespace detail

// 2-D convolution, square kernel, zero padding ks/2, im2col + GEMM.
template <typename T>
struct Conv2d {
    int cin = 0, cout = 0, ks = 3, stride = 1, pad = 1;
    std::vector<T> w, b, gw, gb;  // w laid out (cout, cin*ks*ks)
    Tensor<T> x_cache;

    void build(int cin_, int cout_, int ks_, int stride_) {
        cin = cin_;
        cout = cout_;
        ks = ks_;
        stride = stride_;
        pad = ks_ / 2;
        w.assign(static_cast<std::size_t>(cout) * cin * ks * ks, T(0));
        b.assign(cout, T(0));
        gw.assign(w.size(), T(0));
        gb.assign(b.size(), T(0));
    }
    int out_dim(int d) const { return (d + 2 * pad - ks) / stride + 1; }

    void im2col(const T* x, int h, int w_in, T* col, int oh, int ow) const {
        for (int c = 0; c < cin; ++c)
            for (int ky = 0; ky < ks; ++ky)
                for (int kx = 0; kx < ks; ++kx) {
                    T* dst = col + (static_cast<std::size_t>(c) * ks * ks + ky * ks + kx) *
                                       oh * ow;
                    for (int oy = 0; oy < oh; ++oy) {
                        const int iy = oy * stride - pad + ky;
                        if (iy < 0 || iy >= h) {
                            std::fill(dst + static_cast<std::size_t>(oy) * ow,
                                      dst + static_cast<std::size_t>(oy + 1) * ow, T(0));
                            continue;
                        }
                        const T* src = x + (static_cast<std::size_t>(c) * h + iy) * w_in;
                        for (int ox = 0; ox < ow; ++ox) {
                            const int ix = ox * stride - pad + kx;
                            dst[static_cast<std::size_t>(oy) * ow + ox] =
                                (ix >= 0 && ix < w_in) ? src[ix] : T(0);
                        }
                    }
                }
    }

    void col2im(const T* col, int h, int w_in, T* x, int oh, int ow) const {
        for (int c = 0; c < cin; ++c)
            for (int ky = 0; ky < ks; ++ky)
                for (int kx = 0; kx < ks; ++kx) {
                    const T* src = col + (static_cast<std::size_t>(c) * ks * ks + ky * ks + kx) *
                                             oh * ow;
                    for (int oy = 0; oy < oh; ++oy) {
                        const int iy = oy * stride - pad + ky;
                        if (iy < 0 || iy >= h) continue;
                        T* dst = x + (static_cast<std::size_t>(c) * h + iy) * w_in;
                        for (int ox = 0; ox < ow; ++ox) {
                            const int ix = ox * stride - pad + kx;
                            if (ix >= 0 && ix < w_in)
                                dst[ix] += src[static_cast<std::size_t>(oy) * ow + ox];
                        }
                    }
                }
    }

    Tensor<T> forward(const Tensor<T>& x, bool keep) {
        if (x.c != cin) throw std::invalid_argument("Conv2d: channel mismatch");
        const int oh = out_dim(x.h), ow = out_dim(x.w);
        Tensor<T> y(x.n, cout, oh, ow);
        std::vector<T> col(static_cast<std::size_t>(cin) * ks * ks * oh * ow);
        const int k = cin * ks * ks;
        for (int n = 0; n < x.n; ++n) {
            im2col(x.sample(n), x.h, x.w, col.data(), oh, ow);
            gemm(false, false, cout, oh * ow, k, T(1), this->w.data(), k, col.data(),
                 oh * ow, T(0), y.sample(n), oh * ow);
            for (int c = 0; c < cout; ++c) {
                T* row = y.sample(n) + static_cast<std::size_t>(c) * oh * ow;
                for (int i = 0; i < oh * ow; ++i) row[i] += b[c];
            }
        }
        if (keep) x_cache = x;
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        const Tensor<T>& x = x_cache;
        const int oh = dy.h, ow = dy.w;
        const int k = cin * ks * ks;
        Tensor<T> dx(x.n, cin, x.h, x.w);
        std::vector<T> col(static_cast<std::size_t>(k) * oh * ow);
        std::vector<T> colgrad(col.size());
        for (int n = 0; n < x.n; ++n) {
            im2col(x.sample(n), x.h, x.w, col.data(), oh, ow);
            gemm(false, true, cout, k, oh * ow, T(1), dy.sample(n), oh * ow, col.data(),
                 oh * ow, T(1), gw.data(), k);
            for (int c = 0; c < cout; ++c) {
                const T* row = dy.sample(n) + static_cast<std::size_t>(c) * oh * ow;
                T acc = T(0);
                for (int i = 0; i < oh * ow; ++i) acc += row[i];
                gb[c] += acc;
            }
            gemm(true, false, k, oh * ow, cout, T(1), w.data(), k, dy.sample(n), oh * ow,
                 T(0), colgrad.data(), oh * ow);
            col2im(colgrad.data(), x.h, x.w, dx.sample(n), oh, ow);
        }
        return dx;
    }

    void collect(std::vector<ParamRef<T>>& out, const std::string& prefix) {
        out.push_back({prefix + ".w", &w, &gw, {cout, cin, ks, ks}});
        out.push_back({prefix + ".b", &b, &gb, {cout}});
    }
};

template <typename T>
struct GroupNorm {
    int channels = 0, groups = 1;
    static constexpr double kEps = 1e-5;
    std::vector<T> gamma, beta, ggamma, gbeta;
    Tensor<T> xhat_cache;
    std::vector<T> inv_std_cache;  // n * groups

    void build(int channels_) {
        channels = channels_;
        groups = detail::norm_groups(channels_);
        gamma.assign(channels, T(1));
        beta.assign(channels, T(0));
        ggamma.assign(channels, T(0));
        gbeta.assign(channels, T(0));
    }

    Tensor<T> forward(const Tensor<T>& x, bool keep) {
        const int cg = channels / groups;
        const std::size_t plane = x.plane();
        const std::size_t gsize = cg * plane;
        Tensor<T> y(x.n, x.c, x.h, x.w);
        Tensor<T> xhat(x.n, x.c, x.h, x.w);
        std::vector<T> inv_std(static_cast<std::size_t>(x.n) * groups);
        for (int n = 0; n < x.n; ++n)
            for (int g = 0; g < groups; ++g) {
                const T* xp = x.sample(n) + static_cast<std::size_t>(g) * gsize;
                double mean = 0.0;
                for (std::size_t i = 0; i < gsize; ++i) mean += xp[i];
                mean /= static_cast<double>(gsize);
                double var = 0.0;
                for (std::size_t i = 0; i < gsize; ++i) {
                    const double d = xp[i] - mean;
                    var += d * d;
                }
                var /= static_cast<double>(gsize);
                const T r = static_cast<T>(1.0 / std::sqrt(var + kEps));
                inv_std[static_cast<std::size_t>(n) * groups + g] = r;
                T* xh = xhat.sample(n) + static_cast<std::size_t>(g) * gsize;
                T* yp = y.sample(n) + static_cast<std::size_t>(g) * gsize;
                for (int c = 0; c < cg; ++c) {
                    const T ga = gamma[g * cg + c], be = beta[g * cg + c];
                    for (std::size_t i = 0; i < plane; ++i) {
                        const T v = static_cast<T>((xp[c * plane + i] - mean)) * r;
                        xh[c * plane + i] = v;
                        yp[c * plane + i] = ga * v + be;
                    }
                }
            }
        if (keep) {
            xhat_cache = std::move(xhat);
            inv_std_cache = std::move(inv_std);
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        const Tensor<T>& xhat = xhat_cache;
        const int cg = channels / groups;
        const std::size_t plane = dy.plane();
        const std::size_t gsize = cg * plane;
        Tensor<T> dx(dy.n, dy.c, dy.h, dy.w);
        for (int n = 0; n < dy.n; ++n)
            for (int g = 0; g < groups; ++g) {
                const T* dyp = dy.sample(n) + static_cast<std::size_t>(g) * gsize;
                const T* xh = xhat.sample(n) + static_cast<std::size_t>(g) * gsize;
                const T r = inv_std_cache[static_cast<std::size_t>(n) * groups + g];
                double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
                for (int c = 0; c < cg; ++c) {
                    const T ga = gamma[g * cg + c];
                    for (std::size_t i = 0; i < plane; ++i) {
                        const T dxh = dyp[c * plane + i] * ga;
                        sum_dxhat += dxh;
                        sum_dxhat_xhat += dxh * xh[c * plane + i];
                    }
                }
                const double m = static_cast<double>(gsize);
                const double mean_dxhat = sum_dxhat / m;
                const double mean_dxhat_xhat = sum_dxhat_xhat / m;
                T* dxp = dx.sample(n) + static_cast<std::size_t>(g) * gsize;
                for (int c = 0; c < cg; ++c) {
                    const T ga = gamma[g * cg + c];
                    for (std::size_t i = 0; i < plane; ++i) {
                        const T dxh = dyp[c * plane + i] * ga;
                        dxp[c * plane + i] = static_cast<T>(
                            r * (dxh - mean_dxhat - xh[c * plane + i] * mean_dxhat_xhat));
                    }
                }
                for (int c = 0; c < cg; ++c) {
                    double dg = 0.0, db = 0.0;
                    for (std::size_t i = 0; i < plane; ++i) {
                        dg += dyp[c * plane + i] * xh[c * plane + i];
                        db += dyp[c * plane + i];
                    }
                    ggamma[g * cg + c] += static_cast<T>(dg);
                    gbeta[g * cg + c] += static_cast<T>(db);
                }
            }
        return dx;
    }

    void collect(std::vector<ParamRef<T>>& out, const std::string& prefix) {
        out.push_back({prefix + ".gamma", &gamma, &ggamma, {channels}});
        out.push_back({prefix + ".beta", &beta, &gbeta, {channels}});
    }
};

template <typename T>
struct Linear {
    int in = 0, out = 0;
    std::vector<T> w, b, gw, gb;  // w laid out (out, in)
    std::vector<T> x_cache;       // (n, in)
    int n_cache = 0;

    void build(int in_, int out_) {
        in = in_;
        out = out_;
        w.assign(static_cast<std::size_t>(out) * in, T(0));
        b.assign(out, T(0));
        gw.assign(w.size(), T(0));
        gb.assign(b.size(), T(0));
    }

    // x: (n, in) row-major -> (n, out)
    std::vector<T> forward(const std::vector<T>& x, int n, bool keep) {
        std::vector<T> y(static_cast<std::size_t>(n) * out);
        gemm(false, true, n, out, in, T(1), x.data(), in, w.data(), in, T(0), y.data(), out);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < out; ++j) y[static_cast<std::size_t>(i) * out + j] += b[j];
        if (keep) {
            x_cache = x;
            n_cache = n;
        }
        return y;
    }

    std::vector<T> backward(const std::vector<T>& dy) {
        const int n = n_cache;
        gemm(true, false, out, in, n, T(1), dy.data(), out, x_cache.data(), in, T(1),
             gw.data(), in);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < out; ++j) gb[j] += dy[static_cast<std::size_t>(i) * out + j];
        std::vector<T> dx(static_cast<std::size_t>(n) * in);
        gemm(false, false, n, in, out, T(1), dy.data(), out, w.data(), in, T(0), dx.data(),
             in);
        return dx;
    }

    void collect(std::vector<ParamRef<T>>& out_refs, const std::string& prefix) {
        out_refs.push_back({prefix + ".w", &w, &gw, {out, in}});
        out_refs.push_back({prefix + ".b", &b, &gb, {out}});
    }
};

// Pre-activation residual block with a per-channel time-embedding shift
// after the first convolution.
template <typename T>
struct ResBlock {
    int cin = 0, cout = 0;
    GroupNorm<T> gn1, gn2;
    Conv2d<T> conv1, conv2;
    Linear<T> time_proj;
    Conv2d<T> skip;  // 1x1, only when cin != cout
    bool has_skip = false;

    Tensor<T> a1_cache, h2_cache;

    void build(int cin_, int cout_, int temb_dim) {
        cin = cin_;
        cout = cout_;
        gn1.build(cin);
        conv1.build(cin, cout, 3, 1);
        time_proj.build(temb_dim, cout);
        gn2.build(cout);
        conv2.build(cout, cout, 3, 1);
        has_skip = cin != cout;
        if (has_skip) skip.build(cin, cout, 1, 1);
    }

    Tensor<T> forward(const Tensor<T>& x, const std::vector<T>& temb_act, bool keep) {
        Tensor<T> a = gn1.forward(x, keep);
        Tensor<T> sa(a.n, a.c, a.h, a.w);
        detail::silu_forward(a.v, sa.v);
        if (keep) a1_cache = std::move(a);
        Tensor<T> h = conv1.forward(sa, keep);
        const std::vector<T> tp = time_proj.forward(temb_act, x.n, keep);
        const std::size_t plane = h.plane();
        for (int n = 0; n < h.n; ++n)
            for (int c = 0; c < h.c; ++c) {
                const T s = tp[static_cast<std::size_t>(n) * cout + c];
                T* row = h.sample(n) + static_cast<std::size_t>(c) * plane;
                for (std::size_t i = 0; i < plane; ++i) row[i] += s;
            }
        Tensor<T> h2 = gn2.forward(h, keep);
        Tensor<T> sh(h2.n, h2.c, h2.h, h2.w);
        detail::silu_forward(h2.v, sh.v);
        if (keep) h2_cache = std::move(h2);
        Tensor<T> e = conv2.forward(sh, keep);
        if (has_skip) {
            Tensor<T> sk = skip.forward(x, keep);
            for (std::size_t i = 0; i < e.size(); ++i) e.v[i] += sk.v[i];
        } else {
            for (std::size_t i = 0; i < e.size(); ++i) e.v[i] += x.v[i];
        }
        return e;
    }

    // Returns dx; accumulates the time-embedding gradient into dtemb_act.
    Tensor<T> backward(const Tensor<T>& dy, std::vector<T>& dtemb_act) {
        Tensor<T> dsh = conv2.backward(dy);
        Tensor<T> dh2(dsh.n, dsh.c, dsh.h, dsh.w);
        detail::silu_backward(h2_cache.v, dsh.v, dh2.v);
        Tensor<T> dh = gn2.backward(dh2);
        // time shift gradient: sum over spatial positions
        const std::size_t plane = dh.plane();
        std::vector<T> dtp(static_cast<std::size_t>(dh.n) * cout);
        for (int n = 0; n < dh.n; ++n)
            for (int c = 0; c < cout; ++c) {
                const T* row = dh.sample(n) + static_cast<std::size_t>(c) * plane;
                T acc = T(0);
                for (std::size_t i = 0; i < plane; ++i) acc += row[i];
                dtp[static_cast<std::size_t>(n) * cout + c] = acc;
            }
        const std::vector<T> dtemb_local = time_proj.backward(dtp);
        for (std::size_t i = 0; i < dtemb_act.size(); ++i) dtemb_act[i] += dtemb_local[i];
        Tensor<T> dsa = conv1.backward(dh);
        Tensor<T> da(dsa.n, dsa.c, dsa.h, dsa.w);
        detail::silu_backward(a1_cache.v, dsa.v, da.v);
        Tensor<T> dx = gn1.backward(da);
        if (has_skip) {
            Tensor<T> dsk = skip.backward(dy);
            for (std::size_t i = 0; i < dx.size(); ++i) dx.v[i] += dsk.v[i];
        } else {
            for (std::size_t i = 0; i < dx.size(); ++i) dx.v[i] += dy.v[i];
        }
        return dx;
    }

    void collect(std::vector<ParamRef<T>>& out, const std::string& prefix) {
        gn1.collect(out, prefix + ".gn1");
        conv1.collect(out, prefix + ".conv1");
        time_proj.collect(out, prefix + ".tproj");
        gn2.collect(out, prefix + ".gn2");
        conv2.collect(out, prefix + ".conv2");
        if (has_skip) skip.collect(out, prefix + ".skip");
    }
};

namespace detail {

template <typename T>
Tensor<T> upsample_nearest2(const Tensor<T>& x) {
    Tensor<T> y(x.n, x.c, 2 * x.h, 2 * x.w);
    for (int n = 0; n < x.n; ++n)
        for (int c = 0; c < x.c; ++c)
            for (int yy = 0; yy < y.h; ++yy)
                for (int xx = 0; xx < y.w; ++xx)
                    y.at(n, c, yy, xx) = x.at(n, c, yy / 2, xx / 2);
    return y;
}

template <typename T>
Tensor<T> upsample_nearest2_backward(const Tensor<T>& dy) {
    Tensor<T> dx(dy.n, dy.c, dy.h / 2, dy.w / 2);
    for (int n = 0; n < dy.n; ++n)
        for (int c = 0; c < dy.c; ++c)
            for (int yy = 0; yy < dy.h; ++yy)
                for (int xx = 0; xx < dy.w; ++xx)
                    dx.at(n, c, yy / 2, xx / 2) += dy.at(n, c, yy, xx);
    return dx;
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
    Tensor<T> y(a.n, a.c + b.c, a.h, a.w);
    const std::size_t pa = a.plane();
    for (int n = 0; n < a.n; ++n) {
        std::copy(a.sample(n), a.sample(n) + static_cast<std::size_t>(a.c) * pa,
                  y.sample(n));
        std::copy(b.sample(n), b.sample(n) + static_cast<std::size_t>(b.c) * pa,
                  y.sample(n) + static_cast<std::size_t>(a.c) * pa);
    }
    return y;
}

template <typename T>
void split_channels(const Tensor<T>& dy, int ca, Tensor<T>& da, Tensor<T>& db) {
    da = Tensor<T>(dy.n, ca, dy.h, dy.w);
    db = Tensor<T>(dy.n, dy.c - ca, dy.h, dy.w);
    const std::size_t p = dy.plane();
    for (int n = 0; n < dy.n; ++n) {
        std::copy(dy.sample(n), dy.sample(n) + static_cast<std::size_t>(ca) * p,
                  da.sample(n));
        std::copy(dy.sample(n) + static_cast<std::size_t>(ca) * p,
                  dy.sample(n) + static_cast<std::size_t>(dy.c) * p, db.sample(n));
    }
}

// Sinusoidal embedding of t (scaled by 1000 to spread the frequencies
// over the [eps_t, 1] range).
template <typename T>
std::vector<T> sin_embed(const std::vector<double>& ts, int dim) {
    const int half = dim / 2;
    std::vector<T> out(ts.size() * static_cast<std::size_t>(dim));
    for (std::size_t n = 0; n < ts.size(); ++n)
        for (int i = 0; i < half; ++i) {
            const double f = std::exp(-std::log(10000.0) * i / (half - 1));
            const double arg = 1000.0 * ts[n] * f;
            out[n * dim + i] = static_cast<T>(std::sin(arg));
            out[n * dim + half + i] = static_cast<T>(std::cos(arg));
        }
    return out;
}

}  // namespace detail

template <typename T>
struct ConsistencyNet {
    NetConfig cfg;

    Linear<T> tlin1, tlin2;
    Conv2d<T> stem;
    std::array<std::vector<ResBlock<T>>, 3> down_blocks;
    std::array<Conv2d<T>, 3> down_convs;
    ResBlock<T> mid1, mid2;
    std::array<Conv2d<T>, 3> up_convs;  // indexed by stage (2 is deepest)
    std::array<std::vector<ResBlock<T>>, 3> up_blocks;
    GroupNorm<T> out_gn;
    Conv2d<T> out_conv;

    std::uint64_t forward_evals = 0;

    // backward routing caches
    std::vector<T> temb_pre1, temb_pre2;  // tlin1 in/out activations
    std::vector<T> temb_act_cache;
    Tensor<T> out_pre_cache;  // out_gn output before the final SiLU
    std::array<Tensor<T>, 3> skip_grads;
    int batch_cache = 0;

    void build(const NetConfig& c) {
        cfg = c;
        cfg.validate();
        const auto ch = cfg.stage_channels();
        const int d = cfg.time_embed_dim;
        tlin1.build(d, d);
        tlin2.build(d, d);
        stem.build(cfg.in_channels, ch[0], 3, 1);
        for (int s = 0; s < 3; ++s) {
            down_blocks[s].resize(cfg.blocks_per_stage);
            for (auto& blk : down_blocks[s]) blk.build(ch[s], ch[s], d);
            down_convs[s].build(ch[s], s < 2 ? ch[s + 1] : ch[2], 3, 2);
        }
        mid1.build(ch[2], ch[2], d);
        mid2.build(ch[2], ch[2], d);
        for (int s = 2; s >= 0; --s) {
            up_convs[s].build(s == 2 ? ch[2] : ch[s + 1], ch[s], 3, 1);
            up_blocks[s].resize(cfg.blocks_per_stage);
            for (int b = 0; b < cfg.blocks_per_stage; ++b)
                up_blocks[s][b].build(b == 0 ? 2 * ch[s] : ch[s], ch[s], d);
        }
        out_gn.build(ch[0]);
        out_conv.build(ch[0], cfg.out_channels, 3, 1);
    }

    std::vector<ParamRef<T>> params() {
        std::vector<ParamRef<T>> out;
        tlin1.collect(out, "time.lin1");
        tlin2.collect(out, "time.lin2");
        stem.collect(out, "stem");
        for (int s = 0; s < 3; ++s) {
            for (int b = 0; b < cfg.blocks_per_stage; ++b)
                down_blocks[s][b].collect(out, "down" + std::to_string(s) + ".block" +
                                                   std::to_string(b));
            down_convs[s].collect(out, "down" + std::to_string(s) + ".pool");
        }
        mid1.collect(out, "mid.block0");
        mid2.collect(out, "mid.block1");
        for (int s = 2; s >= 0; --s) {
            up_convs[s].collect(out, "up" + std::to_string(s) + ".conv");
            for (int b = 0; b < cfg.blocks_per_stage; ++b)
                up_blocks[s][b].collect(out, "up" + std::to_string(s) + ".block" +
                                                 std::to_string(b));
        }
        out_gn.collect(out, "head.gn");
        out_conv.collect(out, "head.conv");
        return out;
    }

    std::int64_t param_count() {
        std::int64_t total = 0;
        for (const auto& p : params()) total += static_cast<std::int64_t>(p.value->size());
        return total;
    }

    void zero_grads() {
        for (auto& p : params()) std::fill(p.grad->begin(), p.grad->end(), T(0));
    }

    // x: (N, in_channels, H, W) with H, W divisible by 2^depth.
    Tensor<T> raw_forward(const Tensor<T>& x, const std::vector<double>& ts, bool keep) {
        if (x.c != cfg.in_channels)
            throw std::invalid_argument("raw_forward: channel mismatch");
        if (x.h % 8 != 0 || x.w % 8 != 0)
            throw std::invalid_argument("raw_forward: spatial dims must be divisible by 8");
        if (static_cast<int>(ts.size()) != x.n)
            throw std::invalid_argument("raw_forward: one time per sample required");
        ++forward_evals;
        batch_cache = x.n;

        std::vector<T> emb = detail::sin_embed<T>(ts, cfg.time_embed_dim);
        std::vector<T> t1 = tlin1.forward(emb, x.n, keep);
        std::vector<T> t1s;
        detail::silu_forward(t1, t1s);
        if (keep) temb_pre1 = std::move(t1);
        std::vector<T> t2 = tlin2.forward(t1s, x.n, keep);
        std::vector<T> temb_act;
        detail::silu_forward(t2, temb_act);
        if (keep) {
            temb_pre2 = std::move(t2);
            temb_act_cache = temb_act;
        }

        Tensor<T> h = stem.forward(x, keep);
        std::array<Tensor<T>, 3> skips;
        for (int s = 0; s < 3; ++s) {
            for (auto& blk : down_blocks[s]) h = blk.forward(h, temb_act, keep);
            skips[s] = h;
            h = down_convs[s].forward(h, keep);
        }
        h = mid1.forward(h, temb_act, keep);
        h = mid2.forward(h, temb_act, keep);
        for (int s = 2; s >= 0; --s) {
            h = detail::upsample_nearest2(h);
            h = up_convs[s].forward(h, keep);
            h = detail::concat_channels(h, skips[s]);
            for (auto& blk : up_blocks[s]) h = blk.forward(h, temb_act, keep);
        }
        Tensor<T> g = out_gn.forward(h, keep);
        Tensor<T> gs(g.n, g.c, g.h, g.w);
        detail::silu_forward(g.v, gs.v);
        if (keep) out_pre_cache = std::move(g);
        return out_conv.forward(gs, keep);
    }

    // Accumulates parameter gradients for the preceding raw_forward
    // (which must have been called with keep = true).
    void raw_backward(const Tensor<T>& dout) {
        const auto ch = cfg.stage_channels();
        Tensor<T> dgs = out_conv.backward(dout);
        Tensor<T> dg(dgs.n, dgs.c, dgs.h, dgs.w);
        detail::silu_backward(out_pre_cache.v, dgs.v, dg.v);
        Tensor<T> dh = out_gn.backward(dg);

        std::vector<T> dtemb_act(temb_act_cache.size(), T(0));
        for (int s = 0; s <= 2; ++s) {
            for (int b = cfg.blocks_per_stage - 1; b >= 0; --b)
                dh = up_blocks[s][b].backward(dh, dtemb_act);
            Tensor<T> dconv, dskip;
            detail::split_channels(dh, ch[s], dconv, dskip);
            skip_grads[s] = std::move(dskip);
            dh = up_convs[s].backward(dconv);
            dh = detail::upsample_nearest2_backward(dh);
        }
        dh = mid2.backward(dh, dtemb_act);
        dh = mid1.backward(dh, dtemb_act);
        for (int s = 2; s >= 0; --s) {
            dh = down_convs[s].backward(dh);
            for (std::size_t i = 0; i < dh.size(); ++i) dh.v[i] += skip_grads[s].v[i];
            for (int b = cfg.blocks_per_stage - 1; b >= 0; --b)
                dh = down_blocks[s][b].backward(dh, dtemb_act);
        }
        (void)stem.backward(dh);

        std::vector<T> dt2(dtemb_act.size());
        detail::silu_backward(temb_pre2, dtemb_act, dt2);
        std::vector<T> dt1s = tlin2.backward(dt2);
        std::vector<T> dt1(dt1s.size());
        detail::silu_backward(temb_pre1, dt1s, dt1);
        (void)tlin1.backward(dt1);
    }
};

// Skip/output coefficients of the consistency parameterization:
// c_skip(eps_t) = 1 and c_out(eps_t) = 0 structurally, so the boundary
// identity f(x, eps_t, y) = x holds for arbitrary parameters.
inline double c_skip(double t, double eps_t, double data_scale) {
    const double d = t - eps_t;
    return data_scale * data_scale / (d * d + data_scale * data_scale);
}
inline double c_out(double t, double eps_t, double data_scale) {
    const double d = t - eps_t;
    return d * data_scale / std::sqrt(d * d + data_scale * data_scale);
}

// f(x, t, y) = c_skip(t) x + c_out(t) raw(x ++ y, t).
template <typename T>
Tensor<T> consistency_out(ConsistencyNet<T>& net, const Tensor<T>& x_t,
                          const std::vector<double>& ts, const Tensor<T>& y0, bool keep) {
    if (!x_t.same_shape(y0))
        throw std::invalid_argument("consistency_out: x_t/y0 shape mismatch");
    Tensor<T> x6 = detail::concat_channels(x_t, y0);
    Tensor<T> raw = net.raw_forward(x6, ts, keep);
    Tensor<T> out(x_t.n, x_t.c, x_t.h, x_t.w);
    const std::size_t per = static_cast<std::size_t>(x_t.c) * x_t.plane();
    for (int n = 0; n < x_t.n; ++n) {
        const T cs = static_cast<T>(c_skip(ts[n], net.cfg.eps_t, net.cfg.data_scale));
        const T co = static_cast<T>(c_out(ts[n], net.cfg.eps_t, net.cfg.data_scale));
        const T* xp = x_t.sample(n);
        const T* rp = raw.sample(n);
        T* op = out.sample(n);
        for (std::size_t i = 0; i < per; ++i) op[i] = cs * xp[i] + co * rp[i];
    }
    return out;
}

// Backward of consistency_out with respect to the network parameters.
template <typename T>
void consistency_backward(ConsistencyNet<T>& net, const Tensor<T>& dout,
                          const std::vector<double>& ts) {
    Tensor<T> draw(dout.n, dout.c, dout.h, dout.w);
    const std::size_t per = static_cast<std::size_t>(dout.c) * dout.plane();
    for (int n = 0; n < dout.n; ++n) {
        const T co = static_cast<T>(c_out(ts[n], net.cfg.eps_t, net.cfg.data_scale));
        const T* dp = dout.sample(n);
        T* rp = draw.sample(n);
        for (std::size_t i = 0; i < per; ++i) rp[i] = co * dp[i];
    }
    net.raw_backward(draw);
}

// Fan-in scaled random initialization; the output projection starts at
// zero so the initial map reduces to the skip path.
template <typename T>
void init_params(ConsistencyNet<T>& net, SeededRng& rng) {
    for (auto& p : net.params()) {
        const bool is_head = p.name.rfind("head.conv", 0) == 0;
        const bool is_bias = p.shape.size() == 1 && p.name.size() > 2 &&
                             p.name.compare(p.name.size() - 2, 2, ".b") == 0;
        const bool is_norm = p.name.find(".gn") != std::string::npos ||
                             p.name.find("gamma") != std::string::npos ||
                             p.name.find("beta") != std::string::npos;
        if (is_head || is_bias || is_norm) continue;  // keep build-time defaults / zeros
        std::size_t fan_in = 1;
        for (std::size_t i = 1; i < p.shape.size(); ++i)
            fan_in *= static_cast<std::size_t>(p.shape[i]);
        const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (auto& v : *p.value) v = static_cast<T>(rng.next_normal() * scale);
    }
}

template <typename T>
struct EmaState {
    double decay = 0.999;
    ConsistencyNet<T> shadow;

    void init(const ConsistencyNet<T>& net, double decay_) {
        decay = decay_;
        shadow = net;
    }
    void update(ConsistencyNet<T>& net) {
        auto ps = net.params();
        auto qs = shadow.params();
        for (std::size_t i = 0; i < ps.size(); ++i) {
            auto& src = *ps[i].value;
            auto& dst = *qs[i].value;
            if (src.size() != dst.size())
                throw std::invalid_argument("ema_update: shape mismatch");
            for (std::size_t j = 0; j < src.size(); ++j)
                dst[j] = static_cast<T>(decay * dst[j] + (1.0 - decay) * src[j]);
        }
    }
};

}  // namespace hdrcm
