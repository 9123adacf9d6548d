#pragma once

#include <algorithm>

#include "mrtk/core.hpp"
#include "mrtk/rng.hpp"

namespace mrtk::nn {

// Dense [channels][rows][cols] activation tensor, double precision.
struct Tensor {
    int c = 0, h = 0, w = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int c_, int h_, int w_) : c(c_), h(h_), w(w_), v(static_cast<std::size_t>(c_) * h_ * w_, 0.0) {}

    double* plane(int ch) { return v.data() + static_cast<std::size_t>(ch) * h * w; }
    const double* plane(int ch) const { return v.data() + static_cast<std::size_t>(ch) * h * w; }
    double& at(int ch, int y, int x) { return v[(static_cast<std::size_t>(ch) * h + y) * w + x]; }
    double at(int ch, int y, int x) const { return v[(static_cast<std::size_t>(ch) * h + y) * w + x]; }
    std::size_t size() const { return v.size(); }
};

enum class PadMode { zero, periodic };

// Flat parameter vector with ADAM moment buffers; layers hold offsets into it.
struct ParamStore {
    std::vector<double> params, grads, m, v;

    std::size_t alloc(std::size_t count) {
        const std::size_t off = params.size();
        params.resize(off + count, 0.0);
        grads.resize(off + count, 0.0);
        m.resize(off + count, 0.0);
        v.resize(off + count, 0.0);
        return off;
    }
    void zero_grads() { std::fill(grads.begin(), grads.end(), 0.0); }
};

struct AdamConfig {
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

// Standard bias-corrected ADAM update; t is the 1-based step index.
inline void adam_step(ParamStore& store, double lr, long t, const AdamConfig& cfg = {}) {
    if (t < 1) throw ValidationError("adam_step: t must be >= 1");
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < store.params.size(); ++i) {
        const double g = store.grads[i];
        store.m[i] = cfg.beta1 * store.m[i] + (1.0 - cfg.beta1) * g;
        store.v[i] = cfg.beta2 * store.v[i] + (1.0 - cfg.beta2) * g * g;
        const double mhat = store.m[i] / bc1;
        const double vhat = store.v[i] / bc2;
        store.params[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
}

// --- convolution -------------------------------------------------------------

// Square kernel, "same" padding at stride 1, halving at stride 2.
// Weights [cout][cin][k][k], bias [cout].
struct Conv2D {
    int cin = 0, cout = 0, k = 3, stride = 1;
    std::size_t w_off = 0, b_off = 0;

    std::size_t weight_count() const {
        return static_cast<std::size_t>(cout) * cin * k * k;
    }

    void alloc(ParamStore& store) {
        w_off = store.alloc(weight_count());
        b_off = store.alloc(static_cast<std::size_t>(cout));
    }

    void init_he(ParamStore& store, CounterRng& rng) const {
        const double std = std::sqrt(2.0 / (static_cast<double>(cin) * k * k));
        for (std::size_t i = 0; i < weight_count(); ++i) store.params[w_off + i] = std * rng.normal();
    }

    int out_dim(int n) const { return (n + stride - 1) / stride; }

    Tensor forward(const Tensor& in, const ParamStore& store, PadMode pad) const {
        if (in.c != cin) throw ValidationError("conv2d: channel mismatch");
        const int oh = out_dim(in.h), ow = out_dim(in.w);
        const int p = k / 2;
        Tensor out(cout, oh, ow);
        const double* W = store.params.data() + w_off;
        const double* B = store.params.data() + b_off;
        for (int co = 0; co < cout; ++co) {
            double* op = out.plane(co);
            const double bias = B[co];
            for (int i = 0; i < oh * ow; ++i) op[i] = bias;
            for (int ci = 0; ci < cin; ++ci) {
                const double* ip = in.plane(ci);
                for (int ky = 0; ky < k; ++ky)
                    for (int kx = 0; kx < k; ++kx) {
                        const double wv = W[((static_cast<std::size_t>(co) * cin + ci) * k + ky) * k + kx];
                        if (wv == 0.0) continue;
                        for (int oy = 0; oy < oh; ++oy) {
                            int iy = oy * stride + ky - p;
                            if (pad == PadMode::periodic) iy = (iy % in.h + in.h) % in.h;
                            else if (iy < 0 || iy >= in.h) continue;
                            const double* irow = ip + static_cast<std::size_t>(iy) * in.w;
                            double* orow = op + static_cast<std::size_t>(oy) * ow;
                            if (pad == PadMode::zero && stride == 1) {
                                const int x0 = std::max(0, p - kx);
                                const int x1 = std::min(ow, in.w - kx + p);
                                const double* src = irow + kx - p;
                                for (int ox = x0; ox < x1; ++ox) orow[ox] += wv * src[ox];
                            } else {
                                for (int ox = 0; ox < ow; ++ox) {
                                    int ix = ox * stride + kx - p;
                                    if (pad == PadMode::periodic) ix = (ix % in.w + in.w) % in.w;
                                    else if (ix < 0 || ix >= in.w) continue;
                                    orow[ox] += wv * irow[ix];
                                }
                            }
                        }
                    }
            }
        }
        return out;
    }

    // Accumulates weight/bias grads into store.grads and returns grad wrt input.
    Tensor backward(const Tensor& in, const Tensor& grad_out, ParamStore& store, PadMode pad) const {
        const int oh = grad_out.h, ow = grad_out.w;
        const int p = k / 2;
        Tensor grad_in(cin, in.h, in.w);
        const double* W = store.params.data() + w_off;
        double* dW = store.grads.data() + w_off;
        double* dB = store.grads.data() + b_off;
        for (int co = 0; co < cout; ++co) {
            const double* gp = grad_out.plane(co);
            double acc = 0.0;
            for (int i = 0; i < oh * ow; ++i) acc += gp[i];
            dB[co] += acc;
            for (int ci = 0; ci < cin; ++ci) {
                const double* ip = in.plane(ci);
                double* gip = grad_in.plane(ci);
                for (int ky = 0; ky < k; ++ky)
                    for (int kx = 0; kx < k; ++kx) {
                        const std::size_t widx =
                            ((static_cast<std::size_t>(co) * cin + ci) * k + ky) * k + kx;
                        const double wv = W[widx];
                        double wg = 0.0;
                        for (int oy = 0; oy < oh; ++oy) {
                            int iy = oy * stride + ky - p;
                            if (pad == PadMode::periodic) iy = (iy % in.h + in.h) % in.h;
                            else if (iy < 0 || iy >= in.h) continue;
                            const double* irow = ip + static_cast<std::size_t>(iy) * in.w;
                            double* girow = gip + static_cast<std::size_t>(iy) * in.w;
                            const double* grow = gp + static_cast<std::size_t>(oy) * ow;
                            if (pad == PadMode::zero && stride == 1) {
                                const int x0 = std::max(0, p - kx);
                                const int x1 = std::min(ow, in.w - kx + p);
                                const double* src = irow + kx - p;
                                double* gsrc = girow + kx - p;
                                for (int ox = x0; ox < x1; ++ox) {
                                    wg += grow[ox] * src[ox];
                                    gsrc[ox] += wv * grow[ox];
                                }
                            } else {
                                for (int ox = 0; ox < ow; ++ox) {
                                    int ix = ox * stride + kx - p;
                                    if (pad == PadMode::periodic) ix = (ix % in.w + in.w) % in.w;
                                    else if (ix < 0 || ix >= in.w) continue;
                                    wg += grow[ox] * irow[ix];
                                    girow[ix] += wv * grow[ox];
                                }
                            }
                        }
                        dW[widx] += wg;
                    }
            }
        }
        return grad_in;
    }
};

// --- pointwise and shape ops --------------------------------------------------

inline void relu_inplace(Tensor& t) {
    for (auto& x : t.v) x = x > 0.0 ? x : 0.0;
}

// grad masked by the cached post-activation output.
inline Tensor relu_backward(const Tensor& out, const Tensor& grad_out) {
    Tensor g = grad_out;
    for (std::size_t i = 0; i < g.v.size(); ++i)
        if (out.v[i] <= 0.0) g.v[i] = 0.0;
    return g;
}

inline Tensor upsample2x(const Tensor& in) {
    Tensor out(in.c, in.h * 2, in.w * 2);
    for (int c = 0; c < in.c; ++c)
        for (int y = 0; y < out.h; ++y)
            for (int x = 0; x < out.w; ++x) out.at(c, y, x) = in.at(c, y / 2, x / 2);
    return out;
}

inline Tensor upsample2x_backward(const Tensor& grad_out, int in_h, int in_w) {
    Tensor g(grad_out.c, in_h, in_w);
    for (int c = 0; c < grad_out.c; ++c)
        for (int y = 0; y < grad_out.h; ++y)
            for (int x = 0; x < grad_out.w; ++x) g.at(c, y / 2, x / 2) += grad_out.at(c, y, x);
    return g;
}

inline Tensor concat(const Tensor& a, const Tensor& b) {
    if (a.h != b.h || a.w != b.w) throw ValidationError("concat: spatial mismatch");
    Tensor out(a.c + b.c, a.h, a.w);
    std::copy(a.v.begin(), a.v.end(), out.v.begin());
    std::copy(b.v.begin(), b.v.end(), out.v.begin() + static_cast<std::ptrdiff_t>(a.v.size()));
    return out;
}

inline std::pair<Tensor, Tensor> split(const Tensor& g, int ca, int cb) {
    Tensor a(ca, g.h, g.w), b(cb, g.h, g.w);
    std::copy(g.v.begin(), g.v.begin() + static_cast<std::ptrdiff_t>(a.v.size()), a.v.begin());
    std::copy(g.v.begin() + static_cast<std::ptrdiff_t>(a.v.size()), g.v.end(), b.v.begin());
    return {std::move(a), std::move(b)};
}

// --- fully connected -----------------------------------------------------------

struct Dense {
    int in = 0, out = 0;
    std::size_t w_off = 0, b_off = 0;

    void alloc(ParamStore& store) {
        w_off = store.alloc(static_cast<std::size_t>(in) * out);
        b_off = store.alloc(static_cast<std::size_t>(out));
    }
    void init_he(ParamStore& store, CounterRng& rng) const {
        const double std = std::sqrt(2.0 / static_cast<double>(in));
        for (std::size_t i = 0; i < static_cast<std::size_t>(in) * out; ++i)
            store.params[w_off + i] = std * rng.normal();
    }
    std::vector<double> forward(const std::vector<double>& x, const ParamStore& store) const {
        std::vector<double> y(out);
        const double* W = store.params.data() + w_off;
        const double* B = store.params.data() + b_off;
        for (int o = 0; o < out; ++o) {
            double acc = B[o];
            for (int i = 0; i < in; ++i) acc += W[static_cast<std::size_t>(o) * in + i] * x[i];
            y[o] = acc;
        }
        return y;
    }
    std::vector<double> backward(const std::vector<double>& x, const std::vector<double>& grad_y,
                                 ParamStore& store) const {
        std::vector<double> gx(in, 0.0);
        const double* W = store.params.data() + w_off;
        double* dW = store.grads.data() + w_off;
        double* dB = store.grads.data() + b_off;
        for (int o = 0; o < out; ++o) {
            dB[o] += grad_y[o];
            for (int i = 0; i < in; ++i) {
                dW[static_cast<std::size_t>(o) * in + i] += grad_y[o] * x[i];
                gx[i] += W[static_cast<std::size_t>(o) * in + i] * grad_y[o];
            }
        }
        return gx;
    }
};

// Mean absolute error and its gradient wrt pred.
inline double l1_loss(const Tensor& pred, const Tensor& target, Tensor* grad = nullptr) {
    if (pred.v.size() != target.v.size()) throw ValidationError("l1_loss: shape mismatch");
    const double n = static_cast<double>(pred.v.size());
    double loss = 0.0;
    if (grad) *grad = Tensor(pred.c, pred.h, pred.w);
    for (std::size_t i = 0; i < pred.v.size(); ++i) {
        const double d = pred.v[i] - target.v[i];
        loss += std::abs(d);
        if (grad) grad->v[i] = (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) / n;
    }
    return loss / n;
}

}  // namespace mrtk::nn
