#pragma once

#include <numeric>

#include "mrtk/context.hpp"
#include "mrtk/io.hpp"
#include "mrtk/nn.hpp"
#include "mrtk/standardize.hpp"

namespace mrtk {

struct UNetSpec {
    int depth = 2;          // number of down/up levels
    int base_channels = 8;  // channels at the top level, doubled each level
    int in_channels = 1;    // 1 (2D) or 7 (slice stack)
    nn::PadMode pad = nn::PadMode::zero;

    void validate() const {
        if (depth < 1 || depth > 4) throw ValidationError("unet: depth must be in [1,4]");
        if (base_channels < 2) throw ValidationError("unet: base_channels must be >= 2");
        if (in_channels != 1 && in_channels != 7)
            throw ValidationError("unet: in_channels must be 1 or 7");
    }
    int bottleneck_channels() const { return base_channels << depth; }
    int min_multiple() const { return 1 << depth; }
};

struct DMPSpec {
    int context_len = 16;
    std::vector<int> hidden{32, 32};
};

// Context-modulated U-Net: encoder/decoder with skip connections; a small FC
// stack maps the context vector to a per-channel 1x1 mixing kernel and bias
// applied at the bottleneck. The final FC layer is zero-initialized, so at
// initialization the modulation is the identity and the context has no effect.
class CEUNet {
public:
    struct Cache {
        nn::Tensor input;
        std::vector<nn::Tensor> enc_in, enc_mid, enc_out;   // per level
        std::vector<nn::Tensor> down_out;                    // per level
        nn::Tensor bn_mid, mod_in, mod_out, bn_out;
        std::vector<nn::Tensor> up_in, up_sampled, up_conv_out, cat, dec_mid, dec_out;
        std::vector<std::vector<double>> fc_in;              // per FC layer input
        std::vector<double> mod_kernel, mod_bias;            // decoded DMP output
        nn::Tensor pre_residual;
    };

    CEUNet(const UNetSpec& spec, const DMPSpec& dmp, std::uint64_t seed) : spec_(spec), dmp_(dmp) {
        spec_.validate();
        const int D = spec_.depth;
        const int Cb = spec_.bottleneck_channels();
        auto ch = [&](int level) { return spec_.base_channels << level; };

        enc_a_.resize(D);
        enc_b_.resize(D);
        down_.resize(D);
        up_conv_.resize(D);
        dec_a_.resize(D);
        dec_b_.resize(D);
        for (int i = 0; i < D; ++i) {
            enc_a_[i] = {i == 0 ? spec_.in_channels : ch(i), ch(i), 3, 1};
            enc_b_[i] = {ch(i), ch(i), 3, 1};
            down_[i] = {ch(i), ch(i + 1), 3, 2};
            up_conv_[i] = {ch(i + 1), ch(i), 3, 1};
            dec_a_[i] = {2 * ch(i), ch(i), 3, 1};
            dec_b_[i] = {ch(i), ch(i), 3, 1};
        }
        bn_a_ = {Cb, Cb, 3, 1};
        bn_b_ = {Cb, Cb, 3, 1};
        final_ = {spec_.base_channels, 1, 1, 1};

        int fin = dmp_.context_len;
        for (int h : dmp_.hidden) {
            if (h < 1) throw ValidationError("dmp: hidden width must be >= 1");
            fc_.push_back({fin, h});
            fin = h;
        }
        fc_.push_back({fin, Cb * Cb + Cb});

        for (auto& c : enc_a_) c.alloc(store_);
        for (auto& c : enc_b_) c.alloc(store_);
        for (auto& c : down_) c.alloc(store_);
        bn_a_.alloc(store_);
        bn_b_.alloc(store_);
        for (auto& c : up_conv_) c.alloc(store_);
        for (auto& c : dec_a_) c.alloc(store_);
        for (auto& c : dec_b_) c.alloc(store_);
        final_.alloc(store_);
        for (auto& f : fc_) f.alloc(store_);

        CounterRng rng(seed, 0x6e657477);
        for (auto& c : enc_a_) c.init_he(store_, rng);
        for (auto& c : enc_b_) c.init_he(store_, rng);
        for (auto& c : down_) c.init_he(store_, rng);
        bn_a_.init_he(store_, rng);
        bn_b_.init_he(store_, rng);
        for (auto& c : up_conv_) c.init_he(store_, rng);
        for (auto& c : dec_a_) c.init_he(store_, rng);
        for (auto& c : dec_b_) c.init_he(store_, rng);
        final_.init_he(store_, rng);
        for (std::size_t i = 0; i + 1 < fc_.size(); ++i) fc_[i].init_he(store_, rng);
        // final FC stays zero: identity modulation at init
    }

    const UNetSpec& spec() const { return spec_; }
    const DMPSpec& dmp_spec() const { return dmp_; }
    nn::ParamStore& store() { return store_; }
    const nn::ParamStore& store() const { return store_; }

    nn::Tensor forward(const nn::Tensor& in, const ContextVector& ctx, Cache* cache = nullptr) const {
        if (in.c != spec_.in_channels) throw ValidationError("ce_unet: input channel mismatch");
        const int m = spec_.min_multiple();
        if (in.h % m != 0 || in.w % m != 0)
            throw ValidationError("ce_unet: input dims must be a multiple of 2^depth");
        const int D = spec_.depth;
        const int Cb = spec_.bottleneck_channels();
        Cache local;
        Cache& c = cache ? *cache : local;
        c = Cache{};
        c.enc_in.resize(D);
        c.enc_mid.resize(D);
        c.enc_out.resize(D);
        c.down_out.resize(D);
        c.up_in.resize(D);
        c.up_sampled.resize(D);
        c.up_conv_out.resize(D);
        c.cat.resize(D);
        c.dec_mid.resize(D);
        c.dec_out.resize(D);
        c.input = in;

        // DMP: context -> bottleneck 1x1 kernel + bias (residual form).
        std::vector<double> x(ctx.begin(), ctx.end());
        for (std::size_t l = 0; l < fc_.size(); ++l) {
            c.fc_in.push_back(x);
            x = fc_[l].forward(x, store_);
            if (l + 1 < fc_.size())
                for (auto& v : x) v = v > 0.0 ? v : 0.0;
        }
        c.mod_kernel.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(Cb) * Cb);
        c.mod_bias.assign(x.begin() + static_cast<std::ptrdiff_t>(Cb) * Cb, x.end());

        // encoder
        nn::Tensor t = in;
        for (int i = 0; i < D; ++i) {
            c.enc_in[i] = t;
            t = enc_a_[i].forward(t, store_, spec_.pad);
            nn::relu_inplace(t);
            c.enc_mid[i] = t;
            t = enc_b_[i].forward(t, store_, spec_.pad);
            nn::relu_inplace(t);
            c.enc_out[i] = t;
            t = down_[i].forward(t, store_, spec_.pad);
            nn::relu_inplace(t);
            c.down_out[i] = t;
        }

        // bottleneck with context modulation after the first conv
        t = bn_a_.forward(t, store_, spec_.pad);
        nn::relu_inplace(t);
        c.bn_mid = t;
        c.mod_in = t;
        t = modulate(t, c.mod_kernel, c.mod_bias);
        c.mod_out = t;
        t = bn_b_.forward(t, store_, spec_.pad);
        nn::relu_inplace(t);
        c.bn_out = t;

        // decoder
        for (int i = D - 1; i >= 0; --i) {
            c.up_in[i] = t;
            t = nn::upsample2x(t);
            c.up_sampled[i] = t;
            t = up_conv_[i].forward(t, store_, spec_.pad);
            nn::relu_inplace(t);
            c.up_conv_out[i] = t;
            t = nn::concat(t, c.enc_out[i]);
            c.cat[i] = t;
            t = dec_a_[i].forward(t, store_, spec_.pad);
            nn::relu_inplace(t);
            c.dec_mid[i] = t;
            t = dec_b_[i].forward(t, store_, spec_.pad);
            nn::relu_inplace(t);
            c.dec_out[i] = t;
        }

        t = final_.forward(t, store_, spec_.pad);
        c.pre_residual = t;

        // residual output: predict a correction to the center input channel
        const int center = spec_.in_channels / 2;
        nn::Tensor out(1, in.h, in.w);
        const double* ip = in.plane(center);
        for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = t.v[i] + ip[i];
        return out;
    }

    // Accumulates parameter gradients into store().grads.
    void backward(const Cache& c, const nn::Tensor& grad_out) {
        const int D = spec_.depth;
        nn::Tensor g = grad_out;  // residual add: gradient passes straight through
        g = final_.backward(c.dec_out[0], g, store_, spec_.pad);

        for (int i = 0; i < D; ++i) {
            g = nn::relu_backward(c.dec_out[i], g);
            g = dec_b_[i].backward(c.dec_mid[i], g, store_, spec_.pad);
            g = nn::relu_backward(c.dec_mid[i], g);
            g = dec_a_[i].backward(c.cat[i], g, store_, spec_.pad);
            auto [g_up, g_skip] = nn::split(g, up_conv_[i].cout, c.enc_out[i].c);
            skip_grads_[i] = std::move(g_skip);
            g = nn::relu_backward(c.up_conv_out[i], g_up);
            g = up_conv_[i].backward(c.up_sampled[i], g, store_, spec_.pad);
            g = nn::upsample2x_backward(g, c.up_in[i].h, c.up_in[i].w);
        }

        g = nn::relu_backward(c.bn_out, g);
        g = bn_b_.backward(c.mod_out, g, store_, spec_.pad);
        std::vector<double> g_kernel, g_bias;
        g = modulate_backward(c.mod_in, g, c.mod_kernel, &g_kernel, &g_bias);
        backprop_dmp(c, g_kernel, g_bias);
        g = nn::relu_backward(c.bn_mid, g);
        g = bn_a_.backward(c.down_out[D - 1], g, store_, spec_.pad);

        for (int i = D - 1; i >= 0; --i) {
            g = nn::relu_backward(c.down_out[i], g);
            g = down_[i].backward(c.enc_out[i], g, store_, spec_.pad);
            for (std::size_t k = 0; k < g.v.size(); ++k) g.v[k] += skip_grads_[i].v[k];
            g = nn::relu_backward(c.enc_out[i], g);
            g = enc_b_[i].backward(c.enc_mid[i], g, store_, spec_.pad);
            g = nn::relu_backward(c.enc_mid[i], g);
            g = enc_a_[i].backward(c.enc_in[i], g, store_, spec_.pad);
        }
    }

private:
    // out[co] = in[co] + sum_ci K[co][ci] in[ci] + b[co], per pixel.
    nn::Tensor modulate(const nn::Tensor& in, const std::vector<double>& K,
                        const std::vector<double>& b) const {
        const int C = in.c;
        nn::Tensor out = in;
        for (int co = 0; co < C; ++co) {
            double* op = out.plane(co);
            const double bias = b[co];
            for (int i = 0; i < in.h * in.w; ++i) op[i] += bias;
            for (int ci = 0; ci < C; ++ci) {
                const double k = K[static_cast<std::size_t>(co) * C + ci];
                if (k == 0.0) continue;
                const double* ip = in.plane(ci);
                for (int i = 0; i < in.h * in.w; ++i) op[i] += k * ip[i];
            }
        }
        return out;
    }

    nn::Tensor modulate_backward(const nn::Tensor& in, const nn::Tensor& grad_out,
                                 const std::vector<double>& K, std::vector<double>* gK,
                                 std::vector<double>* gb) const {
        const int C = in.c;
        const int npix = in.h * in.w;
        gK->assign(static_cast<std::size_t>(C) * C, 0.0);
        gb->assign(static_cast<std::size_t>(C), 0.0);
        nn::Tensor g = grad_out;  // identity part
        for (int co = 0; co < C; ++co) {
            const double* gp = grad_out.plane(co);
            double acc = 0.0;
            for (int i = 0; i < npix; ++i) acc += gp[i];
            (*gb)[co] = acc;
            for (int ci = 0; ci < C; ++ci) {
                const double* ip = in.plane(ci);
                double kg = 0.0;
                for (int i = 0; i < npix; ++i) kg += gp[i] * ip[i];
                (*gK)[static_cast<std::size_t>(co) * C + ci] = kg;
                const double k = K[static_cast<std::size_t>(co) * C + ci];
                if (k == 0.0) continue;
                double* gip = g.plane(ci);
                for (int i = 0; i < npix; ++i) gip[i] += k * gp[i];
            }
        }
        return g;
    }

    void backprop_dmp(const Cache& c, const std::vector<double>& g_kernel,
                      const std::vector<double>& g_bias) {
        std::vector<double> g(g_kernel);
        g.insert(g.end(), g_bias.begin(), g_bias.end());
        for (std::size_t l = fc_.size(); l-- > 0;) {
            if (l + 1 < fc_.size()) {
                // relu mask via re-forward of the cached layer input
                const auto y = fc_[l].forward(c.fc_in[l], store_);
                for (std::size_t i = 0; i < g.size(); ++i)
                    if (y[i] <= 0.0) g[i] = 0.0;
            }
            g = fc_[l].backward(c.fc_in[l], g, store_);
        }
    }

    UNetSpec spec_;
    DMPSpec dmp_;
    nn::ParamStore store_;
    std::vector<nn::Conv2D> enc_a_, enc_b_, down_, up_conv_, dec_a_, dec_b_;
    nn::Conv2D bn_a_, bn_b_, final_;
    std::vector<nn::Dense> fc_;
    std::array<nn::Tensor, 4> skip_grads_;  // scratch, indexed by level
};

// --- training -------------------------------------------------------------------

struct TrainSample {
    nn::Tensor input;   // (in_channels, H, W), standardized
    nn::Tensor target;  // (1, H, W), standardized
    ContextVector ctx{};
};

struct TrainConfig {
    int epochs_stage1 = 10;  // at lr0
    int epochs_stage2 = 3;   // at lr0 * lr_decay
    double lr0 = 0.001;
    double lr_decay = 0.1;
    int batch_size = 4;
    std::uint64_t seed = 0;
    nn::AdamConfig adam{};
};

// Trains in place; returns the per-epoch mean L1 loss (epochs_stage1 + epochs_stage2
// entries). Throws NumericError naming the epoch if the loss stops being finite.
inline std::vector<double> train(CEUNet& net, const std::vector<TrainSample>& data,
                                 const TrainConfig& cfg) {
    if (data.empty()) throw ValidationError("train: empty dataset");
    if (cfg.batch_size < 1) throw ValidationError("train: batch_size must be >= 1");
    if (cfg.lr0 <= 0.0) throw ValidationError("train: lr0 must be > 0");
    const int total_epochs = cfg.epochs_stage1 + cfg.epochs_stage2;
    std::vector<double> history;
    nn::ParamStore& store = net.store();
    long t = 0;
    CEUNet::Cache cache;
    for (int epoch = 0; epoch < total_epochs; ++epoch) {
        const double lr = epoch < cfg.epochs_stage1 ? cfg.lr0 : cfg.lr0 * cfg.lr_decay;
        // seeded Fisher-Yates shuffle, independent per epoch
        std::vector<std::size_t> order(data.size());
        std::iota(order.begin(), order.end(), 0);
        CounterRng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch), 0x73687566));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.next_u64() % i]);

        double epoch_loss = 0.0;
        std::size_t done = 0;
        while (done < order.size()) {
            const std::size_t bsz =
                std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), order.size() - done);
            store.zero_grads();
            double batch_loss = 0.0;
            for (std::size_t b = 0; b < bsz; ++b) {
                const TrainSample& s = data[order[done + b]];
                const nn::Tensor pred = net.forward(s.input, s.ctx, &cache);
                nn::Tensor grad;
                batch_loss += nn::l1_loss(pred, s.target, &grad);
                net.backward(cache, grad);
            }
            const double inv = 1.0 / static_cast<double>(bsz);
            for (auto& gv : store.grads) gv *= inv;
            nn::adam_step(store, lr, ++t, cfg.adam);
            epoch_loss += batch_loss;
            done += bsz;
        }
        epoch_loss /= static_cast<double>(order.size());
        if (!std::isfinite(epoch_loss))
            throw NumericError("train: loss diverged at epoch " + std::to_string(epoch));
        history.push_back(epoch_loss);
    }
    return history;
}

// --- checkpoints -----------------------------------------------------------------

// f32 parameter vector plus a JSON header describing the architecture, the
// training config, and the per-epoch loss history.
inline void save_checkpoint(const std::string& path, const CEUNet& net, const TrainConfig& cfg,
                            const std::vector<double>& loss_history, const json& extra = json::object()) {
    json meta = {
        {"kind", "ce_unet_checkpoint"},
        {"unet",
         {{"depth", net.spec().depth},
          {"base_channels", net.spec().base_channels},
          {"in_channels", net.spec().in_channels},
          {"pad", net.spec().pad == nn::PadMode::periodic ? "periodic" : "zero"}}},
        {"dmp", {{"context_len", net.dmp_spec().context_len}, {"hidden", net.dmp_spec().hidden}}},
        {"train",
         {{"epochs_stage1", cfg.epochs_stage1},
          {"epochs_stage2", cfg.epochs_stage2},
          {"lr0", cfg.lr0},
          {"lr_decay", cfg.lr_decay},
          {"batch_size", cfg.batch_size},
          {"seed", cfg.seed}}},
        {"epoch", loss_history.size()},
        {"loss_history", loss_history},
    };
    meta.merge_patch(extra);
    write_params(path, net.store().params, meta);
}

inline CEUNet load_checkpoint(const std::string& path, json* meta_out = nullptr) {
    json meta;
    const std::vector<double> params = read_params(path, &meta);
    if (meta.value("kind", "") != "ce_unet_checkpoint")
        throw ValidationError("checkpoint: not a model checkpoint: " + path);
    UNetSpec spec;
    spec.depth = meta.at("unet").at("depth").get<int>();
    spec.base_channels = meta.at("unet").at("base_channels").get<int>();
    spec.in_channels = meta.at("unet").at("in_channels").get<int>();
    spec.pad = meta.at("unet").value("pad", "zero") == "periodic" ? nn::PadMode::periodic
                                                                  : nn::PadMode::zero;
    DMPSpec dmp;
    dmp.context_len = meta.at("dmp").at("context_len").get<int>();
    dmp.hidden = meta.at("dmp").at("hidden").get<std::vector<int>>();
    CEUNet net(spec, dmp, 0);
    if (net.store().params.size() != params.size())
        throw ValidationError("checkpoint: parameter count mismatch in " + path);
    net.store().params = params;
    if (meta_out) *meta_out = meta;
    return net;
}

// --- inference -------------------------------------------------------------------

namespace detail {

inline nn::Tensor image_to_tensor(const Image2D& img) {
    nn::Tensor t(1, static_cast<int>(img.rows), static_cast<int>(img.cols));
    std::copy(img.v.begin(), img.v.end(), t.v.begin());
    return t;
}

inline Image2D tensor_to_image(const nn::Tensor& t, int ch = 0) {
    Image2D img(static_cast<std::size_t>(t.h), static_cast<std::size_t>(t.w));
    const double* p = t.plane(ch);
    std::copy(p, p + img.v.size(), img.v.begin());
    return img;
}

// Pad to the next multiple of m with edge replication; returns padded tensor.
inline nn::Tensor pad_to_multiple(const nn::Tensor& t, int m) {
    const int ph = (m - t.h % m) % m;
    const int pw = (m - t.w % m) % m;
    if (ph == 0 && pw == 0) return t;
    nn::Tensor out(t.c, t.h + ph, t.w + pw);
    for (int c = 0; c < t.c; ++c)
        for (int y = 0; y < out.h; ++y)
            for (int x = 0; x < out.w; ++x)
                out.at(c, y, x) = t.at(c, std::min(y, t.h - 1), std::min(x, t.w - 1));
    return out;
}

inline nn::Tensor crop_to(const nn::Tensor& t, int h, int w) {
    if (t.h == h && t.w == w) return t;
    nn::Tensor out(t.c, h, w);
    for (int c = 0; c < t.c; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) out.at(c, y, x) = t.at(c, y, x);
    return out;
}

}  // namespace detail

// Standardizes every slice with a shared record computed from the middle slice,
// runs the network slice by slice (7-slice sliding window with edge replication
// for 3D models), destandardizes, and reassembles the volume. The in-plane
// output resolution follows the standardization grid.
inline RealVolume infer_volume(const CEUNet& net, const RealVolume& vol, const SliceMeta& meta,
                               const ScanContext& scan_ctx, double nrf, std::size_t target_cols) {
    const std::size_t nz = vol.shape.nz;
    if (nz == 0) throw ValidationError("infer_volume: empty volume");
    const int in_ch = net.spec().in_channels;
    if (in_ch == 7 && scan_ctx.pulse_dim != 3)
        throw ValidationError("infer_volume: 7-slice model requires pulse_dim 3");

    ScanContext ctx = scan_ctx;
    ctx.pulse_dim = in_ch == 7 ? 3 : 2;
    const ContextVector cvec = encode_context(ctx, nrf);

    const auto [mid_std, rec] = standardize(volume_slice(vol, nz / 2), meta, target_cols);
    std::vector<Image2D> std_slices(nz);
    for (std::size_t z = 0; z < nz; ++z)
        std_slices[z] = standardize_with_record(volume_slice(vol, z), rec);

    const int m = net.spec().min_multiple();
    std::vector<Image2D> out_slices(nz);
    for (std::size_t z = 0; z < nz; ++z) {
        nn::Tensor in(in_ch, static_cast<int>(rec.std_rows), static_cast<int>(rec.std_cols));
        for (int ch = 0; ch < in_ch; ++ch) {
            const long src = std::clamp<long>(static_cast<long>(z) + ch - in_ch / 2, 0,
                                              static_cast<long>(nz) - 1);
            const Image2D& s = std_slices[static_cast<std::size_t>(src)];
            std::copy(s.v.begin(), s.v.end(), in.plane(ch));
        }
        const nn::Tensor padded = detail::pad_to_multiple(in, m);
        const nn::Tensor out = net.forward(padded, cvec);
        const nn::Tensor cropped =
            detail::crop_to(out, static_cast<int>(rec.std_rows), static_cast<int>(rec.std_cols));
        out_slices[z] = destandardize(detail::tensor_to_image(cropped), rec);
    }

    const std::size_t orows = out_slices[0].rows, ocols = out_slices[0].cols;
    RealVolume result({orows, ocols, nz});
    for (std::size_t z = 0; z < nz; ++z)
        for (std::size_t r = 0; r < orows; ++r)
            for (std::size_t c = 0; c < ocols; ++c) result.at(r, c, z) = out_slices[z].at(r, c);
    return result;
}

}  // namespace mrtk
