#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "zss/nn.hpp"
#include "zss/posenc.hpp"
#include "zss/tensor.hpp"

namespace zss {

enum class SimArch { Conv, Attention, SelfAttn, MultiheadSa };

struct SimConfig {
    SimArch arch = SimArch::Conv;
    std::size_t heads = 4; // MultiheadSa only
    std::size_t feature_channels = 32;
    std::size_t latent_channels = 8;
    std::size_t pe_channels = 2 * kPeDModel;
};

template <class T>
struct LatentParams {
    Tensor<T> mu;     // [L,H,W]
    Tensor<T> logvar; // [L,H,W]
};

// z = mu + exp(logvar/2) * noise
template <class T>
Tensor<T> reparameterize(const LatentParams<T>& lat, const Tensor<T>& noise) {
    if (noise.shape() != lat.mu.shape())
        throw ShapeError("reparameterize: noise shape mismatch");
    return lat.mu + mul(zss::exp(scale(lat.logvar, T(0.5))), noise);
}

// Scaled dot-product self-attention over the flattened pixel sequence,
// several heads in parallel, output linearly mapped back to C channels.
template <class T>
struct MhsaLayer {
    std::size_t channels = 0, heads = 1;
    LinearLayer<T> wq, wk, wv, wo;

    MhsaLayer() = default;
    MhsaLayer(std::size_t c, std::size_t h, Prng& rng) : channels(c), heads(h) {
        if (h < 1 || c % h != 0)
            throw ShapeError("attention width " + std::to_string(c) +
                             " not divisible by heads " + std::to_string(h));
        wq = LinearLayer<T>(c, c, rng);
        wk = LinearLayer<T>(c, c, rng);
        wv = LinearLayer<T>(c, c, rng);
        wo = LinearLayer<T>(c, c, rng);
    }

    Tensor<T> forward(const Tensor<T>& x) const {
        std::size_t c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
        if (c != channels) throw ShapeError("mhsa channel mismatch");
        std::size_t n = h * w, dh = channels / heads;
        Tensor<T> tokens = reshape(x, {c, n});
        Tensor<T> q = wq.forward(tokens);
        Tensor<T> k = wk.forward(tokens);
        Tensor<T> v = wv.forward(tokens);
        std::vector<Tensor<T>> head_out;
        T inv_scale = T(1) / static_cast<T>(std::sqrt(static_cast<double>(dh)));
        for (std::size_t hd = 0; hd < heads; ++hd) {
            Tensor<T> qh = slice(q, 0, hd * dh, dh);
            Tensor<T> kh = slice(k, 0, hd * dh, dh);
            Tensor<T> vh = slice(v, 0, hd * dh, dh);
            Tensor<T> scores = scale(matmul(permute(qh, {1, 0}), kh), inv_scale); // [N,N]
            Tensor<T> attn = softmax(scores, 1);
            head_out.push_back(matmul(vh, permute(attn, {1, 0}))); // [dh,N]
        }
        Tensor<T> cat = heads == 1 ? head_out[0] : concat(head_out, 0);
        return reshape(wo.forward(cat), {c, h, w});
    }

    // attention weights of the first head, for tests: [N,N], rows = queries
    Tensor<T> attention_map(const Tensor<T>& x) const {
        std::size_t c = x.shape()[0], n = x.shape()[1] * x.shape()[2];
        std::size_t dh = channels / heads;
        Tensor<T> tokens = reshape(x, {c, n});
        Tensor<T> qh = slice(wq.forward(tokens), 0, 0, dh);
        Tensor<T> kh = slice(wk.forward(tokens), 0, 0, dh);
        T inv_scale = T(1) / static_cast<T>(std::sqrt(static_cast<double>(dh)));
        return softmax(scale(matmul(permute(qh, {1, 0}), kh), inv_scale), 1);
    }

    void collect(const std::string& prefix, std::vector<NamedParam<T>>& out) const {
        wq.collect(prefix + "/q", out);
        wk.collect(prefix + "/k", out);
        wv.collect(prefix + "/v", out);
        wo.collect(prefix + "/o", out);
    }
};

// Spatial Information Module. Fuses the positional-encoding field into the
// feature map through one of four encoder trunks, emits the deterministic
// feature F_x = features + delta (residual) and the latent (mu, logvar).
template <class T>
class Sim {
public:
    Sim() = default;
    Sim(SimConfig cfg, Prng& rng) : cfg_(cfg) {
        std::size_t c = cfg.feature_channels;
        in_proj_ = Conv2dLayer<T>(c, c + cfg.pe_channels, 1, rng);
        switch (cfg.arch) {
        case SimArch::Conv:
            res1a_ = Conv2dLayer<T>(c, c, 3, rng, 1, 1);
            res1b_ = Conv2dLayer<T>(c, c, 3, rng, 1, 1);
            res2a_ = Conv2dLayer<T>(c, c, 3, rng, 1, 1);
            res2b_ = Conv2dLayer<T>(c, c, 3, rng, 1, 1);
            break;
        case SimArch::Attention:
            attn1_ = Conv2dLayer<T>(c, c, 1, rng, 1, 0);
            attn3_ = Conv2dLayer<T>(c, c, 3, rng, 1, 1);
            attn5_ = Conv2dLayer<T>(c, c, 5, rng, 1, 2);
            attn_merge_ = Conv2dLayer<T>(c, 3 * c, 1, rng);
            break;
        case SimArch::SelfAttn:
            mhsa_ = MhsaLayer<T>(c, 1, rng);
            ff1_ = Conv2dLayer<T>(c, c, 1, rng);
            ff2_ = Conv2dLayer<T>(c, c, 1, rng);
            break;
        case SimArch::MultiheadSa:
            mhsa_ = MhsaLayer<T>(c, cfg.heads, rng);
            ff1_ = Conv2dLayer<T>(c, c, 1, rng);
            ff2_ = Conv2dLayer<T>(c, c, 1, rng);
            break;
        }
        delta_head_ = Conv2dLayer<T>(c, c, 1, rng, 1, 0, /*zero=*/true);
        // zero init keeps the initial KL penalty at exactly zero, which
        // avoids a large transient gradient through the shared trunk
        mu_head_ = Conv2dLayer<T>(cfg.latent_channels, c, 1, rng, 1, 0, /*zero=*/true);
        logvar_head_ = Conv2dLayer<T>(cfg.latent_channels, c, 1, rng, 1, 0, /*zero=*/true);
    }

    std::pair<Tensor<T>, LatentParams<T>> forward(const Tensor<T>& features,
                                                  const Tensor<T>& pe_values) const {
        if (features.rank() != 3 || pe_values.rank() != 3)
            throw ShapeError("sim_forward expects [C,H,W] inputs");
        if (features.shape()[1] != pe_values.shape()[1] ||
            features.shape()[2] != pe_values.shape()[2])
            throw ShapeError("sim_forward: feature/PE extent mismatch");
        if (features.shape()[0] != cfg_.feature_channels)
            throw ShapeError("sim_forward: feature channel mismatch");

        Tensor<T> fused = concat<T>({features, pe_values}, 0);
        Tensor<T> t = relu(in_proj_.forward(fused));
        Tensor<T> trunk = run_trunk(t);
        Tensor<T> fx = features + delta_head_.forward(trunk);
        LatentParams<T> lat{mu_head_.forward(trunk), logvar_head_.forward(trunk)};
        return {fx, lat};
    }

    const SimConfig& config() const { return cfg_; }

    void collect(const std::string& prefix, std::vector<NamedParam<T>>& out) const {
        in_proj_.collect(prefix + "/in", out);
        switch (cfg_.arch) {
        case SimArch::Conv:
            res1a_.collect(prefix + "/r1a", out);
            res1b_.collect(prefix + "/r1b", out);
            res2a_.collect(prefix + "/r2a", out);
            res2b_.collect(prefix + "/r2b", out);
            break;
        case SimArch::Attention:
            attn1_.collect(prefix + "/a1", out);
            attn3_.collect(prefix + "/a3", out);
            attn5_.collect(prefix + "/a5", out);
            attn_merge_.collect(prefix + "/am", out);
            break;
        case SimArch::SelfAttn:
        case SimArch::MultiheadSa:
            mhsa_.collect(prefix + "/sa", out);
            ff1_.collect(prefix + "/f1", out);
            ff2_.collect(prefix + "/f2", out);
            break;
        }
        delta_head_.collect(prefix + "/delta", out);
        mu_head_.collect(prefix + "/mu", out);
        logvar_head_.collect(prefix + "/lv", out);
    }

    std::vector<NamedParam<T>> named_params() const {
        std::vector<NamedParam<T>> out;
        collect("sim", out);
        return out;
    }

    const MhsaLayer<T>& mhsa() const { return mhsa_; }
    Conv2dLayer<T>& delta_head() { return delta_head_; }
    Conv2dLayer<T>& in_proj() { return in_proj_; }

private:
    Tensor<T> run_trunk(const Tensor<T>& t) const {
        switch (cfg_.arch) {
        case SimArch::Conv: {
            Tensor<T> a = t + res1b_.forward(relu(res1a_.forward(t)));
            return a + res2b_.forward(relu(res2a_.forward(a)));
        }
        case SimArch::Attention: {
            Tensor<T> m1 = sigmoid(attn1_.forward(t));
            Tensor<T> m3 = sigmoid(attn3_.forward(t));
            Tensor<T> m5 = sigmoid(attn5_.forward(t));
            Tensor<T> cat = concat<T>({mul(t, m1), mul(t, m3), mul(t, m5)}, 0);
            return attn_merge_.forward(cat);
        }
        case SimArch::SelfAttn:
        case SimArch::MultiheadSa: {
            Tensor<T> a = t + mhsa_.forward(t);
            return a + ff2_.forward(relu(ff1_.forward(a)));
        }
        }
        throw ValueError("unknown sim arch");
    }

    SimConfig cfg_;
    Conv2dLayer<T> in_proj_;
    Conv2dLayer<T> res1a_, res1b_, res2a_, res2b_;
    Conv2dLayer<T> attn1_, attn3_, attn5_, attn_merge_;
    MhsaLayer<T> mhsa_;
    Conv2dLayer<T> ff1_, ff2_;
    Conv2dLayer<T> delta_head_, mu_head_, logvar_head_;
};

} // namespace zss
