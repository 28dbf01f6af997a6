#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "zss/labelmap.hpp"
#include "zss/nn.hpp"
#include "zss/sim.hpp"
#include "zss/tensor.hpp"

namespace zss {

inline constexpr std::size_t kEmbeddingDim = 600;

// Frozen class-id -> semantic vector table (the mapping network).
struct EmbeddingTable {
    std::map<int, std::vector<double>> entries;
    std::size_t dim = kEmbeddingDim;

    bool has(int id) const { return entries.count(id) != 0; }
    const std::vector<double>& at(int id) const {
        auto it = entries.find(id);
        if (it == entries.end())
            throw ValueError("unknown class id " + std::to_string(id) +
                             " in embedding table");
        return it->second;
    }
};

// Per-pixel embedding lookup; ignore pixels map to the zero vector. The
// result carries no differentiation record (the table is frozen).
template <class T>
Tensor<T> map_labels(const LabelMap& y, const EmbeddingTable& table) {
    std::size_t plane = y.h * y.w;
    std::vector<T> out(table.dim * plane, T(0));
    for (std::size_t p = 0; p < plane; ++p) {
        int id = y.ids[p];
        if (id == LabelMap::kIgnore) continue;
        const auto& e = table.at(id);
        for (std::size_t d = 0; d < table.dim; ++d)
            out[d * plane + p] = static_cast<T>(e[d]);
    }
    return Tensor<T>::leaf({table.dim, y.h, y.w}, std::move(out));
}

// 2x2 average pooling. Keeps the 4x-downsampled feature grid aligned with
// block centers, matching how labels are downsampled.
template <class T>
Tensor<T> avg_pool2(const Tensor<T>& x) {
    std::size_t c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
    if (h % 2 || w % 2) throw ShapeError("avg_pool2: extents must be even");
    Tensor<T> r = reshape(x, {c, h / 2, 2, w / 2, 2});
    return mean_axis(mean_axis(r, 4), 2);
}

// Feature encoder: three 3x3 conv blocks with 2x average-pool decimation
// between them (overall downsample factor 4).
template <class T>
class Encoder {
public:
    static constexpr std::size_t kDownsample = 4;

    Encoder() = default;
    Encoder(std::size_t out_channels, Prng& rng) {
        c1_ = Conv2dLayer<T>(16, 3, 3, rng, 1, 1);
        c2_ = Conv2dLayer<T>(32, 16, 3, rng, 1, 1);
        c3_ = Conv2dLayer<T>(out_channels, 32, 3, rng, 1, 1);
    }

    Tensor<T> forward(const Tensor<T>& image) const {
        if (image.rank() != 3 || image.shape()[0] != 3)
            throw ShapeError("encode expects image [3,H,W]");
        std::size_t h = image.shape()[1], w = image.shape()[2];
        if (h < kDownsample || w < kDownsample)
            throw ShapeError("encode: image extents must be >= 4");
        Tensor<T> x = relu(c1_.forward(image));
        x = avg_pool2(x);
        x = relu(c2_.forward(x));
        x = avg_pool2(x);
        // bounded output keeps per-pixel feature distances in the range where
        // the unit-bandwidth Gaussian kernel of the MMD objective still has
        // usable gradient
        return sigmoid(c3_.forward(x));
    }

    void collect(const std::string& prefix, std::vector<NamedParam<T>>& out) const {
        c1_.collect(prefix + "/c1", out);
        c2_.collect(prefix + "/c2", out);
        c3_.collect(prefix + "/c3", out);
    }

private:
    Conv2dLayer<T> c1_, c2_, c3_;
};

// Per-pixel feature synthesis from embedding + latent columns (1x1 stack).
template <class T>
class Generator {
public:
    static constexpr double kEmbedGain = 10.0;

    Generator() = default;
    Generator(std::size_t out_channels, std::size_t latent_channels, Prng& rng,
              std::size_t embed_dim = kEmbeddingDim) {
        g1_ = Conv2dLayer<T>(64, embed_dim + latent_channels, 1, rng);
        g2_ = Conv2dLayer<T>(64, 64, 1, rng);
        // zero init: synthetic features start at the origin and grow toward
        // the real feature cloud instead of starting at a random offset the
        // discriminator can trivially separate
        g3_ = Conv2dLayer<T>(out_channels, 64, 1, rng, 1, 0, /*zero=*/true);
    }

    Tensor<T> forward(const Tensor<T>& e, const Tensor<T>& z) const {
        if (e.shape()[1] != z.shape()[1] || e.shape()[2] != z.shape()[2])
            throw ShapeError("generate: embedding/latent extent mismatch");
        // embeddings are unit-norm over many channels; amplified so the class
        // signal competes with the unit-variance noise channels
        Tensor<T> x = concat<T>({scale(e, T(kEmbedGain)), z}, 0);
        x = relu(g1_.forward(x));
        x = relu(g2_.forward(x));
        return g3_.forward(x);
    }

    void collect(const std::string& prefix, std::vector<NamedParam<T>>& out) const {
        g1_.collect(prefix + "/g1", out);
        g2_.collect(prefix + "/g2", out);
        g3_.collect(prefix + "/g3", out);
    }

private:
    Conv2dLayer<T> g1_, g2_, g3_;
};

// Two 1x1 layers with a nonlinearity; K covers seen and unseen classes from
// the start (unseen logits are trained only during transfer).
template <class T>
class Classifier {
public:
    Classifier() = default;
    Classifier(std::size_t num_classes, std::size_t in_channels, Prng& rng) {
        h1_ = Conv2dLayer<T>(32, in_channels, 1, rng);
        h2_ = Conv2dLayer<T>(num_classes, 32, 1, rng);
    }

    Tensor<T> forward(const Tensor<T>& features) const {
        return h2_.forward(relu(h1_.forward(features)));
    }

    void collect(const std::string& prefix, std::vector<NamedParam<T>>& out) const {
        h1_.collect(prefix + "/h1", out);
        h2_.collect(prefix + "/h2", out);
    }

private:
    Conv2dLayer<T> h1_, h2_;
};

// Per-pixel real/fake probability head.
template <class T>
class Discriminator {
public:
    Discriminator() = default;
    Discriminator(std::size_t in_channels, Prng& rng) {
        d1_ = Conv2dLayer<T>(32, in_channels, 1, rng);
        d2_ = Conv2dLayer<T>(1, 32, 1, rng);
    }

    Tensor<T> forward(const Tensor<T>& features) const {
        return sigmoid(d2_.forward(relu(d1_.forward(features))));
    }

    void collect(const std::string& prefix, std::vector<NamedParam<T>>& out) const {
        d1_.collect(prefix + "/d1", out);
        d2_.collect(prefix + "/d2", out);
    }

    Conv2dLayer<T>& final_layer() { return d2_; }

private:
    Conv2dLayer<T> d1_, d2_;
};

template <class T>
struct ModelBundle {
    Encoder<T> encoder;
    Sim<T> sim;
    Generator<T> generator;
    Classifier<T> classifier;
    Discriminator<T> discriminator;
    EmbeddingTable embeddings; // frozen; never in any optimizer
    std::size_t num_classes = 0;
    SimConfig sim_cfg;

    ModelBundle() = default;
    ModelBundle(std::size_t num_classes_, SimConfig cfg, const EmbeddingTable& table,
                std::uint64_t seed)
        : embeddings(table), num_classes(num_classes_), sim_cfg(cfg) {
        Prng re = substream(seed, "init/enc");
        Prng rs = substream(seed, "init/sim");
        Prng rg = substream(seed, "init/gen");
        Prng rc = substream(seed, "init/cls");
        Prng rd = substream(seed, "init/dis");
        encoder = Encoder<T>(cfg.feature_channels, re);
        sim = Sim<T>(cfg, rs);
        generator = Generator<T>(cfg.feature_channels, cfg.latent_channels, rg);
        classifier = Classifier<T>(num_classes_, cfg.feature_channels, rc);
        discriminator = Discriminator<T>(cfg.feature_channels, rd);
    }

    std::vector<NamedParam<T>> named_params() const {
        std::vector<NamedParam<T>> out;
        encoder.collect("enc", out);
        sim.collect("sim", out);
        generator.collect("gen", out);
        classifier.collect("cls", out);
        discriminator.collect("dis", out);
        return out;
    }

    std::vector<Tensor<T>> main_params() const { // E + SIM + C (SGD group)
        std::vector<NamedParam<T>> n;
        encoder.collect("enc", n);
        sim.collect("sim", n);
        classifier.collect("cls", n);
        return tensors_of(n);
    }
    std::vector<Tensor<T>> generator_params() const {
        std::vector<NamedParam<T>> n;
        generator.collect("gen", n);
        return tensors_of(n);
    }
    std::vector<Tensor<T>> discriminator_params() const {
        std::vector<NamedParam<T>> n;
        discriminator.collect("dis", n);
        return tensors_of(n);
    }
    std::vector<Tensor<T>> classifier_params() const {
        std::vector<NamedParam<T>> n;
        classifier.collect("cls", n);
        return tensors_of(n);
    }
};

} // namespace zss
