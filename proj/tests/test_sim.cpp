#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "zss/fdcheck.hpp"
#include "zss/posenc.hpp"
#include "zss/prng.hpp"
#include "zss/sim.hpp"

using namespace zss;

namespace {

SimConfig desk_cfg(SimArch arch, std::size_t c = 8, std::size_t latent = 4) {
    SimConfig cfg;
    cfg.arch = arch;
    cfg.feature_channels = c;
    cfg.latent_channels = latent;
    cfg.heads = 4;
    return cfg;
}

Tensor<double> random_features(std::size_t c, std::size_t h, std::size_t w, Prng& rng) {
    std::vector<double> d(c * h * w);
    for (auto& v : d) v = 2.0 * rng.uniform() - 1.0;
    return Tensor<double>::leaf({c, h, w}, std::move(d));
}

const SimArch kAllArchs[] = {SimArch::Conv, SimArch::Attention, SimArch::SelfAttn,
                             SimArch::MultiheadSa};

} // namespace

TEST_CASE("residual identity: F_x equals features at initialization") {
    Prng seed(7);
    for (SimArch arch : kAllArchs) {
        Prng rng(42);
        Sim<double> sim(desk_cfg(arch), rng);
        Prng frng(9);
        auto features = random_features(8, 4, 4, frng);
        auto pe = build_pe_map<double>(4, 4, PeMode::Rpe,
                                       std::make_pair<std::size_t, std::size_t>(4, 4));
        auto [fx, lat] = sim.forward(features, pe.values);
        for (std::size_t i = 0; i < features.numel(); ++i)
            CHECK(fx.data()[i] == features.data()[i]);
        // latent heads are zero-initialized too
        for (double v : lat.mu.data()) CHECK(v == 0.0);
        for (double v : lat.logvar.data()) CHECK(v == 0.0);
    }
}

TEST_CASE("output shapes across architectures") {
    for (SimArch arch : kAllArchs) {
        Prng rng(3);
        Sim<double> sim(desk_cfg(arch), rng);
        Prng frng(4);
        auto features = random_features(8, 4, 4, frng);
        auto pe = build_pe_map<double>(4, 4, PeMode::Rpe,
                                       std::make_pair<std::size_t, std::size_t>(4, 4));
        auto [fx, lat] = sim.forward(features, pe.values);
        CHECK(fx.shape() == Shape{8, 4, 4});
        CHECK(lat.mu.shape() == Shape{4, 4, 4});
        CHECK(lat.logvar.shape() == Shape{4, 4, 4});
    }
}

TEST_CASE("extent and channel mismatches raise") {
    Prng rng(5);
    Sim<double> sim(desk_cfg(SimArch::Conv), rng);
    Prng frng(6);
    auto features = random_features(8, 4, 4, frng);
    auto pe_bad = build_pe_map<double>(5, 5, PeMode::Rpe,
                                       std::make_pair<std::size_t, std::size_t>(5, 5));
    CHECK_THROWS_AS(sim.forward(features, pe_bad.values), ShapeError);
    auto pe = build_pe_map<double>(4, 4, PeMode::Rpe,
                                   std::make_pair<std::size_t, std::size_t>(4, 4));
    auto wrong_c = random_features(6, 4, 4, frng);
    CHECK_THROWS_AS(sim.forward(wrong_c, pe.values), ShapeError);
}

TEST_CASE("reparameterize: z = mu + exp(logvar/2) * noise") {
    auto mu = Tensor<double>::leaf({2, 1, 1}, {0.3, -0.4});
    auto lv = Tensor<double>::leaf({2, 1, 1}, {0.0, std::log(4.0)});
    LatentParams<double> lat{mu, lv};

    auto z0 = reparameterize(lat, Tensor<double>::leaf({2, 1, 1}, {0.0, 0.0}));
    CHECK(z0.data()[0] == doctest::Approx(0.3));
    CHECK(z0.data()[1] == doctest::Approx(-0.4));

    auto z1 = reparameterize(lat, Tensor<double>::leaf({2, 1, 1}, {1.0, 0.5}));
    CHECK(z1.data()[0] == doctest::Approx(1.3));  // sigma = 1
    CHECK(z1.data()[1] == doctest::Approx(0.6));  // sigma = 2, -0.4 + 1.0

    // mu=0, logvar=ln 4, noise=0.5 -> z = 1.0
    LatentParams<double> lat2{Tensor<double>::leaf({1, 1, 1}, {0.0}),
                              Tensor<double>::leaf({1, 1, 1}, {std::log(4.0)})};
    auto z2 = reparameterize(lat2, Tensor<double>::leaf({1, 1, 1}, {0.5}));
    CHECK(z2.data()[0] == doctest::Approx(1.0));

    CHECK_THROWS_AS(reparameterize(lat, Tensor<double>::leaf({1, 1, 1}, {0.0})),
                    ShapeError);
}

TEST_CASE("reparameterize is differentiable w.r.t. mu and logvar") {
    Prng rng(8);
    std::vector<double> mu(4), lv(4), nz(4);
    for (auto& v : mu) v = rng.uniform();
    for (auto& v : lv) v = rng.uniform() - 0.5;
    for (auto& v : nz) v = rng.normal();
    auto noise = Tensor<double>::leaf({4, 1, 1}, nz);
    auto rep = finite_difference_check(
        [&](const Tensor<double>& m) {
            LatentParams<double> lat{reshape(m, {4, 1, 1}),
                                     Tensor<double>::leaf({4, 1, 1}, lv)};
            return sum(mul(reparameterize(lat, noise), noise));
        },
        Tensor<double>::leaf({4}, mu));
    CHECK(rep.pass);
    auto rep2 = finite_difference_check(
        [&](const Tensor<double>& l) {
            LatentParams<double> lat{Tensor<double>::leaf({4, 1, 1}, mu),
                                     reshape(l, {4, 1, 1})};
            return sum(mul(reparameterize(lat, noise), noise));
        },
        Tensor<double>::leaf({4}, lv));
    CHECK(rep2.pass);
}

TEST_CASE("mhsa attention rows sum to one") {
    Prng rng(12);
    MhsaLayer<double> layer(8, 2, rng);
    Prng frng(13);
    auto x = random_features(8, 3, 3, frng);
    auto attn = layer.attention_map(x);
    REQUIRE(attn.shape() == Shape{9, 9});
    for (std::size_t q = 0; q < 9; ++q) {
        double s = 0;
        for (std::size_t kk = 0; kk < 9; ++kk) s += attn.data()[q * 9 + kk];
        CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("mhsa is permutation-equivariant over token positions") {
    // self-attention over tokens has no positional term, so permuting input
    // pixels permutes outputs the same way
    Prng rng(14);
    MhsaLayer<double> layer(8, 2, rng);
    Prng frng(15);
    auto x = random_features(8, 2, 2, frng);

    // swap pixels 1 and 2 (plane-major layout)
    std::vector<double> perm = x.data();
    for (std::size_t c = 0; c < 8; ++c) std::swap(perm[c * 4 + 1], perm[c * 4 + 2]);
    auto xp = Tensor<double>::leaf({8, 2, 2}, perm);

    auto y = layer.forward(x);
    auto yp = layer.forward(xp);
    for (std::size_t c = 0; c < 8; ++c) {
        CHECK(yp.data()[c * 4 + 1] == doctest::Approx(y.data()[c * 4 + 2]).epsilon(1e-9));
        CHECK(yp.data()[c * 4 + 2] == doctest::Approx(y.data()[c * 4 + 1]).epsilon(1e-9));
        CHECK(yp.data()[c * 4 + 0] == doctest::Approx(y.data()[c * 4 + 0]).epsilon(1e-9));
    }
}

TEST_CASE("mhsa rejects widths not divisible by head count") {
    Prng rng(16);
    CHECK_THROWS_AS(MhsaLayer<double>(9, 2, rng), ShapeError);
}

TEST_CASE("full forward + losses pass finite differences on all SIM parameters") {
    for (SimArch arch : kAllArchs) {
        Prng rng(21);
        Sim<double> sim(desk_cfg(arch, 4, 2), rng);
        Prng frng(22);
        auto features = random_features(4, 3, 3, frng);
        auto pe = build_pe_map<double>(3, 3, PeMode::Rpe,
                                       std::make_pair<std::size_t, std::size_t>(3, 3));
        std::vector<NamedParam<double>> params;
        sim.collect("sim", params);
        // joint loss touching F_x, mu and logvar
        auto loss_of = [&]() {
            auto [fx, lat] = sim.forward(features, pe.values);
            return mean(mul(fx, fx)) + mean(mul(lat.mu, lat.mu)) +
                   mean(zss::exp(lat.logvar));
        };
        for (auto& np : params) {
            auto& p = np.tensor;
            for (auto& q : params) q.tensor.zero_grad();
            // fd over the whole parameter tensor via in-place perturbation
            backward(loss_of());
            std::vector<double> analytic = p.grad();
            bool ok = true;
            double h = 1e-5;
            for (std::size_t i = 0; i < std::min<std::size_t>(p.numel(), 8); ++i) {
                NoGradGuard ng;
                double orig = p.data()[i];
                p.node_ptr()->value[i] = orig + h;
                double fp = loss_of().item();
                p.node_ptr()->value[i] = orig - h;
                double fm = loss_of().item();
                p.node_ptr()->value[i] = orig;
                double numeric = (fp - fm) / (2 * h);
                if (std::abs(analytic[i] - numeric) >
                    1e-5 + 1e-3 * std::abs(numeric))
                    ok = false;
            }
            p.zero_grad();
            CAPTURE(np.name);
            CHECK(ok);
        }
    }
}
