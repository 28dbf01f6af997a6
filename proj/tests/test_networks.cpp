#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "zss/networks.hpp"
#include "zss/prng.hpp"

using namespace zss;

namespace {

EmbeddingTable tiny_table(std::size_t dim = kEmbeddingDim) {
    EmbeddingTable t;
    t.dim = dim;
    Prng rng(77);
    for (int id : {0, 1, 2}) {
        std::vector<double> e(dim);
        for (auto& v : e) v = rng.normal();
        t.entries[id] = e;
    }
    return t;
}

Tensor<float> random_image(std::size_t h, std::size_t w, Prng& rng) {
    std::vector<float> d(3 * h * w);
    for (auto& v : d) v = static_cast<float>(rng.uniform());
    return Tensor<float>::leaf({3, h, w}, std::move(d));
}

} // namespace

TEST_CASE("map_labels: lookup, ignore -> zero, unknown id throws") {
    auto table = tiny_table(4);
    table.entries = {{0, {1, 2, 3, 4}}, {5, {9, 8, 7, 6}}};
    LabelMap y(1, 2, 0);
    y.ids[1] = 5;
    auto e = map_labels<double>(y, table);
    REQUIRE(e.shape() == Shape{4, 1, 2});
    CHECK(e.data()[0] == 1.0); // channel 0, pixel 0
    CHECK(e.data()[1] == 9.0); // channel 0, pixel 1
    CHECK(e.data()[4] == 3.0);

    y.ids[1] = LabelMap::kIgnore;
    auto ei = map_labels<double>(y, table);
    CHECK(ei.data()[1] == 0.0);
    CHECK(ei.data()[3] == 0.0);

    y.ids[1] = 42;
    CHECK_THROWS_AS(map_labels<double>(y, table), ValueError);
}

TEST_CASE("encoder: downsample factor 4, output channels, bounded output") {
    Prng rng(1);
    Encoder<float> enc(16, rng);
    Prng irng(2);
    auto img = random_image(32, 32, irng);
    auto f = enc.forward(img);
    CHECK(f.shape() == Shape{16, 8, 8});
    for (float v : f.data()) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
    CHECK_THROWS_AS(enc.forward(random_image(2, 2, irng)), ShapeError);
    auto bad = Tensor<float>::leaf({1, 8, 8}, std::vector<float>(64, 0.0f));
    CHECK_THROWS_AS(enc.forward(bad), ShapeError);
}

TEST_CASE("avg_pool2 halves extents by block average") {
    auto x = Tensor<double>::leaf({1, 2, 4}, {1, 2, 3, 4, 5, 6, 7, 8});
    auto y = avg_pool2(x);
    REQUIRE(y.shape() == Shape{1, 1, 2});
    CHECK(y.data()[0] == doctest::Approx((1 + 2 + 5 + 6) / 4.0));
    CHECK(y.data()[1] == doctest::Approx((3 + 4 + 7 + 8) / 4.0));
    auto odd = Tensor<double>::leaf({1, 3, 2}, std::vector<double>(6, 0.0));
    CHECK_THROWS_AS(avg_pool2(odd), ShapeError);
}

TEST_CASE("generator: shape contract and extent mismatch error") {
    Prng rng(3);
    Generator<float> gen(16, 8, rng);
    std::size_t plane = 4 * 4;
    auto e = Tensor<float>::leaf({kEmbeddingDim, 4, 4},
                                 std::vector<float>(kEmbeddingDim * plane, 0.1f));
    auto z = Tensor<float>::leaf({8, 4, 4}, std::vector<float>(8 * plane, 0.2f));
    auto f = gen.forward(e, z);
    CHECK(f.shape() == Shape{16, 4, 4});

    auto z_bad = Tensor<float>::leaf({8, 2, 2}, std::vector<float>(8 * 4, 0.0f));
    CHECK_THROWS_AS(gen.forward(e, z_bad), ShapeError);
}

TEST_CASE("classifier and discriminator shapes; discriminator output in (0,1)") {
    Prng rng(4);
    Classifier<float> cls(10, 16, rng);
    Discriminator<float> dis(16, rng);
    Prng frng(5);
    std::vector<float> fd(16 * 9);
    for (auto& v : fd) v = static_cast<float>(frng.normal());
    auto feats = Tensor<float>::leaf({16, 3, 3}, std::move(fd));
    auto logits = cls.forward(feats);
    CHECK(logits.shape() == Shape{10, 3, 3});
    auto d = dis.forward(feats);
    CHECK(d.shape() == Shape{1, 3, 3});
    for (float v : d.data()) {
        CHECK(v > 0.0f);
        CHECK(v < 1.0f);
    }
}

TEST_CASE("zero-initialized discriminator head outputs exactly 0.5") {
    Prng rng(6);
    Discriminator<float> dis(8, rng);
    auto& head = dis.final_layer();
    std::fill(head.weight.node_ptr()->value.begin(), head.weight.node_ptr()->value.end(),
              0.0f);
    std::fill(head.bias.node_ptr()->value.begin(), head.bias.node_ptr()->value.end(),
              0.0f);
    std::vector<float> fd(8 * 4, 1.25f);
    auto feats = Tensor<float>::leaf({8, 2, 2}, std::move(fd));
    auto out = dis.forward(feats);
    for (float v : out.data()) CHECK(v == 0.5f);
}

TEST_CASE("model bundle: deterministic initialization from seed") {
    auto table = tiny_table();
    SimConfig cfg;
    cfg.feature_channels = 8;
    cfg.latent_channels = 4;
    ModelBundle<float> a(3, cfg, table, 123);
    ModelBundle<float> b(3, cfg, table, 123);
    ModelBundle<float> c(3, cfg, table, 124);
    auto pa = a.named_params(), pb = b.named_params(), pc = c.named_params();
    REQUIRE(pa.size() == pb.size());
    bool same = true, diff = false;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        if (pa[i].tensor.data() != pb[i].tensor.data()) same = false;
        if (pa[i].tensor.data() != pc[i].tensor.data()) diff = true;
    }
    CHECK(same);
    CHECK(diff);
}

TEST_CASE("parameter groups partition by subnet prefix") {
    auto table = tiny_table();
    SimConfig cfg;
    cfg.feature_channels = 8;
    cfg.latent_channels = 4;
    ModelBundle<float> mb(3, cfg, table, 9);
    auto named = mb.named_params();
    std::size_t enc = 0, sim = 0, gen = 0, cls = 0, dis = 0;
    for (auto& np : named) {
        if (np.name.rfind("enc/", 0) == 0) ++enc;
        if (np.name.rfind("sim/", 0) == 0) ++sim;
        if (np.name.rfind("gen/", 0) == 0) ++gen;
        if (np.name.rfind("cls/", 0) == 0) ++cls;
        if (np.name.rfind("dis/", 0) == 0) ++dis;
    }
    CHECK(enc + sim + gen + cls + dis == named.size());
    CHECK(mb.main_params().size() == enc + sim + cls);
    CHECK(mb.generator_params().size() == gen);
    CHECK(mb.discriminator_params().size() == dis);
    CHECK(mb.classifier_params().size() == cls);
    // names are unique
    std::set<std::string> names;
    for (auto& np : named) names.insert(np.name);
    CHECK(names.size() == named.size());
}
