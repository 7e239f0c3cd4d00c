#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <set>
#include <string>
#include <vector>

#include "genreforge/errors.hpp"
#include "genreforge/network.hpp"
#include "support/gradcheck.hpp"

using namespace genreforge;
namespace ts = testsupport;

namespace {

NetworkConfig small_cfg(BlockVariant variant, std::vector<int> positions) {
    NetworkConfig cfg;
    cfg.num_classes = 8;
    cfg.kernel_size = 4;
    cfg.block_variant = variant;
    cfg.replace_positions = std::move(positions);
    cfg.dropout_rate = 0.0;  // deterministic forward for shape/gradient work
    return cfg;
}

const ShapeTraceEntry& trace_entry(const Network& net, const std::string& name) {
    for (const auto& e : net.last_trace())
        if (e.layer == name) return e;
    throw std::runtime_error("no trace entry " + name);
}

}  // namespace

TEST_CASE("block variant names round trip") {
    CHECK(block_variant_name(BlockVariant::kBasic) == std::string("basic"));
    CHECK(block_variant_from_name("resnet") == BlockVariant::kResnet);
    CHECK(block_variant_from_name("densenet") == BlockVariant::kDensenet);
    CHECK_THROWS_AS(block_variant_from_name("vgg"), ConfigError);
}

TEST_CASE("config validation rejects out-of-range settings") {
    CHECK_NOTHROW(small_cfg(BlockVariant::kBasic, {}).validate());

    NetworkConfig bad = small_cfg(BlockVariant::kBasic, {});
    bad.num_classes = 1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = small_cfg(BlockVariant::kBasic, {});
    bad.kernel_size = 5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = small_cfg(BlockVariant::kResnet, {0, 5});
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = small_cfg(BlockVariant::kDensenet, {1});
    bad.growth_rate = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = small_cfg(BlockVariant::kBasic, {});
    bad.dropout_rate = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("network maps slice input to logits and a 1024-d feature tap") {
    std::mt19937_64 rng(1);
    Network net(small_cfg(BlockVariant::kBasic, {}), rng);
    for (std::size_t b : {std::size_t(1), std::size_t(2), std::size_t(3)}) {
        const Tensor logits = net.forward(ts::random_tensor({b, 128, 128}, rng, 0.0, 1.0), false);
        CHECK(logits.shape == std::vector<std::size_t>({b, 8}));
        CHECK(net.features().shape == std::vector<std::size_t>({b, 1024}));
        CHECK(logits.all_finite());
    }
}

TEST_CASE("pooling schedule shrinks 128 frames to 32, 8, 4, 4") {
    std::mt19937_64 rng(2);
    Network net(small_cfg(BlockVariant::kBasic, {}), rng);
    net.forward(ts::random_tensor({1, 128, 128}, rng, 0.0, 1.0), false);

    CHECK(trace_entry(net, "pool0").shape == std::vector<std::size_t>({1, 128, 32}));
    CHECK(trace_entry(net, "pool1").shape == std::vector<std::size_t>({1, 128, 8}));
    CHECK(trace_entry(net, "pool2").shape == std::vector<std::size_t>({1, 256, 4}));
    CHECK(trace_entry(net, "pool3").shape == std::vector<std::size_t>({1, 256, 4}));
    CHECK(trace_entry(net, "stage4").shape == std::vector<std::size_t>({1, 512, 4}));
    CHECK(trace_entry(net, "head.globalmax").shape == std::vector<std::size_t>({1, 512}));
    CHECK(trace_entry(net, "head.dense1024").shape == std::vector<std::size_t>({1, 1024}));
}

TEST_CASE("network rejects inputs without 128 bins") {
    std::mt19937_64 rng(3);
    Network net(small_cfg(BlockVariant::kBasic, {}), rng);
    CHECK_THROWS_AS(net.forward(ts::random_tensor({1, 64, 128}, rng), false), ShapeError);
    CHECK_THROWS_AS(net.forward(ts::random_tensor({128, 128}, rng), false), ShapeError);
}

TEST_CASE("every variant and replace position yields the contract shapes") {
    std::mt19937_64 rng(4);
    const std::vector<std::vector<int>> position_sets{{}, {0}, {2}, {4}, {0, 1, 2, 3, 4}};
    for (BlockVariant v : {BlockVariant::kBasic, BlockVariant::kResnet, BlockVariant::kDensenet}) {
        for (const auto& positions : position_sets) {
            Network net(small_cfg(v, positions), rng);
            const Tensor logits =
                net.forward(ts::random_tensor({2, 128, 32}, rng, 0.0, 1.0), false);
            CHECK(logits.shape == std::vector<std::size_t>({2, 8}));
            CHECK(net.features().shape == std::vector<std::size_t>({2, 1024}));
            CHECK(logits.all_finite());
        }
    }
}

TEST_CASE("kernel 3 builds and runs like kernel 4") {
    std::mt19937_64 rng(5);
    NetworkConfig cfg = small_cfg(BlockVariant::kResnet, {1, 3});
    cfg.kernel_size = 3;
    Network net(cfg, rng);
    const Tensor logits = net.forward(ts::random_tensor({1, 128, 32}, rng, 0.0, 1.0), false);
    CHECK(logits.shape == std::vector<std::size_t>({1, 8}));
}

TEST_CASE("replace positions are deduplicated and sorted in the config") {
    std::mt19937_64 rng(6);
    Network net(small_cfg(BlockVariant::kResnet, {3, 1, 3}), rng);
    CHECK(net.config().replace_positions == std::vector<int>({1, 3}));
}

TEST_CASE("residual block with a zeroed branch reduces to relu of the input") {
    ResnetBlock block(4, 4, 3);
    std::mt19937_64 rng(7);
    block.init(rng);
    CHECK_FALSE(block.has_projection());

    block.conv2().params().weights.zero();
    block.conv2().params().bias.zero();
    const Tensor x = ts::random_tensor({2, 4, 6}, rng);
    const Tensor y = block.forward(x, false);
    for (std::size_t i = 0; i < x.numel(); ++i) {
        CHECK(y.data[i] == doctest::Approx(std::max(0.0, x.data[i])).epsilon(1e-12));
    }
}

TEST_CASE("residual block grows a projection only on channel change") {
    ResnetBlock same(8, 8, 3);
    CHECK_FALSE(same.has_projection());
    ResnetBlock grow(8, 16, 3);
    CHECK(grow.has_projection());
    std::mt19937_64 rng(8);
    grow.init(rng);
    const Tensor y = grow.forward(ts::random_tensor({1, 8, 5}, rng), false);
    CHECK(y.shape == std::vector<std::size_t>({1, 16, 5}));
}

TEST_CASE("densenet block widens by twice the growth before its transition") {
    DenseNetBlock block(8, 4, 3, 16);
    CHECK(block.pre_transition_channels() == 16);
    DenseNetBlock wide(128, 32, 4, 256);
    CHECK(wide.pre_transition_channels() == 192);

    std::mt19937_64 rng(9);
    block.init(rng);
    const Tensor y = block.forward(ts::random_tensor({2, 8, 10}, rng), false);
    CHECK(y.shape == std::vector<std::size_t>({2, 16, 10}));
}

// Blocks chain conv, batchnorm, ReLU and merges, so finite-difference error
// accumulates a little beyond the 1e-4 held by each primitive on its own
// (the engine suite covers those). 5e-4 still flags any wiring mistake.
TEST_CASE("residual block gradients match finite differences") {
    std::mt19937_64 rng(10);
    ResnetBlock plain(2, 2, 3);
    plain.init(rng);
    CHECK(ts::check_layer(plain, ts::random_tensor({2, 2, 6}, rng), rng) < 5e-4);

    ResnetBlock projected(2, 3, 3);
    projected.init(rng);
    CHECK(ts::check_layer(projected, ts::random_tensor({2, 2, 6}, rng), rng) < 5e-4);
}

TEST_CASE("densenet block gradients match finite differences") {
    std::mt19937_64 rng(11);
    DenseNetBlock block(2, 2, 3, 4);
    block.init(rng);
    CHECK(ts::check_layer(block, ts::random_tensor({2, 2, 6}, rng), rng) < 5e-4);
}

TEST_CASE("basic block gradients match finite differences") {
    std::mt19937_64 rng(12);
    BasicBlock block(2, 3, 4);
    block.init(rng);
    CHECK(ts::check_layer(block, ts::random_tensor({2, 2, 6}, rng), rng) < 5e-4);
}

TEST_CASE("parameter census for the default architecture") {
    std::mt19937_64 rng(13);
    Network net(small_cfg(BlockVariant::kBasic, {}), rng);

    // conv weights + biases and batch-norm gamma/beta across the five
    // stages plus the two head dense layers, by hand:
    //   stage0/1: 128*128*4 + 128 + 2*128 = 65920 each
    //   stage2:   256*128*4 + 256 + 2*256 = 131840
    //   stage3:   256*256*4 + 256 + 2*256 = 262912
    //   stage4:   512*256*1 + 512 + 2*512 = 132608  (1x1 conv)
    //   head:     1024*512 + 1024 + 8*1024 + 8 = 533512
    CHECK(net.parameter_count() == 1192712u);

    std::set<std::string> names;
    for (const auto& p : net.parameters()) names.insert(p.name);
    CHECK(names.size() == net.parameters().size());

    // 5 batch-norm layers, running mean + running var each
    CHECK(net.buffers().size() == 10u);
}

TEST_CASE("weight decay applies to conv and dense weights only") {
    std::mt19937_64 rng(14);
    Network net(small_cfg(BlockVariant::kBasic, {}), rng);
    std::size_t decayed = 0, spared = 0;
    for (const auto& p : net.parameters()) {
        if (p.weight_decay) {
            ++decayed;
            CHECK(p.name.find("weights") != std::string::npos);
        } else {
            ++spared;
        }
    }
    CHECK(decayed == 7u);   // 5 stage convs + 2 dense layers
    CHECK(spared == 17u);   // their biases + 5 BN gamma/beta pairs
}

TEST_CASE("snapshot and restore reproduce the forward pass exactly") {
    std::mt19937_64 rng(15);
    Network net(small_cfg(BlockVariant::kResnet, {2}), rng);
    const Tensor x = ts::random_tensor({1, 128, 32}, rng, 0.0, 1.0);
    const Tensor before = net.forward(x, false);

    const NetSnapshot snap = snapshot(net);
    for (auto& p : net.parameters())
        for (double& v : p.value->data) v += 0.25;
    const Tensor perturbed = net.forward(x, false);
    CHECK(perturbed.data != before.data);

    restore(net, snap);
    CHECK(net.forward(x, false).data == before.data);
}

TEST_CASE("inference is deterministic while dropout varies training passes") {
    std::mt19937_64 rng(16);
    NetworkConfig cfg = small_cfg(BlockVariant::kBasic, {});
    cfg.dropout_rate = 0.5;
    Network net(cfg, rng);
    const Tensor x = ts::random_tensor({2, 128, 32}, rng, 0.0, 1.0);

    const Tensor a = net.forward(x, false);
    const Tensor b = net.forward(x, false);
    CHECK(a.data == b.data);

    const Tensor t1 = net.forward(x, true);
    const Tensor t2 = net.forward(x, true);
    CHECK(t1.data != t2.data);
}

TEST_CASE("network_forward returns logits with the matching feature tap") {
    std::mt19937_64 rng(17);
    Network net(small_cfg(BlockVariant::kBasic, {}), rng);
    const Tensor x = ts::random_tensor({1, 128, 32}, rng, 0.0, 1.0);
    const auto [logits, feats] = network_forward(net, x, false);
    CHECK(logits.data == net.forward(x, false).data);
    CHECK(feats.shape == std::vector<std::size_t>({1, 1024}));
}

TEST_CASE("identical seeds build identical networks") {
    std::mt19937_64 rng_a(42), rng_b(42);
    Network a(small_cfg(BlockVariant::kDensenet, {1, 3}), rng_a);
    Network b(small_cfg(BlockVariant::kDensenet, {1, 3}), rng_b);
    const auto pa = a.parameters();
    const auto pb = b.parameters();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i].value->data == pb[i].value->data);
}

TEST_CASE("whole-network gradients match finite differences") {
    std::mt19937_64 rng(18);
    const std::vector<int> labels{3, 5};

    Network basic(small_cfg(BlockVariant::kBasic, {}), rng);
    const Tensor x = ts::random_tensor({2, 128, 32}, rng, 0.0, 1.0);
    CHECK(ts::check_network(basic, x, labels, 12, rng) < 1e-3);

    Network resnet(small_cfg(BlockVariant::kResnet, {1, 4}), rng);
    CHECK(ts::check_network(resnet, x, labels, 8, rng) < 1e-3);

    Network densenet(small_cfg(BlockVariant::kDensenet, {2, 3}), rng);
    CHECK(ts::check_network(densenet, x, labels, 8, rng) < 1e-3);
}
