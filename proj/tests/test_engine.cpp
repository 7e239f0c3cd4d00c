#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "genreforge/errors.hpp"
#include "genreforge/layers.hpp"
#include "support/gradcheck.hpp"

using namespace genreforge;
namespace ts = testsupport;

namespace {

Tensor make3(std::size_t b, std::size_t c, std::size_t t, std::vector<double> v) {
    Tensor x({b, c, t});
    x.data = std::move(v);
    return x;
}

}  // namespace

TEST_CASE("conv1d sliding difference with k=2 same padding") {
    Conv1d conv(1, 1, 2);
    conv.params().weights.data = {1.0, -1.0};
    conv.params().bias.data = {0.0};
    const Tensor y = conv.forward(make3(1, 1, 4, {1, 2, 3, 4}), false);
    REQUIRE(y.shape == std::vector<std::size_t>({1, 1, 4}));
    CHECK(y.data == std::vector<double>({-1, -1, -1, 4}));
}

TEST_CASE("conv1d identity kernel k=3 passes the signal through") {
    Conv1d conv(1, 1, 3);
    conv.params().weights.data = {0.0, 1.0, 0.0};
    conv.params().bias.data = {0.0};
    const Tensor x = make3(1, 1, 5, {5, -3, 2, 0, 7});
    CHECK(conv.forward(x, false).data == x.data);
}

TEST_CASE("conv1d sums input channels and applies bias") {
    Conv1d conv(2, 1, 1);
    conv.params().weights.data = {2.0, 3.0};  // [out=1][in=2][k=1]
    conv.params().bias.data = {10.0};
    const Tensor y = conv.forward(make3(1, 2, 2, {1, 2, 10, 20}), false);
    CHECK(y.data == std::vector<double>({2 * 1 + 3 * 10 + 10, 2 * 2 + 3 * 20 + 10}));
}

TEST_CASE("conv1d k=4 padding is one left, two right") {
    Conv1d conv(1, 1, 4);
    conv.params().weights.data = {0.0, 1.0, 0.0, 0.0};  // taps x[t] after pad
    conv.params().bias.data = {0.0};
    const Tensor x = make3(1, 1, 6, {1, 2, 3, 4, 5, 6});
    // pad_left = 1: position j=1 of the kernel sees the unshifted signal
    CHECK(conv.forward(x, false).data == x.data);
}

TEST_CASE("conv1d output shape keeps time length") {
    Conv1d conv(3, 5, 4);
    std::mt19937_64 rng(1);
    conv.init(rng);
    const Tensor y = conv.forward(ts::random_tensor({2, 3, 17}, rng), false);
    CHECK(y.shape == std::vector<std::size_t>({2, 5, 17}));
}

TEST_CASE("conv1d rejects wrong channel count") {
    Conv1d conv(3, 5, 4);
    std::mt19937_64 rng(1);
    conv.init(rng);
    CHECK_THROWS_AS(conv.forward(ts::random_tensor({2, 4, 17}, rng), false), ShapeError);
}

TEST_CASE("conv1d gradients match finite differences") {
    std::mt19937_64 rng(21);
    for (int c = 0; c < 20; ++c) {
        const int in_c = 1 + int(rng() % 3);
        const int out_c = 1 + int(rng() % 3);
        const int k = 1 + int(rng() % 4);
        const int t = 4 + int(rng() % 6);
        const int b = 1 + int(rng() % 2);
        Conv1d conv(in_c, out_c, k);
        conv.init(rng);
        const Tensor x =
            ts::random_tensor({std::size_t(b), std::size_t(in_c), std::size_t(t)}, rng);
        CHECK(ts::check_layer(conv, x, rng) < 1e-4);
    }
}

TEST_CASE("dense computes W x + b per row") {
    Dense dense(2, 2);
    dense.params().weights.data = {1.0, 2.0, 3.0, 4.0};  // [out=2][in=2]
    dense.params().bias.data = {0.5, -0.5};
    Tensor x({1, 2});
    x.data = {10.0, 20.0};
    const Tensor y = dense.forward(x, false);
    CHECK(y.data == std::vector<double>({1 * 10 + 2 * 20 + 0.5, 3 * 10 + 4 * 20 - 0.5}));
}

TEST_CASE("dense gradients match finite differences") {
    std::mt19937_64 rng(22);
    for (int c = 0; c < 20; ++c) {
        const int in_f = 1 + int(rng() % 6);
        const int out_f = 1 + int(rng() % 6);
        const int b = 1 + int(rng() % 3);
        Dense dense(in_f, out_f);
        dense.init(rng);
        const Tensor x = ts::random_tensor({std::size_t(b), std::size_t(in_f)}, rng);
        CHECK(ts::check_layer(dense, x, rng) < 1e-4);
    }
}

TEST_CASE("relu clamps negatives and routes gradients by sign") {
    Relu relu;
    const Tensor y = relu.forward(make3(1, 1, 4, {-2, -0.5, 0.5, 3}), false);
    CHECK(y.data == std::vector<double>({0, 0, 0.5, 3}));
    Tensor g = make3(1, 1, 4, {1, 1, 1, 1});
    const Tensor dx = relu.backward(g);
    CHECK(dx.data == std::vector<double>({0, 0, 1, 1}));
}

TEST_CASE("relu subgradient at zero is zero") {
    Relu relu;
    relu.forward(make3(1, 1, 1, {0.0}), false);
    const Tensor dx = relu.backward(make3(1, 1, 1, {5.0}));
    CHECK(dx.data[0] == 0.0);
}

TEST_CASE("relu gradients match finite differences away from the kink") {
    std::mt19937_64 rng(23);
    for (int c = 0; c < 20; ++c) {
        Relu relu;
        Tensor x = ts::random_tensor({2, 3, 7}, rng);
        ts::keep_off_kinks(x, 1e-3);
        CHECK(ts::check_layer(relu, x, rng) < 1e-4);
    }
}

TEST_CASE("maxpool windows of four and two") {
    MaxPool1d pool4(4);
    const Tensor y4 = pool4.forward(make3(1, 1, 8, {1, 3, 2, 8, 5, 5, 0, 1}), false);
    CHECK(y4.data == std::vector<double>({8, 5}));

    MaxPool1d pool2(2);
    const Tensor y2 = pool2.forward(make3(1, 1, 8, {1, 3, 2, 8, 5, 5, 0, 1}), false);
    CHECK(y2.data == std::vector<double>({3, 8, 5, 1}));
}

TEST_CASE("maxpool drops the trailing remainder") {
    MaxPool1d pool(4);
    const Tensor y = pool.forward(make3(1, 1, 7, {9, 1, 1, 1, 1, 1, 99}), false);
    REQUIRE(y.shape == std::vector<std::size_t>({1, 1, 1}));
    CHECK(y.data[0] == 9.0);  // the 99 falls outside every window
}

TEST_CASE("maxpool ties route the gradient to the first maximum") {
    MaxPool1d pool(2);
    pool.forward(make3(1, 1, 4, {5, 5, 1, 7}), false);
    const Tensor dx = pool.backward(make3(1, 1, 2, {1.0, 2.0}));
    CHECK(dx.data == std::vector<double>({1, 0, 0, 2}));
}

TEST_CASE("maxpool gradients match finite differences") {
    std::mt19937_64 rng(24);
    for (int c = 0; c < 20; ++c) {
        MaxPool1d pool(2 + int(rng() % 3));
        const Tensor x = ts::random_tensor({2, 2, 12}, rng);
        CHECK(ts::check_layer(pool, x, rng) < 1e-4);
    }
}

TEST_CASE("global max pool reduces the time axis") {
    GlobalMaxPool1d gmp;
    const Tensor y = gmp.forward(make3(1, 2, 3, {1, 9, 2, -5, -1, -8}), false);
    REQUIRE(y.shape == std::vector<std::size_t>({1, 2}));
    CHECK(y.data == std::vector<double>({9, -1}));
    Tensor g({1, 2});
    g.data = {1.0, 2.0};
    const Tensor dx = gmp.backward(g);
    CHECK(dx.shape == std::vector<std::size_t>({1, 2, 3}));
    CHECK(dx.data == std::vector<double>({0, 1, 0, 0, 2, 0}));
}

TEST_CASE("global max pool gradients match finite differences") {
    std::mt19937_64 rng(25);
    for (int c = 0; c < 20; ++c) {
        GlobalMaxPool1d gmp;
        const Tensor x = ts::random_tensor({3, 4, 9}, rng);
        CHECK(ts::check_layer(gmp, x, rng) < 1e-4);
    }
}

TEST_CASE("batchnorm zeroes a constant channel") {
    BatchNorm1d bn(1);
    const Tensor y = bn.forward(make3(2, 1, 3, {4, 4, 4, 4, 4, 4}), true);
    for (double v : y.data) CHECK(v == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("batchnorm normalizes with population variance") {
    BatchNorm1d bn(1);
    Tensor x({2, 1});
    x.data = {1.0, 3.0};  // mean 2, population var 1
    const Tensor y = bn.forward(x, true);
    const double denom = std::sqrt(1.0 + 1e-5);
    CHECK(y.data[0] == doctest::Approx(-1.0 / denom).epsilon(1e-12));
    CHECK(y.data[1] == doctest::Approx(1.0 / denom).epsilon(1e-12));

    // momentum-0.9 running update from the (0, 1) init
    CHECK(bn.state().running_mean.data[0] == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(bn.state().running_var.data[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("batchnorm gamma zero collapses output to beta") {
    BatchNorm1d bn(2);
    bn.state().gamma.data = {0.0, 0.0};
    bn.state().beta.data = {7.0, -3.0};
    std::mt19937_64 rng(26);
    const Tensor y = bn.forward(ts::random_tensor({3, 2, 4}, rng), true);
    for (std::size_t b = 0; b < 3; ++b) {
        for (std::size_t t = 0; t < 4; ++t) {
            CHECK(y.at3(b, 0, t) == doctest::Approx(7.0));
            CHECK(y.at3(b, 1, t) == doctest::Approx(-3.0));
        }
    }
}

TEST_CASE("batchnorm inference uses running statistics") {
    BatchNorm1d bn(1);
    bn.state().running_mean.data = {10.0};
    bn.state().running_var.data = {4.0};
    Tensor x({1, 1});
    x.data = {12.0};
    const Tensor y = bn.forward(x, false);
    CHECK(y.data[0] == doctest::Approx(2.0 / std::sqrt(4.0 + 1e-5)).epsilon(1e-9));
}

TEST_CASE("batchnorm rejects training batches smaller than two") {
    BatchNorm1d bn(1);
    Tensor x({1, 1});
    x.data = {1.0};
    CHECK_THROWS_AS(bn.forward(x, true), std::invalid_argument);
}

TEST_CASE("batchnorm backward after an inference forward is an error") {
    BatchNorm1d bn(1);
    Tensor x({2, 1});
    x.data = {1.0, 2.0};
    bn.forward(x, false);
    CHECK_THROWS_AS(bn.backward(x), std::logic_error);
}

TEST_CASE("batchnorm gradients match finite differences") {
    std::mt19937_64 rng(27);
    for (int c = 0; c < 20; ++c) {
        BatchNorm1d bn3(3);
        const Tensor x3 = ts::random_tensor({3, 3, 5}, rng);
        CHECK(ts::check_layer(bn3, x3, rng) < 1e-4);

        BatchNorm1d bn2(4);
        const Tensor x2 = ts::random_tensor({5, 4}, rng);
        CHECK(ts::check_layer(bn2, x2, rng) < 1e-4);
    }
}

TEST_CASE("dropout keeps about half the activations at rate one half") {
    Dropout drop(0.5, 99);
    Tensor x({100, 1000});
    x.data.assign(100000, 1.0);
    const Tensor y = drop.forward(x, true);
    std::size_t survivors = 0;
    for (double v : y.data) {
        if (v != 0.0) {
            CHECK(v == 2.0);  // inverted scaling 1 / (1 - rate)
            ++survivors;
        }
    }
    const double frac = double(survivors) / 100000.0;
    CHECK(frac > 0.495);
    CHECK(frac < 0.505);
}

TEST_CASE("dropout backward masks exactly like forward") {
    Dropout drop(0.5, 7);
    Tensor x({1, 64});
    x.data.assign(64, 1.0);
    const Tensor y = drop.forward(x, true);
    Tensor g({1, 64});
    g.data.assign(64, 1.0);
    const Tensor dx = drop.backward(g);
    for (std::size_t i = 0; i < 64; ++i) CHECK(dx.data[i] == y.data[i]);
}

TEST_CASE("dropout is identity in inference and at rate zero") {
    Tensor x({1, 8});
    x.data = {1, 2, 3, 4, 5, 6, 7, 8};
    Dropout inference(0.5, 1);
    CHECK(inference.forward(x, false).data == x.data);
    Dropout zero(0.0, 1);
    CHECK(zero.forward(x, true).data == x.data);
}

TEST_CASE("dropout backward after an inference forward passes gradients through") {
    Dropout drop(0.5, 1);
    Tensor x({1, 4});
    x.data = {1, 2, 3, 4};
    drop.forward(x, false);
    Tensor g({1, 4});
    g.data = {5, 6, 7, 8};
    CHECK(drop.backward(g).data == g.data);
}

TEST_CASE("softmax rows sum to one") {
    std::mt19937_64 rng(28);
    const Tensor logits = ts::random_tensor({5, 8}, rng, -30.0, 30.0);
    const Tensor p = softmax_rows(logits);
    for (std::size_t b = 0; b < 5; ++b) {
        double sum = 0.0;
        for (std::size_t c = 0; c < 8; ++c) {
            sum += p.at2(b, c);
            CHECK(p.at2(b, c) >= 0.0);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("uniform logits over eight classes cost ln 8") {
    Tensor logits({2, 8});
    logits.data.assign(16, 0.3);
    const std::vector<int> labels{0, 5};
    const LossResult res = softmax_cross_entropy(logits, labels);
    CHECK(res.loss == doctest::Approx(2.0794415416798357).epsilon(1e-12));
    // grad = (softmax - onehot) / batch
    CHECK(res.grad_logits.at2(0, 0) == doctest::Approx((0.125 - 1.0) / 2.0));
    CHECK(res.grad_logits.at2(0, 1) == doctest::Approx(0.125 / 2.0));
    CHECK(res.grad_logits.at2(1, 5) == doctest::Approx((0.125 - 1.0) / 2.0));
}

TEST_CASE("cross entropy is invariant to a constant logit shift") {
    std::mt19937_64 rng(29);
    Tensor logits = ts::random_tensor({4, 6}, rng);
    const std::vector<int> labels{0, 2, 4, 5};
    const double base = softmax_cross_entropy(logits, labels).loss;
    for (double& v : logits.data) v += 100.0;
    CHECK(softmax_cross_entropy(logits, labels).loss == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("cross entropy handles extreme logits without overflow") {
    Tensor logits({1, 3});
    logits.data = {1000.0, 0.0, -1000.0};
    const std::vector<int> labels{0};
    const LossResult res = softmax_cross_entropy(logits, labels);
    CHECK(std::isfinite(res.loss));
    CHECK(res.loss == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("cross entropy rejects out-of-range labels") {
    Tensor logits({1, 3});
    logits.data = {0, 0, 0};
    const std::vector<int> bad{3};
    CHECK_THROWS_AS(softmax_cross_entropy(logits, bad), std::out_of_range);
    const std::vector<int> neg{-1};
    CHECK_THROWS_AS(softmax_cross_entropy(logits, neg), std::out_of_range);
}

TEST_CASE("cross entropy gradient matches finite differences") {
    std::mt19937_64 rng(30);
    for (int c = 0; c < 20; ++c) {
        Tensor logits = ts::random_tensor({3, 5}, rng, -2.0, 2.0);
        const std::vector<int> labels{int(rng() % 5), int(rng() % 5), int(rng() % 5)};
        const LossResult res = softmax_cross_entropy(logits, labels);
        const double h = 1e-6;
        for (std::size_t i = 0; i < logits.data.size(); ++i) {
            const double orig = logits.data[i];
            logits.data[i] = orig + h;
            const double lp = softmax_cross_entropy(logits, labels).loss;
            logits.data[i] = orig - h;
            const double lm = softmax_cross_entropy(logits, labels).loss;
            logits.data[i] = orig;
            CHECK(ts::rel_err((lp - lm) / (2 * h), res.grad_logits.data[i]) < 1e-4);
        }
    }
}

TEST_CASE("concat and split are inverse channel maps") {
    std::mt19937_64 rng(31);
    const Tensor a = ts::random_tensor({2, 3, 4}, rng);
    const Tensor b = ts::random_tensor({2, 5, 4}, rng);
    const Tensor cat = concat_channels(a, b);
    REQUIRE(cat.shape == std::vector<std::size_t>({2, 8, 4}));
    CHECK(cat.at3(0, 1, 2) == a.at3(0, 1, 2));
    CHECK(cat.at3(1, 3, 0) == b.at3(1, 0, 0));
    const auto [ga, gb] = split_channels(cat, 3);
    CHECK(ga.data == a.data);
    CHECK(gb.data == b.data);
}

TEST_CASE("concat rejects mismatched batch or time") {
    std::mt19937_64 rng(32);
    const Tensor a = ts::random_tensor({2, 3, 4}, rng);
    const Tensor bad_t = ts::random_tensor({2, 3, 5}, rng);
    const Tensor bad_b = ts::random_tensor({3, 3, 4}, rng);
    CHECK_THROWS_AS(concat_channels(a, bad_t), ShapeError);
    CHECK_THROWS_AS(concat_channels(a, bad_b), ShapeError);
}

TEST_CASE("add sums elementwise and rejects shape mismatch") {
    const Tensor a = make3(1, 2, 2, {1, 2, 3, 4});
    const Tensor b = make3(1, 2, 2, {10, 20, 30, 40});
    CHECK(add(a, b).data == std::vector<double>({11, 22, 33, 44}));
    std::mt19937_64 rng(1);
    CHECK_THROWS_AS(add(a, ts::random_tensor({1, 2, 3}, rng)), ShapeError);
}

TEST_CASE("he uniform fill respects its bound") {
    std::mt19937_64 rng(33);
    Tensor w({64, 32});
    he_uniform_fill(w, 32, rng);
    const double bound = std::sqrt(6.0 / 32.0);
    double lo = 0.0, hi = 0.0;
    for (double v : w.data) {
        CHECK(std::fabs(v) <= bound);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    // the sample actually spans most of the interval
    CHECK(lo < -0.8 * bound);
    CHECK(hi > 0.8 * bound);
}

TEST_CASE("parameter gradients accumulate until zeroed") {
    Dense dense(2, 1);
    dense.params().weights.data = {1.0, 1.0};
    dense.params().bias.data = {0.0};
    Tensor x({1, 2});
    x.data = {1.0, 2.0};
    Tensor g({1, 1});
    g.data = {1.0};
    dense.forward(x, true);
    dense.backward(g);
    const std::vector<double> once = dense.params().grad_weights.data;
    dense.forward(x, true);
    dense.backward(g);
    for (std::size_t i = 0; i < once.size(); ++i) {
        CHECK(dense.params().grad_weights.data[i] == doctest::Approx(2.0 * once[i]));
    }
}
