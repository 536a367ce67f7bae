#include <doctest.h>

#include <random>

#include "oracle/oracle.hpp"
#include "vdblur/conv3d.hpp"

using namespace vdblur;

namespace {

Tensor<double> random_tensor(int c, int t, int h, int w, std::mt19937& rng) {
    Tensor<double> x(1, c, t, h, w);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& v : x.v) v = u(rng);
    return x;
}

Conv3DLayer<double> random_layer(int in_c, int out_c, int kp, int kq, int kr, int spad,
                                 std::mt19937& rng) {
    Conv3DLayer<double> l;
    l.geom.in_channels = in_c;
    l.geom.out_channels = out_c;
    l.geom.kp = kp;
    l.geom.kq = kq;
    l.geom.kr = kr;
    l.geom.spatial_padding = spad;
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    l.kernels.resize(l.geom.kernel_count());
    for (auto& v : l.kernels) v = u(rng);
    l.bias.resize(out_c);
    for (auto& v : l.bias) v = u(rng);
    return l;
}

double max_rel_err(const Tensor<double>& a, const Tensor<double>& b) {
    REQUIRE(a.same_shape(b));
    double worst = 0.0;
    for (std::size_t i = 0; i < a.v.size(); ++i) {
        const double denom = std::max({std::abs(a.v[i]), std::abs(b.v[i]), 1e-9});
        worst = std::max(worst, std::abs(a.v[i] - b.v[i]) / denom);
    }
    return worst;
}

}  // namespace

TEST_CASE("1x1x1 identity kernel reproduces the input") {
    Tensor<double> in(1, 1, 1, 4, 4);
    for (std::size_t i = 0; i < in.v.size(); ++i) in.v[i] = 0.1 * static_cast<double>(i);

    Conv3DLayer<double> l;
    l.geom = {.in_channels = 1, .out_channels = 1, .kp = 1, .kq = 1, .kr = 1, .spatial_padding = 0};
    l.kernels = {1.0};
    l.bias = {0.0};

    const Tensor<double> out = conv3d_forward(in, l);
    REQUIRE(out.same_shape(in));
    for (std::size_t i = 0; i < in.v.size(); ++i) CHECK(out.v[i] == doctest::Approx(in.v[i]));
}

TEST_CASE("all-zero kernels give a constant bias output") {
    std::mt19937 rng(7);
    Tensor<double> in = random_tensor(2, 3, 5, 5, rng);
    Conv3DLayer<double> l = random_layer(2, 3, 3, 3, 3, 1, rng);
    std::fill(l.kernels.begin(), l.kernels.end(), 0.0);
    l.bias = {0.25, -1.5, 3.0};

    const Tensor<double> out = conv3d_forward(in, l);
    for (int c = 0; c < 3; ++c)
        for (int t = 0; t < out.t; ++t)
            for (int y = 0; y < out.h; ++y)
                for (int x = 0; x < out.w; ++x)
                    CHECK(out.at(0, c, t, y, x) == doctest::Approx(l.bias[c]));
}

TEST_CASE("random 2x5x6x6 case matches the nested-loop reference") {
    std::mt19937 rng(11);
    Tensor<double> in = random_tensor(2, 5, 6, 6, rng);
    Conv3DLayer<double> l = random_layer(2, 3, 3, 3, 3, 1, rng);

    const Tensor<double> got = conv3d_forward(in, l);
    const Tensor<double> want = oracle::conv3d_oracle(in, l);
    CHECK(got.t == 3);
    CHECK(got.h == 6);
    CHECK(got.w == 6);
    CHECK(max_rel_err(got, want) < 1e-6);
}

TEST_CASE("production conv agrees with the reference on 100 randomized shapes") {
    std::mt19937 rng(1234);
    auto pick = [&rng](int lo, int hi) {
        return lo + static_cast<int>(rng() % static_cast<unsigned>(hi - lo + 1));
    };
    for (int trial = 0; trial < 100; ++trial) {
        const int cin = pick(1, 4), cout = pick(1, 4);
        const int t = pick(1, 5), h = pick(3, 9), w = pick(3, 9);
        const int kq = (t >= 3 && trial % 2 == 0) ? 3 : 1;
        const int k = (trial % 3 == 0) ? 1 : 3;
        Tensor<double> in = random_tensor(cin, t, h, w, rng);
        Conv3DLayer<double> l = random_layer(cin, cout, k, kq, k, (k - 1) / 2, rng);
        if (trial % 4 == 0) l.activation = Activation::ReLU;

        const Tensor<double> got = conv3d_forward(in, l);
        const Tensor<double> want = oracle::conv3d_oracle(in, l);
        CHECK(max_rel_err(got, want) < 1e-6);
    }
}

TEST_CASE("Q=1 on a single frame equals a 2D convolution") {
    std::mt19937 rng(21);
    Tensor<double> in = random_tensor(3, 1, 8, 7, rng);
    Conv3DLayer<double> l = random_layer(3, 2, 3, 1, 3, 1, rng);

    const Tensor<double> got = conv3d_forward(in, l);
    const Tensor<double> want = oracle::conv2d_oracle(in, l);
    CHECK(max_rel_err(got, want) < 1e-12);
}

TEST_CASE("stride-2 convolution matches the reference") {
    std::mt19937 rng(31);
    Tensor<double> in = random_tensor(2, 1, 9, 8, rng);
    Conv3DLayer<double> l = random_layer(2, 4, 3, 1, 3, 1, rng);
    l.geom.spatial_stride = 2;

    const Tensor<double> got = conv3d_forward(in, l);
    const Tensor<double> want = oracle::conv3d_oracle(in, l);
    CHECK(got.h == 5);
    CHECK(got.w == 4);
    CHECK(max_rel_err(got, want) < 1e-12);
}

TEST_CASE("shape mismatches raise a configuration error naming the layer") {
    std::mt19937 rng(41);
    Tensor<double> in = random_tensor(2, 3, 5, 5, rng);

    SUBCASE("wrong channel count") {
        Conv3DLayer<double> l = random_layer(3, 2, 3, 1, 3, 1, rng);
        CHECK_THROWS_WITH_AS(conv3d_forward(in, l, "L7"),
                             doctest::Contains("L7"), ConfigError);
    }
    SUBCASE("temporal extent below the kernel") {
        Conv3DLayer<double> l = random_layer(2, 2, 3, 3, 3, 1, rng);
        Tensor<double> thin = random_tensor(2, 2, 5, 5, rng);
        CHECK_THROWS_AS(conv3d_forward(thin, l, "L1"), ConfigError);
    }
    SUBCASE("kernel array size") {
        Conv3DLayer<double> l = random_layer(2, 2, 3, 1, 3, 1, rng);
        l.kernels.pop_back();
        CHECK_THROWS_AS(conv3d_forward(in, l), ConfigError);
    }
}

TEST_CASE("2x2x2 all-ones kernel on a 2x2x2 input sums the inputs") {
    Tensor<double> in(1, 1, 2, 2, 2);
    double sum = 0.0;
    for (std::size_t i = 0; i < in.v.size(); ++i) {
        in.v[i] = 0.5 * static_cast<double>(i) - 1.0;
        sum += in.v[i];
    }
    Conv3DLayer<double> l;
    l.geom = {.in_channels = 1, .out_channels = 1, .kp = 2, .kq = 2, .kr = 2, .spatial_padding = 0};
    l.kernels.assign(8, 1.0);
    l.bias = {0.0};

    const Tensor<double> out = oracle::conv3d_oracle(in, l);
    REQUIRE(out.v.size() == 1);
    CHECK(out.v[0] == doctest::Approx(sum));
}
