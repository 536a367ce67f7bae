#include <doctest.h>

#include <cmath>

#include "oracle/oracle.hpp"
#include "test_util.hpp"
#include "vdblur/discriminator.hpp"
#include "vdblur/losses.hpp"

using namespace vdblur;
using testutil::gather;
using testutil::random_input;
using testutil::scatter;

namespace {

DiscriminatorSpec tiny_disc(int input) {
    DiscriminatorSpec spec;
    spec.conv_stages = {{1, 4}, {1, 8}};
    spec.fc = {16, 2};
    spec.input_h = spec.input_w = input;
    spec.validate();
    return spec;
}

}  // namespace

TEST_CASE("published configuration has 14 convs and an 8x8 head at 128") {
    const DiscriminatorSpec spec = DiscriminatorSpec::standard(128, 128);
    CHECK(spec.conv_layer_count() == 14);
    const auto layers = spec.conv_layers();
    REQUIRE(layers.size() == 14);
    for (const auto& l : layers) {
        CHECK(l.geom.kp == 3);
        CHECK(l.geom.kr == 3);
        CHECK(l.batch_norm);
        CHECK(l.activation == Activation::ReLU);
    }
    int stride2 = 0;
    for (const auto& l : layers) stride2 += (l.geom.spatial_stride == 2) ? 1 : 0;
    CHECK(stride2 == 4);  // one reduction per channel stage
    CHECK(spec.feature_hw() == std::pair<int, int>{8, 8});
    CHECK(spec.flatten_size() == 512 * 8 * 8);
    CHECK(spec.fc == std::vector<int>{4096, 2});
}

TEST_CASE("probability pair sums to one and is deterministic") {
    const DiscriminatorSpec spec = tiny_disc(16);
    const auto params = init_discriminator<double>(spec, 5);
    Plane<double> frame(16, 16);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& v : frame.v) v = u(rng);

    const auto [pr, pf] = discriminator_forward(spec, params, frame);
    CHECK(pr + pf == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(pr > 0.0);
    CHECK(pr < 1.0);
    CHECK(std::isfinite(pr));

    const auto again = discriminator_forward(spec, params, frame);
    CHECK(again.first == pr);
    CHECK(again.second == pf);
}

TEST_CASE("input size mismatch is rejected") {
    const DiscriminatorSpec spec = tiny_disc(16);
    const auto params = init_discriminator<double>(spec, 5);
    Plane<double> frame(12, 16);
    CHECK_THROWS_AS(discriminator_forward(spec, params, frame), ConfigError);
}

TEST_CASE("fresh discriminator on a random batch stays in (0,1)") {
    const DiscriminatorSpec spec = tiny_disc(16);
    auto params = init_discriminator<double>(spec, 11);
    const Tensor<double> batch = random_input(3, 1, 1, 16, 16, 13);
    DiscriminatorTape<double> tape;
    const auto p = discriminator_train_forward(spec, params, batch, tape, false);
    REQUIRE(p.size() == 3);
    for (double v : p) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
    for (double z : tape.logits) CHECK(std::isfinite(z));
}

TEST_CASE("discriminator-loss gradients match finite differences") {
    const DiscriminatorSpec spec = tiny_disc(8);
    auto params = init_discriminator<double>(spec, 17);
    const Tensor<double> sharp = random_input(2, 1, 1, 8, 8, 19);
    const Tensor<double> generated = random_input(2, 1, 1, 8, 8, 23);

    auto arrays = disc_trainable_arrays(params);
    std::vector<double> flat = gather(arrays);

    auto loss_fn = [&](std::span<const double> p) {
        scatter(p, arrays);
        DiscriminatorTape<double> ts, tg;
        const auto p_s = discriminator_train_forward(spec, params, sharp, ts, false);
        const auto p_g = discriminator_train_forward(spec, params, generated, tg, false);
        return discriminator_loss_batch<double>(p_s, p_g, nullptr, nullptr);
    };

    scatter(flat, arrays);
    DiscriminatorTape<double> ts, tg;
    const auto p_s = discriminator_train_forward(spec, params, sharp, ts, false);
    const auto p_g = discriminator_train_forward(spec, params, generated, tg, false);
    std::vector<double> d_ps, d_pg;
    discriminator_loss_batch(p_s, p_g, &d_ps, &d_pg);
    auto grads = make_zero_disc_grads<double>(spec);
    discriminator_backward(spec, params, ts, d_ps, grads);
    discriminator_backward(spec, params, tg, d_pg, grads);
    const std::vector<double> analytic = gather(disc_trainable_arrays(grads));

    const auto report = oracle::grad_check(loss_fn, flat, analytic, {});
    CAPTURE(report.max_rel_error);
    CHECK(report.non_finite.empty());
    CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("gradients reach the discriminator input") {
    const DiscriminatorSpec spec = tiny_disc(8);
    auto params = init_discriminator<double>(spec, 29);
    Tensor<double> x = random_input(1, 1, 1, 8, 8, 31);

    auto loss_at = [&](const Tensor<double>& in) {
        DiscriminatorTape<double> t;
        const auto p = discriminator_train_forward(spec, params, in, t, false);
        return adversarial_loss_batch<double>(p, nullptr);
    };

    DiscriminatorTape<double> tape;
    const auto p = discriminator_train_forward(spec, params, x, tape, false);
    std::vector<double> d_p;
    adversarial_loss_batch(p, &d_p);
    auto grads = make_zero_disc_grads<double>(spec);
    Tensor<double> d_x;
    discriminator_backward(spec, params, tape, d_p, grads, &d_x);
    REQUIRE(d_x.same_shape(x));

    std::mt19937 rng(37);
    for (int k = 0; k < 16; ++k) {
        const std::size_t i = rng() % x.v.size();
        const double h = 1e-6, saved = x.v[i];
        x.v[i] = saved + h;
        const double up = loss_at(x);
        x.v[i] = saved - h;
        const double down = loss_at(x);
        x.v[i] = saved;
        const double fd = (up - down) / (2 * h);
        const double denom = std::max({std::abs(fd), std::abs(d_x.v[i]), 1e-8});
        CHECK(std::abs(fd - d_x.v[i]) / denom < 1e-3);
    }
}
