#include <doctest.h>

#include <cmath>

#include "oracle/oracle.hpp"
#include "test_util.hpp"
#include "vdblur/color.hpp"
#include "vdblur/generator.hpp"
#include "vdblur/losses.hpp"

using namespace vdblur;
using testutil::gather;
using testutil::random_input;
using testutil::random_window;
using testutil::scatter;

namespace {

const GeneratorScale kTiny{4, 4, 1, 4};    // 1 block, 4 channels
const GeneratorScale kSmall{8, 8, 2, 8};   // 2 blocks, 8 channels

}  // namespace

TEST_CASE("init_weights is deterministic and hits the requested statistics") {
    const NetworkSpec spec = build_generator(Variant::Net3D, 5);
    const auto a = init_weights<float>(spec, 42);
    const auto b = init_weights<float>(spec, 42);
    for (const auto& [id, lp] : a.layers) {
        const auto& other = b.layers.at(id);
        CHECK(lp.kernels == other.kernels);
        CHECK(lp.bias == other.bias);
    }
    const auto c = init_weights<float>(spec, 43);
    CHECK(a.layers.at(1).kernels != c.layers.at(1).kernels);

    // Sample statistics over all drawn kernels (~1.9M for the full net).
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (const auto& [id, lp] : a.layers) {
        for (float k : lp.kernels) {
            sum += k;
            sq += static_cast<double>(k) * k;
        }
        n += lp.kernels.size();
        for (float bv : lp.bias) CHECK(bv == 0.0f);
    }
    REQUIRE(n >= 100000);
    const double mean = sum / static_cast<double>(n);
    const double std = std::sqrt(sq / static_cast<double>(n) - mean * mean);
    CHECK(std::abs(mean) < 0.001);
    CHECK(std > 0.0095);
    CHECK(std < 0.0105);
}

TEST_CASE("generator preserves spatial dims over random sizes") {
    const NetworkSpec spec = build_generator(Variant::Net3D, 5, kTiny);
    const auto params = init_weights<float>(spec, 1);
    std::mt19937 rng(5);
    for (int trial = 0; trial < 4; ++trial) {
        const int h = 8 + static_cast<int>(rng() % 57);
        const int w = 8 + static_cast<int>(rng() % 57);
        const FrameWindow win = random_window(5, h, w, 100 + trial);
        const Plane<float> out = generator_forward(spec, params, win);
        CHECK(out.h == h);
        CHECK(out.w == w);
        for (float v : out.v) {
            REQUIRE(std::isfinite(v));
            REQUIRE(v >= 0.0f);
            REQUIRE(v <= 1.0f);
        }
    }
}

TEST_CASE("generator output is deterministic") {
    const NetworkSpec spec = build_generator(Variant::Net3D, 5, kSmall);
    const auto params = init_weights<float>(spec, 3);
    const FrameWindow win = random_window(5, 32, 32, 7);
    const Plane<float> a = generator_forward(spec, params, win);
    const Plane<float> b = generator_forward(spec, params, win);
    CHECK(a.v == b.v);
}

TEST_CASE("fresh net on a 5x32x32 window stays finite") {
    for (Variant v : {Variant::Net3D, Variant::Multi2D, Variant::Single2D}) {
        const NetworkSpec spec = build_generator(v, 5, kSmall);
        const auto params = init_weights<float>(spec, 11);
        const FrameWindow win = random_window(5, 32, 32, 13);
        const Plane<float> out = generator_forward(spec, params, win);
        for (float x : out.v) CHECK(std::isfinite(x));
    }
}

TEST_CASE("T mismatch raises a configuration error") {
    const NetworkSpec spec = build_generator(Variant::Net3D, 5, kTiny);
    const auto params = init_weights<float>(spec, 1);
    const FrameWindow win = random_window(3, 16, 16, 2);
    CHECK_THROWS_AS(generator_forward(spec, params, win), ConfigError);
}

TEST_CASE("training-mode forward matches inference after folding batch stats") {
    // With running stats equal to the batch stats the two paths agree.
    const NetworkSpec spec = build_generator(Variant::Net3D, 5, kTiny);
    auto params = init_weights<double>(spec, 17);
    const Tensor<double> in = random_input(1, 1, 5, 12, 12, 19);

    GeneratorTape<double> tape;
    const Tensor<double> train_out = generator_train_forward(spec, params, in, tape, false);

    for (const auto& l : spec.layers) {
        if (!l.batch_norm) continue;
        auto& lp = params.layers.at(l.id);
        const std::size_t i = static_cast<std::size_t>(l.id - 1);
        for (int c = 0; c < l.geom.out_channels; ++c) {
            lp.bn_mean[c] = tape.bn[i].mean[c];
            const double inv = tape.bn[i].inv_std[c];
            lp.bn_var[c] = 1.0 / (inv * inv) - kBatchNormEps;
        }
    }
    const Tensor<double> infer_out = generator_infer_forward(spec, params, in);
    REQUIRE(infer_out.same_shape(train_out));
    for (std::size_t i = 0; i < infer_out.v.size(); ++i)
        CHECK(infer_out.v[i] == doctest::Approx(train_out.v[i]).epsilon(1e-9));
}

TEST_CASE("analytic content-loss gradients match finite differences") {
    const NetworkSpec spec = build_generator(Variant::Net3D, 5, kTiny);
    auto params = init_weights<double>(spec, 23, 0.2);
    testutil::make_generic_point(params, 23);
    const Tensor<double> in = random_input(2, 1, 5, 8, 8, 29);
    Tensor<double> target = random_input(2, 1, 1, 8, 8, 31);

    auto arrays = trainable_arrays(params);
    std::vector<double> flat = gather(arrays);

    auto loss_fn = [&](std::span<const double> p) {
        scatter(p, arrays);
        GeneratorTape<double> tape;
        const Tensor<double> out = generator_train_forward(spec, params, in, tape, false);
        return content_loss_batch(out, target, static_cast<Tensor<double>*>(nullptr));
    };

    scatter(flat, arrays);
    GeneratorTape<double> tape;
    const Tensor<double> out = generator_train_forward(spec, params, in, tape, false);
    Tensor<double> d_out;
    content_loss_batch(out, target, &d_out);
    ModelParameters<double> grads = make_zero_grads<double>(spec);
    generator_backward(spec, params, tape, d_out, grads);
    const std::vector<double> analytic = gather(trainable_arrays(grads));

    oracle::FiniteDiffConfig cfg;
    cfg.step = 1e-7;
    cfg.denom_floor = 5e-3;  // absolute certification at the FD noise scale
    const auto report = oracle::grad_check(loss_fn, flat, analytic, cfg);
    CAPTURE(report.max_rel_error);
    CAPTURE(report.worst_index);
    CHECK(report.non_finite.empty());
    CHECK(report.max_rel_error < cfg.tolerance);
}

TEST_CASE("input gradients flow through the generator") {
    const NetworkSpec spec = build_generator(Variant::Net3D, 3, kTiny);
    auto params = init_weights<double>(spec, 37);
    Tensor<double> in = random_input(1, 1, 3, 6, 6, 41);
    Tensor<double> target = random_input(1, 1, 1, 6, 6, 43);

    GeneratorTape<double> tape;
    Tensor<double> out = generator_train_forward(spec, params, in, tape, false);
    Tensor<double> d_out;
    content_loss_batch(out, target, &d_out);
    ModelParameters<double> grads = make_zero_grads<double>(spec);
    Tensor<double> d_in;
    generator_backward(spec, params, tape, d_out, grads, &d_in);
    REQUIRE(d_in.same_shape(in));

    auto loss_at = [&](Tensor<double>& x) {
        GeneratorTape<double> t2;
        const Tensor<double> o = generator_train_forward(spec, params, x, t2, false);
        return content_loss_batch(o, target, static_cast<Tensor<double>*>(nullptr));
    };
    std::mt19937 rng(47);
    for (int k = 0; k < 20; ++k) {
        const std::size_t i = rng() % in.v.size();
        const double h = 1e-5, saved = in.v[i];
        in.v[i] = saved + h;
        const double up = loss_at(in);
        in.v[i] = saved - h;
        const double down = loss_at(in);
        in.v[i] = saved;
        const double fd = (up - down) / (2 * h);
        const double denom = std::max({std::abs(fd), std::abs(d_in.v[i]), 1e-8});
        CHECK(std::abs(fd - d_in.v[i]) / denom < 1e-4);
    }
}

TEST_CASE("recombine recovers the center frame from its own luma") {
    std::mt19937 rng(53);
    Image frame(24, 24);
    for (auto& b : frame.rgb) b = static_cast<std::uint8_t>(rng() % 256);

    const YCbCrPlanes p = rgb_to_ycbcr(frame);
    FrameWindow win;
    win.center_index = 0;
    win.luma = {p.y};
    win.chroma_cb = p.cb;
    win.chroma_cr = p.cr;

    const Image back = recombine(win.center_luma(), win);
    REQUIRE(back.same_shape(frame));
    for (std::size_t i = 0; i < frame.rgb.size(); ++i) {
        const int diff = std::abs(int(frame.rgb[i]) - int(back.rgb[i]));
        REQUIRE(diff <= 1);
    }
}

TEST_CASE("flat luma with neutral chroma maps to black and white") {
    FrameWindow win;
    win.center_index = 0;
    win.luma = {Plane<float>(4, 4)};
    win.chroma_cb = Plane<float>(4, 4);
    win.chroma_cr = Plane<float>(4, 4);
    for (auto& v : win.chroma_cb.v) v = 0.5f;
    for (auto& v : win.chroma_cr.v) v = 0.5f;

    Plane<float> zeros(4, 4);
    const Image black = recombine(zeros, win);
    for (auto b : black.rgb) CHECK(b == 0);

    Plane<float> ones(4, 4);
    for (auto& v : ones.v) v = 1.0f;
    const Image white = recombine(ones, win);
    for (auto b : white.rgb) CHECK(b == 255);
}
