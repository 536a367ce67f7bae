#include <doctest.h>

#include "vdblur/network.hpp"

using namespace vdblur;

TEST_CASE("net3d for T=5 matches the published table") {
    const NetworkSpec spec = build_generator(Variant::Net3D, 5);
    REQUIRE(spec.layers.size() == 35);

    // Temporal extents: 5 -> 3 after layer 1, 3 -> 1 after layer 2, 1 after.
    const auto ext = spec.temporal_extents();
    CHECK(ext[0] == 3);
    CHECK(ext[1] == 1);
    for (std::size_t i = 2; i < ext.size(); ++i) CHECK(ext[i] == 1);

    // Head.
    CHECK(spec.layers[0].geom.kq == 3);
    CHECK(spec.layers[0].geom.out_channels == 16);
    CHECK(spec.layers[0].geom.in_channels == 1);
    CHECK_FALSE(spec.layers[0].batch_norm);
    CHECK(spec.layers[1].geom.kq == 3);
    CHECK(spec.layers[1].geom.out_channels == 64);

    // Residual body: L3..L30, Q=1, 64 channels, BN everywhere; the block
    // input is added at the block's second conv.
    for (int id = 3; id <= 30; ++id) {
        const LayerDesc* l = spec.find(id);
        REQUIRE(l != nullptr);
        CHECK(l->geom.kq == 1);
        CHECK(l->geom.out_channels == 64);
        CHECK(l->batch_norm);
        if (id % 2 == 1) {  // first conv of a block
            CHECK(l->activation == Activation::ReLU);
            CHECK(l->skip_from.empty());
        } else {
            CHECK(l->activation == Activation::None);
            REQUIRE(l->skip_from.size() == 1);
            CHECK(l->skip_from[0] == id - 2);
        }
    }

    // Post-body convs: no block skip on L31; the long skip lands on L32.
    CHECK(spec.find(31)->skip_from.empty());
    REQUIRE(spec.find(32)->skip_from.size() == 1);
    CHECK(spec.find(32)->skip_from[0] == 2);
    CHECK(spec.find(31)->batch_norm);
    CHECK(spec.find(32)->batch_norm);

    // Output head: 256, 256, 1; final layer bare.
    CHECK(spec.find(33)->geom.out_channels == 256);
    CHECK(spec.find(34)->geom.out_channels == 256);
    CHECK(spec.find(35)->geom.out_channels == 1);
    CHECK(spec.find(35)->activation == Activation::None);
    CHECK_FALSE(spec.find(35)->batch_norm);
    CHECK_FALSE(spec.find(33)->batch_norm);
    CHECK_FALSE(spec.find(34)->batch_norm);
}

TEST_CASE("net3d for T=3 uses one leading temporal layer") {
    const NetworkSpec spec = build_generator(Variant::Net3D, 3);
    CHECK(spec.layers[0].geom.kq == 3);
    CHECK(spec.layers[1].geom.kq == 1);
    const auto ext = spec.temporal_extents();
    CHECK(ext[0] == 1);
    CHECK(spec.layers.size() == 35);
}

TEST_CASE("single2d with T=1 degenerates to one input channel, all Q=1") {
    const NetworkSpec spec = build_generator(Variant::Single2D, 1);
    CHECK(spec.input_channels() == 1);
    for (const auto& l : spec.layers) CHECK(l.geom.kq == 1);
}

TEST_CASE("multi2d folds frames into channels and mirrors net3d geometry") {
    const NetworkSpec m = build_generator(Variant::Multi2D, 5);
    const NetworkSpec n = build_generator(Variant::Net3D, 5);
    REQUIRE(m.layers.size() == n.layers.size());
    CHECK(m.input_channels() == 5);
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        CHECK(m.layers[i].geom.kq == 1);
        CHECK(m.layers[i].geom.kp == n.layers[i].geom.kp);
        CHECK(m.layers[i].geom.out_channels == n.layers[i].geom.out_channels);
        CHECK(m.layers[i].geom.spatial_padding == n.layers[i].geom.spatial_padding);
        CHECK(m.layers[i].skip_from == n.layers[i].skip_from);
    }
}

TEST_CASE("even or non-positive T is rejected") {
    CHECK_THROWS_AS(build_generator(Variant::Net3D, 4), ConfigError);
    CHECK_THROWS_AS(build_generator(Variant::Net3D, 0), ConfigError);
    CHECK_THROWS_AS(build_generator(Variant::Net3D, -3), ConfigError);
}

TEST_CASE("larger windows grow the temporal head") {
    for (int T : {7, 9, 11}) {
        const NetworkSpec spec = build_generator(Variant::Net3D, T);
        int q3 = 0;
        for (const auto& l : spec.layers) q3 += (l.geom.kq == 3) ? 1 : 0;
        CHECK(q3 == (T - 1) / 2);
        CHECK(spec.temporal_extents()[(T - 1) / 2 - 1] == 1);
        spec.validate();
    }
}

TEST_CASE("variant names round-trip") {
    for (Variant v : {Variant::Net3D, Variant::Multi2D, Variant::Single2D})
        CHECK(variant_from_name(variant_name(v)) == v);
    CHECK_THROWS_AS(variant_from_name("nope"), ConfigError);
}
