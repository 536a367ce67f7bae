#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "vdblur/checkpoint.hpp"
#include "vdblur/generator.hpp"

using namespace vdblur;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("vdblur_ckpt_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::vector<char> slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("checkpoint round-trips parameters bit-exactly") {
    TempDir tmp;
    const NetworkSpec spec = build_generator(Variant::Net3D, 5, GeneratorScale{4, 4, 2, 4});
    Checkpoint ckpt;
    ckpt.spec = spec;
    ckpt.generator = init_weights<float>(spec, 7);
    ckpt.step = 1234;

    save_checkpoint(tmp.path / "a.vdbc", ckpt);
    CHECK_FALSE(ckpt.id.empty());
    const Checkpoint back = load_checkpoint(tmp.path / "a.vdbc");

    CHECK(back.step == 1234);
    CHECK(back.id == ckpt.id);
    CHECK(back.spec.variant == Variant::Net3D);
    CHECK(back.spec.window_T == 5);
    REQUIRE(back.spec.layers.size() == spec.layers.size());
    for (const auto& [id, lp] : ckpt.generator.layers) {
        const auto& other = back.generator.layers.at(id);
        CHECK(lp.kernels == other.kernels);
        CHECK(lp.bias == other.bias);
        CHECK(lp.bn_scale == other.bn_scale);
        CHECK(lp.bn_mean == other.bn_mean);
    }
}

TEST_CASE("checkpoint with a discriminator restores both networks") {
    TempDir tmp;
    const NetworkSpec spec = build_generator(Variant::Multi2D, 3, GeneratorScale{4, 4, 1, 4});
    DiscriminatorSpec d_spec;
    d_spec.conv_stages = {{1, 4}, {1, 8}};
    d_spec.fc = {8, 2};
    d_spec.input_h = d_spec.input_w = 16;

    Checkpoint ckpt;
    ckpt.spec = spec;
    ckpt.generator = init_weights<float>(spec, 3);
    ckpt.disc_spec = d_spec;
    ckpt.discriminator = init_discriminator<float>(d_spec, 5);
    save_checkpoint(tmp.path / "g.vdbc", ckpt);

    const Checkpoint back = load_checkpoint(tmp.path / "g.vdbc");
    REQUIRE(back.discriminator.has_value());
    CHECK(back.disc_spec->conv_stages == d_spec.conv_stages);
    CHECK(back.discriminator->fc.size() == 2);
    CHECK(back.discriminator->fc[0].weight == ckpt.discriminator->fc[0].weight);
    CHECK(back.discriminator->convs.at(1).kernels == ckpt.discriminator->convs.at(1).kernels);
}

TEST_CASE("same parameters serialize to identical bytes") {
    TempDir tmp;
    const NetworkSpec spec = build_generator(Variant::Net3D, 3, GeneratorScale{4, 4, 1, 4});
    Checkpoint a, b;
    a.spec = b.spec = spec;
    a.generator = init_weights<float>(spec, 11);
    b.generator = init_weights<float>(spec, 11);
    a.step = b.step = 42;
    save_checkpoint(tmp.path / "a.vdbc", a);
    save_checkpoint(tmp.path / "b.vdbc", b);
    CHECK(slurp(tmp.path / "a.vdbc") == slurp(tmp.path / "b.vdbc"));
}

TEST_CASE("damaged archives are reported") {
    TempDir tmp;
    {
        std::ofstream out(tmp.path / "junk.vdbc", std::ios::binary);
        out << "not an archive at all";
    }
    CHECK_THROWS_AS(load_checkpoint(tmp.path / "junk.vdbc"), DataError);
    CHECK_THROWS_AS(read_archive(tmp.path / "missing.vdbc"), DataError);
}

TEST_CASE("network spec JSON round-trips") {
    const NetworkSpec spec = build_generator(Variant::Net3D, 5);
    const NetworkSpec back = network_spec_from_json(network_spec_to_json(spec));
    back.validate();
    REQUIRE(back.layers.size() == spec.layers.size());
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        CHECK(back.layers[i].id == spec.layers[i].id);
        CHECK(back.layers[i].geom.kq == spec.layers[i].geom.kq);
        CHECK(back.layers[i].geom.out_channels == spec.layers[i].geom.out_channels);
        CHECK(back.layers[i].skip_from == spec.layers[i].skip_from);
        CHECK(back.layers[i].batch_norm == spec.layers[i].batch_norm);
        CHECK((back.layers[i].activation == spec.layers[i].activation));
    }
}
