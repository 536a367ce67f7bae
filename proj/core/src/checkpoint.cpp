#include "vdblur/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "spec_json.hpp"

namespace vdblur {

namespace {

constexpr char kMagic[8] = {'V', 'D', 'B', 'L', 'U', 'R', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <class T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

std::uint64_t fnv1a(std::uint64_t hash, const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        hash ^= p[i];
        hash *= 1099511628211ull;
    }
    return hash;
}

std::string content_hash(const std::vector<NamedArray>& arrays) {
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& a : arrays) {
        h = fnv1a(h, a.name.data(), a.name.size());
        h = fnv1a(h, a.data.data(), a.data.size() * sizeof(float));
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

NamedArray make_array(std::string name, std::vector<std::uint64_t> dims,
                      const std::vector<float>& data) {
    NamedArray a;
    a.name = std::move(name);
    a.dims = std::move(dims);
    a.data = data;
    return a;
}

const NamedArray& require(const std::map<std::string, NamedArray>& arrays,
                          const std::string& name, std::size_t expected) {
    auto it = arrays.find(name);
    if (it == arrays.end()) throw ConfigError("checkpoint is missing array '" + name + "'");
    if (it->second.data.size() != expected)
        throw ConfigError("array '" + name + "' holds " + std::to_string(it->second.data.size()) +
                          " values, expected " + std::to_string(expected));
    return it->second;
}

}  // namespace

void write_archive(const std::filesystem::path& path, const std::string& manifest_json,
                   const std::vector<NamedArray>& arrays) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot write " + tmp.string());
        out.write(kMagic, 8);
        put(out, kVersion);
        put(out, static_cast<std::uint64_t>(manifest_json.size()));
        out.write(manifest_json.data(), static_cast<std::streamsize>(manifest_json.size()));
        put(out, static_cast<std::uint64_t>(arrays.size()));
        for (const auto& a : arrays) {
            put(out, static_cast<std::uint16_t>(a.name.size()));
            out.write(a.name.data(), static_cast<std::streamsize>(a.name.size()));
            put(out, static_cast<std::uint8_t>(0));  // dtype: float32
            put(out, static_cast<std::uint8_t>(a.dims.size()));
            for (std::uint64_t d : a.dims) put(out, d);
            out.write(reinterpret_cast<const char*>(a.data.data()),
                      static_cast<std::streamsize>(a.data.size() * sizeof(float)));
        }
        if (!out) throw DataError("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

Archive read_archive(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw DataError(path.string() + " is not a checkpoint archive");
    const auto version = get<std::uint32_t>(in);
    if (version != kVersion)
        throw DataError(path.string() + ": unsupported archive version " +
                        std::to_string(version));

    Archive ar;
    const auto mlen = get<std::uint64_t>(in);
    ar.manifest_json.resize(mlen);
    in.read(ar.manifest_json.data(), static_cast<std::streamsize>(mlen));

    const auto count = get<std::uint64_t>(in);
    for (std::uint64_t i = 0; i < count; ++i) {
        NamedArray a;
        const auto nlen = get<std::uint16_t>(in);
        a.name.resize(nlen);
        in.read(a.name.data(), nlen);
        const auto dtype = get<std::uint8_t>(in);
        if (dtype != 0) throw DataError("array '" + a.name + "' has unsupported dtype");
        const auto rank = get<std::uint8_t>(in);
        std::uint64_t total = 1;
        for (int d = 0; d < rank; ++d) {
            a.dims.push_back(get<std::uint64_t>(in));
            total *= a.dims.back();
        }
        a.data.resize(total);
        in.read(reinterpret_cast<char*>(a.data.data()),
                static_cast<std::streamsize>(total * sizeof(float)));
        if (!in) throw DataError(path.string() + ": truncated array '" + a.name + "'");
        ar.arrays.emplace(a.name, std::move(a));
    }
    return ar;
}

std::vector<NamedArray> pack_generator(const NetworkSpec& spec,
                                       const ModelParameters<float>& params,
                                       const std::string& prefix) {
    validate_parameters(spec, params);
    std::vector<NamedArray> arrays;
    for (const auto& l : spec.layers) {
        const auto& lp = params.layers.at(l.id);
        const std::string base = prefix + "L" + std::to_string(l.id) + "/";
        const auto& g = l.geom;
        arrays.push_back(make_array(base + "kernels",
                                    {static_cast<std::uint64_t>(g.out_channels),
                                     static_cast<std::uint64_t>(g.in_channels),
                                     static_cast<std::uint64_t>(g.kp),
                                     static_cast<std::uint64_t>(g.kq),
                                     static_cast<std::uint64_t>(g.kr)},
                                    lp.kernels));
        if (l.batch_norm) {
            const std::vector<std::uint64_t> dim{static_cast<std::uint64_t>(g.out_channels)};
            arrays.push_back(make_array(base + "bn_scale", dim, lp.bn_scale));
            arrays.push_back(make_array(base + "bn_shift", dim, lp.bn_shift));
            arrays.push_back(make_array(base + "bn_mean", dim, lp.bn_mean));
            arrays.push_back(make_array(base + "bn_var", dim, lp.bn_var));
        } else {
            arrays.push_back(make_array(base + "bias",
                                        {static_cast<std::uint64_t>(g.out_channels)}, lp.bias));
        }
    }
    return arrays;
}

ModelParameters<float> unpack_generator(const NetworkSpec& spec,
                                        const std::map<std::string, NamedArray>& arrays,
                                        const std::string& prefix) {
    ModelParameters<float> params;
    for (const auto& l : spec.layers) {
        const std::string base = prefix + "L" + std::to_string(l.id) + "/";
        LayerParams<float> lp;
        lp.kernels = require(arrays, base + "kernels", l.geom.kernel_count()).data;
        if (l.batch_norm) {
            const auto n = static_cast<std::size_t>(l.geom.out_channels);
            lp.bn_scale = require(arrays, base + "bn_scale", n).data;
            lp.bn_shift = require(arrays, base + "bn_shift", n).data;
            lp.bn_mean = require(arrays, base + "bn_mean", n).data;
            lp.bn_var = require(arrays, base + "bn_var", n).data;
        } else {
            lp.bias = require(arrays, base + "bias", l.geom.out_channels).data;
        }
        params.layers.emplace(l.id, std::move(lp));
    }
    return params;
}

std::vector<NamedArray> pack_discriminator(const DiscriminatorSpec& spec,
                                           const DiscriminatorParameters<float>& params,
                                           const std::string& prefix) {
    std::vector<NamedArray> arrays;
    for (const auto& l : spec.conv_layers()) {
        const auto& lp = params.convs.at(l.id);
        const std::string base = prefix + "C" + std::to_string(l.id) + "/";
        const auto& g = l.geom;
        arrays.push_back(make_array(base + "kernels",
                                    {static_cast<std::uint64_t>(g.out_channels),
                                     static_cast<std::uint64_t>(g.in_channels),
                                     static_cast<std::uint64_t>(g.kp),
                                     static_cast<std::uint64_t>(g.kq),
                                     static_cast<std::uint64_t>(g.kr)},
                                    lp.kernels));
        const std::vector<std::uint64_t> dim{static_cast<std::uint64_t>(g.out_channels)};
        arrays.push_back(make_array(base + "bn_scale", dim, lp.bn_scale));
        arrays.push_back(make_array(base + "bn_shift", dim, lp.bn_shift));
        arrays.push_back(make_array(base + "bn_mean", dim, lp.bn_mean));
        arrays.push_back(make_array(base + "bn_var", dim, lp.bn_var));
    }
    for (std::size_t i = 0; i < params.fc.size(); ++i) {
        const auto& f = params.fc[i];
        const std::string base = prefix + "F" + std::to_string(i + 1) + "/";
        arrays.push_back(make_array(base + "weight",
                                    {static_cast<std::uint64_t>(f.out),
                                     static_cast<std::uint64_t>(f.in)},
                                    f.weight));
        arrays.push_back(make_array(base + "bias", {static_cast<std::uint64_t>(f.out)}, f.bias));
    }
    return arrays;
}

DiscriminatorParameters<float> unpack_discriminator(
    const DiscriminatorSpec& spec, const std::map<std::string, NamedArray>& arrays,
    const std::string& prefix) {
    DiscriminatorParameters<float> params;
    for (const auto& l : spec.conv_layers()) {
        const std::string base = prefix + "C" + std::to_string(l.id) + "/";
        LayerParams<float> lp;
        lp.kernels = require(arrays, base + "kernels", l.geom.kernel_count()).data;
        const auto n = static_cast<std::size_t>(l.geom.out_channels);
        lp.bn_scale = require(arrays, base + "bn_scale", n).data;
        lp.bn_shift = require(arrays, base + "bn_shift", n).data;
        lp.bn_mean = require(arrays, base + "bn_mean", n).data;
        lp.bn_var = require(arrays, base + "bn_var", n).data;
        params.convs.emplace(l.id, std::move(lp));
    }
    int in_dim = spec.flatten_size();
    for (std::size_t i = 0; i < spec.fc.size(); ++i) {
        const std::string base = prefix + "F" + std::to_string(i + 1) + "/";
        FcParams<float> f;
        f.in = in_dim;
        f.out = spec.fc[i];
        f.weight = require(arrays, base + "weight",
                           static_cast<std::size_t>(f.in) * f.out)
                       .data;
        f.bias = require(arrays, base + "bias", f.out).data;
        params.fc.push_back(std::move(f));
        in_dim = f.out;
    }
    return params;
}

void save_checkpoint(const std::filesystem::path& path, Checkpoint& ckpt) {
    std::vector<NamedArray> arrays = pack_generator(ckpt.spec, ckpt.generator, "g/");
    if (ckpt.discriminator.has_value()) {
        if (!ckpt.disc_spec.has_value())
            throw ConfigError("checkpoint has discriminator parameters but no spec");
        auto d = pack_discriminator(*ckpt.disc_spec, *ckpt.discriminator, "d/");
        arrays.insert(arrays.end(), std::make_move_iterator(d.begin()),
                      std::make_move_iterator(d.end()));
    }
    ckpt.id = content_hash(arrays);

    nlohmann::json manifest;
    manifest["kind"] = "checkpoint";
    manifest["variant"] = variant_name(ckpt.spec.variant);
    manifest["window_T"] = ckpt.spec.window_T;
    manifest["step"] = ckpt.step;
    manifest["id"] = ckpt.id;
    manifest["generator"] = detail::spec_to_json(ckpt.spec);
    if (ckpt.disc_spec.has_value())
        manifest["discriminator"] = detail::disc_spec_to_json(*ckpt.disc_spec);
    write_archive(path, manifest.dump(2), arrays);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    Archive ar = read_archive(path);
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(ar.manifest_json);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": bad manifest: " + e.what());
    }
    if (manifest.value("kind", "") != "checkpoint")
        throw DataError(path.string() + " is not a model checkpoint (kind='" +
                        manifest.value("kind", "") + "')");

    Checkpoint ckpt;
    ckpt.spec = detail::spec_from_json(manifest.at("generator"));
    ckpt.spec.validate();
    ckpt.step = manifest.value("step", 0);
    ckpt.id = manifest.value("id", "");
    ckpt.generator = unpack_generator(ckpt.spec, ar.arrays, "g/");
    if (manifest.contains("discriminator")) {
        ckpt.disc_spec = detail::disc_spec_from_json(manifest.at("discriminator"));
        ckpt.discriminator = unpack_discriminator(*ckpt.disc_spec, ar.arrays, "d/");
    }
    return ckpt;
}

std::string network_spec_to_json(const NetworkSpec& spec) {
    return detail::spec_to_json(spec).dump(2);
}

NetworkSpec network_spec_from_json(const std::string& json_text) {
    return detail::spec_from_json(nlohmann::json::parse(json_text));
}

namespace detail {

nlohmann::json spec_to_json(const NetworkSpec& spec) {
    nlohmann::json j;
    j["variant"] = variant_name(spec.variant);
    j["window_T"] = spec.window_T;
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : spec.layers) {
        nlohmann::json lj;
        lj["id"] = l.id;
        lj["in"] = l.geom.in_channels;
        lj["out"] = l.geom.out_channels;
        lj["kp"] = l.geom.kp;
        lj["kq"] = l.geom.kq;
        lj["kr"] = l.geom.kr;
        lj["stride"] = l.geom.spatial_stride;
        lj["spatial_padding"] = l.geom.spatial_padding;
        lj["temporal_padding"] = l.geom.temporal_padding;
        lj["batch_norm"] = l.batch_norm;
        lj["activation"] = (l.activation == Activation::ReLU) ? "relu" : "none";
        lj["skip_from"] = l.skip_from;
        layers.push_back(std::move(lj));
    }
    j["layers"] = std::move(layers);
    return j;
}

NetworkSpec spec_from_json(const nlohmann::json& j) {
    NetworkSpec spec;
    spec.variant = variant_from_name(j.at("variant").get<std::string>());
    spec.window_T = j.at("window_T").get<int>();
    for (const auto& lj : j.at("layers")) {
        LayerDesc l;
        l.id = lj.at("id").get<int>();
        l.geom.in_channels = lj.at("in").get<int>();
        l.geom.out_channels = lj.at("out").get<int>();
        l.geom.kp = lj.at("kp").get<int>();
        l.geom.kq = lj.at("kq").get<int>();
        l.geom.kr = lj.at("kr").get<int>();
        l.geom.spatial_stride = lj.value("stride", 1);
        l.geom.spatial_padding = lj.at("spatial_padding").get<int>();
        l.geom.temporal_padding = lj.at("temporal_padding").get<int>();
        l.batch_norm = lj.at("batch_norm").get<bool>();
        l.activation = (lj.at("activation").get<std::string>() == "relu") ? Activation::ReLU
                                                                          : Activation::None;
        l.skip_from = lj.at("skip_from").get<std::vector<int>>();
        spec.layers.push_back(std::move(l));
    }
    return spec;
}

nlohmann::json disc_spec_to_json(const DiscriminatorSpec& spec) {
    nlohmann::json j;
    nlohmann::json stages = nlohmann::json::array();
    for (const auto& [count, ch] : spec.conv_stages) stages.push_back({count, ch});
    j["conv_stages"] = std::move(stages);
    j["fc"] = spec.fc;
    j["input_h"] = spec.input_h;
    j["input_w"] = spec.input_w;
    return j;
}

DiscriminatorSpec disc_spec_from_json(const nlohmann::json& j) {
    DiscriminatorSpec spec;
    spec.conv_stages.clear();
    for (const auto& s : j.at("conv_stages"))
        spec.conv_stages.emplace_back(s.at(0).get<int>(), s.at(1).get<int>());
    spec.fc = j.at("fc").get<std::vector<int>>();
    spec.input_h = j.at("input_h").get<int>();
    spec.input_w = j.at("input_w").get<int>();
    spec.validate();
    return spec;
}

}  // namespace detail

}  // namespace vdblur
