#include "vdblur/network.hpp"

#include <algorithm>

namespace vdblur {

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::Net3D: return "net3d";
        case Variant::Multi2D: return "multi2d";
        case Variant::Single2D: return "single2d";
    }
    return "net3d";
}

Variant variant_from_name(const std::string& name) {
    if (name == "net3d") return Variant::Net3D;
    if (name == "multi2d") return Variant::Multi2D;
    if (name == "single2d") return Variant::Single2D;
    throw ConfigError("unknown variant '" + name + "' (expected net3d, multi2d or single2d)");
}

const LayerDesc* NetworkSpec::find(int id) const {
    for (const auto& l : layers)
        if (l.id == id) return &l;
    return nullptr;
}

std::vector<int> NetworkSpec::temporal_extents() const {
    std::vector<int> ext;
    int t = (variant == Variant::Net3D) ? window_T : 1;
    for (const auto& l : layers) {
        t = l.geom.out_t(t);
        ext.push_back(t);
    }
    return ext;
}

void NetworkSpec::validate() const {
    if (layers.empty()) throw ConfigError("network spec has no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        if (l.id != layers.front().id + static_cast<int>(i))
            throw ConfigError("layer ids must be consecutive, got L" + std::to_string(l.id) +
                              " at position " + std::to_string(i));
        const auto& g = l.geom;
        const std::string name = "L" + std::to_string(l.id);
        if (g.kp != g.kr || g.kp % 2 == 0)
            throw ConfigError(name + ": spatial kernel must be odd and square, got " +
                              std::to_string(g.kp) + "x" + std::to_string(g.kr));
        if (g.kq != 1 && g.kq != 3)
            throw ConfigError(name + ": temporal kernel must be 1 or 3, got " +
                              std::to_string(g.kq));
        if (g.spatial_padding != (g.kp - 1) / 2)
            throw ConfigError(name + ": spatial padding must preserve size, expected " +
                              std::to_string((g.kp - 1) / 2) + " got " +
                              std::to_string(g.spatial_padding));
        if (g.temporal_padding != 0)
            throw ConfigError(name + ": temporal padding must be 0");
        if (i > 0 && g.in_channels != layers[i - 1].geom.out_channels)
            throw ConfigError(name + ": input channels " + std::to_string(g.in_channels) +
                              " do not match previous layer output " +
                              std::to_string(layers[i - 1].geom.out_channels));
        for (int src : l.skip_from) {
            const LayerDesc* s = find(src);
            if (s == nullptr || src >= l.id)
                throw ConfigError(name + ": skip source L" + std::to_string(src) +
                                  " must be an earlier layer");
            if (s->geom.out_channels != g.out_channels)
                throw ConfigError(name + ": skip source L" + std::to_string(src) + " has " +
                                  std::to_string(s->geom.out_channels) + " channels, layer has " +
                                  std::to_string(g.out_channels));
        }
    }
    const auto& last = layers.back();
    if (last.geom.out_channels != 1 || last.activation != Activation::None || last.batch_norm)
        throw ConfigError("final layer must emit 1 channel with no activation and no batch norm");
    for (int t : temporal_extents())
        if (t < 1) throw ConfigError("temporal extent collapses below 1 frame");
    if (temporal_extents().back() != 1)
        throw ConfigError("network must end with temporal extent 1");
}

NetworkSpec build_generator(Variant variant, int T, const GeneratorScale& sc) {
    if (T < 1 || T % 2 == 0)
        throw ConfigError("window T must be odd and >= 1, got " + std::to_string(T));

    NetworkSpec spec;
    spec.variant = variant;
    spec.window_T = T;

    // Head length is shared across variants so the 2D ablations keep the
    // layer count of the 3D network at the same T.
    const int collapse_layers = (T - 1) / 2;
    const int head_len = std::max(2, collapse_layers);
    const int q3_layers = (variant == Variant::Net3D) ? collapse_layers : 0;
    int in_ch = (variant == Variant::Multi2D) ? T : 1;
    int id = 1;

    auto add = [&](int out_ch, int kq, bool bn, Activation act, std::vector<int> skips = {}) {
        LayerDesc l;
        l.id = id++;
        l.geom.in_channels = in_ch;
        l.geom.out_channels = out_ch;
        l.geom.kp = l.geom.kr = 3;
        l.geom.kq = kq;
        l.geom.spatial_padding = 1;
        l.geom.temporal_padding = 0;
        l.batch_norm = bn;
        l.activation = act;
        l.skip_from = std::move(skips);
        spec.layers.push_back(l);
        in_ch = out_ch;
    };

    // Head: reduce the temporal extent to 1 and widen to the body channels.
    for (int i = 0; i < head_len; ++i) {
        const int out_ch = (i == 0) ? sc.head_channels : sc.body_channels;
        add(out_ch, i < q3_layers ? 3 : 1, false, Activation::ReLU);
    }
    const int head_last = id - 1;

    // Residual body: pairs of convs; the pair input is added after the
    // second conv's batch norm.
    for (int b = 0; b < sc.residual_blocks; ++b) {
        const int block_in = id - 1;
        add(sc.body_channels, 1, true, Activation::ReLU);
        add(sc.body_channels, 1, true, Activation::None, {block_in});
    }

    // Two post-body convs without a block skip; the head output is added
    // after the second one (long skip).
    add(sc.body_channels, 1, true, Activation::ReLU);
    add(sc.body_channels, 1, true, Activation::None, {head_last});

    // Output head.
    add(sc.tail_channels, 1, false, Activation::ReLU);
    add(sc.tail_channels, 1, false, Activation::ReLU);
    add(1, 1, false, Activation::None);

    spec.validate();
    return spec;
}

template <class S>
void validate_parameters(const NetworkSpec& spec, const ModelParameters<S>& params) {
    for (const auto& l : spec.layers) {
        const std::string name = "L" + std::to_string(l.id);
        auto it = params.layers.find(l.id);
        if (it == params.layers.end()) throw ConfigError(name + ": missing parameter entry");
        const auto& lp = it->second;
        if (lp.kernels.size() != l.geom.kernel_count())
            throw ConfigError(name + ": kernels hold " + std::to_string(lp.kernels.size()) +
                              " values, geometry needs " + std::to_string(l.geom.kernel_count()));
        // Under batch norm the conv bias is redundant (the shift plays its
        // role and the bias gradient is identically zero), so BN layers
        // carry no bias array.
        const std::size_t bias_n = l.batch_norm ? 0 : static_cast<std::size_t>(l.geom.out_channels);
        if (lp.bias.size() != bias_n)
            throw ConfigError(name + ": bias size " + std::to_string(lp.bias.size()) +
                              " != expected " + std::to_string(bias_n));
        const std::size_t bn = l.batch_norm ? static_cast<std::size_t>(l.geom.out_channels) : 0;
        if (lp.bn_scale.size() != bn || lp.bn_shift.size() != bn || lp.bn_mean.size() != bn ||
            lp.bn_var.size() != bn)
            throw ConfigError(name + ": batch-norm arrays do not match out channels");
    }
    if (params.layers.size() != spec.layers.size())
        throw ConfigError("parameter map has " + std::to_string(params.layers.size()) +
                          " entries, spec has " + std::to_string(spec.layers.size()) + " layers");
}

template <class S>
std::vector<std::vector<S>*> trainable_arrays(ModelParameters<S>& params) {
    std::vector<std::vector<S>*> arrays;
    for (auto& [id, lp] : params.layers) {
        arrays.push_back(&lp.kernels);
        if (!lp.bias.empty()) arrays.push_back(&lp.bias);
        if (!lp.bn_scale.empty()) {
            arrays.push_back(&lp.bn_scale);
            arrays.push_back(&lp.bn_shift);
        }
    }
    return arrays;
}

template void validate_parameters(const NetworkSpec&, const ModelParameters<float>&);
template void validate_parameters(const NetworkSpec&, const ModelParameters<double>&);
template std::vector<std::vector<float>*> trainable_arrays(ModelParameters<float>&);
template std::vector<std::vector<double>*> trainable_arrays(ModelParameters<double>&);

}  // namespace vdblur
