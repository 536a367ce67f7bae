#ifndef VDBLUR_NETWORK_HPP
#define VDBLUR_NETWORK_HPP

#include <map>
#include <string>
#include <vector>

#include "vdblur/conv3d.hpp"
#include "vdblur/tensor.hpp"

namespace vdblur {

enum class Variant { Net3D, Multi2D, Single2D };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

// One row of the generator description: conv geometry plus what happens
// after the conv (batch norm, incoming skip additions, activation).
struct LayerDesc {
    int id = 0;  // 1-based
    Conv3DGeom geom;
    bool batch_norm = false;
    Activation activation = Activation::None;
    std::vector<int> skip_from;  // outputs of these layers are added after this layer's BN
};

// Channel widths of the generator family. Defaults follow the full-size
// configuration; tests shrink these while keeping the topology.
struct GeneratorScale {
    int head_channels = 16;
    int body_channels = 64;
    int residual_blocks = 14;
    int tail_channels = 256;
};

struct NetworkSpec {
    Variant variant = Variant::Net3D;
    int window_T = 5;
    std::vector<LayerDesc> layers;

    int input_channels() const { return layers.empty() ? 0 : layers.front().geom.in_channels; }
    const LayerDesc* find(int id) const;
    // Temporal extent entering each layer, starting from the window input.
    std::vector<int> temporal_extents() const;
    void validate() const;  // throws ConfigError when the declared invariants fail
};

// Builds the generator description for a window of T frames.
//  net3d:    (T-1)/2 leading temporal (Q=3) layers collapse the window to a
//            single frame before the residual body; Q=1 afterwards.
//  multi2d:  same topology with all Q=1 and the T frames folded into input
//            channels.
//  single2d: multi2d with one input channel (the center frame only).
NetworkSpec build_generator(Variant variant, int T, const GeneratorScale& scale = {});

// Per-layer weights. Batch-norm arrays are empty for layers without BN.
template <class S>
struct LayerParams {
    std::vector<S> kernels;  // out * in * P * Q * R
    std::vector<S> bias;     // out
    std::vector<S> bn_scale, bn_shift;       // out
    std::vector<S> bn_mean, bn_var;          // running statistics, out
};

template <class S>
struct ModelParameters {
    std::map<int, LayerParams<S>> layers;  // keyed by layer id

    template <class U>
    ModelParameters<U> cast() const {
        ModelParameters<U> r;
        for (const auto& [id, lp] : layers) {
            LayerParams<U> u;
            auto cp = [](const std::vector<S>& a, std::vector<U>& b) {
                b.assign(a.begin(), a.end());
            };
            cp(lp.kernels, u.kernels);
            cp(lp.bias, u.bias);
            cp(lp.bn_scale, u.bn_scale);
            cp(lp.bn_shift, u.bn_shift);
            cp(lp.bn_mean, u.bn_mean);
            cp(lp.bn_var, u.bn_var);
            r.layers.emplace(id, std::move(u));
        }
        return r;
    }
};

// Checks that every spec layer has exactly one parameter entry with matching
// array shapes. Throws ConfigError naming the layer and offending dimension.
template <class S>
void validate_parameters(const NetworkSpec& spec, const ModelParameters<S>& params);

// Trainable arrays in a canonical order (per layer id: kernels, bias,
// bn_scale, bn_shift). Running statistics are not trainable and excluded.
template <class S>
std::vector<std::vector<S>*> trainable_arrays(ModelParameters<S>& params);

extern template void validate_parameters(const NetworkSpec&, const ModelParameters<float>&);
extern template void validate_parameters(const NetworkSpec&, const ModelParameters<double>&);
extern template std::vector<std::vector<float>*> trainable_arrays(ModelParameters<float>&);
extern template std::vector<std::vector<double>*> trainable_arrays(ModelParameters<double>&);

}  // namespace vdblur

#endif
