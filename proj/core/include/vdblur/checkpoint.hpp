#ifndef VDBLUR_CHECKPOINT_HPP
#define VDBLUR_CHECKPOINT_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vdblur/discriminator.hpp"
#include "vdblur/network.hpp"

namespace vdblur {

// Minimal single-file archive: a JSON manifest followed by named float32
// arrays, little-endian. See the README for the exact byte layout. Writes
// are atomic (temp file + rename).
struct NamedArray {
    std::string name;
    std::vector<std::uint64_t> dims;
    std::vector<float> data;
};

void write_archive(const std::filesystem::path& path, const std::string& manifest_json,
                   const std::vector<NamedArray>& arrays);

struct Archive {
    std::string manifest_json;
    std::map<std::string, NamedArray> arrays;
};

Archive read_archive(const std::filesystem::path& path);

// Model checkpoint: network description plus parameters; kernels are stored
// in (out, in, P, Q, R) order. Discriminator parameters, when present, live
// under the "d/" namespace.
struct Checkpoint {
    NetworkSpec spec;
    ModelParameters<float> generator;
    std::optional<DiscriminatorSpec> disc_spec;
    std::optional<DiscriminatorParameters<float>> discriminator;
    std::int64_t step = 0;
    std::string id;  // content hash, filled on save/load
};

void save_checkpoint(const std::filesystem::path& path, Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Parameter <-> named-array packing, shared with the training state file.
std::vector<NamedArray> pack_generator(const NetworkSpec& spec,
                                       const ModelParameters<float>& params,
                                       const std::string& prefix);
ModelParameters<float> unpack_generator(const NetworkSpec& spec,
                                        const std::map<std::string, NamedArray>& arrays,
                                        const std::string& prefix);
std::vector<NamedArray> pack_discriminator(const DiscriminatorSpec& spec,
                                           const DiscriminatorParameters<float>& params,
                                           const std::string& prefix);
DiscriminatorParameters<float> unpack_discriminator(
    const DiscriminatorSpec& spec, const std::map<std::string, NamedArray>& arrays,
    const std::string& prefix);

std::string network_spec_to_json(const NetworkSpec& spec);
NetworkSpec network_spec_from_json(const std::string& json_text);

}  // namespace vdblur

#endif
