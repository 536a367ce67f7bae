#ifndef VDBLUR_SPEC_JSON_HPP
#define VDBLUR_SPEC_JSON_HPP

#include <json.hpp>

#include "vdblur/discriminator.hpp"
#include "vdblur/network.hpp"

namespace vdblur::detail {

nlohmann::json spec_to_json(const NetworkSpec& spec);
NetworkSpec spec_from_json(const nlohmann::json& j);
nlohmann::json disc_spec_to_json(const DiscriminatorSpec& spec);
DiscriminatorSpec disc_spec_from_json(const nlohmann::json& j);

}  // namespace vdblur::detail

#endif
