#pragma once

#include <json.hpp>

#include "refsem/net.hpp"
#include "refsem/scene.hpp"

namespace refsem::serde {

nlohmann::json schema_to_json(const scene::Schema& schema);
scene::Schema schema_from_json(const nlohmann::json& j);

nlohmann::json model_config_to_json(const net::ModelConfig& config);
net::ModelConfig model_config_from_json(const nlohmann::json& j);

}  // namespace refsem::serde
