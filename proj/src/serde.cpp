#include "refsem/serde.hpp"

namespace refsem::serde {

using nlohmann::json;

json schema_to_json(const scene::Schema& schema) {
  json attrs = json::array();
  for (const scene::Attribute& attr : schema.attributes()) {
    attrs.push_back({{"name", attr.name}, {"values", attr.values}});
  }
  return json{{"attributes", attrs}};
}

scene::Schema schema_from_json(const json& j) {
  std::vector<scene::Attribute> attrs;
  for (const json& a : j.at("attributes")) {
    attrs.push_back({a.at("name").get<std::string>(),
                     a.at("values").get<std::vector<std::string>>()});
  }
  return scene::Schema(std::move(attrs));
}

json model_config_to_json(const net::ModelConfig& config) {
  return json{{"hidden_dim", config.hidden_dim},
              {"feature_dim", config.feature_dim},
              {"decoder_hidden", config.decoder_hidden},
              {"seed", config.seed},
              {"learning_rate", config.learning_rate},
              {"batch_size", config.batch_size},
              {"train_steps", config.train_steps},
              {"adam_beta1", config.adam_beta1},
              {"adam_beta2", config.adam_beta2},
              {"adam_epsilon", config.adam_epsilon}};
}

net::ModelConfig model_config_from_json(const json& j) {
  net::ModelConfig config;
  j.at("hidden_dim").get_to(config.hidden_dim);
  j.at("feature_dim").get_to(config.feature_dim);
  j.at("decoder_hidden").get_to(config.decoder_hidden);
  j.at("seed").get_to(config.seed);
  j.at("learning_rate").get_to(config.learning_rate);
  j.at("batch_size").get_to(config.batch_size);
  j.at("train_steps").get_to(config.train_steps);
  j.at("adam_beta1").get_to(config.adam_beta1);
  j.at("adam_beta2").get_to(config.adam_beta2);
  j.at("adam_epsilon").get_to(config.adam_epsilon);
  return config;
}

}  // namespace refsem::serde
