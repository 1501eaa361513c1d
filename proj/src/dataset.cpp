#include "refsem/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "refsem/serde.hpp"

namespace refsem::scene {

namespace {

using nlohmann::json;
using serde::schema_from_json;
using serde::schema_to_json;

json record_to_json(const AnnotatedScene& record, const Schema& schema) {
  json world = json::array();
  for (const Object& obj : record.scene.world.objects) {
    json entry;
    for (int a = 0; a < schema.attribute_count(); ++a) {
      entry[schema.attribute(a).name] =
          schema.attribute(a).values[obj.values[a]];
    }
    world.push_back(std::move(entry));
  }
  json target = json::array();
  for (std::size_t i = 0; i < record.scene.target.size(); ++i) {
    if (record.scene.target[i]) target.push_back(i);
  }
  json forms = json::array();
  for (const logic::Form& form : record.forms) forms.push_back(logic::print(form));
  return json{{"forms", forms}, {"target", target}, {"world", world}};
}

AnnotatedScene record_from_json(const json& j, const Schema& schema) {
  AnnotatedScene record;
  for (const json& entry : j.at("world")) {
    Object obj;
    obj.values.resize(schema.attribute_count());
    if (static_cast<int>(entry.size()) != schema.attribute_count()) {
      throw SchemaError("object does not assign every schema attribute");
    }
    for (const auto& [name, value] : entry.items()) {
      const int attr = schema.attribute_index(name);
      obj.values[attr] = schema.value_index(attr, value.get<std::string>());
    }
    record.scene.world.objects.push_back(std::move(obj));
  }
  record.scene.target.assign(record.scene.world.objects.size(), false);
  for (const json& idx : j.at("target")) {
    const auto i = idx.get<std::int64_t>();
    if (i < 0 || i >= record.scene.world.size()) {
      throw ArgumentError("target index " + std::to_string(i) +
                          " out of range");
    }
    record.scene.target[static_cast<std::size_t>(i)] = true;
  }
  validate(record.scene, schema);
  for (const json& text : j.at("forms")) {
    logic::Form form = logic::parse(text.get<std::string>(), schema);
    record.form_denotations.push_back(
        logic::evaluate(form, record.scene.world, schema));
    record.forms.push_back(std::move(form));
  }
  return record;
}

}  // namespace

std::pair<Scene, logic::Form> generate_scene(std::uint64_t rng_seed,
                                             const Schema& schema, int size_min,
                                             int size_max,
                                             const logic::FormSamplerConfig& sampler,
                                             int retry_budget) {
  Rng rng(rng_seed);
  World world = generate_world(rng, schema, size_min, size_max);
  for (int attempt = 0; attempt <= retry_budget; ++attempt) {
    logic::Form form = logic::sample_form(rng, schema, sampler);
    logic::Mask mask = logic::evaluate(form, world, schema);
    if (std::find(mask.begin(), mask.end(), true) != mask.end()) {
      return {Scene{std::move(world), std::move(mask)}, std::move(form)};
    }
  }
  throw GenerationError("no sampled form denotes a non-empty target after " +
                        std::to_string(retry_budget + 1) + " attempts");
}

std::string dataset_to_text(const Dataset& data, const Schema& schema) {
  if (data.empty()) return "";
  std::string out = json{{"schema", schema_to_json(schema)}}.dump();
  out += '\n';
  for (const AnnotatedScene& record : data) {
    out += record_to_json(record, schema).dump();
    out += '\n';
  }
  return out;
}

Dataset dataset_from_text(const std::string& text, const Schema& schema) {
  Dataset data;
  std::istringstream in(text);
  std::string line;
  int line_number = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      if (!saw_header) {
        if (!j.contains("schema")) {
          throw SchemaError("first record must be the schema header");
        }
        if (!(schema_from_json(j.at("schema")) == schema)) {
          throw SchemaError("dataset schema does not match the active schema");
        }
        saw_header = true;
        continue;
      }
      data.push_back(record_from_json(j, schema));
    } catch (const json::exception& e) {
      throw ParseError("line " + std::to_string(line_number) + ": " + e.what(),
                       0);
    } catch (const ParseError& e) {
      throw ParseError::wrap("line " + std::to_string(line_number) + ": " + e.what(),
                             e.offset());
    } catch (const SchemaError& e) {
      throw SchemaError("line " + std::to_string(line_number) + ": " + e.what());
    } catch (const Error& e) {
      throw Error("line " + std::to_string(line_number) + ": " + e.what());
    }
  }
  return data;
}

Dataset ingest_dataset(const std::string& path, const Schema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return dataset_from_text(buffer.str(), schema);
}

void serialize_dataset(const Dataset& data, const Schema& schema,
                       const std::string& path) {
  for (const AnnotatedScene& record : data) validate(record.scene, schema);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << dataset_to_text(data, schema);
  if (!out) throw IoError("failed writing dataset to '" + path + "'");
}

}  // namespace refsem::scene
