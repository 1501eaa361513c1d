#include "refsem/scene.hpp"

#include <algorithm>
#include <unordered_set>

namespace refsem::scene {

Schema::Schema(std::vector<Attribute> attributes)
    : attributes_(std::move(attributes)) {
  if (attributes_.empty()) {
    throw SchemaError("schema must declare at least one attribute");
  }
  value_lookup_.resize(attributes_.size());
  offsets_.resize(attributes_.size());
  for (int i = 0; i < attribute_count(); ++i) {
    const Attribute& attr = attributes_[i];
    if (attr.name.empty()) {
      throw SchemaError("attribute name must be non-empty");
    }
    if (!attribute_lookup_.emplace(attr.name, i).second) {
      throw SchemaError("duplicate attribute name '" + attr.name + "'");
    }
    if (attr.values.size() < 2) {
      throw SchemaError("attribute '" + attr.name + "' needs >= 2 values");
    }
    for (int v = 0; v < static_cast<int>(attr.values.size()); ++v) {
      if (attr.values[v].empty()) {
        throw SchemaError("value name must be non-empty");
      }
      if (!value_lookup_[i].emplace(attr.values[v], v).second) {
        throw SchemaError("duplicate value '" + attr.values[v] +
                          "' in attribute '" + attr.name + "'");
      }
    }
    offsets_[i] = feature_dim_;
    feature_dim_ += static_cast<int>(attr.values.size());
    universe_size_ *= static_cast<std::int64_t>(attr.values.size());
  }
}

Schema Schema::standard() {
  return Schema({{"color", {"green", "tan", "red", "blue"}},
                 {"shape", {"triangle", "arch", "cube", "sphere", "ring"}}});
}

int Schema::find_attribute(std::string_view name) const {
  auto it = attribute_lookup_.find(std::string(name));
  return it == attribute_lookup_.end() ? -1 : it->second;
}

int Schema::find_value(int attribute, std::string_view value) const {
  auto it = value_lookup_[attribute].find(std::string(value));
  return it == value_lookup_[attribute].end() ? -1 : it->second;
}

int Schema::attribute_index(std::string_view name) const {
  int i = find_attribute(name);
  if (i < 0) {
    throw SchemaError("unknown attribute '" + std::string(name) + "'");
  }
  return i;
}

int Schema::value_index(int attribute, std::string_view value) const {
  int v = find_value(attribute, value);
  if (v < 0) {
    throw SchemaError("unknown value '" + std::string(value) +
                      "' for attribute '" + attributes_[attribute].name + "'");
  }
  return v;
}

bool Schema::operator==(const Schema& other) const {
  if (attributes_.size() != other.attributes_.size()) return false;
  for (std::size_t i = 0; i < attributes_.size(); ++i) {
    if (attributes_[i].name != other.attributes_[i].name ||
        attributes_[i].values != other.attributes_[i].values) {
      return false;
    }
  }
  return true;
}

void validate(const Object& obj, const Schema& schema) {
  if (static_cast<int>(obj.values.size()) != schema.attribute_count()) {
    throw SchemaError("object has " + std::to_string(obj.values.size()) +
                      " values, schema has " +
                      std::to_string(schema.attribute_count()) + " attributes");
  }
  for (int i = 0; i < schema.attribute_count(); ++i) {
    const int n = static_cast<int>(schema.attribute(i).values.size());
    if (obj.values[i] < 0 || obj.values[i] >= n) {
      throw SchemaError("value index " + std::to_string(obj.values[i]) +
                        " out of range for attribute '" +
                        schema.attribute(i).name + "'");
    }
  }
}

void validate(const World& world, const Schema& schema) {
  if (world.size() < 1 || world.size() > kMaxWorldSize) {
    throw BoundsError("world size " + std::to_string(world.size()) +
                      " outside [1, " + std::to_string(kMaxWorldSize) + "]");
  }
  for (const Object& obj : world.objects) validate(obj, schema);
}

void validate(const Scene& scene, const Schema& schema) {
  validate(scene.world, schema);
  if (scene.target.size() != scene.world.objects.size()) {
    throw ArgumentError("target mask length does not match world size");
  }
  if (std::none_of(scene.target.begin(), scene.target.end(),
                   [](bool b) { return b; })) {
    throw ArgumentError("target mask has no positive entry");
  }
}

Object universe_object(const Schema& schema, std::int64_t index) {
  if (index < 0 || index >= schema.universe_size()) {
    throw ArgumentError("universe index out of range");
  }
  Object obj;
  obj.values.resize(schema.attribute_count());
  for (int i = schema.attribute_count() - 1; i >= 0; --i) {
    const auto n = static_cast<std::int64_t>(schema.attribute(i).values.size());
    obj.values[i] = static_cast<std::int32_t>(index % n);
    index /= n;
  }
  return obj;
}

std::int64_t universe_index(const Schema& schema, const Object& obj) {
  std::int64_t index = 0;
  for (int i = 0; i < schema.attribute_count(); ++i) {
    index = index * static_cast<std::int64_t>(schema.attribute(i).values.size()) +
            obj.values[i];
  }
  return index;
}

World generate_world(Rng& rng, const Schema& schema, int size_min, int size_max) {
  if (size_min < 1 || size_min > size_max || size_max > kMaxWorldSize) {
    throw BoundsError("invalid world size bounds [" + std::to_string(size_min) +
                      ", " + std::to_string(size_max) + "]");
  }
  World world;
  const int size = static_cast<int>(rng.uniform_int(size_min, size_max));
  world.objects.resize(size);
  for (Object& obj : world.objects) {
    obj.values.resize(schema.attribute_count());
    for (int i = 0; i < schema.attribute_count(); ++i) {
      obj.values[i] = static_cast<std::int32_t>(
          rng.bounded(schema.attribute(i).values.size()));
    }
  }
  return world;
}

World generate_world(std::uint64_t rng_seed, const Schema& schema, int size_min,
                     int size_max) {
  Rng rng(rng_seed);
  return generate_world(rng, schema, size_min, size_max);
}

std::vector<double> object_features(const Object& obj, const Schema& schema) {
  validate(obj, schema);
  std::vector<double> features(schema.feature_dim(), 0.0);
  for (int i = 0; i < schema.attribute_count(); ++i) {
    features[schema.feature_offset(i) + obj.values[i]] = 1.0;
  }
  return features;
}

}  // namespace refsem::scene
