#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "refsem/common.hpp"

namespace refsem::scene {

inline constexpr int kMaxWorldSize = 20;

struct Attribute {
  std::string name;
  std::vector<std::string> values;
};

// An ordered list of named attributes, each with >= 2 named values.
// The feature dimension (sum of vocabulary sizes) is fixed per schema.
class Schema {
 public:
  explicit Schema(std::vector<Attribute> attributes);

  // color {green, tan, red, blue} x shape {triangle, arch, cube, sphere, ring}
  static Schema standard();

  int attribute_count() const { return static_cast<int>(attributes_.size()); }
  const Attribute& attribute(int i) const { return attributes_[i]; }
  const std::vector<Attribute>& attributes() const { return attributes_; }

  // Index lookups; throw SchemaError for unknown names.
  int attribute_index(std::string_view name) const;
  int value_index(int attribute, std::string_view value) const;

  // Lookup without throwing; returns -1 when absent.
  int find_attribute(std::string_view name) const;
  int find_value(int attribute, std::string_view value) const;

  int feature_dim() const { return feature_dim_; }
  // Offset of an attribute's one-hot block within the feature vector.
  int feature_offset(int attribute) const { return offsets_[attribute]; }

  // Number of distinct full attribute assignments.
  std::int64_t universe_size() const { return universe_size_; }

  bool operator==(const Schema& other) const;

 private:
  std::vector<Attribute> attributes_;
  std::vector<int> offsets_;
  int feature_dim_ = 0;
  std::int64_t universe_size_ = 1;
  std::unordered_map<std::string, int> attribute_lookup_;
  std::vector<std::unordered_map<std::string, int>> value_lookup_;
};

// One value index per schema attribute.
struct Object {
  std::vector<std::int32_t> values;

  bool operator==(const Object& other) const { return values == other.values; }
};

// Ordered object list; order is the encoder presentation order.
struct World {
  std::vector<Object> objects;

  int size() const { return static_cast<int>(objects.size()); }
  bool operator==(const World& other) const { return objects == other.objects; }
};

// A world plus the target subset the speaker must communicate.
struct Scene {
  World world;
  std::vector<bool> target;

  bool operator==(const Scene& other) const {
    return world == other.world && target == other.target;
  }
};

// Throw SchemaError/BoundsError/ArgumentError when the value violates its
// invariants under `schema`.
void validate(const Object& obj, const Schema& schema);
void validate(const World& world, const Schema& schema);
void validate(const Scene& scene, const Schema& schema);

// Enumerate the object universe: index -> full assignment. The first
// attribute varies slowest.
Object universe_object(const Schema& schema, std::int64_t index);
std::int64_t universe_index(const Schema& schema, const Object& obj);

// Uniform random world with |objects| in [size_min, size_max]; every
// attribute value drawn independently. Deterministic per seed.
World generate_world(std::uint64_t rng_seed, const Schema& schema, int size_min,
                     int size_max);

// Internal variant drawing from a live generator (used by samplers).
World generate_world(Rng& rng, const Schema& schema, int size_min, int size_max);

// Concatenated one-hot encoding, one block per attribute.
std::vector<double> object_features(const Object& obj, const Schema& schema);

}  // namespace refsem::scene
