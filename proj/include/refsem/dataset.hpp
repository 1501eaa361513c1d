#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "refsem/logic.hpp"
#include "refsem/scene.hpp"

namespace refsem::scene {

// A scene plus its annotations (logical forms produced for the target).
// Each form's denotation on the scene's own world is recorded when the
// record is built; annotations are not required to hit the target exactly.
struct AnnotatedScene {
  Scene scene;
  std::vector<logic::Form> forms;
  std::vector<logic::Mask> form_denotations;

  bool operator==(const AnnotatedScene& other) const {
    return scene == other.scene && forms == other.forms;
  }
};

using Dataset = std::vector<AnnotatedScene>;

// Generate a world, then sample logical forms until one denotes a non-empty
// subset; that denotation becomes the target and the form the synthetic
// annotation. `retry_budget` counts the allowed resamples after the first
// draw; exhausting it raises GenerationError.
std::pair<Scene, logic::Form> generate_scene(std::uint64_t rng_seed,
                                             const Schema& schema, int size_min,
                                             int size_max,
                                             const logic::FormSamplerConfig& sampler,
                                             int retry_budget = 50);

// Per-line self-describing records (see serialize_dataset for the format).
// Malformed lines, unknown attributes/values, and form parse failures raise
// errors carrying the 1-based line number. The file's schema header must
// match `schema`. An empty file is an empty dataset.
Dataset ingest_dataset(const std::string& path, const Schema& schema);

// One JSON record per line: a schema header line {"schema": {...}} followed
// by data lines {"forms": [...], "target": [...], "world": [...]}, where
// `world` lists attribute->value maps, `target` lists 0-based object indices
// and `forms` holds logical-form strings. Byte output is deterministic for a
// given dataset; an empty dataset writes an empty file.
void serialize_dataset(const Dataset& data, const Schema& schema,
                       const std::string& path);

// String forms of the two halves, used by the file codec and the tests.
std::string dataset_to_text(const Dataset& data, const Schema& schema);
Dataset dataset_from_text(const std::string& text, const Schema& schema);

}  // namespace refsem::scene
