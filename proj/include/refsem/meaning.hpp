#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "refsem/common.hpp"
#include "refsem/logic.hpp"
#include "refsem/net.hpp"
#include "refsem/scene.hpp"

namespace refsem::meaning {

// A fixed, ordered collection of alternative worlds. Two meaning tables are
// comparable only when they were built over the same sample.
struct WorldSample {
  scene::Schema schema = scene::Schema::standard();
  std::vector<scene::World> worlds;
  std::uint64_t seed = 0;

  int size() const { return static_cast<int>(worlds.size()); }
};

// rep(e) / rep(f): one boolean row per sampled world, entry j of row i telling
// whether object j of world i is picked out.
struct MeaningTable {
  std::vector<logic::Mask> rows;

  bool operator==(const MeaningTable&) const = default;
};

// k freshly generated worlds, deterministic per seed.
WorldSample make_sample(std::uint64_t seed, const scene::Schema& schema, int k,
                        int size_min = 1, int size_max = scene::kMaxWorldSize);

// Same contract, but the k worlds are drawn (with replacement) from `pool`,
// for pipelines that want alternatives observed in a dataset.
WorldSample make_sample_from_worlds(std::uint64_t seed,
                                    const scene::Schema& schema,
                                    const std::vector<scene::World>& pool,
                                    int k);

// Row i = evaluate(form, worlds[i]).
MeaningTable table_of_form(const logic::Form& form, const WorldSample& sample);

// Row i = decoder decisions for message f on worlds[i]; an object counts as
// picked only when its probability is strictly above 0.5.
MeaningTable table_of_message(const net::ModelParams& params,
                              const net::MessageVector& f,
                              const WorldSample& sample);

struct Agreement {
  double object_level = 0.0;  // fraction of matching entries
  double world_level = 0.0;   // fraction of rows matching entirely
  double table_level = 0.0;   // 1 if every entry matches, else 0
};

// Requires identical shapes; symmetric in its arguments.
Agreement agreement(const MeaningTable& pred, const MeaningTable& ref);

// One line of '0'/'1' per world; inverse of table_from_text.
std::string table_to_text(const MeaningTable& table);
MeaningTable table_from_text(const std::string& text);

}  // namespace refsem::meaning
