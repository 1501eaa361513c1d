#include "refsem/meaning.hpp"

#include <cstddef>

namespace refsem::meaning {

WorldSample make_sample(std::uint64_t seed, const scene::Schema& schema, int k,
                        int size_min, int size_max) {
  if (k < 1) throw ArgumentError("sample must contain at least one world");
  WorldSample sample;
  sample.schema = schema;
  sample.seed = seed;
  sample.worlds.reserve(k);
  Rng rng(seed);
  for (int i = 0; i < k; ++i) {
    sample.worlds.push_back(
        scene::generate_world(rng, schema, size_min, size_max));
  }
  return sample;
}

WorldSample make_sample_from_worlds(std::uint64_t seed,
                                    const scene::Schema& schema,
                                    const std::vector<scene::World>& pool,
                                    int k) {
  if (k < 1) throw ArgumentError("sample must contain at least one world");
  if (pool.empty()) throw ArgumentError("world pool is empty");
  WorldSample sample;
  sample.schema = schema;
  sample.seed = seed;
  sample.worlds.reserve(k);
  Rng rng(seed);
  for (int i = 0; i < k; ++i) {
    const scene::World& world = pool[rng.bounded(pool.size())];
    scene::validate(world, schema);
    sample.worlds.push_back(world);
  }
  return sample;
}

MeaningTable table_of_form(const logic::Form& form, const WorldSample& sample) {
  MeaningTable table;
  table.rows.reserve(sample.worlds.size());
  for (const scene::World& world : sample.worlds) {
    table.rows.push_back(logic::evaluate(form, world, sample.schema));
  }
  return table;
}

MeaningTable table_of_message(const net::ModelParams& params,
                              const net::MessageVector& f,
                              const WorldSample& sample) {
  MeaningTable table;
  table.rows.reserve(sample.worlds.size());
  for (const scene::World& world : sample.worlds) {
    const net::VectorXd probs =
        net::decode_world(params, f, world, sample.schema);
    logic::Mask row(world.size());
    for (int j = 0; j < world.size(); ++j) row[j] = probs[j] > 0.5;
    table.rows.push_back(std::move(row));
  }
  return table;
}

Agreement agreement(const MeaningTable& pred, const MeaningTable& ref) {
  if (pred.rows.size() != ref.rows.size()) {
    throw ArgumentError("meaning tables have different row counts");
  }
  std::int64_t entries = 0;
  std::int64_t entries_matched = 0;
  std::int64_t rows_matched = 0;
  for (std::size_t i = 0; i < pred.rows.size(); ++i) {
    const logic::Mask& a = pred.rows[i];
    const logic::Mask& b = ref.rows[i];
    if (a.size() != b.size()) {
      throw ArgumentError("meaning tables have different row lengths at row " +
                          std::to_string(i));
    }
    bool whole_row = true;
    for (std::size_t j = 0; j < a.size(); ++j) {
      ++entries;
      if (a[j] == b[j]) {
        ++entries_matched;
      } else {
        whole_row = false;
      }
    }
    if (whole_row) ++rows_matched;
  }
  if (entries == 0) throw ArgumentError("agreement over empty tables");
  Agreement out;
  out.object_level =
      static_cast<double>(entries_matched) / static_cast<double>(entries);
  out.world_level = static_cast<double>(rows_matched) /
                    static_cast<double>(pred.rows.size());
  out.table_level =
      rows_matched == static_cast<std::int64_t>(pred.rows.size()) ? 1.0 : 0.0;
  return out;
}

std::string table_to_text(const MeaningTable& table) {
  std::string out;
  for (const logic::Mask& row : table.rows) {
    for (bool bit : row) out.push_back(bit ? '1' : '0');
    out.push_back('\n');
  }
  return out;
}

MeaningTable table_from_text(const std::string& text) {
  MeaningTable table;
  logic::Mask row;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (ch == '\n') {
      if (!row.empty()) table.rows.push_back(std::move(row));
      row.clear();
    } else if (ch == '0') {
      row.push_back(false);
    } else if (ch == '1') {
      row.push_back(true);
    } else {
      throw ParseError("meaning table text contains '" + std::string(1, ch) +
                           "'",
                       i);
    }
  }
  if (!row.empty()) table.rows.push_back(std::move(row));
  return table;
}

}  // namespace refsem::meaning
