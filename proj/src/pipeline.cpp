#include "refsem/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>
#include <unordered_set>
#include <utility>

#include "refsem/serde.hpp"

namespace refsem::pipeline {

namespace {

using nlohmann::json;

// Shortest round-trip decimal text; used everywhere doubles reach text files
// so artifacts are byte-stable.
std::string fmt_double(double v) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, result.ptr);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream out;
  out << in.rdbuf();
  return std::move(out).str();
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  if (!out.flush()) throw IoError("failed writing '" + path + "'");
}

void ensure_out_dir(const RunConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(config.out_dir, ec);
  if (ec) {
    throw IoError("cannot create output directory '" + config.out_dir +
                  "': " + ec.message());
  }
}

void check_keys(const json& j, std::initializer_list<std::string_view> allowed,
                const char* where) {
  for (const auto& item : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) ==
        allowed.end()) {
      throw ConfigError("unknown key '" + item.key() + "' in " + where);
    }
  }
}

// Keep up to `cap` elements, chosen by seeded partial shuffle; order is the
// draw order.
template <typename T>
std::vector<T> subsample(std::vector<T> items, int cap, std::uint64_t seed) {
  if (static_cast<int>(items.size()) <= cap) return items;
  Rng rng(seed);
  std::vector<T> out;
  out.reserve(cap);
  const std::size_t n = items.size();
  for (int k = 0; k < cap; ++k) {
    const std::size_t j = k + rng.bounded(n - k);
    std::swap(items[k], items[j]);
    out.push_back(std::move(items[k]));
  }
  return out;
}

// Up to `cap` distinct unordered index pairs over [0, n); all of them (in
// lexicographic order) when they fit, otherwise a seeded rejection sample.
std::vector<std::pair<int, int>> sample_index_pairs(int n, int cap,
                                                    std::uint64_t seed) {
  std::vector<std::pair<int, int>> out;
  const std::int64_t total =
      static_cast<std::int64_t>(n) * (n - 1) / 2;
  if (total <= cap) {
    out.reserve(total);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) out.emplace_back(i, j);
    }
    return out;
  }
  Rng rng(seed);
  std::unordered_set<std::int64_t> seen;
  out.reserve(cap);
  while (static_cast<int>(out.size()) < cap) {
    const int a = static_cast<int>(rng.bounded(n));
    const int b = static_cast<int>(rng.bounded(n));
    if (a == b) continue;
    const int lo = std::min(a, b);
    const int hi = std::max(a, b);
    if (seen.insert(static_cast<std::int64_t>(lo) * n + hi).second) {
      out.emplace_back(lo, hi);
    }
  }
  return out;
}

json sampler_to_json(const logic::FormSamplerConfig& s) {
  return json{{"max_size", s.max_size},
              {"negation_prob", s.negation_prob},
              {"binary_prob", s.binary_prob}};
}

json model_overrides_to_json(const net::ModelConfig& m) {
  return json{{"hidden_dim", m.hidden_dim},
              {"decoder_hidden", m.decoder_hidden},
              {"learning_rate", m.learning_rate},
              {"batch_size", m.batch_size},
              {"train_steps", m.train_steps},
              {"adam_beta1", m.adam_beta1},
              {"adam_beta2", m.adam_beta2},
              {"adam_epsilon", m.adam_epsilon}};
}

json sample_to_json(const RunConfig& config) {
  return json{{"k", config.sample_k},
              {"seed", derive_seed(config.master_seed, "sample")},
              {"mode", config.sample_from_dataset ? "dataset" : "generated"}};
}

json rows_to_json(const probe::AgreementReport& report) {
  json rows = json::array();
  for (const probe::ReportRow& r : report.rows) {
    rows.push_back({{"name", r.name},
                    {"objects", r.object_level},
                    {"worlds", r.world_level},
                    {"tables", r.table_level},
                    {"count", r.count}});
  }
  return rows;
}

json report_base(const RunConfig& config, const char* command) {
  return json{{"command", command},
              {"config_digest", config_digest(config)},
              {"master_seed", config.master_seed}};
}

// The alternative-world sample every meaning table in a stage is built over.
meaning::WorldSample build_sample(const RunConfig& config,
                                  const scene::Dataset& pool_source) {
  const std::uint64_t seed = derive_seed(config.master_seed, "sample");
  if (config.sample_from_dataset) {
    std::vector<scene::World> pool;
    pool.reserve(pool_source.size());
    for (const scene::AnnotatedScene& rec : pool_source) {
      pool.push_back(rec.scene.world);
    }
    return meaning::make_sample_from_worlds(seed, config.schema, pool,
                                            config.sample_k);
  }
  return meaning::make_sample(seed, config.schema, config.sample_k,
                              config.world_size_min, config.world_size_max);
}

std::pair<net::ModelParams, net::ModelConfig> load_model(
    const RunConfig& config, const std::string& path) {
  auto loaded = net::load_checkpoint(path);
  if (loaded.second.feature_dim != config.schema.feature_dim()) {
    throw ConfigError("checkpoint feature dimension " +
                      std::to_string(loaded.second.feature_dim) +
                      " does not match the configured schema (" +
                      std::to_string(config.schema.feature_dim()) + ")");
  }
  return loaded;
}

// Extra annotations simulate several speakers describing the same target:
// resampled forms whose denotation equals the target exactly, falling back
// to repeating the generating form when the budget runs out.
std::vector<logic::Form> make_annotations(const RunConfig& config,
                                          const scene::Scene& sc,
                                          logic::Form generating, Rng& rng) {
  std::vector<logic::Form> forms;
  forms.reserve(config.annotations_per_scene);
  forms.push_back(std::move(generating));
  for (int a = 1; a < config.annotations_per_scene; ++a) {
    bool found = false;
    for (int attempt = 0; attempt <= config.retry_budget && !found; ++attempt) {
      logic::Form f = logic::sample_form(rng, config.schema, config.sampler);
      if (logic::evaluate(f, sc.world, config.schema) == sc.target) {
        forms.push_back(std::move(f));
        found = true;
      }
    }
    if (!found) forms.push_back(forms.front());
  }
  return forms;
}

scene::Dataset build_dataset(const RunConfig& config, int count,
                             std::string_view scene_label,
                             std::string_view annotation_label) {
  const std::uint64_t scene_stream =
      derive_seed(config.master_seed, scene_label);
  const std::uint64_t annotation_stream =
      derive_seed(config.master_seed, annotation_label);
  scene::Dataset out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    auto [sc, form] = scene::generate_scene(
        index_seed(scene_stream, i), config.schema, config.world_size_min,
        config.world_size_max, config.sampler, config.retry_budget);
    Rng rng(index_seed(annotation_stream, i));
    scene::AnnotatedScene record{std::move(sc), {}, {}};
    record.forms =
        make_annotations(config, record.scene, std::move(form), rng);
    record.form_denotations.reserve(record.forms.size());
    for (const logic::Form& f : record.forms) {
      record.form_denotations.push_back(
          logic::evaluate(f, record.scene.world, config.schema));
    }
    out.push_back(std::move(record));
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// RunConfig
// ---------------------------------------------------------------------------

void RunConfig::validate() const {
  if (world_size_min < 1 || world_size_min > world_size_max ||
      world_size_max > scene::kMaxWorldSize) {
    throw ConfigError("world size bounds must satisfy 1 <= min <= max <= " +
                      std::to_string(scene::kMaxWorldSize));
  }
  if (sampler.max_size < 1) throw ConfigError("sampler max_size must be >= 1");
  if (sampler.negation_prob < 0 || sampler.negation_prob > 1 ||
      sampler.binary_prob < 0 || sampler.binary_prob > 1) {
    throw ConfigError("sampler probabilities must lie in [0, 1]");
  }
  if (annotations_per_scene < 1) {
    throw ConfigError("annotations_per_scene must be >= 1");
  }
  if (retry_budget < 0) throw ConfigError("retry_budget must be >= 0");
  if (train_scenes < 1 || test_scenes < 1 || accuracy_scenes < 1) {
    throw ConfigError("scene counts must be >= 1");
  }
  if (sample_k < 1) throw ConfigError("sample_k must be >= 1");
  if (ridge < 0) throw ConfigError("ridge must be non-negative");
  if (max_fit_items < 1 || max_eval_items < 1) {
    throw ConfigError("item caps must be >= 1");
  }
  if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
  filled_model_config(*this).validate();
}

std::string RunConfig::train_dataset_path() const {
  return out_dir + "/train.jsonl";
}
std::string RunConfig::test_dataset_path() const {
  return out_dir + "/test.jsonl";
}
std::string RunConfig::checkpoint_path() const {
  return out_dir + "/model.ckpt";
}
std::string RunConfig::train_report_path() const {
  return out_dir + "/report_train.json";
}
std::string RunConfig::theories_report_path() const {
  return out_dir + "/report_theories.json";
}
std::string RunConfig::operator_path(probe::OpRole role) const {
  return out_dir + "/op_" + std::string(probe::role_name(role)) + ".bin";
}
std::string RunConfig::operator_report_path(probe::OpRole role) const {
  return out_dir + "/report_" + std::string(probe::role_name(role)) + ".json";
}
std::string RunConfig::pca_points_path(probe::OpRole role) const {
  return out_dir + "/pca_" + std::string(probe::role_name(role)) + ".tsv";
}
std::string RunConfig::summary_json_path() const {
  return out_dir + "/summary.json";
}
std::string RunConfig::summary_text_path() const {
  return out_dir + "/summary.txt";
}

net::ModelConfig filled_model_config(const RunConfig& config) {
  net::ModelConfig model = config.model;
  model.feature_dim = config.schema.feature_dim();
  model.seed = derive_seed(config.master_seed, "train.init");
  return model;
}

json config_to_json(const RunConfig& config) {
  return json{{"schema", serde::schema_to_json(config.schema)},
              {"world_size_min", config.world_size_min},
              {"world_size_max", config.world_size_max},
              {"sampler", sampler_to_json(config.sampler)},
              {"annotations_per_scene", config.annotations_per_scene},
              {"retry_budget", config.retry_budget},
              {"train_scenes", config.train_scenes},
              {"test_scenes", config.test_scenes},
              {"accuracy_scenes", config.accuracy_scenes},
              {"sample_k", config.sample_k},
              {"sample_from_dataset", config.sample_from_dataset},
              {"model", model_overrides_to_json(config.model)},
              {"ridge", config.ridge},
              {"max_fit_items", config.max_fit_items},
              {"max_eval_items", config.max_eval_items},
              {"master_seed", config.master_seed},
              {"out_dir", config.out_dir}};
}

RunConfig config_from_json(const json& j) {
  RunConfig config;
  try {
    check_keys(j,
               {"schema", "world_size_min", "world_size_max", "sampler",
                "annotations_per_scene", "retry_budget", "train_scenes",
                "test_scenes", "accuracy_scenes", "sample_k",
                "sample_from_dataset", "model", "ridge", "max_fit_items",
                "max_eval_items", "master_seed", "out_dir"},
               "config");
    if (j.contains("schema")) {
      config.schema = serde::schema_from_json(j.at("schema"));
    }
    if (j.contains("world_size_min")) {
      j.at("world_size_min").get_to(config.world_size_min);
    }
    if (j.contains("world_size_max")) {
      j.at("world_size_max").get_to(config.world_size_max);
    }
    if (j.contains("sampler")) {
      const json& s = j.at("sampler");
      check_keys(s, {"max_size", "negation_prob", "binary_prob"}, "sampler");
      if (s.contains("max_size")) s.at("max_size").get_to(config.sampler.max_size);
      if (s.contains("negation_prob")) {
        s.at("negation_prob").get_to(config.sampler.negation_prob);
      }
      if (s.contains("binary_prob")) {
        s.at("binary_prob").get_to(config.sampler.binary_prob);
      }
    }
    if (j.contains("annotations_per_scene")) {
      j.at("annotations_per_scene").get_to(config.annotations_per_scene);
    }
    if (j.contains("retry_budget")) {
      j.at("retry_budget").get_to(config.retry_budget);
    }
    if (j.contains("train_scenes")) {
      j.at("train_scenes").get_to(config.train_scenes);
    }
    if (j.contains("test_scenes")) {
      j.at("test_scenes").get_to(config.test_scenes);
    }
    if (j.contains("accuracy_scenes")) {
      j.at("accuracy_scenes").get_to(config.accuracy_scenes);
    }
    if (j.contains("sample_k")) j.at("sample_k").get_to(config.sample_k);
    if (j.contains("sample_from_dataset")) {
      j.at("sample_from_dataset").get_to(config.sample_from_dataset);
    }
    if (j.contains("model")) {
      const json& m = j.at("model");
      if (m.contains("seed") || m.contains("feature_dim")) {
        throw ConfigError(
            "model.seed and model.feature_dim are derived; remove them from "
            "the config");
      }
      check_keys(m,
                 {"hidden_dim", "decoder_hidden", "learning_rate",
                  "batch_size", "train_steps", "adam_beta1", "adam_beta2",
                  "adam_epsilon"},
                 "model");
      if (m.contains("hidden_dim")) {
        m.at("hidden_dim").get_to(config.model.hidden_dim);
      }
      if (m.contains("decoder_hidden")) {
        m.at("decoder_hidden").get_to(config.model.decoder_hidden);
      }
      if (m.contains("learning_rate")) {
        m.at("learning_rate").get_to(config.model.learning_rate);
      }
      if (m.contains("batch_size")) {
        m.at("batch_size").get_to(config.model.batch_size);
      }
      if (m.contains("train_steps")) {
        m.at("train_steps").get_to(config.model.train_steps);
      }
      if (m.contains("adam_beta1")) {
        m.at("adam_beta1").get_to(config.model.adam_beta1);
      }
      if (m.contains("adam_beta2")) {
        m.at("adam_beta2").get_to(config.model.adam_beta2);
      }
      if (m.contains("adam_epsilon")) {
        m.at("adam_epsilon").get_to(config.model.adam_epsilon);
      }
    }
    if (j.contains("ridge")) j.at("ridge").get_to(config.ridge);
    if (j.contains("max_fit_items")) {
      j.at("max_fit_items").get_to(config.max_fit_items);
    }
    if (j.contains("max_eval_items")) {
      j.at("max_eval_items").get_to(config.max_eval_items);
    }
    if (j.contains("master_seed")) {
      j.at("master_seed").get_to(config.master_seed);
    }
    if (j.contains("out_dir")) j.at("out_dir").get_to(config.out_dir);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  config.validate();
  return config;
}

RunConfig load_config(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " +
                      e.what());
  }
  return config_from_json(j);
}

std::string config_digest(const RunConfig& config) {
  json j = config_to_json(config);
  j.erase("out_dir");
  const std::uint64_t h = fnv1a64(j.dump());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

GenDataResult cmd_gen_data(const RunConfig& config) {
  config.validate();
  ensure_out_dir(config);
  const scene::Dataset train = build_dataset(
      config, config.train_scenes, "data.train", "data.train.annotations");
  scene::serialize_dataset(train, config.schema, config.train_dataset_path());
  const scene::Dataset test = build_dataset(
      config, config.test_scenes, "data.test", "data.test.annotations");
  scene::serialize_dataset(test, config.schema, config.test_dataset_path());
  return GenDataResult{static_cast<int>(train.size()),
                       static_cast<int>(test.size())};
}

TrainResult cmd_train(const RunConfig& config) {
  config.validate();
  ensure_out_dir(config);
  const net::ModelConfig model = filled_model_config(config);
  const std::uint64_t stream = derive_seed(config.master_seed, "train.stream");
  const net::SceneSource source = [&](std::uint64_t index) {
    return scene::generate_scene(index_seed(stream, index), config.schema,
                                 config.world_size_min, config.world_size_max,
                                 config.sampler, config.retry_budget)
        .first;
  };
  std::vector<double> losses;
  losses.reserve(model.train_steps);
  const net::ModelParams params =
      net::train(model, config.schema, source,
                 [&](int, double loss) { losses.push_back(loss); });
  net::save_checkpoint(params, model, config.checkpoint_path());

  const std::uint64_t accuracy_stream =
      derive_seed(config.master_seed, "eval.accuracy");
  std::vector<scene::Scene> heldout;
  heldout.reserve(config.accuracy_scenes);
  for (int i = 0; i < config.accuracy_scenes; ++i) {
    heldout.push_back(scene::generate_scene(
                          index_seed(accuracy_stream, i), config.schema,
                          config.world_size_min, config.world_size_max,
                          config.sampler, config.retry_budget)
                          .first);
  }

  TrainResult result;
  result.heldout_accuracy =
      net::object_accuracy(params, heldout, config.schema);
  const std::size_t window = std::min<std::size_t>(100, losses.size());
  for (std::size_t i = 0; i < window; ++i) {
    result.mean_first_losses += losses[i] / static_cast<double>(window);
    result.mean_last_losses +=
        losses[losses.size() - 1 - i] / static_cast<double>(window);
  }

  json report = report_base(config, "train");
  report["model"] = serde::model_config_to_json(model);
  report["seeds"] = {{"init", model.seed},
                     {"stream", stream},
                     {"accuracy", accuracy_stream}};
  report["heldout_accuracy"] = result.heldout_accuracy;
  report["accuracy_scenes"] = config.accuracy_scenes;
  report["mean_first_losses"] = result.mean_first_losses;
  report["mean_last_losses"] = result.mean_last_losses;
  write_text(config.train_report_path(), report.dump(2) + "\n");
  return result;
}

probe::AgreementReport cmd_eval_theories(const RunConfig& config,
                                         const std::string& checkpoint_path,
                                         const std::string& dataset_path) {
  config.validate();
  ensure_out_dir(config);
  const auto [params, model] = load_model(config, checkpoint_path);
  const scene::Dataset dataset =
      scene::ingest_dataset(dataset_path, config.schema);
  if (dataset.empty()) {
    throw GenerationError("dataset '" + dataset_path + "' is empty");
  }
  const meaning::WorldSample sample = build_sample(config, dataset);
  const std::uint64_t theory_seed =
      derive_seed(config.master_seed, "theory.random");
  probe::AgreementReport report =
      probe::evaluate_theories(params, dataset, sample, theory_seed);
  report.notes.push_back(config.sample_from_dataset
                             ? "alternative worlds drawn from the dataset"
                             : "alternative worlds freshly generated");

  json out = report_base(config, "eval-theories");
  out["sample"] = sample_to_json(config);
  out["seeds"] = {{"theory_random", theory_seed}};
  out["dataset_records"] = dataset.size();
  out["rows"] = rows_to_json(report);
  out["notes"] = report.notes;
  write_text(config.theories_report_path(), out.dump(2) + "\n");
  return report;
}

FitOpResult cmd_fit_op(const RunConfig& config,
                       const std::string& checkpoint_path,
                       const std::string& eval_dataset_path,
                       probe::OpRole role) {
  config.validate();
  ensure_out_dir(config);
  const std::string role_str(probe::role_name(role));
  const auto [params, model] = load_model(config, checkpoint_path);
  const scene::Dataset fit_data =
      scene::ingest_dataset(config.train_dataset_path(), config.schema);
  const scene::Dataset eval_data =
      scene::ingest_dataset(eval_dataset_path, config.schema);
  const meaning::WorldSample sample = build_sample(config, fit_data);

  FitOpResult result;
  const std::vector<probe::AlignedPair> aligned_fit =
      probe::collect_alignments(params, fit_data, sample);
  result.aligned_fit = static_cast<std::int64_t>(aligned_fit.size());
  if (aligned_fit.empty()) {
    throw GenerationError("no aligned pairs on the fitting split");
  }

  probe::LinearOperator op;
  if (role == probe::OpRole::kNegation) {
    std::vector<probe::UnaryPair> pairs =
        probe::collect_negation_pairs(aligned_fit, config.schema);
    if (pairs.empty()) {
      throw GenerationError("no aligned negation pairs on the fitting split");
    }
    pairs = subsample(
        std::move(pairs), config.max_fit_items,
        derive_seed(config.master_seed, "probe.fit.subsample." + role_str));
    result.fit_items = static_cast<std::int64_t>(pairs.size());
    op = probe::fit_unary_operator(pairs, config.ridge, role);
  } else {
    const probe::BinaryOp kind = role == probe::OpRole::kConjunction
                                     ? probe::BinaryOp::kAnd
                                     : probe::BinaryOp::kOr;
    std::vector<probe::BinaryTriple> triples =
        probe::collect_binary_triples(aligned_fit, config.schema, kind);
    if (triples.empty()) {
      throw GenerationError("no aligned " + role_str +
                            " triples on the fitting split");
    }
    triples = subsample(
        std::move(triples), config.max_fit_items,
        derive_seed(config.master_seed, "probe.fit.subsample." + role_str));
    result.fit_items = static_cast<std::int64_t>(triples.size());
    op = probe::fit_binary_operator(triples, config.ridge, role);
  }
  probe::save_operator(op, config.operator_path(role));

  std::vector<probe::AlignedPair> aligned_eval =
      probe::collect_alignments(params, eval_data, sample);
  result.aligned_eval = static_cast<std::int64_t>(aligned_eval.size());
  if (aligned_eval.empty()) {
    throw GenerationError("no aligned pairs on the held-out split");
  }
  const std::uint64_t random_seed =
      derive_seed(config.master_seed, "probe.random." + role_str);
  if (role == probe::OpRole::kNegation) {
    const std::vector<probe::AlignedPair> items = subsample(
        std::move(aligned_eval), config.max_eval_items,
        derive_seed(config.master_seed, "probe.eval.subsample." + role_str));
    result.eval_items = static_cast<std::int64_t>(items.size());
    result.report =
        probe::evaluate_unary_operator(params, op, items, sample, random_seed);
  } else {
    const auto index_pairs = sample_index_pairs(
        static_cast<int>(aligned_eval.size()), config.max_eval_items,
        derive_seed(config.master_seed, "probe.eval.subsample." + role_str));
    std::vector<probe::BinaryItem> items;
    items.reserve(index_pairs.size());
    for (const auto& [i, j] : index_pairs) {
      items.push_back(probe::BinaryItem{aligned_eval[i], aligned_eval[j]});
    }
    result.eval_items = static_cast<std::int64_t>(items.size());
    result.report = probe::evaluate_binary_operator(params, op, items, sample,
                                                    random_seed);
  }

  json out = report_base(config, "fit-op");
  out["operator"] = {{"role", role_str},
                     {"ridge", config.ridge},
                     {"dim", op.matrix.rows()}};
  out["sample"] = sample_to_json(config);
  out["seeds"] = {{"random", random_seed}};
  out["counts"] = {{"aligned_fit", result.aligned_fit},
                   {"fit_items", result.fit_items},
                   {"aligned_eval", result.aligned_eval},
                   {"eval_items", result.eval_items}};
  out["rows"] = rows_to_json(result.report);
  out["notes"] = result.report.notes;
  write_text(config.operator_report_path(role), out.dump(2) + "\n");
  return result;
}

PcaExport cmd_pca(const RunConfig& config, const std::string& checkpoint_path,
                  const std::string& dataset_path,
                  const std::string& operator_path) {
  config.validate();
  ensure_out_dir(config);
  const auto [params, model] = load_model(config, checkpoint_path);
  const scene::Dataset dataset =
      scene::ingest_dataset(dataset_path, config.schema);
  const probe::LinearOperator op = probe::load_operator(operator_path);
  const std::string role_str(probe::role_name(op.role));
  const meaning::WorldSample sample = build_sample(config, dataset);

  const std::vector<probe::AlignedPair> aligned =
      probe::collect_alignments(params, dataset, sample);
  if (aligned.size() < 2) {
    throw GenerationError(
        "need at least two aligned pairs for the PCA export, found " +
        std::to_string(aligned.size()));
  }

  std::vector<net::VectorXd> vectors;
  std::vector<std::string> labels;
  std::vector<std::string> kinds;
  for (const probe::AlignedPair& pair : aligned) {
    vectors.push_back(pair.message);
    labels.push_back(logic::print(pair.form));
    kinds.push_back("raw");
  }
  const int raw_count = static_cast<int>(vectors.size());
  if (op.role == probe::OpRole::kNegation) {
    for (const probe::AlignedPair& pair : aligned) {
      vectors.push_back(op.matrix * pair.message);
      labels.push_back(logic::print(logic::Form::negation(pair.form)));
      kinds.push_back("transformed");
    }
  } else {
    const auto index_pairs = sample_index_pairs(
        static_cast<int>(aligned.size()), config.max_eval_items,
        derive_seed(config.master_seed, "pca.pairs." + role_str));
    for (const auto& [i, j] : index_pairs) {
      vectors.push_back(op.matrix *
                        (aligned[i].message + aligned[j].message));
      const logic::Form combined =
          op.role == probe::OpRole::kConjunction
              ? logic::Form::conjunction(aligned[i].form, aligned[j].form)
              : logic::Form::disjunction(aligned[i].form, aligned[j].form);
      labels.push_back(logic::print(combined));
      kinds.push_back("transformed");
    }
  }

  const probe::PcaResult pca = probe::pca_project(vectors, 2);
  std::string out;
  out += "# columns: pc1\tpc2\tlabel\tkind\n";
  out += "# operator: " + role_str + "\n";
  out += "# explained_variance: " + fmt_double(pca.explained_variance[0]) +
         " " + fmt_double(pca.explained_variance[1]) + "\n";
  out += "# sample: seed=" + std::to_string(sample.seed) +
         " k=" + std::to_string(sample.size()) +
         (config.sample_from_dataset ? " mode=dataset" : " mode=generated") +
         "\n";
  out += "# config_digest: " + config_digest(config) + "\n";
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    out += fmt_double(pca.coordinates[i][0]) + "\t" +
           fmt_double(pca.coordinates[i][1]) + "\t" + labels[i] + "\t" +
           kinds[i] + "\n";
  }
  write_text(config.pca_points_path(op.role), out);
  return PcaExport{raw_count, static_cast<int>(vectors.size()) - raw_count};
}

// ---------------------------------------------------------------------------
// Reproduce
// ---------------------------------------------------------------------------

namespace {

struct Levels {
  double objects, worlds, tables;
};

// Reference values the summary places beside the measured numbers.
const std::map<std::string, Levels> kTheoryReference = {
    {"random", {0.50, 0.00, 0.00}},
    {"literal", {0.74, 0.27, 0.05}},
    {"human", {0.92, 0.63, 0.35}},
};

const std::map<std::string, std::map<std::string, Levels>> kOperatorReference = {
    {"negation",
     {{"random", {0.50, 0.00, 0.00}},
      {"literal", {0.50, 0.12, 0.03}},
      {"negation", {0.97, 0.81, 0.45}}}},
    {"conjunction",
     {{"random", {0.50, 0.00, 0.00}},
      {"literal", {0.81, 0.19, 0.01}},
      {"conjunction", {0.90, 0.56, 0.37}}}},
    {"disjunction",
     {{"random", {0.50, 0.00, 0.00}},
      {"literal", {0.58, 0.09, 0.01}},
      {"disjunction", {0.92, 0.54, 0.19}}}},
};

json rows_with_reference(const probe::AgreementReport& report,
                         const std::map<std::string, Levels>& reference) {
  json rows = json::array();
  for (const probe::ReportRow& r : report.rows) {
    json row = {{"name", r.name},
                {"objects", r.object_level},
                {"worlds", r.world_level},
                {"tables", r.table_level},
                {"count", r.count}};
    const auto it = reference.find(r.name);
    if (it != reference.end()) {
      row["reference"] = {{"objects", it->second.objects},
                          {"worlds", it->second.worlds},
                          {"tables", it->second.tables}};
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void append_text_rows(std::string& out, const probe::AgreementReport& report,
                      const std::map<std::string, Levels>& reference) {
  for (const probe::ReportRow& r : report.rows) {
    char line[160];
    const auto it = reference.find(r.name);
    if (it != reference.end()) {
      std::snprintf(line, sizeof line,
                    "  %-12s %.3f / %.3f / %.3f   [reference %.2f / %.2f / %.2f]\n",
                    r.name.c_str(), r.object_level, r.world_level,
                    r.table_level, it->second.objects, it->second.worlds,
                    it->second.tables);
    } else {
      std::snprintf(line, sizeof line, "  %-12s %.3f / %.3f / %.3f\n",
                    r.name.c_str(), r.object_level, r.world_level,
                    r.table_level);
    }
    out += line;
  }
}

template <typename F>
auto stage(const char* name, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    throw Error(std::string("stage ") + name + " failed: " + e.what());
  }
}

}  // namespace

ReproduceResult cmd_reproduce(const RunConfig& config) {
  config.validate();
  ensure_out_dir(config);
  ReproduceResult r;
  r.data = stage("gen-data", [&] { return cmd_gen_data(config); });
  r.train = stage("train", [&] { return cmd_train(config); });
  r.theories = stage("eval-theories", [&] {
    return cmd_eval_theories(config, config.checkpoint_path(),
                             config.test_dataset_path());
  });
  r.negation = stage("fit-op negation", [&] {
    return cmd_fit_op(config, config.checkpoint_path(),
                      config.test_dataset_path(), probe::OpRole::kNegation);
  });
  r.conjunction = stage("fit-op conjunction", [&] {
    return cmd_fit_op(config, config.checkpoint_path(),
                      config.test_dataset_path(), probe::OpRole::kConjunction);
  });
  r.disjunction = stage("fit-op disjunction", [&] {
    return cmd_fit_op(config, config.checkpoint_path(),
                      config.test_dataset_path(), probe::OpRole::kDisjunction);
  });
  stage("pca negation", [&] {
    return cmd_pca(config, config.checkpoint_path(),
                   config.test_dataset_path(),
                   config.operator_path(probe::OpRole::kNegation));
  });
  stage("pca disjunction", [&] {
    return cmd_pca(config, config.checkpoint_path(),
                   config.test_dataset_path(),
                   config.operator_path(probe::OpRole::kDisjunction));
  });

  json summary = report_base(config, "reproduce");
  summary["data"] = {{"train_records", r.data.train_count},
                     {"test_records", r.data.test_count}};
  summary["training"] = {{"heldout_accuracy", r.train.heldout_accuracy},
                         {"mean_first_losses", r.train.mean_first_losses},
                         {"mean_last_losses", r.train.mean_last_losses}};
  summary["sample"] = sample_to_json(config);
  summary["theories"] = {
      {"rows", rows_with_reference(r.theories, kTheoryReference)}};
  const auto op_json = [&](const FitOpResult& fit, const char* name) {
    return json{{"rows", rows_with_reference(fit.report,
                                             kOperatorReference.at(name))},
                {"counts",
                 {{"aligned_fit", fit.aligned_fit},
                  {"fit_items", fit.fit_items},
                  {"aligned_eval", fit.aligned_eval},
                  {"eval_items", fit.eval_items}}}};
  };
  summary["operators"] = {{"negation", op_json(r.negation, "negation")},
                          {"conjunction", op_json(r.conjunction, "conjunction")},
                          {"disjunction", op_json(r.disjunction, "disjunction")}};
  write_text(config.summary_json_path(), summary.dump(2) + "\n");

  std::string text;
  text += "run summary\n";
  text += "  config digest " + config_digest(config) + ", master seed " +
          std::to_string(config.master_seed) + "\n\n";
  {
    char line[160];
    std::snprintf(line, sizeof line,
                  "training\n  held-out object accuracy  %.4f\n\n",
                  r.train.heldout_accuracy);
    text += line;
  }
  text += "theories (objects / worlds / tables, n=" +
          std::to_string(r.theories.rows.front().count) + ")\n";
  append_text_rows(text, r.theories, kTheoryReference);
  const auto op_text = [&](const FitOpResult& fit, const char* name) {
    text += "\n" + std::string(name) + " (fit items " +
            std::to_string(fit.fit_items) + ", eval items " +
            std::to_string(fit.eval_items) + ")\n";
    append_text_rows(text, fit.report, kOperatorReference.at(name));
  };
  op_text(r.negation, "negation");
  op_text(r.conjunction, "conjunction");
  op_text(r.disjunction, "disjunction");
  write_text(config.summary_text_path(), text);
  return r;
}

}  // namespace refsem::pipeline
