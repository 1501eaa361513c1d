#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "refsem/dataset.hpp"
#include "refsem/logic.hpp"
#include "refsem/meaning.hpp"
#include "refsem/net.hpp"
#include "refsem/probe.hpp"
#include "refsem/scene.hpp"

namespace refsem::pipeline {

// Everything a full run needs. All stage seeds are derived from master_seed
// with stable labels, so stages can be re-run independently and two runs with
// the same master seed produce byte-identical artifacts.
struct RunConfig {
  scene::Schema schema = scene::Schema::standard();
  int world_size_min = 1;
  int world_size_max = scene::kMaxWorldSize;
  logic::FormSamplerConfig sampler;
  int annotations_per_scene = 3;
  int retry_budget = 50;

  int train_scenes = 600;    // fitting-split dataset records
  int test_scenes = 273;     // held-out dataset records
  int accuracy_scenes = 500; // fresh scenes for the held-out accuracy report

  int sample_k = 30;               // alternative worlds per meaning table
  bool sample_from_dataset = false;  // draw them from the dataset instead

  net::ModelConfig model;  // feature_dim and seed are filled in per stage

  double ridge = 1e-6;
  int max_fit_items = 50000;  // operator-fitting pairs/triples cap
  int max_eval_items = 2000;  // held-out evaluation items cap

  std::uint64_t master_seed = 1;
  std::string out_dir = "out";

  void validate() const;

  // Artifact locations inside out_dir.
  std::string train_dataset_path() const;
  std::string test_dataset_path() const;
  std::string checkpoint_path() const;
  std::string train_report_path() const;
  std::string theories_report_path() const;
  std::string operator_path(probe::OpRole role) const;
  std::string operator_report_path(probe::OpRole role) const;
  std::string pca_points_path(probe::OpRole role) const;
  std::string summary_json_path() const;
  std::string summary_text_path() const;
};

// The model config with schema-derived feature_dim and the derived init seed.
net::ModelConfig filled_model_config(const RunConfig& config);

// JSON round-trip. Missing keys keep their defaults; unknown keys raise
// ConfigError. `seed` and `feature_dim` under "model" are rejected since
// they are derived.
nlohmann::json config_to_json(const RunConfig& config);
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

// Hex digest of the canonical config text. out_dir is excluded so identical
// runs into different directories produce identical reports.
std::string config_digest(const RunConfig& config);

struct GenDataResult {
  int train_count = 0;
  int test_count = 0;
};
GenDataResult cmd_gen_data(const RunConfig& config);

struct TrainResult {
  double heldout_accuracy = 0.0;
  double mean_first_losses = 0.0;  // first (up to) 100 steps
  double mean_last_losses = 0.0;   // last (up to) 100 steps
};
TrainResult cmd_train(const RunConfig& config);

probe::AgreementReport cmd_eval_theories(const RunConfig& config,
                                         const std::string& checkpoint_path,
                                         const std::string& dataset_path);

struct FitOpResult {
  probe::AgreementReport report;
  std::int64_t aligned_fit = 0;
  std::int64_t fit_items = 0;
  std::int64_t aligned_eval = 0;
  std::int64_t eval_items = 0;
};
// Fits on alignments from the train dataset, evaluates on alignments from
// `eval_dataset_path`, writes the operator file and its report.
FitOpResult cmd_fit_op(const RunConfig& config,
                       const std::string& checkpoint_path,
                       const std::string& eval_dataset_path,
                       probe::OpRole role);

struct PcaExport {
  int raw_points = 0;
  int transformed_points = 0;
};
PcaExport cmd_pca(const RunConfig& config, const std::string& checkpoint_path,
                  const std::string& dataset_path,
                  const std::string& operator_path);

struct ReproduceResult {
  GenDataResult data;
  TrainResult train;
  probe::AgreementReport theories;
  FitOpResult negation;
  FitOpResult conjunction;
  FitOpResult disjunction;
};
// gen-data, train, eval-theories, fit-op for all three roles, pca; then a
// summary placing the measured numbers beside the reference values.
ReproduceResult cmd_reproduce(const RunConfig& config);

}  // namespace refsem::pipeline
