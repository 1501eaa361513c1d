#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "refsem/pipeline.hpp"

namespace {

using refsem::pipeline::RunConfig;

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  CLI::Option* config_opt = nullptr;
  CLI::Option* out_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  opts.config_opt = cmd->add_option("--config", opts.config_path,
                                    "Run configuration file (JSON)");
  opts.seed_opt = cmd->add_option("--seed", opts.seed,
                                  "Master seed (overrides the config)");
  opts.out_opt = cmd->add_option("--out", opts.out_dir,
                                 "Output directory (overrides the config)");
}

RunConfig resolve_config(const CommonOpts& opts) {
  RunConfig config;
  if (opts.config_opt->count() > 0) {
    config = refsem::pipeline::load_config(opts.config_path);
  }
  if (opts.seed_opt->count() > 0) config.master_seed = opts.seed;
  if (opts.out_opt->count() > 0) config.out_dir = opts.out_dir;
  config.validate();
  return config;
}

refsem::probe::OpRole role_from_flag(const std::string& op) {
  if (op == "not") return refsem::probe::OpRole::kNegation;
  if (op == "and") return refsem::probe::OpRole::kConjunction;
  if (op == "or") return refsem::probe::OpRole::kDisjunction;
  throw refsem::ConfigError("--op must be one of not, and, or");
}

void print_report(const refsem::probe::AgreementReport& report) {
  std::printf("  %-12s %8s %8s %8s %8s\n", "", "objects", "worlds", "tables",
              "count");
  for (const refsem::probe::ReportRow& row : report.rows) {
    std::printf("  %-12s %8.3f %8.3f %8.3f %8lld\n", row.name.c_str(),
                row.object_level, row.world_level, row.table_level,
                static_cast<long long>(row.count));
  }
  for (const std::string& note : report.notes) {
    std::printf("  note: %s\n", note.c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Referring-expression game: train a communication model and "
               "probe its message space"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data",
                                 "Generate the train/test datasets");
  CommonOpts gen_opts;
  add_common(gen, gen_opts);
  gen->callback([&] {
    const RunConfig config = resolve_config(gen_opts);
    const auto result = refsem::pipeline::cmd_gen_data(config);
    std::printf("wrote %d records to %s\n", result.train_count,
                config.train_dataset_path().c_str());
    std::printf("wrote %d records to %s\n", result.test_count,
                config.test_dataset_path().c_str());
  });

  // train
  auto* train = app.add_subcommand("train", "Train the encoder/decoder model");
  CommonOpts train_opts;
  add_common(train, train_opts);
  train->callback([&] {
    const RunConfig config = resolve_config(train_opts);
    const auto result = refsem::pipeline::cmd_train(config);
    std::printf("held-out object accuracy %.4f\n", result.heldout_accuracy);
    std::printf("checkpoint %s\n", config.checkpoint_path().c_str());
  });

  // eval-theories
  auto* theories = app.add_subcommand(
      "eval-theories", "Score the random/literal/human behavior theories");
  CommonOpts theories_opts;
  add_common(theories, theories_opts);
  std::string theories_ckpt, theories_data;
  auto* theories_ckpt_opt =
      theories->add_option("--checkpoint", theories_ckpt, "Model checkpoint");
  auto* theories_data_opt =
      theories->add_option("--dataset", theories_data, "Evaluation dataset");
  theories->callback([&] {
    const RunConfig config = resolve_config(theories_opts);
    const std::string ckpt = theories_ckpt_opt->count() > 0
                                 ? theories_ckpt
                                 : config.checkpoint_path();
    const std::string data = theories_data_opt->count() > 0
                                 ? theories_data
                                 : config.test_dataset_path();
    const auto report = refsem::pipeline::cmd_eval_theories(config, ckpt, data);
    std::printf("theory agreement (%s)\n", data.c_str());
    print_report(report);
    std::printf("report %s\n", config.theories_report_path().c_str());
  });

  // fit-op
  auto* fit = app.add_subcommand(
      "fit-op", "Fit a linear operator on the train split and evaluate it on "
                "the held-out split");
  CommonOpts fit_opts;
  add_common(fit, fit_opts);
  std::string fit_op_name, fit_ckpt, fit_data;
  fit->add_option("--op", fit_op_name, "Operator: not, and, or")->required();
  auto* fit_ckpt_opt =
      fit->add_option("--checkpoint", fit_ckpt, "Model checkpoint");
  auto* fit_data_opt =
      fit->add_option("--dataset", fit_data, "Held-out evaluation dataset");
  fit->callback([&] {
    const RunConfig config = resolve_config(fit_opts);
    const auto role = role_from_flag(fit_op_name);
    const std::string ckpt =
        fit_ckpt_opt->count() > 0 ? fit_ckpt : config.checkpoint_path();
    const std::string data =
        fit_data_opt->count() > 0 ? fit_data : config.test_dataset_path();
    const auto result = refsem::pipeline::cmd_fit_op(config, ckpt, data, role);
    std::printf("aligned pairs: fit %lld, eval %lld; items: fit %lld, eval %lld\n",
                static_cast<long long>(result.aligned_fit),
                static_cast<long long>(result.aligned_eval),
                static_cast<long long>(result.fit_items),
                static_cast<long long>(result.eval_items));
    print_report(result.report);
    std::printf("operator %s\n", config.operator_path(role).c_str());
    std::printf("report %s\n", config.operator_report_path(role).c_str());
  });

  // pca
  auto* pca = app.add_subcommand(
      "pca", "Export 2-d projections of raw and transformed messages");
  CommonOpts pca_opts;
  add_common(pca, pca_opts);
  std::string pca_op_name = "not", pca_ckpt, pca_data;
  pca->add_option("--op", pca_op_name,
                  "Which fitted operator file to use: not, and, or");
  auto* pca_ckpt_opt =
      pca->add_option("--checkpoint", pca_ckpt, "Model checkpoint");
  auto* pca_data_opt = pca->add_option("--dataset", pca_data, "Dataset");
  pca->callback([&] {
    const RunConfig config = resolve_config(pca_opts);
    const auto role = role_from_flag(pca_op_name);
    const std::string ckpt =
        pca_ckpt_opt->count() > 0 ? pca_ckpt : config.checkpoint_path();
    const std::string data =
        pca_data_opt->count() > 0 ? pca_data : config.test_dataset_path();
    const auto result = refsem::pipeline::cmd_pca(config, ckpt, data,
                                                  config.operator_path(role));
    std::printf("wrote %d raw and %d transformed points to %s\n",
                result.raw_points, result.transformed_points,
                config.pca_points_path(role).c_str());
  });

  // reproduce
  auto* repro = app.add_subcommand(
      "reproduce", "Run the full pipeline and write the summary");
  CommonOpts repro_opts;
  add_common(repro, repro_opts);
  repro->callback([&] {
    const RunConfig config = resolve_config(repro_opts);
    refsem::pipeline::cmd_reproduce(config);
    std::printf("summary %s\n", config.summary_text_path().c_str());
    std::printf("summary %s\n", config.summary_json_path().c_str());
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const refsem::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const refsem::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
