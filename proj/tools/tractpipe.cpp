// tractpipe: stage-by-stage driver for the one-shot segmentation pipeline.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tractpipe/error.hpp"
#include "tractpipe/pipeline.hpp"
#include "tractpipe/volume_io.hpp"

namespace fs = std::filesystem;
using namespace tractpipe;

namespace {

struct CommonOptions {
  std::string config;
  std::optional<int> jobs;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* sub, CommonOptions& opts) {
  sub->add_option("--config", opts.config, "JSON config file (built-in defaults if omitted)");
  sub->add_option("--jobs", opts.jobs, "Worker threads for per-subject work")->check(CLI::PositiveNumber);
  sub->add_option("--seed", opts.seed, "Top-level seed; overrides the config file");
}

PipelineConfig resolve(const CommonOptions& opts) {
  PipelineConfig cfg = opts.config.empty() ? default_pipeline_config() : load_pipeline_config(opts.config);
  apply_workspace_env(cfg);
  if (opts.jobs) cfg.jobs = *opts.jobs;
  if (opts.seed) {
    cfg.seed = *opts.seed;
    cfg.apply_seed();
  }
  cfg.validate();
  return cfg;
}

// Distinct exit codes per failure class; 0 only when every stage contract held.
int exit_code(const Error& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const IoError*>(&e)) return 3;
  if (dynamic_cast<const FormatError*>(&e)) return 4;
  if (dynamic_cast<const ShapeError*>(&e)) return 5;
  if (dynamic_cast<const NumericalError*>(&e)) return 6;
  return 1;
}

const char* error_kind(const Error& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return "config";
  if (dynamic_cast<const IoError*>(&e)) return "io";
  if (dynamic_cast<const FormatError*>(&e)) return "format";
  if (dynamic_cast<const ShapeError*>(&e)) return "shape";
  if (dynamic_cast<const NumericalError*>(&e)) return "numerical";
  return "error";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tractpipe - registration-augmented one-shot tract segmentation on phantoms"};
  app.require_subcommand(1);

  CommonOptions opts;
  bool no_ure = false;
  std::string model_path;
  std::string subject_path;
  std::string output_path;
  std::string tag;

  auto* phantom = app.add_subcommand("phantom", "Generate the atlas and cohort");
  auto* stage1 = app.add_subcommand("stage1", "Register the labeled subject onto every unlabeled one");
  auto* stage2 = app.add_subcommand("stage2", "Train model A on the labeled subject");
  auto* stage3 = app.add_subcommand("stage3", "Train model B on the pseudo dataset");
  auto* predict = app.add_subcommand("predict", "Tri-planar prediction for one peak volume");
  auto* evaluate = app.add_subcommand("evaluate", "Dice report on the test subjects");
  auto* pipeline = app.add_subcommand("pipeline", "All stages plus the three-row ablation table");
  for (auto* sub : {phantom, stage1, stage2, stage3, predict, evaluate, pipeline}) add_common(sub, opts);

  stage3->add_flag("--no-ure", no_ure, "Unit loss weights (RPA only)");
  predict->add_option("--model", model_path, "Model checkpoint base path (default: URe model B)");
  predict->add_option("--subject", subject_path, "Peak volume (base path or .vol.json)")->required();
  predict->add_option("--output", output_path, "Output volume base path")->required();
  evaluate->add_option("--model", model_path, "Model checkpoint base path (default: URe model B)");
  evaluate->add_option("--tag", tag, "Method tag written to the CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    const auto cfg = resolve(opts);
    const WorkspaceLayout ws{cfg.workspace};
    if (phantom->parsed()) {
      cmd_phantom(cfg, std::cout);
    } else if (stage1->parsed()) {
      cmd_stage1(cfg, std::cout);
    } else if (stage2->parsed()) {
      cmd_stage2(cfg, std::cout);
    } else if (stage3->parsed()) {
      cmd_stage3(cfg, !no_ure, std::cout);
    } else if (predict->parsed()) {
      const fs::path model = model_path.empty() ? ws.model_b(true) : fs::path(model_path);
      cmd_predict(cfg, model, subject_path, output_path, std::cout);
    } else if (evaluate->parsed()) {
      std::optional<fs::path> model;
      if (!model_path.empty()) model = model_path;
      if (tag.empty()) tag = model ? "model" : kTagRpaUre;
      cmd_evaluate(cfg, model, tag, std::cout);
    } else if (pipeline->parsed()) {
      const auto reports = cmd_pipeline(cfg, std::cout);
      std::cout << "\nmethod      mean_dice  std_dice\n";
      for (const auto& r : reports) {
        std::printf("%-10s  %.4f     %.4f\n", r.method_tag.c_str(), r.overall_mean, r.overall_std);
      }
    }
  } catch (const Error& e) {
    std::cerr << "tractpipe: " << error_kind(e) << " error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "tractpipe: unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
