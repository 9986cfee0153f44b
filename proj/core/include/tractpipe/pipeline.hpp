#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tractpipe/metrics.hpp"
#include "tractpipe/phantom.hpp"
#include "tractpipe/registration.hpp"
#include "tractpipe/segmentation.hpp"

namespace tractpipe {

namespace fs = std::filesystem;

struct ModelConfig {
  int patch_radius = 2;
  int hidden = 32;
  // 0, or 3 to append normalized voxel coordinates to each patch.
  int coord_features = 0;
};

/// Everything a run needs. Only the top-level seed is configurable; every
/// stage seed is derived from it (see apply_seed).
struct PipelineConfig {
  PhantomConfig phantom;
  RegistrationConfig registration;
  ModelConfig model;
  TrainConfig train_a;
  TrainConfig train_b;
  double threshold = 0.5;
  fs::path workspace = "workspace";
  std::uint64_t seed = 0;
  int jobs = 1;

  void validate() const;
  // Pushes derived sub-seeds into phantom, registration, train_a and train_b.
  void apply_seed();
  [[nodiscard]] std::uint64_t model_init_seed() const;
};

PipelineConfig default_pipeline_config();

/// Parses a JSON config. Missing keys keep their defaults; unknown keys and
/// wrongly typed values raise ConfigError.
PipelineConfig parse_pipeline_config(const std::string& json_text);
PipelineConfig load_pipeline_config(const fs::path& path);
std::string pipeline_config_json(const PipelineConfig& cfg);

// TRACTPIPE_WORKSPACE, when set and non-empty, replaces cfg.workspace.
void apply_workspace_env(PipelineConfig& cfg);

// Fixed workspace layout, relative to PipelineConfig::workspace.
struct WorkspaceLayout {
  fs::path root;

  [[nodiscard]] fs::path cohort_dir() const { return root / "cohort"; }
  [[nodiscard]] fs::path cohort_manifest() const { return cohort_dir() / "manifest.json"; }
  [[nodiscard]] fs::path stage1_dir() const { return root / "stage1"; }
  [[nodiscard]] fs::path stage1_manifest() const { return stage1_dir() / "manifest.json"; }
  [[nodiscard]] fs::path stage2_dir() const { return root / "stage2"; }
  [[nodiscard]] fs::path model_a() const { return stage2_dir() / "model_a"; }
  [[nodiscard]] fs::path stage3_dir(bool ure) const { return root / "stage3" / (ure ? "rpa_ure" : "rpa"); }
  [[nodiscard]] fs::path model_b(bool ure) const { return stage3_dir(ure) / "model_b"; }
  [[nodiscard]] fs::path uncertainty_dir() const { return root / "stage3" / "uncertainty"; }
  [[nodiscard]] fs::path eval_dir() const { return root / "eval"; }
  [[nodiscard]] fs::path ablation_csv() const { return root / "ablation.csv"; }
};

// Method tags of the three ablation rows, in table order.
inline constexpr const char* kTagBaseline = "baseline";
inline constexpr const char* kTagRpa = "rpa";
inline constexpr const char* kTagRpaUre = "rpa+ure";

// On-disk view of the cohort manifest. Unlabeled truths are never part of it.
struct CohortFiles {
  LabeledSubject labeled;
  std::vector<UnlabeledSubject> unlabeled;
  std::vector<PhantomSubject> test;
};

CohortFiles load_cohort(const WorkspaceLayout& ws);

struct PseudoFiles {
  std::vector<std::string> source_ids;
  std::vector<RealVolume> peaks;
  std::vector<LabelVolume> labels;
};

PseudoFiles load_pseudo_dataset(const WorkspaceLayout& ws);

// Stage entry points. Progress lines go to `log`.
void cmd_phantom(const PipelineConfig& cfg, std::ostream& log);
std::size_t cmd_stage1(const PipelineConfig& cfg, std::ostream& log);
PatchMlp cmd_stage2(const PipelineConfig& cfg, std::ostream& log);
PatchMlp cmd_stage3(const PipelineConfig& cfg, bool use_ure, std::ostream& log);
// Writes the prediction to `output` (volume base path, kind "prediction").
void cmd_predict(const PipelineConfig& cfg, const fs::path& model, const fs::path& subject,
                 const fs::path& output, std::ostream& log);
// Evaluates `model` (default: URe model B) on the test set; CSV under eval/.
DiceReport cmd_evaluate(const PipelineConfig& cfg, const std::optional<fs::path>& model,
                        const std::string& tag, std::ostream& log);
std::vector<DiceReport> cmd_pipeline(const PipelineConfig& cfg, std::ostream& log);

// Table-1 style summary: one row per method with mean, std and per-class means.
void write_ablation_csv(const std::vector<DiceReport>& reports, const fs::path& path);

}  // namespace tractpipe
