#include "tractpipe/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <set>

#include <json.hpp>

#include "binary_io.hpp"
#include "tractpipe/parallel.hpp"
#include "tractpipe/rpa.hpp"
#include "tractpipe/seed.hpp"
#include "tractpipe/ure.hpp"
#include "tractpipe/volume_io.hpp"

namespace tractpipe {

using nlohmann::json;

namespace {

enum SeedStream : std::uint64_t { kPhantom = 1, kRegistration = 2, kTrainA = 3, kTrainB = 4, kInit = 5 };

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// --- config parsing --------------------------------------------------------

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : obj.items()) {
    if (!known.contains(key)) throw ConfigError("unknown config key " + where + "." + key);
  }
}

template <typename T>
void read_field(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key " + where + "." + key + " has the wrong type");
  }
}

void read_phantom(const json& j, PhantomConfig& p) {
  reject_unknown(j,
                 {"dims", "n_tracts", "peak_channels", "tube_radius", "deform_amplitude",
                  "deform_smoothness", "noise_sigma", "cohort_size", "n_test"},
                 "phantom");
  if (j.contains("dims")) {
    std::vector<int> d;
    read_field(j, "dims", d, "phantom");
    if (d.size() != 3) throw ConfigError("phantom.dims must have three entries");
    p.dims = Dims{d[0], d[1], d[2]};
  }
  read_field(j, "n_tracts", p.n_tracts, "phantom");
  read_field(j, "peak_channels", p.peak_channels, "phantom");
  read_field(j, "tube_radius", p.tube_radius, "phantom");
  read_field(j, "deform_amplitude", p.deform_amplitude, "phantom");
  read_field(j, "deform_smoothness", p.deform_smoothness, "phantom");
  read_field(j, "noise_sigma", p.noise_sigma, "phantom");
  read_field(j, "cohort_size", p.cohort_size, "phantom");
  read_field(j, "n_test", p.n_test, "phantom");
}

void read_registration(const json& j, RegistrationConfig& r) {
  reject_unknown(j, {"gamma", "step_size", "max_iters", "rel_tol"}, "registration");
  read_field(j, "gamma", r.gamma, "registration");
  read_field(j, "step_size", r.step_size, "registration");
  read_field(j, "max_iters", r.max_iters, "registration");
  read_field(j, "rel_tol", r.rel_tol, "registration");
}

void read_model(const json& j, ModelConfig& m) {
  reject_unknown(j, {"patch_radius", "hidden", "coord_features"}, "model");
  read_field(j, "patch_radius", m.patch_radius, "model");
  read_field(j, "hidden", m.hidden, "model");
  read_field(j, "coord_features", m.coord_features, "model");
}

void read_train(const json& j, TrainConfig& t, const std::string& where) {
  reject_unknown(j, {"learning_rate", "epochs", "batch_voxels", "steps_per_epoch"}, where);
  read_field(j, "learning_rate", t.learning_rate, where);
  read_field(j, "epochs", t.epochs, where);
  read_field(j, "batch_voxels", t.batch_voxels, where);
  read_field(j, "steps_per_epoch", t.steps_per_epoch, where);
}

json train_json(const TrainConfig& t) {
  return {{"learning_rate", t.learning_rate},
          {"epochs", t.epochs},
          {"batch_voxels", t.batch_voxels},
          {"steps_per_epoch", t.steps_per_epoch}};
}

// --- manifests -------------------------------------------------------------

json read_json(const fs::path& path, const std::string& what) {
  if (!fs::exists(path)) throw IoError(what + " not found: " + path.string());
  try {
    return json::parse(detail::read_text(path));
  } catch (const json::exception& e) {
    throw FormatError(what + " is not valid JSON (" + path.string() + "): " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) { detail::write_text(path, j.dump(2) + "\n"); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  }
}

std::string manifest_string(const json& j, const char* key, const std::string& what) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw FormatError(what + ": missing string field '" + key + "'");
  }
  return j.at(key).get<std::string>();
}

std::string file_tag(const std::string& tag) {
  std::string s = tag;
  for (auto& c : s) {
    if (c == '+') c = '_';
  }
  return s;
}

class StageTimer {
 public:
  StageTimer(std::ostream& log, std::string name) : log_(log), name_(std::move(name)) {
    log_ << "[" << name_ << "] start\n";
  }
  ~StageTimer() {
    const auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", dt);
    log_ << "[" << name_ << "] done in " << buf << " s\n";
  }
  StageTimer(const StageTimer&) = delete;
  StageTimer& operator=(const StageTimer&) = delete;

 private:
  std::ostream& log_;
  std::string name_;
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

PatchMlp fresh_model(const PipelineConfig& cfg) {
  return PatchMlp::initialized(cfg.model.patch_radius, cfg.phantom.peak_channels, cfg.model.hidden,
                               cfg.phantom.n_tracts, cfg.model_init_seed(), cfg.model.coord_features);
}

void check_model_shape(const PatchMlp& m, const PipelineConfig& cfg, const fs::path& path) {
  if (m.input_channels() != cfg.phantom.peak_channels || m.classes() != cfg.phantom.n_tracts) {
    throw ShapeError("model " + path.string() + " expects " + std::to_string(m.input_channels()) +
                     " channels / " + std::to_string(m.classes()) + " classes; config has " +
                     std::to_string(cfg.phantom.peak_channels) + " / " +
                     std::to_string(cfg.phantom.n_tracts));
  }
}

PatchMlp load_checked_model(const PipelineConfig& cfg, const fs::path& base) {
  if (!fs::exists(model_header_path(base))) throw IoError("model not found: " + base.string());
  auto m = load_model(base);
  check_model_shape(m, cfg, base);
  return m;
}

void write_loss_trace(const fs::path& path, const std::vector<double>& trace) {
  write_json(path, json{{"epoch_loss", trace}});
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

void PipelineConfig::validate() const {
  phantom.validate();
  registration.validate();
  train_a.validate();
  train_b.validate();
  if (model.patch_radius < 0) throw ConfigError("model.patch_radius must be >= 0");
  if (model.hidden <= 0) throw ConfigError("model.hidden must be > 0");
  if (model.coord_features != 0 && model.coord_features != 3) {
    throw ConfigError("model.coord_features must be 0 or 3");
  }
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("threshold must lie in (0, 1)");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (workspace.empty()) throw ConfigError("workspace must not be empty");
}

void PipelineConfig::apply_seed() {
  phantom.seed = derive_seed(seed, kPhantom);
  registration.seed = derive_seed(seed, kRegistration);
  train_a.seed = derive_seed(seed, kTrainA);
  train_b.seed = derive_seed(seed, kTrainB);
}

std::uint64_t PipelineConfig::model_init_seed() const { return derive_seed(seed, kInit); }

PipelineConfig default_pipeline_config() {
  PipelineConfig cfg;
  cfg.apply_seed();
  return cfg;
}

PipelineConfig parse_pipeline_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(j,
                 {"seed", "workspace", "jobs", "threshold", "phantom", "registration", "model",
                  "train_a", "train_b"},
                 "config");
  PipelineConfig cfg;
  read_field(j, "seed", cfg.seed, "config");
  std::string ws = cfg.workspace.string();
  read_field(j, "workspace", ws, "config");
  cfg.workspace = ws;
  read_field(j, "jobs", cfg.jobs, "config");
  read_field(j, "threshold", cfg.threshold, "config");
  if (j.contains("phantom")) read_phantom(j.at("phantom"), cfg.phantom);
  if (j.contains("registration")) read_registration(j.at("registration"), cfg.registration);
  if (j.contains("model")) read_model(j.at("model"), cfg.model);
  if (j.contains("train_a")) read_train(j.at("train_a"), cfg.train_a, "train_a");
  if (j.contains("train_b")) read_train(j.at("train_b"), cfg.train_b, "train_b");
  cfg.apply_seed();
  cfg.validate();
  return cfg;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("config file not found: " + path.string());
  return parse_pipeline_config(detail::read_text(path));
}

void apply_workspace_env(PipelineConfig& cfg) {
  if (const char* ws = std::getenv("TRACTPIPE_WORKSPACE"); ws != nullptr && *ws != '\0') {
    cfg.workspace = ws;
  }
}

std::string pipeline_config_json(const PipelineConfig& cfg) {
  const auto& p = cfg.phantom;
  const auto& r = cfg.registration;
  json j{{"seed", cfg.seed},
         {"workspace", cfg.workspace.string()},
         {"jobs", cfg.jobs},
         {"threshold", cfg.threshold},
         {"phantom",
          {{"dims", {p.dims.x, p.dims.y, p.dims.z}},
           {"n_tracts", p.n_tracts},
           {"peak_channels", p.peak_channels},
           {"tube_radius", p.tube_radius},
           {"deform_amplitude", p.deform_amplitude},
           {"deform_smoothness", p.deform_smoothness},
           {"noise_sigma", p.noise_sigma},
           {"cohort_size", p.cohort_size},
           {"n_test", p.n_test}}},
         {"registration",
          {{"gamma", r.gamma}, {"step_size", r.step_size}, {"max_iters", r.max_iters}, {"rel_tol", r.rel_tol}}},
         {"model",
          {{"patch_radius", cfg.model.patch_radius},
           {"hidden", cfg.model.hidden},
           {"coord_features", cfg.model.coord_features}}},
         {"train_a", train_json(cfg.train_a)},
         {"train_b", train_json(cfg.train_b)}};
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Loading stage artifacts

CohortFiles load_cohort(const WorkspaceLayout& ws) {
  const auto j = read_json(ws.cohort_manifest(), "cohort manifest");
  const auto dir = ws.cohort_dir();
  const std::string what = "cohort manifest";
  CohortFiles c;
  try {
    const auto& l = j.at("labeled");
    c.labeled.id = manifest_string(l, "id", what);
    c.labeled.peaks = load_real_volume(dir / manifest_string(l, "peaks", what));
    c.labeled.labels = load_label_volume(dir / manifest_string(l, "labels", what));
    for (const auto& u : j.at("unlabeled")) {
      c.unlabeled.push_back(
          UnlabeledSubject{manifest_string(u, "id", what), load_real_volume(dir / manifest_string(u, "peaks", what))});
    }
    for (const auto& t : j.at("test")) {
      c.test.push_back(PhantomSubject{manifest_string(t, "id", what),
                                      load_real_volume(dir / manifest_string(t, "peaks", what)),
                                      load_label_volume(dir / manifest_string(t, "truth", what))});
    }
  } catch (const json::exception& e) {
    throw FormatError("cohort manifest is malformed: " + std::string(e.what()));
  }
  return c;
}

PseudoFiles load_pseudo_dataset(const WorkspaceLayout& ws) {
  const auto j = read_json(ws.stage1_manifest(), "stage1 manifest");
  const std::string what = "stage1 manifest";
  PseudoFiles p;
  try {
    for (const auto& e : j.at("pseudo")) {
      p.source_ids.push_back(manifest_string(e, "source_unlabeled_id", what));
      p.peaks.push_back(load_real_volume(ws.stage1_dir() / manifest_string(e, "peaks", what)));
      p.labels.push_back(load_label_volume(ws.stage1_dir() / manifest_string(e, "labels", what)));
    }
  } catch (const json::exception& e) {
    throw FormatError("stage1 manifest is malformed: " + std::string(e.what()));
  }
  if (p.peaks.empty()) throw FormatError("stage1 manifest lists no pseudo subjects");
  return p;
}

// ---------------------------------------------------------------------------
// Stages

void cmd_phantom(const PipelineConfig& cfg, std::ostream& log) {
  cfg.validate();
  StageTimer timer(log, "phantom");
  const WorkspaceLayout ws{cfg.workspace};
  ensure_dir(ws.cohort_dir());
  const auto atlas = generate_atlas(cfg.phantom);
  const auto cohort = generate_cohort(atlas, cfg.phantom);
  const auto dir = ws.cohort_dir();

  save_volume(atlas.peaks, dir / "atlas_peaks", "peaks");
  save_volume(atlas.truth, dir / "atlas_truth", "labels");
  save_volume(cohort.labeled.peaks, dir / (cohort.labeled.id + "_peaks"), "peaks");
  save_volume(cohort.labeled.labels, dir / (cohort.labeled.id + "_labels"), "labels");

  json manifest;
  manifest["dims"] = {cfg.phantom.dims.x, cfg.phantom.dims.y, cfg.phantom.dims.z};
  manifest["channels"] = cfg.phantom.peak_channels;
  manifest["classes"] = cfg.phantom.n_tracts;
  manifest["seed"] = cfg.phantom.seed;
  manifest["atlas"] = {{"peaks", "atlas_peaks"}, {"truth", "atlas_truth"}};
  manifest["labeled"] = {{"id", cohort.labeled.id},
                         {"peaks", cohort.labeled.id + "_peaks"},
                         {"labels", cohort.labeled.id + "_labels"}};
  manifest["unlabeled"] = json::array();
  for (const auto& u : cohort.unlabeled) {
    save_volume(u.peaks, dir / (u.id + "_peaks"), "peaks");
    manifest["unlabeled"].push_back({{"id", u.id}, {"peaks", u.id + "_peaks"}});
  }
  manifest["test"] = json::array();
  for (const auto& t : cohort.test) {
    save_volume(t.peaks, dir / (t.id + "_peaks"), "peaks");
    save_volume(t.truth, dir / (t.id + "_truth"), "labels");
    manifest["test"].push_back({{"id", t.id}, {"peaks", t.id + "_peaks"}, {"truth", t.id + "_truth"}});
  }
  write_json(ws.cohort_manifest(), manifest);
  detail::write_text(ws.root / "config.json", pipeline_config_json(cfg));
  log << "cohort: 1 labeled, " << cohort.unlabeled.size() << " unlabeled, " << cohort.test.size()
      << " test -> " << ws.cohort_manifest().string() << "\n";
}

std::size_t cmd_stage1(const PipelineConfig& cfg, std::ostream& log) {
  cfg.validate();
  StageTimer timer(log, "stage1");
  const WorkspaceLayout ws{cfg.workspace};
  const auto cohort = load_cohort(ws);
  if (cohort.unlabeled.empty()) throw FormatError("cohort manifest lists no unlabeled subjects");
  ensure_dir(ws.stage1_dir());

  const auto pseudo = build_pseudo_dataset(cohort.labeled, cohort.unlabeled, cfg.registration, cfg.jobs,
                                           ws.stage1_dir());
  json manifest;
  manifest["labeled_id"] = cohort.labeled.id;
  manifest["registration"] = {{"gamma", cfg.registration.gamma},
                              {"step_size", cfg.registration.step_size},
                              {"max_iters", cfg.registration.max_iters},
                              {"rel_tol", cfg.registration.rel_tol}};
  manifest["pseudo"] = json::array();
  for (std::size_t i = 0; i < pseudo.size(); ++i) {
    const auto& p = pseudo[i];
    const auto tag = index_tag(i);
    save_volume(p.peaks, ws.stage1_dir() / ("pseudo_" + tag + "_peaks"), "peaks");
    save_volume(p.labels, ws.stage1_dir() / ("pseudo_" + tag + "_labels"), "labels");
    if (p.loss_trace.back() > p.loss_trace.front()) {
      throw NumericalError("registration " + tag + " ended above its starting loss");
    }
    manifest["pseudo"].push_back({{"source_unlabeled_id", p.source_unlabeled_id},
                                  {"peaks", "pseudo_" + tag + "_peaks"},
                                  {"labels", "pseudo_" + tag + "_labels"},
                                  {"field", "field_" + tag},
                                  {"iterations", p.loss_trace.size() - 1},
                                  {"loss_trace", p.loss_trace}});
    log << "  " << p.source_unlabeled_id << ": loss " << p.loss_trace.front() << " -> "
        << p.loss_trace.back() << " (" << p.loss_trace.size() - 1 << " iterations)\n";
  }
  write_json(ws.stage1_manifest(), manifest);
  log << "pseudo subjects: " << pseudo.size() << " from " << cohort.unlabeled.size()
      << " unlabeled\n";
  return pseudo.size();
}

PatchMlp cmd_stage2(const PipelineConfig& cfg, std::ostream& log) {
  cfg.validate();
  StageTimer timer(log, "stage2");
  const WorkspaceLayout ws{cfg.workspace};
  const auto cohort = load_cohort(ws);
  ensure_dir(ws.stage2_dir());

  // Model A sees the single labeled subject and nothing else.
  const std::vector<TrainingSubject> dataset{{&cohort.labeled.peaks, &cohort.labeled.labels, nullptr}};
  auto result = train(fresh_model(cfg), dataset, cfg.train_a);
  save_model(result.model, ws.model_a());
  write_loss_trace(ws.stage2_dir() / "loss.json", result.epoch_loss);

  std::string run;
  run += "training subjects: " + std::to_string(dataset.size()) + "\n";
  run += "labeled id: " + cohort.labeled.id + "\n";
  run += "epochs: " + std::to_string(cfg.train_a.epochs) + "\n";
  run += "loss: " + fixed6(result.epoch_loss.front()) + " -> " + fixed6(result.epoch_loss.back()) + "\n";
  run += "checksum: " + hex64(result.model.checksum()) + "\n";
  detail::write_text(ws.stage2_dir() / "run.log", run);
  log << run;
  return std::move(result.model);
}

PatchMlp cmd_stage3(const PipelineConfig& cfg, bool use_ure, std::ostream& log) {
  cfg.validate();
  StageTimer timer(log, use_ure ? "stage3 rpa+ure" : "stage3 rpa");
  const WorkspaceLayout ws{cfg.workspace};
  const auto pseudo = load_pseudo_dataset(ws);
  const auto n = pseudo.peaks.size();

  std::vector<UncertaintyMap> maps;
  std::string run;
  if (use_ure) {
    const auto model_a = load_checked_model(cfg, ws.model_a());
    const auto checksum_a = model_a.checksum();
    const auto manifest_key = fnv1a(detail::read_text(ws.stage1_manifest()));
    const auto dir = ws.uncertainty_dir();
    ensure_dir(dir);
    const auto cache_path = dir / "cache.json";

    bool cached = false;
    if (fs::exists(cache_path)) {
      const auto c = read_json(cache_path, "uncertainty cache");
      cached = c.value("model_a_checksum", std::string{}) == hex64(checksum_a) &&
               c.value("stage1_manifest", std::string{}) == hex64(manifest_key) &&
               c.value("count", std::size_t{0}) == n;
      for (std::size_t i = 0; cached && i < n; ++i) cached = volume_exists(dir / ("um_" + index_tag(i)));
    }
    maps.resize(n);
    if (cached) {
      for (std::size_t i = 0; i < n; ++i) maps[i] = load_real_volume(dir / ("um_" + index_tag(i)));
      log << "uncertainty maps: reused " << n << " cached maps\n";
    } else {
      parallel_for(n, cfg.jobs, [&](std::size_t i) {
        maps[i] = uncertainty_map_for_subject(model_a, pseudo.peaks[i]);
      });
      for (std::size_t i = 0; i < n; ++i) save_volume(maps[i], dir / ("um_" + index_tag(i)), "uncertainty");
      write_json(cache_path, json{{"model_a_checksum", hex64(checksum_a)},
                                  {"stage1_manifest", hex64(manifest_key)},
                                  {"count", n}});
      log << "uncertainty maps: computed " << n << "\n";
    }
    if (model_a.checksum() != checksum_a) throw NumericalError("model A changed while frozen");
    run += "model A checksum: " + hex64(checksum_a) + " (frozen)\n";
  }

  std::vector<TrainingSubject> dataset;
  for (std::size_t i = 0; i < n; ++i) {
    dataset.push_back({&pseudo.peaks[i], &pseudo.labels[i], use_ure ? &maps[i] : nullptr});
  }
  auto result = train(fresh_model(cfg), dataset, cfg.train_b);
  ensure_dir(ws.stage3_dir(use_ure));
  save_model(result.model, ws.model_b(use_ure));
  write_loss_trace(ws.stage3_dir(use_ure) / "loss.json", result.epoch_loss);

  run = "training subjects: " + std::to_string(n) + "\n" + "uncertainty weighting: " +
        (use_ure ? "on" : "off") + "\n" + run;
  run += "loss: " + fixed6(result.epoch_loss.front()) + " -> " + fixed6(result.epoch_loss.back()) + "\n";
  run += "checksum: " + hex64(result.model.checksum()) + "\n";
  detail::write_text(ws.stage3_dir(use_ure) / "run.log", run);
  log << run;
  return std::move(result.model);
}

void cmd_predict(const PipelineConfig& cfg, const fs::path& model, const fs::path& subject,
                 const fs::path& output, std::ostream& log) {
  cfg.validate();
  const auto m = load_checked_model(cfg, model);
  const auto base = volume_base(subject);
  if (!volume_exists(base)) throw IoError("subject volume not found: " + subject.string());
  const auto peaks = load_real_volume(base);
  const auto pred = predict_subject(m, peaks);
  const auto out = volume_base(output);
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  save_volume(pred, out, "prediction");
  log << "prediction " << to_string(pred.dims()) << " x " << pred.channels() << " -> "
      << volume_header_path(out).string() << "\n";
}

DiceReport cmd_evaluate(const PipelineConfig& cfg, const std::optional<fs::path>& model,
                        const std::string& tag, std::ostream& log) {
  cfg.validate();
  const WorkspaceLayout ws{cfg.workspace};
  const auto path = model.value_or(ws.model_b(true));
  const auto m = load_checked_model(cfg, path);
  const auto cohort = load_cohort(ws);
  auto report = evaluate(m, cohort.test, cfg.threshold, tag, cfg.jobs);
  ensure_dir(ws.eval_dir());
  write_report_csv(report, ws.eval_dir() / (file_tag(tag) + ".csv"));
  log << tag << ": mean Dice " << fixed6(report.overall_mean) << " +- " << fixed6(report.overall_std)
      << "\n";
  return report;
}

std::vector<DiceReport> cmd_pipeline(const PipelineConfig& cfg, std::ostream& log) {
  cfg.validate();
  StageTimer timer(log, "pipeline");
  const WorkspaceLayout ws{cfg.workspace};
  cmd_phantom(cfg, log);
  cmd_stage1(cfg, log);
  cmd_stage2(cfg, log);
  cmd_stage3(cfg, false, log);
  cmd_stage3(cfg, true, log);
  std::vector<DiceReport> reports;
  reports.push_back(cmd_evaluate(cfg, ws.model_a(), kTagBaseline, log));
  reports.push_back(cmd_evaluate(cfg, ws.model_b(false), kTagRpa, log));
  reports.push_back(cmd_evaluate(cfg, ws.model_b(true), kTagRpaUre, log));
  write_ablation_csv(reports, ws.ablation_csv());
  log << "ablation table -> " << ws.ablation_csv().string() << "\n";
  return reports;
}

void write_ablation_csv(const std::vector<DiceReport>& reports, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "method,mean_dice,std_dice";
  if (!reports.empty()) {
    for (const auto& c : reports.front().per_class) out << ',' << c.name;
  }
  out << '\n';
  for (const auto& r : reports) {
    out << r.method_tag << ',' << fixed6(r.overall_mean) << ',' << fixed6(r.overall_std);
    for (const auto& c : r.per_class) out << ',' << fixed6(c.mean);
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace tractpipe
