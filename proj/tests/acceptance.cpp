// One PASS/FAIL line per acceptance criterion. Run without arguments for all
// of them, or name the ones to run. Exit status is non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "temp_dir.hpp"
#include "tractpipe/metrics.hpp"
#include "tractpipe/pipeline.hpp"
#include "tractpipe/seed.hpp"
#include "tractpipe/ure.hpp"

using namespace tractpipe;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<double> flat(const DisplacementField& f) { return {f.data().begin(), f.data().end()}; }

DisplacementField unflat(const Dims& d, const std::vector<double>& x) { return DisplacementField(d, x); }

// Default phantom cohort, fixed seed, in a scratch workspace.
PipelineConfig acceptance_config(const fs::path& ws) {
  auto cfg = default_pipeline_config();
  cfg.workspace = ws;
  return cfg;
}

Outcome ablation() {
  TempDir dir("tp_accept");
  const auto cfg = acceptance_config(dir.path() / "ws");
  std::ostringstream log;
  const auto t0 = Clock::now();
  const auto r = cmd_pipeline(cfg, log);
  const double dt = seconds_since(t0);
  const double base = r[0].overall_mean, rpa = r[1].overall_mean, ure = r[2].overall_mean;
  const double g1 = rpa - base, g2 = ure - rpa;
  const bool ok = g1 >= 0.02 && g2 >= 0.02 && dt < 600.0;
  return {ok, fmt("baseline %.4f, rpa %.4f (%+.4f), rpa+ure %.4f (%+.4f); need both gaps >= 0.02; "
                  "runtime %.1f s (< 600)",
                  base, rpa, g1, ure, g2, dt)};
}

Outcome registration() {
  const PhantomConfig pc;
  const auto atlas = generate_atlas(pc);
  const auto field = random_smooth_field(pc.dims, 2.0, pc.deform_smoothness, derive_seed(pc.seed, 99));
  const auto target = warp(atlas.peaks, field);
  const RegistrationConfig rc;
  const auto res = optimize_registration(atlas.peaks, target, rc);
  const double before = sim_loss(atlas.peaks, target);
  const double after = sim_loss(warp(atlas.peaks, res.field), target);
  bool monotone = true;
  for (std::size_t i = 1; i < res.loss_trace.size(); ++i) monotone = monotone && res.loss_trace[i] <= res.loss_trace[i - 1];
  const bool ok = after <= 0.5 * before && monotone && res.iterations <= 200;
  return {ok, fmt("sim %.6f -> %.6f (ratio %.3f, need <= 0.5) in %d iterations, monotone %s", before, after,
                  after / before, res.iterations, monotone ? "yes" : "no")};
}

Outcome gradients() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> gam(0.1, 50.0);
  double worst_reg = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Dims d{3 + t % 3, 3 + (t / 3) % 2, 3 + (t / 6) % 2};
    const auto m = oracle::random_volume(rng, d, 1 + t % 3);
    const auto tg = oracle::random_volume(rng, d, m.channels());
    const auto u = oracle::random_field(rng, d, 0.7);
    const double gamma = gam(rng);
    const auto g = flat(grad_reg_loss(u, m, tg, gamma));
    const auto fd = oracle::central_gradient(
        [&](std::vector<double>& x) { return reg_loss(unflat(d, x), m, tg, gamma); }, flat(u), 1e-6);
    worst_reg = std::max(worst_reg, oracle::relative_error(g, fd));
  }
  double worst_seg = 0.0;
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    const int r = t % 2, c = 1 + t % 3, h = 2 + t % 4, n = 1 + t % 3;
    auto model = PatchMlp::initialized(r, c, h, n, rng(), (t % 4 == 0) ? 3 : 0);
    for (auto& p : model.parameters()) p += 0.2 * gauss(rng);
    TrainingBatch b;
    b.input_size = model.input_size();
    b.classes = n;
    const std::size_t samples = 5;
    b.features.resize(samples * static_cast<std::size_t>(b.input_size));
    for (auto& f : b.features) f = gauss(rng);
    b.labels.resize(samples * static_cast<std::size_t>(n));
    for (auto& l : b.labels) l = unit(rng) < 0.5 ? 1 : 0;
    b.weights.resize(b.labels.size());
    for (auto& w : b.weights) w = unit(rng);
    std::vector<double> g(model.parameters().size());
    batch_loss_and_gradient(model, b, g);
    const auto fd = oracle::central_gradient(
        [&](std::vector<double>& x) {
          PatchMlp probe = model;
          std::copy(x.begin(), x.end(), probe.parameters().begin());
          return batch_loss(probe, b);
        },
        std::vector<double>(model.parameters().begin(), model.parameters().end()), 1e-6);
    worst_seg = std::max(worst_seg, oracle::relative_error(g, fd));
  }
  const double dt = seconds_since(t0);
  const bool ok = worst_reg < 1e-4 && worst_seg < 1e-4 && dt < 60.0;
  return {ok, fmt("worst relative error reg_loss %.2e, segmentation loss %.2e over 100 instances each "
                  "(need < 1e-4); %.2f s (< 60)",
                  worst_reg, worst_seg, dt)};
}

Outcome ure() {
  // Dyadic grid: z, 1 - z and 2z are all exact, so equalities can be exact.
  const int steps = 1 << 16;
  bool ok = uncertainty_transform(0.5) == 0.0 && uncertainty_transform(0.0) == 1.0 &&
            uncertainty_transform(1.0) == 1.0;
  int bad = 0;
  for (int i = 0; i <= steps; ++i) {
    const double z = static_cast<double>(i) / steps;
    const double m = uncertainty_transform(z);
    if (!(m >= 0.0 && m <= 1.0) || m != uncertainty_transform(1.0 - z)) ++bad;
  }
  ok = ok && bad == 0;
  return {ok, fmt("um(0.5)=%g um(0)=%g um(1)=%g; %d violations of symmetry/range on %d grid points",
                  uncertainty_transform(0.5), uncertainty_transform(0.0), uncertainty_transform(1.0), bad,
                  steps + 1)};
}

Outcome weighted_loss() {
  std::mt19937_64 rng(77);
  const Dims d{8, 8, 8};
  const auto peaks = oracle::random_volume(rng, d, 3);
  const auto labels = oracle::random_mask(rng, d, 3, 0.3);
  const RealVolume ones(d, 3, 1.0f), zeros(d, 3, 0.0f);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.steps_per_epoch = 20;
  cfg.seed = 8;
  const auto init = PatchMlp::initialized(2, 3, 16, 3, 12);
  const std::vector<TrainingSubject> plain{{&peaks, &labels, nullptr}};
  const std::vector<TrainingSubject> unit{{&peaks, &labels, &ones}};
  const std::vector<TrainingSubject> none{{&peaks, &labels, &zeros}};
  const auto a = train(init, plain, cfg);
  const auto b = train(init, unit, cfg);
  const auto z = train(init, none, cfg);
  const bool identical = a.model == b.model && a.epoch_loss == b.epoch_loss;
  bool zero_loss = z.model == init;
  for (double e : z.epoch_loss) zero_loss = zero_loss && e == 0.0;
  const auto pred = predict_subject(init, peaks);
  zero_loss = zero_loss && weighted_bce_loss(pred, labels, zeros) == 0.0;

  int violations = 0;
  std::uniform_real_distribution<double> bump(1e-6, 1.0);
  for (int t = 0; t < 1000; ++t) {
    const Dims s{2 + t % 3, 2, 2 + t % 2};
    const int n = 1 + t % 3;
    const auto p = oracle::random_volume(rng, s, n, 0.0, 1.0);
    const auto l = oracle::random_mask(rng, s, n, 0.5);
    auto w = oracle::random_volume(rng, s, n, 0.0, 1.0);
    const double before = weighted_bce_loss(p, l, w);
    std::uniform_int_distribution<std::size_t> pick(0, w.size() - 1);
    w.data()[pick(rng)] += static_cast<float>(bump(rng));
    if (weighted_bce_loss(p, l, w) < before) ++violations;
  }
  const bool ok = identical && zero_loss && violations == 0;
  return {ok, fmt("unit weights bit-identical: %s; zero weights -> zero loss, unchanged params: %s; "
                  "monotonicity violations %d / 1000",
                  identical ? "yes" : "no", zero_loss ? "yes" : "no", violations)};
}

Outcome oracles() {
  std::mt19937_64 rng(99);
  int warp_mismatch = 0;
  for (int t = 0; t < 100; ++t) {
    const Dims d{6, 6, 6};
    const auto v = oracle::random_volume(rng, d, 1 + t % 3);
    const auto u = oracle::random_field(rng, d, 3.0);
    if (!(warp(v, u) == oracle::naive_warp(v, u))) ++warp_mismatch;
  }
  double worst = 0.0;
  std::uniform_real_distribution<double> dens(0.0, 1.0);
  for (int t = 0; t < 1000; ++t) {
    const Dims d{3 + t % 5, 4, 2 + t % 3};
    const auto a = oracle::random_mask(rng, d, 1, dens(rng));
    const auto b = oracle::random_mask(rng, d, 1, dens(rng));
    worst = std::max(worst, std::abs(dice(a, b, 0) - oracle::brute_dice(a, b, 0)));
  }
  const bool ok = warp_mismatch == 0 && worst <= 1e-12;
  return {ok, fmt("warp mismatches %d / 100 (6x6x6); worst Dice discrepancy %.1e over 1000 masks (<= 1e-12)",
                  warp_mismatch, worst)};
}

Outcome determinism() {
  TempDir dir("tp_accept");
  std::ostringstream log;
  std::vector<std::string> files{"ablation.csv", "eval/baseline.csv", "eval/rpa.csv", "eval/rpa_ure.csv"};
  std::vector<std::string> runs[2];
  for (int i = 0; i < 2; ++i) {
    const auto cfg = acceptance_config(dir.path() / ("ws" + std::to_string(i)));
    cmd_pipeline(cfg, log);
    for (const auto& f : files) runs[i].push_back(slurp(cfg.workspace / f));
  }
  int differ = 0;
  for (std::size_t k = 0; k < files.size(); ++k) differ += runs[0][k] != runs[1][k] || runs[0][k].empty();
  return {differ == 0, fmt("%d of %zu CSV files differ between two runs", differ, files.size())};
}

Outcome count() {
  TempDir dir("tp_accept");
  const auto cfg = acceptance_config(dir.path() / "ws");
  std::ostringstream log;
  cmd_phantom(cfg, log);
  const auto unlabeled = load_cohort(WorkspaceLayout{cfg.workspace}).unlabeled.size();
  const auto made = cmd_stage1(cfg, log);
  const auto listed = load_pseudo_dataset(WorkspaceLayout{cfg.workspace}).peaks.size();
  const bool ok = unlabeled == 10 && made == unlabeled && listed == unlabeled;
  return {ok, fmt("%zu pseudo subjects (%zu in manifest) from %zu unlabeled", made, listed, unlabeled)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"ablation", ablation},     {"registration", registration},   {"gradients", gradients},
      {"ure", ure},               {"weighted-loss", weighted_loss}, {"oracles", oracles},
      {"determinism", determinism}, {"count", count}};

  std::vector<std::string> selected(argv + 1, argv + argc);
  if (selected.empty()) {
    for (const auto& c : criteria) selected.push_back(c.first);
  }
  int failures = 0;
  for (const auto& name : selected) {
    const auto it = std::find_if(criteria.begin(), criteria.end(), [&](const auto& c) { return c.first == name; });
    if (it == criteria.end()) {
      std::printf("FAIL %s: unknown criterion\n", name.c_str());
      ++failures;
      continue;
    }
    Outcome o;
    try {
      o = it->second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
