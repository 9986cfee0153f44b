#include "tractpipe/rpa.hpp"

#include "tractpipe/parallel.hpp"

namespace tractpipe {

std::string index_tag(std::size_t i) {
  std::string s = std::to_string(i);
  return s.size() >= 3 ? s : std::string(3 - s.size(), '0') + s;
}

PseudoSubject synthesize_pseudo_pair(const LabeledSubject& labeled, const UnlabeledSubject& unlabeled,
                                     const RegistrationConfig& cfg,
                                     const std::optional<std::filesystem::path>& field_base) {
  require_same_grid(labeled.peaks.dims(), labeled.labels.dims(), "labeled subject");
  require_same_shape(labeled.peaks.dims(), labeled.peaks.channels(), unlabeled.peaks.dims(),
                     unlabeled.peaks.channels(), "synthesize_pseudo_pair");

  auto reg = optimize_registration(labeled.peaks, unlabeled.peaks, cfg);
  PseudoSubject out;
  out.peaks = warp(labeled.peaks, reg.field);
  out.labels = warp_labels(labeled.labels, reg.field);
  out.source_unlabeled_id = unlabeled.id;
  if (field_base) {
    save_field(reg.field, *field_base);
    out.field_path = field_base->string();
  }
  out.field = std::move(reg.field);
  out.loss_trace = std::move(reg.loss_trace);
  return out;
}

std::vector<PseudoSubject> build_pseudo_dataset(const LabeledSubject& labeled,
                                                std::span<const UnlabeledSubject> unlabeled,
                                                const RegistrationConfig& cfg, int jobs,
                                                const std::optional<std::filesystem::path>& field_dir) {
  if (unlabeled.empty()) throw ConfigError("build_pseudo_dataset: empty unlabeled set");
  cfg.validate();
  std::vector<PseudoSubject> out(unlabeled.size());
  parallel_for(unlabeled.size(), jobs, [&](std::size_t i) {
    std::optional<std::filesystem::path> base;
    if (field_dir) base = *field_dir / ("field_" + index_tag(i));
    out[i] = synthesize_pseudo_pair(labeled, unlabeled[i], cfg, base);
  });
  return out;
}

}  // namespace tractpipe
