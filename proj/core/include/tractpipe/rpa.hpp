#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tractpipe/registration.hpp"
#include "tractpipe/volume.hpp"

namespace tractpipe {

// Zero-padded (width 3) index used in per-subject artifact names.
std::string index_tag(std::size_t i);

// The single annotated subject {x, l}.
struct LabeledSubject {
  std::string id;
  RealVolume peaks;
  LabelVolume labels;
};

struct UnlabeledSubject {
  std::string id;
  RealVolume peaks;
};

// {x o phi, l o phi} for one unlabeled subject.
struct PseudoSubject {
  RealVolume peaks;
  LabelVolume labels;
  std::string source_unlabeled_id;
  // Where the field was persisted; empty if it was not written.
  std::string field_path;
  DisplacementField field;
  std::vector<double> loss_trace;
};

/// Registers the labeled subject (moving) onto `unlabeled` and warps both its
/// peaks and labels with the resulting field. If `field_base` is given the
/// field is persisted there in the volume format.
PseudoSubject synthesize_pseudo_pair(const LabeledSubject& labeled, const UnlabeledSubject& unlabeled,
                                     const RegistrationConfig& cfg,
                                     const std::optional<std::filesystem::path>& field_base = {});

/// One pseudo subject per unlabeled subject, in input order. Registrations
/// run on up to `jobs` threads; results do not depend on the job count.
/// Fields go to `field_dir/field_NNN` (NNN = position in `unlabeled`).
std::vector<PseudoSubject> build_pseudo_dataset(
    const LabeledSubject& labeled, std::span<const UnlabeledSubject> unlabeled,
    const RegistrationConfig& cfg, int jobs = 1,
    const std::optional<std::filesystem::path>& field_dir = {});

}  // namespace tractpipe
