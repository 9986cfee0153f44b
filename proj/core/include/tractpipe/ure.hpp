#pragma once

#include <span>

#include "tractpipe/segmentation.hpp"

namespace tractpipe {

// Per-voxel, per-class confidence weights in [0, 1]; X x Y x Z x N.
using UncertaintyMap = RealVolume;

// Confidence of a prediction value z: 2z - 1 above 0.5, 1 - 2z otherwise
// (so exactly 0 at z = 0.5 and 1 at the endpoints).
constexpr double uncertainty_transform(double z) { return z > 0.5 ? 2.0 * z - 1.0 : 1.0 - 2.0 * z; }

UncertaintyMap uncertainty_transform(const Prediction& z);

// Tri-planar prediction of the frozen model on a pseudo subject, mapped through
// uncertainty_transform. The model is taken by const reference and its
// checksum is compared before and after; a mismatch throws.
UncertaintyMap uncertainty_map_for_subject(const PatchMlp& model_a, const RealVolume& pseudo_peaks);

// BCE terms multiplied elementwise by `weights` before the usual reduction
// (mean over classes of per-class voxel means).
double weighted_bce_loss(std::span<const float> probs, std::span<const std::uint8_t> labels,
                         std::span<const float> weights, int classes);
double weighted_bce_loss(const Prediction& pred, const LabelVolume& labels,
                         const UncertaintyMap& weights);

}  // namespace tractpipe
