#include "tractpipe/ure.hpp"

namespace tractpipe {

UncertaintyMap uncertainty_transform(const Prediction& z) {
  UncertaintyMap um(z.dims(), z.channels());
  auto dst = um.data();
  const auto src = z.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = static_cast<float>(uncertainty_transform(static_cast<double>(src[i])));
  }
  return um;
}

UncertaintyMap uncertainty_map_for_subject(const PatchMlp& model_a, const RealVolume& pseudo_peaks) {
  const auto before = model_a.checksum();
  auto um = uncertainty_transform(predict_subject(model_a, pseudo_peaks));
  if (model_a.checksum() != before) throw Error("frozen model changed during uncertainty mapping");
  return um;
}

double weighted_bce_loss(std::span<const float> probs, std::span<const std::uint8_t> labels,
                         std::span<const float> weights, int classes) {
  if (weights.size() != probs.size()) throw ShapeError("weighted_bce_loss: weight length mismatch");
  if (classes <= 0 || probs.empty() || probs.size() % static_cast<std::size_t>(classes) != 0) {
    throw ShapeError("weighted_bce_loss: length is not a positive multiple of the class count");
  }
  const auto terms = bce_terms(probs, labels);
  const auto n = static_cast<std::size_t>(classes);
  const std::size_t voxels = terms.size() / n;
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double per_class = 0.0;
    for (std::size_t v = 0; v < voxels; ++v) {
      per_class += static_cast<double>(weights[v * n + k]) * terms[v * n + k];
    }
    total += per_class / static_cast<double>(voxels);
  }
  return total / static_cast<double>(n);
}

double weighted_bce_loss(const Prediction& pred, const LabelVolume& labels,
                         const UncertaintyMap& weights) {
  require_same_shape(pred.dims(), pred.channels(), labels.dims(), labels.channels(),
                     "weighted_bce_loss");
  require_same_shape(pred.dims(), pred.channels(), weights.dims(), weights.channels(),
                     "weighted_bce_loss");
  return weighted_bce_loss(pred.data(), labels.data(), weights.data(), pred.channels());
}

}  // namespace tractpipe
