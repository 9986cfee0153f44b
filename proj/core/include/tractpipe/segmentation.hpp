#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tractpipe/volume.hpp"

namespace tractpipe {

// Probabilities are clipped to [kProbClip, 1 - kProbClip] inside every BCE.
inline constexpr double kProbClip = 1e-7;

// Per-voxel, per-class probabilities in (0, 1); X x Y x Z x N.
using Prediction = RealVolume;

// Per-pixel N-class probability map for one slice (class-fastest, then u, v).
struct SliceProbabilities {
  int width = 0;
  int height = 0;
  int classes = 0;
  std::vector<float> probs;
};

/// Anything that maps a 2D multi-channel slice to per-pixel class
/// probabilities. Tri-planar prediction only needs this interface.
class SliceClassifier {
 public:
  virtual ~SliceClassifier() = default;
  [[nodiscard]] virtual int input_channels() const = 0;
  [[nodiscard]] virtual int classes() const = 0;
  [[nodiscard]] virtual SliceProbabilities forward_slice(const Slice2D& slice) const = 0;
};

/// Two-layer perceptron over the clamped (2r+1)x(2r+1) in-plane patch:
/// input -> H (ReLU) -> N (sigmoid). One shared model serves all three planes.
///
/// With `coord_features` = 3 the voxel position of the pixel, normalized to
/// [-1, 1] per axis, is appended to the patch (a whole-slice network sees
/// where it is; a bare patch does not).
///
/// Parameter layout: W1 (H rows of P inputs), b1 (H), W2 (N rows of H), b2 (N),
/// where P = (2r+1)^2 * C + coord_features.
class PatchMlp final : public SliceClassifier {
 public:
  PatchMlp() = default;
  PatchMlp(int patch_radius, int channels, int hidden, int classes, int coord_features = 0);

  // He-style random initialization; biases start at zero.
  static PatchMlp initialized(int patch_radius, int channels, int hidden, int classes,
                              std::uint64_t seed, int coord_features = 0);

  [[nodiscard]] int patch_radius() const { return patch_radius_; }
  [[nodiscard]] int input_channels() const override { return channels_; }
  [[nodiscard]] int hidden() const { return hidden_; }
  [[nodiscard]] int classes() const override { return classes_; }
  [[nodiscard]] int coord_features() const { return coord_features_; }
  [[nodiscard]] int patch_size() const {
    return (2 * patch_radius_ + 1) * (2 * patch_radius_ + 1) * channels_;
  }
  [[nodiscard]] int input_size() const { return patch_size() + coord_features_; }
  [[nodiscard]] std::uint64_t seed() const { return seed_; }

  static std::size_t parameter_count(int patch_radius, int channels, int hidden, int classes,
                                     int coord_features = 0);

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  // FNV-1a over the parameter bytes.
  [[nodiscard]] std::uint64_t checksum() const;

  // Class logits / probabilities for one feature vector (length input_size()).
  void logits(std::span<const double> features, std::span<double> out) const;
  void probabilities(std::span<const double> features, std::span<double> out) const;

  // Full input vector for pixel (u, v) of `slice` (length input_size()).
  void gather_features(const Slice2D& slice, int u, int v, std::span<double> out) const;

  [[nodiscard]] SliceProbabilities forward_slice(const Slice2D& slice) const override;

  bool operator==(const PatchMlp& o) const {
    return patch_radius_ == o.patch_radius_ && channels_ == o.channels_ && hidden_ == o.hidden_ &&
           classes_ == o.classes_ && coord_features_ == o.coord_features_ && seed_ == o.seed_ &&
           params_ == o.params_;
  }

 private:
  int patch_radius_ = 0;
  int channels_ = 0;
  int hidden_ = 0;
  int classes_ = 0;
  int coord_features_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<double> params_;
};

// Gathers the clamped in-plane patch around (u, v), ordered (du, dv, channel)
// with channel fastest. `out` must hold (2r+1)^2 * channels values.
void gather_patch(const Slice2D& slice, int u, int v, int radius, std::span<double> out);

// Model checkpoint: `<base>.model.json` (architecture, seed, class count,
// checksum) + `<base>.model.bin` (little-endian f64 parameters).
void save_model(const PatchMlp& model, const std::filesystem::path& base);
PatchMlp load_model(const std::filesystem::path& base);
std::filesystem::path model_header_path(const std::filesystem::path& base);
std::filesystem::path model_payload_path(const std::filesystem::path& base);

// ---------------------------------------------------------------------------
// Losses. Arrays are voxel-major with the class index fastest; the loss is the
// mean over classes of the per-class mean over voxels, which equals the plain
// mean over all elements.

double bce_loss(std::span<const float> probs, std::span<const std::uint8_t> labels, int classes);
double bce_loss(const Prediction& pred, const LabelVolume& labels);

// Per-element clipped BCE terms, before reduction.
std::vector<double> bce_terms(std::span<const float> probs, std::span<const std::uint8_t> labels);

// ---------------------------------------------------------------------------
// Training.

struct TrainConfig {
  double learning_rate = 0.3;
  int epochs = 50;
  int batch_voxels = 64;
  // Mini-batches per epoch; an epoch is a fixed number of optimizer steps.
  int steps_per_epoch = 100;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainingBatch {
  int input_size = 0;
  int classes = 0;
  std::vector<double> features;      // samples x input_size
  std::vector<std::uint8_t> labels;  // samples x classes
  std::vector<double> weights;       // samples x classes

  [[nodiscard]] std::size_t samples() const {
    return classes == 0 ? 0 : labels.size() / static_cast<std::size_t>(classes);
  }
};

// Weighted BCE of a batch (mean over samples x classes), with the gradient
// with respect to every model parameter written into `grad`.
double batch_loss_and_gradient(const PatchMlp& model, const TrainingBatch& batch,
                               std::span<double> grad);
double batch_loss(const PatchMlp& model, const TrainingBatch& batch);

struct TrainingSubject {
  const RealVolume* peaks = nullptr;
  const LabelVolume* labels = nullptr;
  // Optional per-voxel, per-class loss weights (X x Y x Z x N); null = unit.
  const RealVolume* weights = nullptr;
};

struct TrainResult {
  PatchMlp model;
  std::vector<double> epoch_loss;
};

/// Mini-batch SGD on the (optionally weighted) BCE. Each sample is drawn
/// uniformly over (subject, plane, slice, pixel) from a generator seeded with
/// cfg.seed, so the run is a pure function of its inputs.
TrainResult train(PatchMlp model, std::span<const TrainingSubject> dataset, const TrainConfig& cfg);

// ---------------------------------------------------------------------------
// Inference.

// Voxelwise mean of the three per-plane probability volumes. The three values
// are summed in ascending order so the result does not depend on which plane
// comes first.
Prediction mean_of_planes(const RealVolume& a, const RealVolume& b, const RealVolume& c);

// Predicts every slice of one plane and reassembles the 3D probability volume.
RealVolume predict_plane(const SliceClassifier& model, const RealVolume& vol, PlaneAxis plane);

// Tri-planar prediction: mean of the sagittal, coronal and axial volumes.
Prediction predict_subject(const SliceClassifier& model, const RealVolume& vol);

LabelVolume binarize(const Prediction& pred, double threshold);

}  // namespace tractpipe
