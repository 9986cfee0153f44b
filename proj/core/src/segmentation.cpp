#include "tractpipe/segmentation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include <json.hpp>

#include "binary_io.hpp"

namespace tractpipe {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr float kProbFloor = std::numeric_limits<float>::min();
const float kProbCeil = std::nextafter(1.0f, 0.0f);

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Stored probabilities stay strictly inside (0, 1) after rounding to f32.
float to_open_unit(double p) { return std::clamp(static_cast<float>(p), kProbFloor, kProbCeil); }

double clipped_bce(double p, std::uint8_t label) {
  const double q = std::clamp(p, kProbClip, 1.0 - kProbClip);
  return label ? -std::log(q) : -std::log(1.0 - q);
}

struct Layout {
  std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0, total = 0;
};

Layout layout_of(int input, int hidden, int classes) {
  Layout l;
  const auto p = static_cast<std::size_t>(input);
  const auto h = static_cast<std::size_t>(hidden);
  const auto n = static_cast<std::size_t>(classes);
  l.w1 = 0;
  l.b1 = p * h;
  l.w2 = l.b1 + h;
  l.b2 = l.w2 + n * h;
  l.total = l.b2 + n;
  return l;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// PatchMlp

PatchMlp::PatchMlp(int patch_radius, int channels, int hidden, int classes, int coord_features)
    : patch_radius_(patch_radius),
      channels_(channels),
      hidden_(hidden),
      classes_(classes),
      coord_features_(coord_features) {
  if (patch_radius < 0 || channels <= 0 || hidden <= 0 || classes <= 0) {
    throw ConfigError("PatchMlp: radius must be >= 0 and channels/hidden/classes > 0");
  }
  if (coord_features != 0 && coord_features != 3) {
    throw ConfigError("PatchMlp: coord_features must be 0 or 3");
  }
  params_.assign(parameter_count(patch_radius, channels, hidden, classes, coord_features), 0.0);
}

std::size_t PatchMlp::parameter_count(int patch_radius, int channels, int hidden, int classes,
                                      int coord_features) {
  const auto side = static_cast<std::size_t>(2 * patch_radius + 1);
  const std::size_t input = side * side * static_cast<std::size_t>(channels) +
                            static_cast<std::size_t>(coord_features);
  return (input + 1) * static_cast<std::size_t>(hidden) +
         (static_cast<std::size_t>(hidden) + 1) * static_cast<std::size_t>(classes);
}

PatchMlp PatchMlp::initialized(int patch_radius, int channels, int hidden, int classes,
                               std::uint64_t seed, int coord_features) {
  PatchMlp m(patch_radius, channels, hidden, classes, coord_features);
  m.seed_ = seed;
  std::mt19937_64 rng(seed);
  const Layout l = layout_of(m.input_size(), hidden, classes);
  std::normal_distribution<double> first(0.0, std::sqrt(2.0 / m.input_size()));
  std::normal_distribution<double> second(0.0, std::sqrt(1.0 / hidden));
  for (std::size_t i = l.w1; i < l.b1; ++i) m.params_[i] = first(rng);
  for (std::size_t i = l.w2; i < l.b2; ++i) m.params_[i] = second(rng);
  return m;
}

std::uint64_t PatchMlp::checksum() const {
  std::uint64_t h = 14695981039346656037ull;
  for (double v : params_) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 1099511628211ull;
    }
  }
  return h;
}

void PatchMlp::logits(std::span<const double> features, std::span<double> out) const {
  const Layout l = layout_of(input_size(), hidden_, classes_);
  const auto p = static_cast<std::size_t>(input_size());
  const auto h = static_cast<std::size_t>(hidden_);
  const double* w1 = params_.data() + l.w1;
  const double* b1 = params_.data() + l.b1;
  const double* w2 = params_.data() + l.w2;
  const double* b2 = params_.data() + l.b2;
  std::array<double, 512> stack_hidden{};
  std::vector<double> heap_hidden;
  double* act = stack_hidden.data();
  if (h > stack_hidden.size()) {
    heap_hidden.resize(h);
    act = heap_hidden.data();
  }
  for (std::size_t j = 0; j < h; ++j) {
    double s = b1[j];
    const double* row = w1 + j * p;
    for (std::size_t i = 0; i < p; ++i) s += row[i] * features[i];
    act[j] = s > 0.0 ? s : 0.0;
  }
  for (std::size_t k = 0; k < static_cast<std::size_t>(classes_); ++k) {
    double s = b2[k];
    const double* row = w2 + k * h;
    for (std::size_t j = 0; j < h; ++j) s += row[j] * act[j];
    out[k] = s;
  }
}

void PatchMlp::probabilities(std::span<const double> features, std::span<double> out) const {
  logits(features, out);
  for (auto& v : out) v = sigmoid(v);
}

void gather_patch(const Slice2D& slice, int u, int v, int radius, std::span<double> out) {
  std::size_t o = 0;
  for (int dv = -radius; dv <= radius; ++dv) {
    const int vv = std::clamp(v + dv, 0, slice.height - 1);
    for (int du = -radius; du <= radius; ++du) {
      const int uu = std::clamp(u + du, 0, slice.width - 1);
      const std::size_t base = slice.offset(uu, vv);
      for (int c = 0; c < slice.channels; ++c) out[o++] = slice.data[base + static_cast<std::size_t>(c)];
    }
  }
}

void PatchMlp::gather_features(const Slice2D& slice, int u, int v, std::span<double> out) const {
  const auto patch = static_cast<std::size_t>(patch_size());
  gather_patch(slice, u, v, patch_radius_, out.first(patch));
  if (coord_features_ == 0) return;
  const auto axes = in_plane_axes(slice.plane);
  const int extent[3] = {slice.width, slice.height, slice.depth};
  const int coord[3] = {u, v, slice.index};
  const int axis[3] = {axes[0], axes[1], normal_axis(slice.plane)};
  for (int i = 0; i < 3; ++i) {
    const double n = extent[i] > 1 ? 2.0 * coord[i] / (extent[i] - 1) - 1.0 : 0.0;
    out[patch + static_cast<std::size_t>(axis[i])] = n;
  }
}

SliceProbabilities PatchMlp::forward_slice(const Slice2D& slice) const {
  if (slice.channels != channels_) {
    throw ShapeError("forward_slice: slice has " + std::to_string(slice.channels) +
                     " channels, model expects " + std::to_string(channels_));
  }
  SliceProbabilities out;
  out.width = slice.width;
  out.height = slice.height;
  out.classes = classes_;
  out.probs.resize(static_cast<std::size_t>(slice.width) * static_cast<std::size_t>(slice.height) *
                   static_cast<std::size_t>(classes_));
  std::vector<double> features(static_cast<std::size_t>(input_size()));
  std::vector<double> probs(static_cast<std::size_t>(classes_));
  std::size_t o = 0;
  for (int v = 0; v < slice.height; ++v) {
    for (int u = 0; u < slice.width; ++u) {
      gather_features(slice, u, v, features);
      probabilities(features, probs);
      for (double p : probs) out.probs[o++] = to_open_unit(p);
    }
  }
  return out;
}

fs::path model_header_path(const fs::path& base) { return base.string() + ".model.json"; }
fs::path model_payload_path(const fs::path& base) { return base.string() + ".model.bin"; }

void save_model(const PatchMlp& model, const fs::path& base) {
  json h;
  h["architecture"] = "patch_mlp";
  h["patch_radius"] = model.patch_radius();
  h["channels"] = model.input_channels();
  h["hidden"] = model.hidden();
  h["classes"] = model.classes();
  h["coord_features"] = model.coord_features();
  h["seed"] = model.seed();
  h["parameter_count"] = model.parameters().size();
  h["dtype"] = "f64";
  h["checksum"] = hex64(model.checksum());
  detail::write_text(model_header_path(base), h.dump(2) + "\n");
  detail::write_le<double>(model_payload_path(base), model.parameters());
}

PatchMlp load_model(const fs::path& base) {
  const auto header = model_header_path(base);
  if (!fs::exists(header)) throw IoError("model checkpoint not found: " + header.string());
  json h;
  try {
    h = json::parse(detail::read_text(header));
  } catch (const json::exception& e) {
    throw FormatError("malformed model header " + header.string() + ": " + e.what());
  }
  try {
    if (h.at("architecture").get<std::string>() != "patch_mlp") {
      throw FormatError("unsupported architecture in " + header.string());
    }
    if (h.at("dtype").get<std::string>() != "f64") throw FormatError("unsupported model dtype");
    auto model = PatchMlp::initialized(h.at("patch_radius").get<int>(), h.at("channels").get<int>(),
                                       h.at("hidden").get<int>(), h.at("classes").get<int>(),
                                       h.at("seed").get<std::uint64_t>(),
                                       h.value("coord_features", 0));
    if (h.at("parameter_count").get<std::size_t>() != model.parameters().size()) {
      throw FormatError("parameter_count disagrees with architecture in " + header.string());
    }
    const auto values = detail::read_le<double>(model_payload_path(base), model.parameters().size());
    std::copy(values.begin(), values.end(), model.parameters().begin());
    if (h.contains("checksum") && h["checksum"].get<std::string>() != hex64(model.checksum())) {
      throw FormatError("checksum mismatch for " + header.string());
    }
    return model;
  } catch (const json::exception& e) {
    throw FormatError("malformed model header " + header.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Losses

std::vector<double> bce_terms(std::span<const float> probs, std::span<const std::uint8_t> labels) {
  if (probs.size() != labels.size()) throw ShapeError("bce: prediction/label length mismatch");
  std::vector<double> terms(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) terms[i] = clipped_bce(probs[i], labels[i]);
  return terms;
}

double bce_loss(std::span<const float> probs, std::span<const std::uint8_t> labels, int classes) {
  if (classes <= 0 || probs.empty() || probs.size() % static_cast<std::size_t>(classes) != 0) {
    throw ShapeError("bce_loss: length is not a positive multiple of the class count");
  }
  const auto terms = bce_terms(probs, labels);
  const auto n = static_cast<std::size_t>(classes);
  const std::size_t voxels = terms.size() / n;
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double per_class = 0.0;
    for (std::size_t v = 0; v < voxels; ++v) per_class += terms[v * n + k];
    total += per_class / static_cast<double>(voxels);
  }
  return total / static_cast<double>(n);
}

double bce_loss(const Prediction& pred, const LabelVolume& labels) {
  require_same_shape(pred.dims(), pred.channels(), labels.dims(), labels.channels(), "bce_loss");
  return bce_loss(pred.data(), labels.data(), pred.channels());
}

// ---------------------------------------------------------------------------
// Training

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("train.learning_rate must be > 0");
  }
  if (epochs <= 0) throw ConfigError("train.epochs must be > 0");
  if (batch_voxels <= 0) throw ConfigError("train.batch_voxels must be > 0");
  if (steps_per_epoch <= 0) throw ConfigError("train.steps_per_epoch must be > 0");
}

double batch_loss_and_gradient(const PatchMlp& model, const TrainingBatch& batch,
                               std::span<double> grad) {
  const auto p = static_cast<std::size_t>(model.input_size());
  const auto h = static_cast<std::size_t>(model.hidden());
  const auto n = static_cast<std::size_t>(model.classes());
  if (batch.input_size != model.input_size() || batch.classes != model.classes()) {
    throw ShapeError("batch shape does not match model");
  }
  const std::size_t samples = batch.samples();
  if (samples == 0 || batch.features.size() != samples * p || batch.weights.size() != samples * n) {
    throw ShapeError("malformed training batch");
  }
  const Layout l = layout_of(model.input_size(), model.hidden(), model.classes());
  if (grad.size() != l.total) throw ShapeError("gradient buffer has wrong length");
  std::fill(grad.begin(), grad.end(), 0.0);

  const auto params = model.parameters();
  const double* w1 = params.data() + l.w1;
  const double* b1 = params.data() + l.b1;
  const double* w2 = params.data() + l.w2;
  const double* b2 = params.data() + l.b2;
  double* gw1 = grad.data() + l.w1;
  double* gb1 = grad.data() + l.b1;
  double* gw2 = grad.data() + l.w2;
  double* gb2 = grad.data() + l.b2;

  std::vector<double> pre(h), act(h), dz(n), dh(h);
  const double norm = 1.0 / static_cast<double>(samples * n);
  double loss = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const double* x = batch.features.data() + s * p;
    for (std::size_t j = 0; j < h; ++j) {
      double acc = b1[j];
      const double* row = w1 + j * p;
      for (std::size_t i = 0; i < p; ++i) acc += row[i] * x[i];
      pre[j] = acc;
      act[j] = acc > 0.0 ? acc : 0.0;
    }
    for (std::size_t k = 0; k < n; ++k) {
      double z = b2[k];
      const double* row = w2 + k * h;
      for (std::size_t j = 0; j < h; ++j) z += row[j] * act[j];
      const double prob = sigmoid(z);
      const std::uint8_t label = batch.labels[s * n + k];
      const double w = batch.weights[s * n + k];
      loss += w * clipped_bce(prob, label);
      // d(clipped BCE)/dz is (p - l) inside the clip range and 0 outside it.
      const bool inside = prob > kProbClip && prob < 1.0 - kProbClip;
      dz[k] = inside ? w * (prob - static_cast<double>(label)) * norm : 0.0;
    }
    std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      if (dz[k] == 0.0) continue;
      const double* row = w2 + k * h;
      double* grow = gw2 + k * h;
      for (std::size_t j = 0; j < h; ++j) {
        grow[j] += dz[k] * act[j];
        dh[j] += dz[k] * row[j];
      }
      gb2[k] += dz[k];
    }
    for (std::size_t j = 0; j < h; ++j) {
      if (pre[j] <= 0.0 || dh[j] == 0.0) continue;
      double* grow = gw1 + j * p;
      for (std::size_t i = 0; i < p; ++i) grow[i] += dh[j] * x[i];
      gb1[j] += dh[j];
    }
  }
  return loss * norm;
}

double batch_loss(const PatchMlp& model, const TrainingBatch& batch) {
  const auto n = static_cast<std::size_t>(model.classes());
  const std::size_t samples = batch.samples();
  if (batch.input_size != model.input_size() || batch.classes != model.classes() || samples == 0) {
    throw ShapeError("batch shape does not match model");
  }
  std::vector<double> probs(n);
  double loss = 0.0;
  const auto p = static_cast<std::size_t>(model.input_size());
  for (std::size_t s = 0; s < samples; ++s) {
    model.probabilities(std::span<const double>(batch.features.data() + s * p, p), probs);
    for (std::size_t k = 0; k < n; ++k) {
      loss += batch.weights[s * n + k] * clipped_bce(probs[k], batch.labels[s * n + k]);
    }
  }
  return loss / static_cast<double>(samples * n);
}

TrainResult train(PatchMlp model, std::span<const TrainingSubject> dataset, const TrainConfig& cfg) {
  cfg.validate();
  if (dataset.empty()) throw ConfigError("train: empty dataset");
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& s = dataset[i];
    if (s.peaks == nullptr || s.labels == nullptr) throw ConfigError("train: subject without data");
    if (s.peaks->channels() != model.input_channels()) {
      throw ShapeError("train: subject " + std::to_string(i) + " channel count differs from model");
    }
    require_same_shape(s.labels->dims(), s.labels->channels(), s.peaks->dims(), model.classes(),
                       "train labels");
    if (s.weights != nullptr) {
      require_same_shape(s.weights->dims(), s.weights->channels(), s.labels->dims(),
                         s.labels->channels(), "train weights");
    }
  }

  // Slices are extracted once; sampling then indexes (subject, plane, slice, pixel).
  std::vector<std::array<std::vector<Slice2D>, 3>> slices(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (PlaneAxis plane : kAllPlanes) {
      slices[i][static_cast<std::size_t>(plane)] = extract_slices(*dataset[i].peaks, plane);
    }
  }

  const auto n = static_cast<std::size_t>(model.classes());
  const auto p = static_cast<std::size_t>(model.input_size());
  const auto batch_size = static_cast<std::size_t>(cfg.batch_voxels);
  TrainingBatch batch;
  batch.input_size = model.input_size();
  batch.classes = model.classes();
  batch.features.resize(batch_size * p);
  batch.labels.resize(batch_size * n);
  batch.weights.resize(batch_size * n);
  std::vector<double> grad(model.parameters().size());

  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<int> pick_subject(0, static_cast<int>(dataset.size()) - 1);
  std::uniform_int_distribution<int> pick_plane(0, 2);

  TrainResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double epoch_sum = 0.0;
    for (int step = 0; step < cfg.steps_per_epoch; ++step) {
      for (std::size_t b = 0; b < batch_size; ++b) {
        const auto si = static_cast<std::size_t>(pick_subject(rng));
        const auto plane = static_cast<PlaneAxis>(pick_plane(rng));
        const auto& plane_slices = slices[si][static_cast<std::size_t>(plane)];
        const int index =
            std::uniform_int_distribution<int>(0, static_cast<int>(plane_slices.size()) - 1)(rng);
        const Slice2D& slice = plane_slices[static_cast<std::size_t>(index)];
        const int u = std::uniform_int_distribution<int>(0, slice.width - 1)(rng);
        const int v = std::uniform_int_distribution<int>(0, slice.height - 1)(rng);
        model.gather_features(slice, u, v, std::span<double>(batch.features.data() + b * p, p));
        const auto voxel = slice_to_voxel(plane, index, u, v);
        const auto labels = dataset[si].labels->voxel(voxel[0], voxel[1], voxel[2]);
        std::copy(labels.begin(), labels.end(), batch.labels.begin() + static_cast<std::ptrdiff_t>(b * n));
        if (dataset[si].weights != nullptr) {
          const auto w = dataset[si].weights->voxel(voxel[0], voxel[1], voxel[2]);
          std::copy(w.begin(), w.end(), batch.weights.begin() + static_cast<std::ptrdiff_t>(b * n));
        } else {
          std::fill_n(batch.weights.begin() + static_cast<std::ptrdiff_t>(b * n), n, 1.0);
        }
      }
      const double loss = batch_loss_and_gradient(model, batch, grad);
      if (!std::isfinite(loss)) throw NumericalError("train: non-finite loss");
      auto params = model.parameters();
      for (std::size_t i = 0; i < params.size(); ++i) params[i] -= cfg.learning_rate * grad[i];
      epoch_sum += loss;
    }
    result.epoch_loss.push_back(epoch_sum / cfg.steps_per_epoch);
  }
  result.model = std::move(model);
  return result;
}

// ---------------------------------------------------------------------------
// Inference

Prediction mean_of_planes(const RealVolume& a, const RealVolume& b, const RealVolume& c) {
  require_same_shape(a.dims(), a.channels(), b.dims(), b.channels(), "mean_of_planes");
  require_same_shape(a.dims(), a.channels(), c.dims(), c.channels(), "mean_of_planes");
  Prediction out(a.dims(), a.channels());
  auto dst = out.data();
  const auto pa = a.data();
  const auto pb = b.data();
  const auto pc = c.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    std::array<float, 3> v{pa[i], pb[i], pc[i]};
    std::sort(v.begin(), v.end());
    const double mean = (static_cast<double>(v[0]) + v[1] + v[2]) / 3.0;
    dst[i] = static_cast<float>(mean);
  }
  return out;
}

RealVolume predict_plane(const SliceClassifier& model, const RealVolume& vol, PlaneAxis plane) {
  if (vol.channels() != model.input_channels()) {
    throw ShapeError("predict: volume has " + std::to_string(vol.channels()) +
                     " channels, model expects " + std::to_string(model.input_channels()));
  }
  const auto slices = extract_slices(vol, plane);
  std::vector<Slice2D> out;
  out.reserve(slices.size());
  for (const auto& s : slices) {
    auto probs = model.forward_slice(s);
    Slice2D ps;
    ps.plane = plane;
    ps.index = s.index;
    ps.width = probs.width;
    ps.height = probs.height;
    ps.channels = probs.classes;
    ps.depth = s.depth;
    ps.data = std::move(probs.probs);
    out.push_back(std::move(ps));
  }
  return assemble_slices(out, plane);
}

Prediction predict_subject(const SliceClassifier& model, const RealVolume& vol) {
  return mean_of_planes(predict_plane(model, vol, PlaneAxis::Sagittal),
                        predict_plane(model, vol, PlaneAxis::Coronal),
                        predict_plane(model, vol, PlaneAxis::Axial));
}

LabelVolume binarize(const Prediction& pred, double threshold) {
  LabelVolume out(pred.dims(), pred.channels());
  auto dst = out.data();
  const auto src = pred.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] >= threshold ? 1 : 0;
  return out;
}

}  // namespace tractpipe
