#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tractpipe/error.hpp"

namespace tractpipe {

// Voxel grid extents. Axis 0 is x, 1 is y, 2 is z.
struct Dims {
  int x = 0;
  int y = 0;
  int z = 0;

  [[nodiscard]] std::size_t voxels() const {
    return static_cast<std::size_t>(x) * static_cast<std::size_t>(y) *
           static_cast<std::size_t>(z);
  }
  [[nodiscard]] int extent(int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  [[nodiscard]] bool valid() const { return x > 0 && y > 0 && z > 0; }

  bool operator==(const Dims&) const = default;
};

std::string to_string(const Dims& d);

using Vec3 = std::array<double, 3>;

/// Dense multi-channel 3D array.
///
/// Storage is channel-fastest, then x, then y, then z:
/// `index(x, y, z, c) = ((z * Y + y) * X + x) * C + c`. Every module relies on
/// this layout so raw buffers can be compared directly.
template <typename T>
class Volume {
 public:
  using value_type = T;

  Volume() = default;

  Volume(Dims dims, int channels, T fill = T{}) : dims_(dims), channels_(channels) {
    check_shape();
    data_.assign(dims_.voxels() * static_cast<std::size_t>(channels_), fill);
  }

  Volume(Dims dims, int channels, std::vector<T> data)
      : dims_(dims), channels_(channels), data_(std::move(data)) {
    check_shape();
    if (data_.size() != dims_.voxels() * static_cast<std::size_t>(channels_)) {
      throw ShapeError("volume data length " + std::to_string(data_.size()) +
                       " does not match " + to_string(dims_) + " x " +
                       std::to_string(channels_));
    }
  }

  [[nodiscard]] const Dims& dims() const { return dims_; }
  [[nodiscard]] int channels() const { return channels_; }
  [[nodiscard]] std::size_t size() const { return data_.size(); }
  [[nodiscard]] bool empty() const { return data_.empty(); }

  [[nodiscard]] std::size_t voxel_index(int x, int y, int z) const {
    return (static_cast<std::size_t>(z) * static_cast<std::size_t>(dims_.y) +
            static_cast<std::size_t>(y)) *
               static_cast<std::size_t>(dims_.x) +
           static_cast<std::size_t>(x);
  }
  [[nodiscard]] std::size_t index(int x, int y, int z, int c = 0) const {
    return voxel_index(x, y, z) * static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(c);
  }

  T& at(int x, int y, int z, int c = 0) { return data_[index(x, y, z, c)]; }
  const T& at(int x, int y, int z, int c = 0) const { return data_[index(x, y, z, c)]; }

  std::span<T> voxel(int x, int y, int z) {
    return {data_.data() + index(x, y, z), static_cast<std::size_t>(channels_)};
  }
  std::span<const T> voxel(int x, int y, int z) const {
    return {data_.data() + index(x, y, z), static_cast<std::size_t>(channels_)};
  }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  [[nodiscard]] bool same_grid(const Dims& other) const { return dims_ == other; }

  bool operator==(const Volume&) const = default;

 private:
  void check_shape() const {
    if (!dims_.valid() || channels_ <= 0) {
      throw ShapeError("invalid volume shape " + to_string(dims_) + " x " +
                       std::to_string(channels_));
    }
  }

  Dims dims_{};
  int channels_ = 0;
  std::vector<T> data_;
};

using RealVolume = Volume<float>;
using PeakVolume = RealVolume;
// One byte per element, values restricted to {0, 1}.
using LabelVolume = Volume<std::uint8_t>;

// Throws ShapeError unless both volumes share the grid (and, if requested, the
// channel count). `what` names the operation in the message.
void require_same_grid(const Dims& a, const Dims& b, const std::string& what);
void require_same_shape(const Dims& a, int ca, const Dims& b, int cb, const std::string& what);

bool is_binary(const LabelVolume& labels);

// ---------------------------------------------------------------------------
// Trilinear sampling with border clamping.

/// Interpolation stencil for one sampling location. Coordinates outside
/// [0, extent - 1] are clamped; `clamped[a]` records it so gradients through
/// that axis are zero.
struct TrilinearStencil {
  std::array<int, 3> lo{};
  std::array<int, 3> hi{};
  std::array<double, 3> frac{};
  std::array<bool, 3> clamped{};
};

TrilinearStencil make_stencil(const Dims& dims, const Vec3& point);

// Writes the per-channel interpolated value into `out` (size = channels).
void sample_trilinear(const RealVolume& vol, const Vec3& point, std::span<double> out);
std::vector<double> sample_trilinear(const RealVolume& vol, const Vec3& point);

// ---------------------------------------------------------------------------
// Tri-planar slicing.

enum class PlaneAxis : int { Sagittal = 0, Coronal = 1, Axial = 2 };

inline constexpr std::array<PlaneAxis, 3> kAllPlanes{PlaneAxis::Sagittal, PlaneAxis::Coronal,
                                                     PlaneAxis::Axial};

// Array axis normal to the plane: sagittal -> x, coronal -> y, axial -> z.
constexpr int normal_axis(PlaneAxis p) { return static_cast<int>(p); }

// In-plane (width, height) axes, in increasing axis order.
constexpr std::array<int, 2> in_plane_axes(PlaneAxis p) {
  switch (p) {
    case PlaneAxis::Sagittal:
      return {1, 2};
    case PlaneAxis::Coronal:
      return {0, 2};
    case PlaneAxis::Axial:
      break;
  }
  return {0, 1};
}

const char* plane_name(PlaneAxis p);

// Voxel coordinate of in-plane pixel (u, v) on slice `index`.
std::array<int, 3> slice_to_voxel(PlaneAxis plane, int index, int u, int v);

struct Slice2D {
  PlaneAxis plane = PlaneAxis::Sagittal;
  int index = 0;
  int width = 0;
  int height = 0;
  int channels = 0;
  // Number of slices along the normal axis (extent of the source volume).
  int depth = 0;
  // Channel-fastest, then u, then v.
  std::vector<float> data;

  [[nodiscard]] std::size_t offset(int u, int v) const {
    return (static_cast<std::size_t>(v) * static_cast<std::size_t>(width) +
            static_cast<std::size_t>(u)) *
           static_cast<std::size_t>(channels);
  }
  float at(int u, int v, int c) const { return data[offset(u, v) + static_cast<std::size_t>(c)]; }

  bool operator==(const Slice2D&) const = default;
};

Slice2D extract_slice(const RealVolume& vol, PlaneAxis plane, int index);
std::vector<Slice2D> extract_slices(const RealVolume& vol, PlaneAxis plane);

// Inverse of extract_slices. Throws ShapeError on empty input, non-contiguous
// indices, wrong plane, or inconsistent slice shapes.
RealVolume assemble_slices(std::span<const Slice2D> slices, PlaneAxis plane);

}  // namespace tractpipe
