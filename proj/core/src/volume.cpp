#include "tractpipe/volume.hpp"

#include <algorithm>
#include <cmath>

namespace tractpipe {

std::string to_string(const Dims& d) {
  return std::to_string(d.x) + "x" + std::to_string(d.y) + "x" + std::to_string(d.z);
}

void require_same_grid(const Dims& a, const Dims& b, const std::string& what) {
  if (a != b) {
    throw ShapeError(what + ": grid mismatch " + to_string(a) + " vs " + to_string(b));
  }
}

void require_same_shape(const Dims& a, int ca, const Dims& b, int cb, const std::string& what) {
  require_same_grid(a, b, what);
  if (ca != cb) {
    throw ShapeError(what + ": channel mismatch " + std::to_string(ca) + " vs " +
                     std::to_string(cb));
  }
}

bool is_binary(const LabelVolume& labels) {
  return std::all_of(labels.data().begin(), labels.data().end(),
                     [](std::uint8_t v) { return v <= 1; });
}

TrilinearStencil make_stencil(const Dims& dims, const Vec3& point) {
  TrilinearStencil s;
  for (int a = 0; a < 3; ++a) {
    const int n = dims.extent(a);
    const double hi_coord = static_cast<double>(n - 1);
    double c = point[static_cast<std::size_t>(a)];
    s.clamped[a] = !(c >= 0.0 && c <= hi_coord);
    c = std::clamp(c, 0.0, hi_coord);
    int lo = static_cast<int>(std::floor(c));
    if (lo >= n - 1) lo = std::max(n - 2, 0);
    s.lo[a] = lo;
    s.hi[a] = std::min(lo + 1, n - 1);
    s.frac[a] = n > 1 ? c - lo : 0.0;
  }
  return s;
}

void sample_trilinear(const RealVolume& vol, const Vec3& point, std::span<double> out) {
  const auto s = make_stencil(vol.dims(), point);
  const int channels = vol.channels();
  std::fill(out.begin(), out.end(), 0.0);
  for (int corner = 0; corner < 8; ++corner) {
    const int bx = corner & 1;
    const int by = (corner >> 1) & 1;
    const int bz = (corner >> 2) & 1;
    const double w = (bx ? s.frac[0] : 1.0 - s.frac[0]) * (by ? s.frac[1] : 1.0 - s.frac[1]) *
                     (bz ? s.frac[2] : 1.0 - s.frac[2]);
    if (w == 0.0) continue;
    const auto v = vol.voxel(bx ? s.hi[0] : s.lo[0], by ? s.hi[1] : s.lo[1],
                             bz ? s.hi[2] : s.lo[2]);
    for (int c = 0; c < channels; ++c) out[static_cast<std::size_t>(c)] += w * v[static_cast<std::size_t>(c)];
  }
}

std::vector<double> sample_trilinear(const RealVolume& vol, const Vec3& point) {
  std::vector<double> out(static_cast<std::size_t>(vol.channels()));
  sample_trilinear(vol, point, out);
  return out;
}

const char* plane_name(PlaneAxis p) {
  switch (p) {
    case PlaneAxis::Sagittal:
      return "sagittal";
    case PlaneAxis::Coronal:
      return "coronal";
    case PlaneAxis::Axial:
      break;
  }
  return "axial";
}

std::array<int, 3> slice_to_voxel(PlaneAxis plane, int index, int u, int v) {
  std::array<int, 3> p{};
  const auto axes = in_plane_axes(plane);
  p[static_cast<std::size_t>(normal_axis(plane))] = index;
  p[static_cast<std::size_t>(axes[0])] = u;
  p[static_cast<std::size_t>(axes[1])] = v;
  return p;
}

Slice2D extract_slice(const RealVolume& vol, PlaneAxis plane, int index) {
  const auto axes = in_plane_axes(plane);
  Slice2D s;
  s.plane = plane;
  s.index = index;
  s.width = vol.dims().extent(axes[0]);
  s.height = vol.dims().extent(axes[1]);
  s.channels = vol.channels();
  s.depth = vol.dims().extent(normal_axis(plane));
  s.data.resize(static_cast<std::size_t>(s.width) * static_cast<std::size_t>(s.height) *
                static_cast<std::size_t>(s.channels));
  for (int v = 0; v < s.height; ++v) {
    for (int u = 0; u < s.width; ++u) {
      const auto p = slice_to_voxel(plane, index, u, v);
      const auto src = vol.voxel(p[0], p[1], p[2]);
      std::copy(src.begin(), src.end(), s.data.begin() + static_cast<std::ptrdiff_t>(s.offset(u, v)));
    }
  }
  return s;
}

std::vector<Slice2D> extract_slices(const RealVolume& vol, PlaneAxis plane) {
  const int n = vol.dims().extent(normal_axis(plane));
  std::vector<Slice2D> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(extract_slice(vol, plane, i));
  return out;
}

RealVolume assemble_slices(std::span<const Slice2D> slices, PlaneAxis plane) {
  if (slices.empty()) throw ShapeError("assemble_slices: empty slice list");
  const auto& first = slices.front();
  for (std::size_t i = 0; i < slices.size(); ++i) {
    const auto& s = slices[i];
    if (s.plane != plane) throw ShapeError("assemble_slices: slice plane differs from target plane");
    if (s.index != static_cast<int>(i)) {
      throw ShapeError("assemble_slices: slice indices must be contiguous from 0");
    }
    if (s.width != first.width || s.height != first.height || s.channels != first.channels) {
      throw ShapeError("assemble_slices: slice " + std::to_string(i) +
                       " shape disagrees with slice 0");
    }
    if (s.data.size() != static_cast<std::size_t>(s.width) * static_cast<std::size_t>(s.height) *
                             static_cast<std::size_t>(s.channels)) {
      throw ShapeError("assemble_slices: slice " + std::to_string(i) + " has wrong data length");
    }
  }
  const auto axes = in_plane_axes(plane);
  std::array<int, 3> ext{};
  ext[static_cast<std::size_t>(normal_axis(plane))] = static_cast<int>(slices.size());
  ext[static_cast<std::size_t>(axes[0])] = first.width;
  ext[static_cast<std::size_t>(axes[1])] = first.height;
  RealVolume vol(Dims{ext[0], ext[1], ext[2]}, first.channels);
  for (const auto& s : slices) {
    for (int v = 0; v < s.height; ++v) {
      for (int u = 0; u < s.width; ++u) {
        const auto p = slice_to_voxel(plane, s.index, u, v);
        auto dst = vol.voxel(p[0], p[1], p[2]);
        const auto off = static_cast<std::ptrdiff_t>(s.offset(u, v));
        std::copy(s.data.begin() + off, s.data.begin() + off + s.channels, dst.begin());
      }
    }
  }
  return vol;
}

}  // namespace tractpipe
