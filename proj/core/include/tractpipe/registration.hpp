#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "tractpipe/volume.hpp"

namespace tractpipe {

/// Dense voxel-unit displacement field u. The deformation is phi = id + u,
/// so the sample location for voxel p is p + u(p). Components (dx, dy, dz)
/// are stored fastest.
class DisplacementField : public Volume<double> {
 public:
  DisplacementField() = default;
  explicit DisplacementField(Dims dims) : Volume<double>(dims, 3, 0.0) {}
  DisplacementField(Dims dims, std::vector<double> data)
      : Volume<double>(dims, 3, std::move(data)) {}

  [[nodiscard]] Vec3 displacement(int x, int y, int z) const {
    const auto v = voxel(x, y, z);
    return {v[0], v[1], v[2]};
  }
  [[nodiscard]] Vec3 sample_point(int x, int y, int z) const {
    const auto v = voxel(x, y, z);
    return {x + v[0], y + v[1], z + v[2]};
  }
  // Largest per-voxel displacement norm.
  [[nodiscard]] double max_norm() const;
};

// Saved as an f32 volume with "kind": "displacement".
void save_field(const DisplacementField& field, const std::filesystem::path& base);
DisplacementField load_field(const std::filesystem::path& base);

struct RegistrationConfig {
  // Weight on the similarity term: L_reg = L_smooth + gamma * L_sim.
  double gamma = 1e6;
  double step_size = 0.05;
  int max_iters = 200;
  // Stop once (prev - cur) / prev drops below this.
  double rel_tol = 1e-6;
  // Gradient descent from the zero field is deterministic; the seed is carried
  // for provenance only.
  std::uint64_t seed = 0;

  void validate() const;
};

// x o phi: out(p) = sample_trilinear(vol, p + u(p)).
RealVolume warp(const RealVolume& vol, const DisplacementField& field);

// l o phi: labels warped as reals per class, then re-binarized at >= 0.5.
LabelVolume warp_labels(const LabelVolume& labels, const DisplacementField& field);

// Sum over voxels of the squared Frobenius norm of the forward-difference
// Jacobian of u (difference taken as zero at the far boundary).
double smooth_loss(const DisplacementField& field);
DisplacementField grad_smooth_loss(const DisplacementField& field);

// Mean over all voxel-channel elements of the squared difference.
double sim_loss(const RealVolume& moved, const RealVolume& target);

double reg_loss(const DisplacementField& field, const RealVolume& moving, const RealVolume& target,
                double gamma);

// Exact gradient of reg_loss with respect to every field component.
// Clamped sample coordinates contribute no gradient along the clamped axis.
DisplacementField grad_reg_loss(const DisplacementField& field, const RealVolume& moving,
                                const RealVolume& target, double gamma);

struct RegistrationResult {
  DisplacementField field;
  // trace[0] is the zero-field loss; one entry per accepted step after that.
  std::vector<double> loss_trace;
  int iterations = 0;
};

/// Registers `moving` onto `target` by gradient descent on the displacement
/// field, starting from zero. Each iteration tries `step_size` and halves it
/// (up to 20 times) until the loss does not increase; if no halving succeeds
/// the optimizer has converged and stops. Throws NumericalError on a
/// non-finite loss.
RegistrationResult optimize_registration(const RealVolume& moving, const RealVolume& target,
                                         const RegistrationConfig& cfg);

}  // namespace tractpipe
