#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tractpipe/registration.hpp"
#include "tractpipe/rpa.hpp"
#include "tractpipe/volume.hpp"

namespace tractpipe {

struct PhantomConfig {
  Dims dims{32, 32, 32};
  int n_tracts = 3;
  // Multiple of 3: one (x, y, z) direction per peak slot. Voxels covered by
  // several tubes fill the slots nearest-centerline first.
  int peak_channels = 3;
  double tube_radius = 2.5;
  double deform_amplitude = 2.0;
  double deform_smoothness = 4.0;
  double noise_sigma = 0.3;
  // 1 labeled + (cohort_size - 1 - n_test) unlabeled + n_test test members.
  int cohort_size = 16;
  int n_test = 5;
  std::uint64_t seed = 0;

  void validate() const;
  [[nodiscard]] int n_unlabeled() const { return cohort_size - 1 - n_test; }
};

// Ground truth stays with the subject; pipeline stages only see what the
// cohort manifest exposes.
struct PhantomSubject {
  std::string id;
  RealVolume peaks;
  LabelVolume truth;
};

using Centerline = std::vector<Vec3>;

// Voxels within `radius` of a centerline are labeled for that tract and carry
// its unit tangent.
PhantomSubject rasterize_tracts(const Dims& dims, std::span<const Centerline> centerlines,
                                double radius, int peak_channels = 3);

// Seeded random polyline centerlines, tract k running mainly along axis k % 3.
std::vector<Centerline> random_centerlines(const PhantomConfig& cfg);

PhantomSubject generate_atlas(const PhantomConfig& cfg);

/// White noise smoothed by three separable box passes of width
/// `smoothness`, rescaled so the largest displacement norm equals
/// `amplitude`. Zero field when amplitude is 0.
DisplacementField random_smooth_field(const Dims& dims, double amplitude, double smoothness,
                                      std::uint64_t seed);

struct Cohort {
  LabeledSubject labeled;
  std::vector<UnlabeledSubject> unlabeled;
  // Truth of the unlabeled members, for diagnostics only; never written to the
  // cohort manifest.
  std::vector<LabelVolume> unlabeled_truth;
  std::vector<PhantomSubject> test;
};

// Seed for cohort member i, stream s (0 = field, 1 = noise).
std::uint64_t member_seed(std::uint64_t seed, std::size_t member, std::uint64_t stream);

// Member i = atlas warped by an independent smooth field, plus clipped
// Gaussian noise on the peaks; truth warped with the same field.
PhantomSubject make_member(const PhantomSubject& atlas, const PhantomConfig& cfg, std::size_t index,
                           const std::string& id);

Cohort generate_cohort(const PhantomSubject& atlas, const PhantomConfig& cfg);

}  // namespace tractpipe
