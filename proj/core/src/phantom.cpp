#include "tractpipe/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "tractpipe/seed.hpp"

namespace tractpipe {

namespace {

struct NearestPoint {
  double distance = 0.0;
  Vec3 tangent{};
};

NearestPoint nearest_on_polyline(const Centerline& line, const Vec3& p) {
  NearestPoint best;
  best.distance = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s + 1 < line.size(); ++s) {
    const Vec3& a = line[s];
    const Vec3& b = line[s + 1];
    const Vec3 ab{b[0] - a[0], b[1] - a[1], b[2] - a[2]};
    const double len2 = ab[0] * ab[0] + ab[1] * ab[1] + ab[2] * ab[2];
    if (len2 == 0.0) continue;
    double t = ((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1] + (p[2] - a[2]) * ab[2]) / len2;
    t = std::clamp(t, 0.0, 1.0);
    const Vec3 q{a[0] + t * ab[0] - p[0], a[1] + t * ab[1] - p[1], a[2] + t * ab[2] - p[2]};
    const double d = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2]);
    if (d < best.distance) {
      const double len = std::sqrt(len2);
      best.distance = d;
      best.tangent = {ab[0] / len, ab[1] / len, ab[2] / len};
    }
  }
  return best;
}

// One box pass of half-width r along `axis` for every component, clamped at
// the borders.
void box_pass(DisplacementField& field, int axis, int r) {
  const Dims d = field.dims();
  const int n = d.extent(axis);
  DisplacementField out(d);
  for (int z = 0; z < d.z; ++z) {
    for (int y = 0; y < d.y; ++y) {
      for (int x = 0; x < d.x; ++x) {
        std::array<int, 3> p{x, y, z};
        const int center = p[static_cast<std::size_t>(axis)];
        double acc[3] = {0.0, 0.0, 0.0};
        for (int o = -r; o <= r; ++o) {
          p[static_cast<std::size_t>(axis)] = std::clamp(center + o, 0, n - 1);
          const auto v = field.voxel(p[0], p[1], p[2]);
          for (std::size_t c = 0; c < 3; ++c) acc[c] += v[c];
        }
        auto dst = out.voxel(x, y, z);
        for (std::size_t c = 0; c < 3; ++c) dst[c] = acc[c] / (2 * r + 1);
      }
    }
  }
  field = std::move(out);
}

}  // namespace

void PhantomConfig::validate() const {
  if (dims.x < 8 || dims.y < 8 || dims.z < 8) throw ConfigError("phantom.dims must be >= 8 per axis");
  if (n_tracts <= 0) throw ConfigError("phantom.n_tracts must be > 0");
  if (peak_channels <= 0 || peak_channels % 3 != 0) {
    throw ConfigError("phantom.peak_channels must be a positive multiple of 3");
  }
  if (!(tube_radius > 0.0)) throw ConfigError("phantom.tube_radius must be > 0");
  if (!(deform_amplitude >= 0.0)) throw ConfigError("phantom.deform_amplitude must be >= 0");
  if (!(deform_smoothness > 0.0)) throw ConfigError("phantom.deform_smoothness must be > 0");
  if (!(noise_sigma >= 0.0)) throw ConfigError("phantom.noise_sigma must be >= 0");
  if (n_test < 1) throw ConfigError("phantom.n_test must be >= 1");
  if (cohort_size < 3 || n_unlabeled() < 1) {
    throw ConfigError("phantom.cohort_size must leave 1 labeled, >= 1 unlabeled and >= 1 test member");
  }
}

PhantomSubject rasterize_tracts(const Dims& dims, std::span<const Centerline> centerlines,
                                double radius, int peak_channels) {
  if (centerlines.empty()) throw ConfigError("rasterize_tracts: no centerlines");
  if (peak_channels <= 0 || peak_channels % 3 != 0) {
    throw ConfigError("rasterize_tracts: peak_channels must be a positive multiple of 3");
  }
  const int n = static_cast<int>(centerlines.size());
  PhantomSubject out;
  out.id = "atlas";
  out.peaks = RealVolume(dims, peak_channels);
  out.truth = LabelVolume(dims, n);
  const auto slots = static_cast<std::size_t>(peak_channels / 3);
  std::vector<std::pair<double, Vec3>> covering;
  for (int z = 0; z < dims.z; ++z) {
    for (int y = 0; y < dims.y; ++y) {
      for (int x = 0; x < dims.x; ++x) {
        covering.clear();
        const Vec3 p{static_cast<double>(x), static_cast<double>(y), static_cast<double>(z)};
        for (int k = 0; k < n; ++k) {
          const auto near = nearest_on_polyline(centerlines[static_cast<std::size_t>(k)], p);
          if (near.distance <= radius) {
            out.truth.at(x, y, z, k) = 1;
            covering.emplace_back(near.distance, near.tangent);
          }
        }
        std::stable_sort(covering.begin(), covering.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        auto peaks = out.peaks.voxel(x, y, z);
        for (std::size_t s = 0; s < std::min(slots, covering.size()); ++s) {
          for (std::size_t c = 0; c < 3; ++c) peaks[3 * s + c] = static_cast<float>(covering[s].second[c]);
        }
      }
    }
  }
  return out;
}

std::vector<Centerline> random_centerlines(const PhantomConfig& cfg) {
  std::mt19937_64 rng(splitmix64(cfg.seed));
  std::vector<Centerline> lines;
  const int kControl = 4;
  for (int k = 0; k < cfg.n_tracts; ++k) {
    const int axis = k % 3;
    const int a1 = (axis + 1) % 3;
    const int a2 = (axis + 2) % 3;
    const double margin_main = 2.0;
    const double lo1 = cfg.tube_radius + 3.0;
    const double hi1 = cfg.dims.extent(a1) - 1 - lo1;
    const double lo2 = cfg.tube_radius + 3.0;
    const double hi2 = cfg.dims.extent(a2) - 1 - lo2;
    std::uniform_real_distribution<double> off1(lo1, std::max(lo1, hi1));
    std::uniform_real_distribution<double> off2(lo2, std::max(lo2, hi2));
    Centerline line;
    const double span = cfg.dims.extent(axis) - 1 - 2 * margin_main;
    for (int i = 0; i < kControl; ++i) {
      Vec3 p{};
      p[static_cast<std::size_t>(axis)] = margin_main + span * i / (kControl - 1);
      p[static_cast<std::size_t>(a1)] = off1(rng);
      p[static_cast<std::size_t>(a2)] = off2(rng);
      line.push_back(p);
    }
    lines.push_back(std::move(line));
  }
  return lines;
}

PhantomSubject generate_atlas(const PhantomConfig& cfg) {
  cfg.validate();
  const auto lines = random_centerlines(cfg);
  return rasterize_tracts(cfg.dims, lines, cfg.tube_radius, cfg.peak_channels);
}

DisplacementField random_smooth_field(const Dims& dims, double amplitude, double smoothness,
                                      std::uint64_t seed) {
  DisplacementField field(dims);
  if (amplitude == 0.0) return field;
  std::mt19937_64 rng(splitmix64(seed));
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (auto& v : field.data()) v = gauss(rng);
  const int r = std::max(0, static_cast<int>(std::lround(smoothness)) / 2);
  for (int pass = 0; pass < 3; ++pass) {
    for (int axis = 0; axis < 3; ++axis) box_pass(field, axis, r);
  }
  const double peak = field.max_norm();
  if (peak > 0.0) {
    const double scale = amplitude / peak;
    for (auto& v : field.data()) v *= scale;
  }
  return field;
}

std::uint64_t member_seed(std::uint64_t seed, std::size_t member, std::uint64_t stream) {
  return splitmix64(splitmix64(seed ^ 0xC0FFEEull) + 2 * static_cast<std::uint64_t>(member) + stream);
}

PhantomSubject make_member(const PhantomSubject& atlas, const PhantomConfig& cfg, std::size_t index,
                           const std::string& id) {
  const auto field = random_smooth_field(atlas.peaks.dims(), cfg.deform_amplitude,
                                         cfg.deform_smoothness, member_seed(cfg.seed, index, 0));
  PhantomSubject m;
  m.id = id;
  m.peaks = warp(atlas.peaks, field);
  m.truth = warp_labels(atlas.truth, field);
  if (cfg.noise_sigma > 0.0) {
    std::mt19937_64 rng(member_seed(cfg.seed, index, 1));
    std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
    const double bound = 1.0 + 3.0 * cfg.noise_sigma;
    for (auto& v : m.peaks.data()) {
      v = static_cast<float>(std::clamp(static_cast<double>(v) + noise(rng), -bound, bound));
    }
  }
  return m;
}

Cohort generate_cohort(const PhantomSubject& atlas, const PhantomConfig& cfg) {
  cfg.validate();
  if (atlas.peaks.dims() != cfg.dims || atlas.truth.dims() != cfg.dims) {
    throw ShapeError("generate_cohort: atlas grid differs from phantom.dims");
  }
  Cohort cohort;
  std::size_t member = 0;
  {
    auto m = make_member(atlas, cfg, member++, "labeled_000");
    cohort.labeled = LabeledSubject{m.id, std::move(m.peaks), std::move(m.truth)};
  }
  for (int i = 0; i < cfg.n_unlabeled(); ++i) {
    auto m = make_member(atlas, cfg, member++, "unlabeled_" + index_tag(static_cast<std::size_t>(i)));
    cohort.unlabeled.push_back(UnlabeledSubject{m.id, std::move(m.peaks)});
    cohort.unlabeled_truth.push_back(std::move(m.truth));
  }
  for (int i = 0; i < cfg.n_test; ++i) {
    cohort.test.push_back(
        make_member(atlas, cfg, member++, "test_" + index_tag(static_cast<std::size_t>(i))));
  }
  return cohort;
}

}  // namespace tractpipe
