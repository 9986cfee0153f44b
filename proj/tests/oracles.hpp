#pragma once

// Deliberately naive reference implementations used as test oracles. They share
// no code with the library beyond the Volume container.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <set>
#include <tuple>
#include <vector>

#include "tractpipe/registration.hpp"
#include "tractpipe/volume.hpp"

namespace oracle {

using tractpipe::Dims;
using tractpipe::DisplacementField;
using tractpipe::LabelVolume;
using tractpipe::RealVolume;

// Corner (i, j, k) of the interpolation cell along one axis: lower index and
// fractional offset, border-clamped.
inline std::pair<int, double> cell(double c, int n) {
  if (n == 1) return {0, 0.0};
  if (c < 0.0) c = 0.0;
  if (c > n - 1) c = n - 1;
  int i = static_cast<int>(std::floor(c));
  if (i > n - 2) i = n - 2;
  return {i, c - i};
}

inline double naive_sample(const RealVolume& v, double px, double py, double pz, int ch) {
  const Dims d = v.dims();
  const auto [ix, fx] = cell(px, d.x);
  const auto [iy, fy] = cell(py, d.y);
  const auto [iz, fz] = cell(pz, d.z);
  auto at = [&](int x, int y, int z) {
    x = std::min(x, d.x - 1);
    y = std::min(y, d.y - 1);
    z = std::min(z, d.z - 1);
    return static_cast<double>(v.storage()[((static_cast<std::size_t>(z) * d.y + y) * d.x + x) * v.channels() + ch]);
  };
  double acc = 0.0;
  for (int k = 0; k < 2; ++k) {
    for (int j = 0; j < 2; ++j) {
      for (int i = 0; i < 2; ++i) {
        const double w = (i ? fx : 1.0 - fx) * (j ? fy : 1.0 - fy) * (k ? fz : 1.0 - fz);
        acc += w * at(ix + i, iy + j, iz + k);
      }
    }
  }
  return acc;
}

inline RealVolume naive_warp(const RealVolume& v, const DisplacementField& u) {
  const Dims d = v.dims();
  RealVolume out(d, v.channels());
  for (int z = 0; z < d.z; ++z)
    for (int y = 0; y < d.y; ++y)
      for (int x = 0; x < d.x; ++x)
        for (int c = 0; c < v.channels(); ++c)
          out.at(x, y, z, c) = static_cast<float>(
              naive_sample(v, x + u.at(x, y, z, 0), y + u.at(x, y, z, 1), z + u.at(x, y, z, 2), c));
  return out;
}

// Dice by explicit set construction.
inline double brute_dice(const LabelVolume& a, const LabelVolume& b, int cls) {
  std::set<std::tuple<int, int, int>> sa, sb, both;
  const Dims d = a.dims();
  for (int z = 0; z < d.z; ++z)
    for (int y = 0; y < d.y; ++y)
      for (int x = 0; x < d.x; ++x) {
        if (a.at(x, y, z, cls)) sa.insert({x, y, z});
        if (b.at(x, y, z, cls)) sb.insert({x, y, z});
      }
  for (const auto& p : sa)
    if (sb.count(p)) both.insert(p);
  if (sa.empty() && sb.empty()) return 1.0;
  return 2.0 * static_cast<double>(both.size()) / static_cast<double>(sa.size() + sb.size());
}

// Central differences of f over every coordinate of x.
inline std::vector<double> central_gradient(const std::function<double(std::vector<double>&)>& f,
                                            std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double fp = f(x);
    x[i] = orig - h;
    const double fm = f(x);
    x[i] = orig;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// ||a - b|| / max(||a||, ||b||), 0 when both vanish.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

inline RealVolume random_volume(std::mt19937_64& rng, Dims d, int channels, double lo = -1.0,
                                double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  RealVolume v(d, channels);
  for (auto& x : v.data()) x = static_cast<float>(u(rng));
  return v;
}

inline LabelVolume random_mask(std::mt19937_64& rng, Dims d, int channels, double p) {
  std::bernoulli_distribution b(p);
  LabelVolume v(d, channels);
  for (auto& x : v.data()) x = b(rng) ? 1 : 0;
  return v;
}

inline DisplacementField random_field(std::mt19937_64& rng, Dims d, double amplitude) {
  std::uniform_real_distribution<double> u(-amplitude, amplitude);
  DisplacementField f(d);
  for (auto& x : f.data()) x = u(rng);
  return f;
}

}  // namespace oracle
