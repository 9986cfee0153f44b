#include "tractpipe/registration.hpp"

#include <algorithm>
#include <cmath>

#include "tractpipe/volume_io.hpp"

namespace tractpipe {

namespace {

constexpr int kMaxHalvings = 20;

// Interpolated value and its derivative along each axis, per channel.
// `value`, `dx`, `dy`, `dz` each hold `channels` entries.
void sample_with_gradient(const RealVolume& vol, const Vec3& point, std::span<double> value,
                          std::span<double> dx, std::span<double> dy, std::span<double> dz) {
  const auto s = make_stencil(vol.dims(), point);
  const int channels = vol.channels();
  std::fill(value.begin(), value.end(), 0.0);
  std::fill(dx.begin(), dx.end(), 0.0);
  std::fill(dy.begin(), dy.end(), 0.0);
  std::fill(dz.begin(), dz.end(), 0.0);
  for (int corner = 0; corner < 8; ++corner) {
    const int b[3] = {corner & 1, (corner >> 1) & 1, (corner >> 2) & 1};
    double w1[3];
    double dw[3];
    for (int a = 0; a < 3; ++a) {
      w1[a] = b[a] ? s.frac[a] : 1.0 - s.frac[a];
      dw[a] = s.clamped[a] ? 0.0 : (b[a] ? 1.0 : -1.0);
    }
    const double w = w1[0] * w1[1] * w1[2];
    const double gx = dw[0] * w1[1] * w1[2];
    const double gy = w1[0] * dw[1] * w1[2];
    const double gz = w1[0] * w1[1] * dw[2];
    const auto v = vol.voxel(b[0] ? s.hi[0] : s.lo[0], b[1] ? s.hi[1] : s.lo[1],
                             b[2] ? s.hi[2] : s.lo[2]);
    for (int c = 0; c < channels; ++c) {
      const double vc = v[static_cast<std::size_t>(c)];
      const auto i = static_cast<std::size_t>(c);
      value[i] += w * vc;
      dx[i] += gx * vc;
      dy[i] += gy * vc;
      dz[i] += gz * vc;
    }
  }
}

// Sum of squared differences between warp(moving) (in double, not rounded to
// f32) and target, divided by the element count.
double warped_mse(const DisplacementField& field, const RealVolume& moving,
                  const RealVolume& target) {
  const Dims& d = moving.dims();
  const int channels = moving.channels();
  std::vector<double> value(static_cast<std::size_t>(channels));
  double sum = 0.0;
  for (int z = 0; z < d.z; ++z) {
    for (int y = 0; y < d.y; ++y) {
      for (int x = 0; x < d.x; ++x) {
        sample_trilinear(moving, field.sample_point(x, y, z), value);
        const auto t = target.voxel(x, y, z);
        for (int c = 0; c < channels; ++c) {
          const double r = value[static_cast<std::size_t>(c)] - t[static_cast<std::size_t>(c)];
          sum += r * r;
        }
      }
    }
  }
  return sum / static_cast<double>(moving.size());
}

void check_registration_inputs(const DisplacementField& field, const RealVolume& moving,
                               const RealVolume& target, const char* what) {
  require_same_shape(moving.dims(), moving.channels(), target.dims(), target.channels(), what);
  require_same_grid(field.dims(), moving.dims(), what);
}

}  // namespace

double DisplacementField::max_norm() const {
  double best = 0.0;
  const auto d = data();
  for (std::size_t i = 0; i + 2 < d.size(); i += 3) {
    best = std::max(best, std::sqrt(d[i] * d[i] + d[i + 1] * d[i + 1] + d[i + 2] * d[i + 2]));
  }
  return best;
}

void save_field(const DisplacementField& field, const std::filesystem::path& base) {
  std::vector<float> values(field.data().begin(), field.data().end());
  save_volume(RealVolume(field.dims(), 3, std::move(values)), base, "displacement");
}

DisplacementField load_field(const std::filesystem::path& base) {
  const auto vol = load_real_volume(base);
  if (vol.channels() != 3) throw FormatError("displacement field must have 3 channels: " + base.string());
  return DisplacementField(vol.dims(), std::vector<double>(vol.data().begin(), vol.data().end()));
}

void RegistrationConfig::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("registration.gamma must be > 0");
  if (!(step_size > 0.0) || !std::isfinite(step_size)) {
    throw ConfigError("registration.step_size must be > 0");
  }
  if (max_iters < 0) throw ConfigError("registration.max_iters must be >= 0");
  if (!(rel_tol >= 0.0)) throw ConfigError("registration.rel_tol must be >= 0");
}

RealVolume warp(const RealVolume& vol, const DisplacementField& field) {
  require_same_grid(vol.dims(), field.dims(), "warp");
  const Dims& d = vol.dims();
  RealVolume out(d, vol.channels());
  std::vector<double> value(static_cast<std::size_t>(vol.channels()));
  for (int z = 0; z < d.z; ++z) {
    for (int y = 0; y < d.y; ++y) {
      for (int x = 0; x < d.x; ++x) {
        sample_trilinear(vol, field.sample_point(x, y, z), value);
        auto dst = out.voxel(x, y, z);
        std::transform(value.begin(), value.end(), dst.begin(),
                       [](double v) { return static_cast<float>(v); });
      }
    }
  }
  return out;
}

LabelVolume warp_labels(const LabelVolume& labels, const DisplacementField& field) {
  require_same_grid(labels.dims(), field.dims(), "warp_labels");
  std::vector<float> as_real(labels.data().begin(), labels.data().end());
  const RealVolume real(labels.dims(), labels.channels(), std::move(as_real));
  const Dims& d = labels.dims();
  LabelVolume out(d, labels.channels());
  std::vector<double> value(static_cast<std::size_t>(labels.channels()));
  for (int z = 0; z < d.z; ++z) {
    for (int y = 0; y < d.y; ++y) {
      for (int x = 0; x < d.x; ++x) {
        sample_trilinear(real, field.sample_point(x, y, z), value);
        auto dst = out.voxel(x, y, z);
        for (std::size_t c = 0; c < value.size(); ++c) dst[c] = value[c] >= 0.5 ? 1 : 0;
      }
    }
  }
  return out;
}

double smooth_loss(const DisplacementField& field) {
  const Dims& d = field.dims();
  double sum = 0.0;
  for (int z = 0; z < d.z; ++z) {
    for (int y = 0; y < d.y; ++y) {
      for (int x = 0; x < d.x; ++x) {
        const auto u = field.voxel(x, y, z);
        const int next[3][3] = {{x + 1, y, z}, {x, y + 1, z}, {x, y, z + 1}};
        for (int a = 0; a < 3; ++a) {
          const int* q = next[a];
          if (q[0] >= d.x || q[1] >= d.y || q[2] >= d.z) continue;
          const auto v = field.voxel(q[0], q[1], q[2]);
          for (int c = 0; c < 3; ++c) {
            const double diff = v[static_cast<std::size_t>(c)] - u[static_cast<std::size_t>(c)];
            sum += diff * diff;
          }
        }
      }
    }
  }
  return sum;
}

DisplacementField grad_smooth_loss(const DisplacementField& field) {
  const Dims& d = field.dims();
  DisplacementField grad(d);
  for (int z = 0; z < d.z; ++z) {
    for (int y = 0; y < d.y; ++y) {
      for (int x = 0; x < d.x; ++x) {
        const auto u = field.voxel(x, y, z);
        const int next[3][3] = {{x + 1, y, z}, {x, y + 1, z}, {x, y, z + 1}};
        for (int a = 0; a < 3; ++a) {
          const int* q = next[a];
          if (q[0] >= d.x || q[1] >= d.y || q[2] >= d.z) continue;
          const auto v = field.voxel(q[0], q[1], q[2]);
          auto gu = grad.voxel(x, y, z);
          auto gv = grad.voxel(q[0], q[1], q[2]);
          for (std::size_t c = 0; c < 3; ++c) {
            const double diff = v[c] - u[c];
            gv[c] += 2.0 * diff;
            gu[c] -= 2.0 * diff;
          }
        }
      }
    }
  }
  return grad;
}

double sim_loss(const RealVolume& moved, const RealVolume& target) {
  require_same_shape(moved.dims(), moved.channels(), target.dims(), target.channels(), "sim_loss");
  double sum = 0.0;
  const auto a = moved.data();
  const auto b = target.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double r = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sum += r * r;
  }
  return sum / static_cast<double>(a.size());
}

double reg_loss(const DisplacementField& field, const RealVolume& moving, const RealVolume& target,
                double gamma) {
  check_registration_inputs(field, moving, target, "reg_loss");
  return smooth_loss(field) + gamma * warped_mse(field, moving, target);
}

DisplacementField grad_reg_loss(const DisplacementField& field, const RealVolume& moving,
                                const RealVolume& target, double gamma) {
  check_registration_inputs(field, moving, target, "grad_reg_loss");
  DisplacementField grad = grad_smooth_loss(field);
  const Dims& d = moving.dims();
  const int channels = moving.channels();
  const auto n = static_cast<std::size_t>(channels);
  std::vector<double> value(n), dx(n), dy(n), dz(n);
  const double scale = 2.0 * gamma / static_cast<double>(moving.size());
  for (int z = 0; z < d.z; ++z) {
    for (int y = 0; y < d.y; ++y) {
      for (int x = 0; x < d.x; ++x) {
        sample_with_gradient(moving, field.sample_point(x, y, z), value, dx, dy, dz);
        const auto t = target.voxel(x, y, z);
        double gx = 0.0, gy = 0.0, gz = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
          const double r = value[c] - t[c];
          gx += r * dx[c];
          gy += r * dy[c];
          gz += r * dz[c];
        }
        auto g = grad.voxel(x, y, z);
        g[0] += scale * gx;
        g[1] += scale * gy;
        g[2] += scale * gz;
      }
    }
  }
  return grad;
}

RegistrationResult optimize_registration(const RealVolume& moving, const RealVolume& target,
                                         const RegistrationConfig& cfg) {
  cfg.validate();
  require_same_shape(moving.dims(), moving.channels(), target.dims(), target.channels(),
                     "optimize_registration");
  RegistrationResult result;
  result.field = DisplacementField(moving.dims());
  double loss = reg_loss(result.field, moving, target, cfg.gamma);
  if (!std::isfinite(loss)) throw NumericalError("registration: non-finite initial loss");
  result.loss_trace.push_back(loss);

  DisplacementField trial(moving.dims());
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    if (loss == 0.0) break;
    const auto grad = grad_reg_loss(result.field, moving, target, cfg.gamma);
    double step = cfg.step_size;
    bool accepted = false;
    double trial_loss = loss;
    for (int h = 0; h <= kMaxHalvings; ++h) {
      auto dst = trial.data();
      const auto src = result.field.data();
      const auto g = grad.data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[i] - step * g[i];
      trial_loss = reg_loss(trial, moving, target, cfg.gamma);
      if (!std::isfinite(trial_loss)) throw NumericalError("registration: non-finite loss");
      if (trial_loss <= loss) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    std::swap(result.field, trial);
    const double previous = loss;
    loss = trial_loss;
    result.loss_trace.push_back(loss);
    result.iterations = iter + 1;
    if ((previous - loss) / previous < cfg.rel_tol) break;
  }
  return result;
}

}  // namespace tractpipe
