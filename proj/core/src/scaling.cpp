#include "mmpipe/scaling.hpp"

#include <cmath>
#include <set>
#include <string>

#include "mmpipe/errors.hpp"

namespace mmpipe::scaling {

double ScalingFit::predict(double params) const {
  if (params <= 0.0) throw InvalidParams("parameter count must be positive");
  return std::exp(slope_a * std::log(params) + intercept_b);
}

ScalingFit fit_loglog(std::span<const std::pair<double, double>> points) {
  if (points.size() < 2) {
    throw Degenerate("need at least two (params, lr) points");
  }
  std::set<double> distinct;
  for (const auto& [n, lr] : points) {
    if (n <= 0.0 || lr <= 0.0) {
      throw InvalidParams("points must be positive");
    }
    distinct.insert(n);
  }
  if (distinct.size() < 2) {
    throw Degenerate("need at least two distinct parameter counts");
  }

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& [n, lr] : points) {
    const double x = std::log(n);
    const double y = std::log(lr);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const auto m = static_cast<double>(points.size());
  const double denom = m * sxx - sx * sx;
  ScalingFit fit;
  fit.slope_a = (m * sxy - sx * sy) / denom;
  fit.intercept_b = (sy - fit.slope_a * sx) / m;
  fit.points.assign(points.begin(), points.end());
  return fit;
}

ScalingFit default_fit() {
  ScalingFit fit;
  fit.slope_a = -0.4214;
  fit.intercept_b = -0.5535;
  return fit;
}

double predict_lr(const ScalingFit& fit, double params) {
  return fit.predict(params);
}

double weight_decay_for(double lr) {
  if (lr <= 0.0) throw InvalidParams("peak learning rate must be positive");
  return 0.1 * lr;
}

double lr_at_step(const ScheduleConfig& cfg, long t) {
  if (cfg.peak_lr <= 0.0) throw InvalidParams("peak_lr must be positive");
  if (cfg.final_fraction <= 0.0 || cfg.final_fraction > 1.0) {
    throw InvalidParams("final_fraction must lie in (0, 1]");
  }
  if (cfg.warmup_steps < 0 || cfg.warmup_steps >= cfg.total_steps) {
    throw InvalidParams("warmup_steps must lie in [0, total_steps)");
  }
  if (t < 0 || t > cfg.total_steps) {
    throw OutOfRange("step " + std::to_string(t) + " outside [0, " +
                     std::to_string(cfg.total_steps) + "]");
  }
  if (t <= cfg.warmup_steps) {
    if (cfg.warmup_steps == 0) return cfg.peak_lr;
    return cfg.peak_lr * static_cast<double>(t) /
           static_cast<double>(cfg.warmup_steps);
  }
  const double progress = static_cast<double>(t - cfg.warmup_steps) /
                          static_cast<double>(cfg.total_steps -
                                              cfg.warmup_steps);
  const double f = cfg.final_fraction;
  const double cosine = 0.5 * (1.0 + std::cos(M_PI * progress));
  return cfg.peak_lr * (f + (1.0 - f) * cosine);
}

}  // namespace mmpipe::scaling
