#pragma once

#include <span>
#include <utility>
#include <vector>

// Learning-rate scaling law (log-log power-law fit over non-embedding
// parameter count), the weight-decay rule, and the warmup + cosine schedule.

namespace mmpipe::scaling {

/// ln(lr) = slope_a * ln(params) + intercept_b.
struct ScalingFit {
  double slope_a = 0.0;
  double intercept_b = 0.0;
  std::vector<std::pair<double, double>> points;  // (params, lr) used for fit

  double predict(double params) const;
};

/// Ordinary least squares on (ln N, ln lr). Requires >= 2 points with >= 2
/// distinct N, all positive; throws Degenerate otherwise.
ScalingFit fit_loglog(std::span<const std::pair<double, double>> points);

/// The bundled production fit: lr = exp(-0.4214 ln N - 0.5535).
ScalingFit default_fit();

double predict_lr(const ScalingFit& fit, double params);

/// Weight decay rule: lambda = 0.1 * lr. Requires lr > 0.
double weight_decay_for(double lr);

struct ScheduleConfig {
  double peak_lr = 0.0;
  long warmup_steps = 2000;
  long total_steps = 200000;
  double final_fraction = 0.1;  // floor as a fraction of peak
  double grad_clip_norm = 1.0;
  double train_z_loss_scale = 0.0;  // 1e-4 for the largest model
};

/// Linear warmup from 0 to peak over warmup_steps, then cosine decay to
/// final_fraction * peak at total_steps. Throws OutOfRange for t outside
/// [0, total_steps].
double lr_at_step(const ScheduleConfig& cfg, long t);

}  // namespace mmpipe::scaling
