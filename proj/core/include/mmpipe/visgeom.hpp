#pragma once

#include <array>
#include <optional>
#include <vector>

// Vision-side token geometry: patch grids, positional-embedding
// interpolation, the three VL connector transforms, sub-image decomposition
// for high-resolution inputs, and few-shot token budgeting. Everything here
// is forward math on small grids; no pixel data is touched (geometry only).

namespace mmpipe::visgeom {

struct PatchGrid {
  int res_h = 0;
  int res_w = 0;
  int patch = 0;
  int grid_h = 0;
  int grid_w = 0;

  int token_count() const { return grid_h * grid_w; }
};

/// Requires exact divisibility; throws IndivisibleResolution otherwise.
PatchGrid patch_grid(int res_h, int res_w, int patch);
PatchGrid patch_grid(int res_side, int patch);

/// h x w x channels grid of reals, row-major, channel-minor.
struct FeatureGrid {
  int h = 0;
  int w = 0;
  int channels = 0;
  std::vector<double> values;  // size h*w*channels

  static FeatureGrid zeros(int h, int w, int channels);
  double at(int r, int c, int ch) const;
  double& at(int r, int c, int ch);
};

/// Bilinear resampling with corner alignment: output corners equal input
/// corners, same-size input is returned unchanged, channels are independent.
FeatureGrid interpolate_pos_embed(const FeatureGrid& grid, int new_h,
                                  int new_w);

/// k token vectors of dimension d, row-major.
using TokenMatrix = std::vector<std::vector<double>>;

struct LinearProjection {
  TokenMatrix weight;        // d_out x d_in
  std::vector<double> bias;  // d_out, or empty for no bias
};

/// Adaptive average pooling to out_side x out_side (windows partition the
/// input as evenly as possible: cell i covers [floor(i*in/out),
/// floor((i+1)*in/out))), flattened row-major. The projection is applied only
/// when provided; identity otherwise.
TokenMatrix avg_pool_connect(const FeatureGrid& features, int out_side,
                             const LinearProjection* projection = nullptr);

struct AttnPoolWeights {
  TokenMatrix queries;  // k x d
  TokenMatrix key_w;    // d x d
  TokenMatrix value_w;  // d x d
  TokenMatrix out_w;    // d x d_out
};

/// Single-head scaled dot-product cross-attention over the flattened grid:
/// softmax(Q K^T / sqrt(d)) V, then the output projection. Each output row is
/// a convex combination of value rows.
TokenMatrix attn_pool_connect(const FeatureGrid& features,
                              const AttnPoolWeights& weights);

struct CAbstractorParams {
  int kernel_side = 3;  // odd
  // kernel_side^2 values (shared across channels) or channels*kernel_side^2
  // (per-channel). Empty means the identity kernel.
  std::vector<double> depthwise_kernel;
  std::optional<LinearProjection> pointwise;  // identity when absent
};

/// Depthwise convolution (zero padding) -> adaptive average pool to
/// out_side x out_side -> pointwise linear. With identity kernel and identity
/// pointwise this reduces exactly to avg_pool_connect.
TokenMatrix cabstractor_connect(const FeatureGrid& features, int out_side,
                                const CAbstractorParams& params = {});

struct CropRect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool operator==(const CropRect&) const = default;
};

struct SubImageLayout {
  int input_px = 0;
  int base_px = 672;
  // Five crops in the coordinates of the (2*base_px)^2 resize: the overview
  // (full frame, downsampled to base_px) followed by the four quadrants.
  std::array<CropRect, 5> crops{};
  int tokens_per_crop = 144;

  int total_tokens() const { return 5 * tokens_per_crop; }
};

/// High-resolution sub-image decomposition: one downsampled overview plus the
/// four quadrants of the 2x-base resize, each encoded at base_px x base_px.
SubImageLayout decompose_image(int input_side, int base_side = 672,
                               int tokens_per_crop = 144);

struct FewShotBudget {
  int shots_k = 0;
  int hires_last_n = 0;  // 0 <= hires_last_n <= shots_k
  int hi_tokens = 720;   // per source image under decomposition
  int lo_tokens = 144;
  int images_per_example = 1;
};

struct FewShotUsage {
  int effective_images = 0;  // encoder invocations (decomposed images count 5x)
  int image_tokens = 0;
};

/// Mixed-resolution few-shot accounting: the last N in-context examples are
/// decomposed (5 effective images, hi_tokens each source image); the
/// remaining K-N stay at low resolution.
FewShotUsage fewshot_token_budget(const FewShotBudget& budget);

}  // namespace mmpipe::visgeom
