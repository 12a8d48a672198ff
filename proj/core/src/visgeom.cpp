#include "mmpipe/visgeom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mmpipe/errors.hpp"

namespace mmpipe::visgeom {

namespace {

// Adaptive pooling window: [floor(i*in/out), floor((i+1)*in/out)), widened to
// one cell when out > in would make it empty.
std::pair<int, int> pool_window(int i, int in, int out) {
  int begin = static_cast<int>((static_cast<long>(i) * in) / out);
  int end = static_cast<int>((static_cast<long>(i + 1) * in) / out);
  if (end <= begin) end = begin + 1;
  return {begin, end};
}

TokenMatrix apply_projection(const TokenMatrix& tokens,
                             const LinearProjection& proj) {
  if (tokens.empty()) return tokens;
  const std::size_t d_in = tokens.front().size();
  const std::size_t d_out = proj.weight.size();
  for (const auto& row : proj.weight) {
    if (row.size() != d_in) {
      throw ShapeMismatch("projection weight columns != token dimension");
    }
  }
  if (!proj.bias.empty() && proj.bias.size() != d_out) {
    throw ShapeMismatch("projection bias size != output dimension");
  }
  TokenMatrix out(tokens.size(), std::vector<double>(d_out, 0.0));
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    for (std::size_t o = 0; o < d_out; ++o) {
      double acc = proj.bias.empty() ? 0.0 : proj.bias[o];
      for (std::size_t i = 0; i < d_in; ++i) {
        acc += proj.weight[o][i] * tokens[t][i];
      }
      out[t][o] = acc;
    }
  }
  return out;
}

TokenMatrix adaptive_avg_pool(const FeatureGrid& g, int out_side) {
  TokenMatrix tokens;
  tokens.reserve(static_cast<std::size_t>(out_side) * out_side);
  for (int orow = 0; orow < out_side; ++orow) {
    const auto [r0, r1] = pool_window(orow, g.h, out_side);
    for (int ocol = 0; ocol < out_side; ++ocol) {
      const auto [c0, c1] = pool_window(ocol, g.w, out_side);
      std::vector<double> cell(static_cast<std::size_t>(g.channels), 0.0);
      const double inv = 1.0 / (static_cast<double>(r1 - r0) * (c1 - c0));
      for (int r = r0; r < r1; ++r) {
        for (int c = c0; c < c1; ++c) {
          for (int ch = 0; ch < g.channels; ++ch) {
            cell[static_cast<std::size_t>(ch)] += g.at(r, c, ch);
          }
        }
      }
      for (double& v : cell) v *= inv;
      tokens.push_back(std::move(cell));
    }
  }
  return tokens;
}

// Matrix-vector product row·M for d_in-vector and d_in x d_out matrix.
std::vector<double> vec_mat(const std::vector<double>& v,
                            const TokenMatrix& m) {
  if (m.size() != v.size()) {
    throw ShapeMismatch("matrix rows != vector dimension");
  }
  if (m.empty()) return {};
  const std::size_t d_out = m.front().size();
  std::vector<double> out(d_out, 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (m[i].size() != d_out) throw ShapeMismatch("ragged weight matrix");
    for (std::size_t o = 0; o < d_out; ++o) {
      out[o] += v[i] * m[i][o];
    }
  }
  return out;
}

}  // namespace

PatchGrid patch_grid(int res_h, int res_w, int patch) {
  if (res_h <= 0 || res_w <= 0 || patch <= 0) {
    throw InvalidParams("resolution and patch size must be positive");
  }
  if (res_h % patch != 0 || res_w % patch != 0) {
    throw IndivisibleResolution(std::to_string(res_h) + "x" +
                                std::to_string(res_w) +
                                " not divisible by patch " +
                                std::to_string(patch));
  }
  return {res_h, res_w, patch, res_h / patch, res_w / patch};
}

PatchGrid patch_grid(int res_side, int patch) {
  return patch_grid(res_side, res_side, patch);
}

FeatureGrid FeatureGrid::zeros(int h, int w, int channels) {
  FeatureGrid g;
  g.h = h;
  g.w = w;
  g.channels = channels;
  g.values.assign(static_cast<std::size_t>(h) * w * channels, 0.0);
  return g;
}

double FeatureGrid::at(int r, int c, int ch) const {
  return values[(static_cast<std::size_t>(r) * w + c) * channels + ch];
}

double& FeatureGrid::at(int r, int c, int ch) {
  return values[(static_cast<std::size_t>(r) * w + c) * channels + ch];
}

FeatureGrid interpolate_pos_embed(const FeatureGrid& grid, int new_h,
                                  int new_w) {
  if (grid.h < 1 || grid.w < 1 || new_h < 1 || new_w < 1) {
    throw InvalidParams("grid dimensions must be >= 1");
  }
  if (new_h == grid.h && new_w == grid.w) return grid;

  FeatureGrid out = FeatureGrid::zeros(new_h, new_w, grid.channels);
  // Corner-aligned source coordinate for output index i: i*(in-1)/(out-1).
  const auto src_coord = [](int i, int in, int out) -> double {
    if (out == 1 || in == 1) return 0.0;
    return static_cast<double>(i) * (in - 1) / (out - 1);
  };
  for (int r = 0; r < new_h; ++r) {
    const double sr = src_coord(r, grid.h, new_h);
    const int r0 = std::min(static_cast<int>(sr), grid.h - 1);
    const int r1 = std::min(r0 + 1, grid.h - 1);
    const double fr = sr - r0;
    for (int c = 0; c < new_w; ++c) {
      const double sc = src_coord(c, grid.w, new_w);
      const int c0 = std::min(static_cast<int>(sc), grid.w - 1);
      const int c1 = std::min(c0 + 1, grid.w - 1);
      const double fc = sc - c0;
      for (int ch = 0; ch < grid.channels; ++ch) {
        const double top =
            grid.at(r0, c0, ch) * (1.0 - fc) + grid.at(r0, c1, ch) * fc;
        const double bottom =
            grid.at(r1, c0, ch) * (1.0 - fc) + grid.at(r1, c1, ch) * fc;
        out.at(r, c, ch) = top * (1.0 - fr) + bottom * fr;
      }
    }
  }
  return out;
}

TokenMatrix avg_pool_connect(const FeatureGrid& features, int out_side,
                             const LinearProjection* projection) {
  if (out_side < 1) throw InvalidParams("out_side must be >= 1");
  TokenMatrix tokens = adaptive_avg_pool(features, out_side);
  if (projection != nullptr) {
    tokens = apply_projection(tokens, *projection);
  }
  return tokens;
}

TokenMatrix attn_pool_connect(const FeatureGrid& features,
                              const AttnPoolWeights& weights) {
  const std::size_t d = static_cast<std::size_t>(features.channels);
  const std::size_t n = static_cast<std::size_t>(features.h) * features.w;
  if (n == 0) throw ShapeMismatch("empty feature grid");
  for (const auto& q : weights.queries) {
    if (q.size() != d) throw ShapeMismatch("query dimension != channels");
  }

  // Flatten the grid row-major into n feature vectors.
  TokenMatrix feats(n, std::vector<double>(d));
  for (int r = 0; r < features.h; ++r) {
    for (int c = 0; c < features.w; ++c) {
      for (int ch = 0; ch < features.channels; ++ch) {
        feats[static_cast<std::size_t>(r) * features.w + c]
             [static_cast<std::size_t>(ch)] = features.at(r, c, ch);
      }
    }
  }

  TokenMatrix keys(n), vals(n);
  for (std::size_t i = 0; i < n; ++i) {
    keys[i] = vec_mat(feats[i], weights.key_w);
    vals[i] = vec_mat(feats[i], weights.value_w);
    if (keys[i].size() != d) throw ShapeMismatch("key_w must be d x d");
  }

  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  TokenMatrix out;
  out.reserve(weights.queries.size());
  for (const std::vector<double>& q : weights.queries) {
    std::vector<double> scores(n, 0.0);
    double max_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t k = 0; k < d; ++k) dot += q[k] * keys[i][k];
      scores[i] = dot * scale;
      max_score = std::max(max_score, scores[i]);
    }
    double denom = 0.0;
    for (double& s : scores) {
      s = std::exp(s - max_score);
      denom += s;
    }
    std::vector<double> pooled(vals.front().size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double wgt = scores[i] / denom;
      for (std::size_t k = 0; k < pooled.size(); ++k) {
        pooled[k] += wgt * vals[i][k];
      }
    }
    out.push_back(vec_mat(pooled, weights.out_w));
  }
  return out;
}

TokenMatrix cabstractor_connect(const FeatureGrid& features, int out_side,
                                const CAbstractorParams& params) {
  const int k = params.kernel_side;
  if (k < 1 || k % 2 == 0) {
    throw InvalidParams("kernel side must be odd and positive");
  }
  const auto per_channel = static_cast<std::size_t>(k) * k;
  const bool shared = params.depthwise_kernel.size() == per_channel;
  const bool channelwise =
      params.depthwise_kernel.size() ==
      per_channel * static_cast<std::size_t>(features.channels);
  if (!params.depthwise_kernel.empty() && !shared && !channelwise) {
    throw ShapeMismatch("depthwise kernel must be k*k or channels*k*k values");
  }

  FeatureGrid conv = FeatureGrid::zeros(features.h, features.w,
                                        features.channels);
  const int half = k / 2;
  for (int r = 0; r < features.h; ++r) {
    for (int c = 0; c < features.w; ++c) {
      for (int ch = 0; ch < features.channels; ++ch) {
        if (params.depthwise_kernel.empty()) {
          conv.at(r, c, ch) = features.at(r, c, ch);
          continue;
        }
        const std::size_t base =
            channelwise ? per_channel * static_cast<std::size_t>(ch) : 0;
        double acc = 0.0;
        for (int dr = -half; dr <= half; ++dr) {
          for (int dc = -half; dc <= half; ++dc) {
            const int rr = r + dr;
            const int cc = c + dc;
            if (rr < 0 || rr >= features.h || cc < 0 || cc >= features.w) {
              continue;  // zero padding
            }
            const std::size_t ki =
                base + static_cast<std::size_t>(dr + half) * k + (dc + half);
            acc += params.depthwise_kernel[ki] * features.at(rr, cc, ch);
          }
        }
        conv.at(r, c, ch) = acc;
      }
    }
  }

  return avg_pool_connect(conv, out_side,
                          params.pointwise ? &*params.pointwise : nullptr);
}

SubImageLayout decompose_image(int input_side, int base_side,
                               int tokens_per_crop) {
  if (input_side < base_side) {
    throw InvalidParams("input must be at least base resolution");
  }
  SubImageLayout layout;
  layout.input_px = input_side;
  layout.base_px = base_side;
  layout.tokens_per_crop = tokens_per_crop;
  const int b = base_side;
  layout.crops = {CropRect{0, 0, 2 * b, 2 * b},  // overview, downsampled
                  CropRect{0, 0, b, b}, CropRect{b, 0, b, b},
                  CropRect{0, b, b, b}, CropRect{b, b, b, b}};
  return layout;
}

FewShotUsage fewshot_token_budget(const FewShotBudget& budget) {
  if (budget.hires_last_n < 0 || budget.hires_last_n > budget.shots_k) {
    throw InvalidParams("hires_last_n must lie in [0, shots_k]");
  }
  if (budget.shots_k < 0 || budget.images_per_example < 0) {
    throw InvalidParams("negative shot parameters");
  }
  const int hi_examples = budget.hires_last_n;
  const int lo_examples = budget.shots_k - budget.hires_last_n;
  FewShotUsage usage;
  usage.effective_images =
      hi_examples * budget.images_per_example * 5 +
      lo_examples * budget.images_per_example;
  usage.image_tokens = hi_examples * budget.images_per_example *
                           budget.hi_tokens +
                       lo_examples * budget.images_per_example *
                           budget.lo_tokens;
  return usage;
}

}  // namespace mmpipe::visgeom
