#include "layoutgen/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

#include "layoutgen/core.hpp"
#include "layoutgen/error.hpp"
#include "layoutgen/parallel.hpp"
#include "layoutgen/rng.hpp"

namespace layoutgen {

namespace {

// Symmetric reflection: -1 -> 0, n -> n-1. Loops so radii beyond the axis
// length still land inside.
int reflect(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int d = -radius; d <= radius; ++d) {
    const double v = std::exp(-0.5 * d * d / (sigma * sigma));
    k[d + radius] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

}  // namespace

double default_blur_sigma(int height) { return std::max(1.0, height / 32.0); }

SoftMask one_hot(const HardLayout& layout) {
  check_layout(layout);
  SoftMask out;
  out.tensor = Tensor3(layout.classes, layout.height, layout.width);
  const std::size_t N = static_cast<std::size_t>(layout.height) * layout.width;
  par::for_each(N, [&](std::size_t p) {
    out.tensor.data[static_cast<std::size_t>(layout.labels[p]) * N + p] = 1.0;
  });
  return out;
}

Tensor3 gaussian_blur(const Tensor3& t, double sigma) {
  if (!(sigma > 0.0)) throw ValidationError(Err::BadConfig, "blur width must be positive");
  const std::vector<double> k = gaussian_kernel(sigma);
  const int radius = static_cast<int>(k.size() / 2);
  const int C = t.classes, H = t.height, W = t.width;
  const std::size_t N = static_cast<std::size_t>(H) * W;

  Tensor3 tmp(C, H, W);
  par::for_each(t.data.size(), [&](std::size_t idx) {
    const int c = static_cast<int>(idx / N);
    const int i = static_cast<int>((idx % N) / W);
    const int j = static_cast<int>(idx % W);
    const double* src = t.channel(c) + static_cast<std::size_t>(i) * W;
    double acc = 0.0;
    for (int d = -radius; d <= radius; ++d) acc += k[d + radius] * src[reflect(j + d, W)];
    tmp.data[idx] = acc;
  });

  Tensor3 out(C, H, W);
  par::for_each(t.data.size(), [&](std::size_t idx) {
    const int c = static_cast<int>(idx / N);
    const int i = static_cast<int>((idx % N) / W);
    const int j = static_cast<int>(idx % W);
    const double* src = tmp.channel(c);
    double acc = 0.0;
    for (int d = -radius; d <= radius; ++d)
      acc += k[d + radius] * src[static_cast<std::size_t>(reflect(i + d, H)) * W + j];
    out.data[idx] = acc;
  });
  return out;
}

SoftMask soften_ground_truth(const HardLayout& layout, double sigma, double alpha) {
  if (!(alpha >= 0.0) || alpha >= 0.5)
    throw ValidationError(Err::AlphaOutOfRange, "blend weight must lie in [0, 0.5)");
  const SoftMask hard = one_hot(layout);
  const Tensor3 blurred = gaussian_blur(hard.tensor, sigma);

  SoftMask out;
  out.tensor = Tensor3(layout.classes, layout.height, layout.width);
  const int C = layout.classes;
  const std::size_t N = static_cast<std::size_t>(layout.height) * layout.width;
  par::for_each(N, [&](std::size_t p) {
    double s = 0.0;
    for (int c = 0; c < C; ++c) {
      const std::size_t i = static_cast<std::size_t>(c) * N + p;
      const double v = alpha * blurred.data[i] + (1.0 - alpha) * hard.tensor.data[i];
      out.tensor.data[i] = v;
      s += v;
    }
    const double inv = 1.0 / s;  // s is 1 up to rounding; the blur preserves column sums
    for (int c = 0; c < C; ++c) out.tensor.data[static_cast<std::size_t>(c) * N + p] *= inv;
  });
  return out;
}

SoftMask soften_ground_truth(const HardLayout& layout) {
  return soften_ground_truth(layout, default_blur_sigma(layout.height), kDefaultSoftAlpha);
}

HardLayout gumbel_sample(const SoftMask& m, std::mt19937_64& rng) {
  check_soft_mask(m);
  const int C = m.tensor.classes;
  const std::size_t N = static_cast<std::size_t>(m.tensor.pixels());

  HardLayout out;
  out.height = m.tensor.height;
  out.width = m.tensor.width;
  out.classes = C;
  out.labels.resize(N);
  // Serial by contract: one draw stream, pixels in row-major order.
  for (std::size_t p = 0; p < N; ++p) {
    int best = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < C; ++c) {
      const double v = m.tensor.data[static_cast<std::size_t>(c) * N + p];
      const double score =
          (v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity()) + gumbel01(rng);
      if (score > best_v) {
        best_v = score;
        best = c;
      }
    }
    out.labels[p] = static_cast<std::uint16_t>(best);
  }
  return out;
}

SoftMask mark_crop(const SoftMask& m, const EditRegion& region) {
  check_soft_mask(m);
  if (region.height < 1 || region.width < 1 || region.top < 0 || region.left < 0 ||
      region.top + region.height > m.tensor.height ||
      region.left + region.width > m.tensor.width)
    throw ValidationError(Err::RegionOutOfBounds, "edit region does not fit the grid");

  SoftMask out = m;
  const int C = m.tensor.classes;
  const std::size_t N = static_cast<std::size_t>(m.tensor.pixels());
  const double u = 1.0 / C;
  par::for_each(static_cast<std::size_t>(region.height) * region.width, [&](std::size_t k) {
    const int i = region.top + static_cast<int>(k) / region.width;
    const int j = region.left + static_cast<int>(k) % region.width;
    const std::size_t p = static_cast<std::size_t>(i) * m.tensor.width + j;
    for (int c = 0; c < C; ++c) out.tensor.data[static_cast<std::size_t>(c) * N + p] = u;
  });
  return out;
}

SoftMask merge_edit(const AugmentedSoftMask& generated, const SoftMask& input) {
  check_soft_mask(generated);
  check_soft_mask(input);
  if (generated.tensor.classes != input.tensor.classes + 1)
    throw ValidationError(Err::ShapeMismatch, "augmented mask must add exactly one channel");
  if (generated.background_index != input.tensor.classes)
    throw ValidationError(Err::ShapeMismatch, "background channel must be the trailing one");
  if (!generated.tensor.same_grid(input.tensor))
    throw ValidationError(Err::ShapeMismatch, "mask grids differ");

  const int C = input.tensor.classes;
  const std::size_t N = static_cast<std::size_t>(input.tensor.pixels());
  const double* bg = generated.tensor.channel(generated.background_index);

  SoftMask out;
  out.tensor = Tensor3(C, input.tensor.height, input.tensor.width);
  par::for_each(out.tensor.data.size(), [&](std::size_t i) {
    const std::size_t p = i % N;
    out.tensor.data[i] = generated.tensor.data[i] + bg[p] * input.tensor.data[i];
  });
  return out;
}

std::vector<std::pair<int, int>> edited_pixel_set(const AugmentedSoftMask& generated) {
  check_soft_mask(generated);
  const int C = generated.tensor.classes;
  const std::size_t N = static_cast<std::size_t>(generated.tensor.pixels());

  std::vector<std::pair<int, int>> out;
  for (std::size_t p = 0; p < N; ++p) {
    int best = 0;
    double best_v = generated.tensor.data[p];
    for (int c = 1; c < C; ++c) {
      const double v = generated.tensor.data[static_cast<std::size_t>(c) * N + p];
      if (v > best_v) {
        best_v = v;
        best = c;
      }
    }
    if (best != generated.background_index)
      out.emplace_back(static_cast<int>(p) / generated.tensor.width,
                       static_cast<int>(p) % generated.tensor.width);
  }
  return out;
}

}  // namespace layoutgen
