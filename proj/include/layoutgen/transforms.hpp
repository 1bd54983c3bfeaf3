#pragma once

#include <random>
#include <utility>
#include <vector>

#include "layoutgen/types.hpp"

namespace layoutgen {

/// Blend weight toward the blurred layout. Must stay below 0.5 so the
/// per-pixel argmax of the softened mask is provably the original label.
inline constexpr double kDefaultSoftAlpha = 0.4;

/// max(1, height / 32), the blur width used when none is given.
double default_blur_sigma(int height);

struct EditRegion {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;
};

/// Exact one-hot mask of a hard layout.
SoftMask one_hot(const HardLayout& layout);

/// Separable Gaussian blur per channel. Kernel truncated at 3 sigma,
/// normalized to sum 1; borders use symmetric reflection, so constant
/// fields pass through unchanged.
Tensor3 gaussian_blur(const Tensor3& t, double sigma);

/// alpha-blend of the blurred one-hot toward the one-hot, renormalized per
/// pixel. With alpha < 0.5 the argmax at every pixel stays the input label.
SoftMask soften_ground_truth(const HardLayout& layout, double sigma, double alpha);
SoftMask soften_ground_truth(const HardLayout& layout);

/// Per-pixel categorical draw from the mask columns via Gumbel-max.
/// Consumes classes-many draws per pixel in row-major pixel order.
HardLayout gumbel_sample(const SoftMask& m, std::mt19937_64& rng);

/// Replaces the columns inside the region with the uniform distribution,
/// marking them as free to repaint. Pixels outside are untouched.
SoftMask mark_crop(const SoftMask& m, const EditRegion& region);

/// Folds an augmented mask (real classes plus a trailing background channel)
/// back onto the input mask: out = generated + background_weight * input.
/// Where background is 1 the input passes through exactly.
SoftMask merge_edit(const AugmentedSoftMask& generated, const SoftMask& input);

/// Pixels whose augmented argmax is a real class, in row-major order.
std::vector<std::pair<int, int>> edited_pixel_set(const AugmentedSoftMask& generated);

}  // namespace layoutgen
