#pragma once

#include <vector>

#include "layoutgen/types.hpp"

namespace layoutgen {

// Floor applied to every normalization denominator.
inline constexpr double kNormEps = 1e-12;

/// Lenient mode floors vanishing denominators silently; Strict raises instead.
enum class NormalizeMode { Lenient, Strict };

/// Channel-wise spatial softmax: every class slice becomes a distribution
/// over pixels. Stabilized by per-channel max subtraction.
DensityMap spatial_softmax(const FeatureTensor& f);

/// Scales each class slice by its target proportion, so channel c carries
/// exactly the budget t[c] and the whole tensor carries mass 1.
WeightedDensity palette_weighting(const DensityMap& rho, const Palette& t);

/// L1-normalizes every pixel column into a class distribution. The per-pixel
/// argmax is unchanged by this step.
SoftMask pixel_normalize(const WeightedDensity& omega, NormalizeMode mode = NormalizeMode::Lenient);

struct SaaResult {
  DensityMap density;
  WeightedDensity weighted;
  SoftMask mask;
};

/// The three-step activation: softmax, budget weighting, pixel normalization.
SaaResult saa(const FeatureTensor& f, const Palette& t,
              NormalizeMode mode = NormalizeMode::Lenient);

/// C x N coupling between classes and flattened pixels. Row marginal targets
/// the palette, column marginal the uniform pixel histogram 1/N.
struct TransportPlan {
  int classes = 0;
  int pixels = 0;
  std::vector<double> data;  // row-major (class, pixel)
  Palette target;

  double& at(int c, int n) { return data[static_cast<std::size_t>(c) * pixels + n]; }
  double at(int c, int n) const { return data[static_cast<std::size_t>(c) * pixels + n]; }

  std::vector<double> row_sums() const;
  std::vector<double> col_sums() const;
  /// L1 distance of the row sums from the target palette.
  double row_residual_l1() const;
  /// L1 distance of the column sums from the uniform source histogram.
  double col_residual_l1() const;
};

/// Initial plan exp(f), flattened and stabilized per channel.
TransportPlan transport_init(const FeatureTensor& f, const Palette& t);

/// k pairs of row scaling (rows sum to the palette) followed by column
/// scaling (columns sum to 1/N).
void sinkhorn_iterate(TransportPlan& plan, int k, NormalizeMode mode = NormalizeMode::Lenient);

/// One k-step run from exp(f). With k = 1, N * plan equals the SAA mask.
TransportPlan sinkhorn(const FeatureTensor& f, const Palette& t, int k,
                       NormalizeMode mode = NormalizeMode::Lenient);

/// Per-pixel linear map from class channels to feature channels.
struct FusionWeights {
  std::vector<double> matrix;  // row-major (feature, class)
  int features = 0;
  int classes = 0;
  double at(int ftr, int cls) const {
    return matrix[static_cast<std::size_t>(ftr) * classes + cls];
  }
};

/// Maps the mask back into feature space and adds it to the features.
Tensor3 residual_fusion(const Tensor3& features, const SoftMask& mask, const FusionWeights& w);

}  // namespace layoutgen
