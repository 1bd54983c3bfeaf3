#pragma once

#include <vector>

#include "layoutgen/types.hpp"

namespace layoutgen {

/// KL divergence from the target palette to the realized class histogram of
/// the layout. The realized side is floored at 1e-8 and renormalized before
/// the log, so absent classes give a large finite value instead of infinity.
double proportion_kl(const Palette& target, const HardLayout& layout);

struct PopulationStats {
  std::vector<double> mean;        // length = classes
  std::vector<double> covariance;  // row-major classes x classes, unbiased
  int classes = 0;
  int count = 0;
};

/// Mean and covariance of the per-layout class histograms. A single layout
/// yields a zero covariance.
PopulationStats population_stats(const std::vector<HardLayout>& layouts);

/// Fréchet distance between two histogram populations:
/// |mu_a - mu_b|^2 + tr(Sa + Sb - 2 (Sa^1/2 Sb Sa^1/2)^1/2).
/// Matrix square roots go through symmetric eigendecompositions with
/// negative eigenvalues clipped at zero.
double frechet_distance(const PopulationStats& a, const PopulationStats& b);

}  // namespace layoutgen
