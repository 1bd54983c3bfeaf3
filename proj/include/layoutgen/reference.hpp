#pragma once

#include "layoutgen/losses.hpp"
#include "layoutgen/transport.hpp"
#include "layoutgen/types.hpp"

// Plain serial counterparts of the parallel kernels, written as direct
// textbook loops. They exist to pin down the parallel implementations in
// tests and benchmarks; keep them free of the shared reduction helpers.
namespace layoutgen::reference {

DensityMap spatial_softmax(const FeatureTensor& f);
WeightedDensity palette_weighting(const DensityMap& rho, const Palette& t);
SoftMask pixel_normalize(const WeightedDensity& omega);
SaaResult saa(const FeatureTensor& f, const Palette& t);

LossValue entropy_loss(const SoftMask& m);
LossValue spread_loss(const WeightedDensity& omega);
double cond_loss(const FeatureTensor& f, const Palette& t, const LossWeights& weights = {});
Gradient cond_loss_grad(const FeatureTensor& f, const Palette& t, const LossWeights& weights = {});

Tensor3 gaussian_blur(const Tensor3& t, double sigma);
TransportPlan sinkhorn(const FeatureTensor& f, const Palette& t, int k);

}  // namespace layoutgen::reference
