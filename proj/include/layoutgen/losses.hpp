#pragma once

#include <vector>

#include "layoutgen/transport.hpp"
#include "layoutgen/types.hpp"

namespace layoutgen {

struct LossWeights {
  double entropy = 1.0;
  double spread = 1.0;
};

/// Mean per-pixel Shannon entropy of the mask columns, in nats.
/// Zero exactly when every column is one-hot; at most ln(classes).
LossValue entropy_loss(const SoftMask& m);

/// Mean squared deviation of the per-pixel totals of omega from the uniform
/// value 1/N, scaled so a total of 0 contributes 1.
LossValue spread_loss(const WeightedDensity& omega);

/// weights.entropy * entropy_loss + weights.spread * spread_loss, evaluated
/// through the activation pipeline.
LossValue cond_loss(const FeatureTensor& f, const Palette& t, const LossWeights& weights = {});

/// Pulls a gradient with respect to the mask (plus a spread term on the
/// per-pixel totals) back through normalization, weighting and softmax.
/// g_mask holds dL/dm; spread_weight scales the built-in spread gradient.
Gradient saa_backward(const SaaResult& fwd, const Palette& t, const Tensor3& g_mask,
                      double spread_weight);

/// Analytic gradient of cond_loss with respect to the features.
Gradient cond_loss_grad(const FeatureTensor& f, const Palette& t, const LossWeights& weights = {});

/// KL divergence from the mask's mean class histogram to the target palette,
/// with the realized histogram floored at 1e-8 inside the log.
LossValue matching_loss(const SoftMask& m, const Palette& t);

/// Mean over the edited pixels of the inner product between the pre-edit
/// mask l and the post-edit mask m. Low values mean the edit replaced the
/// original content rather than echoing it.
LossValue novelty_loss(const SoftMask& m, const SoftMask& l,
                       const std::vector<std::pair<int, int>>& edited);

struct ScaleInput {
  FeatureTensor features;
  Palette palette;
};

/// Sum of cond_loss over a pyramid of scales sharing one palette.
LossValue multiscale_cond_loss(const std::vector<ScaleInput>& scales,
                               const LossWeights& weights = {});

}  // namespace layoutgen
