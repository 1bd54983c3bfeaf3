#include "layoutgen/losses.hpp"

#include <cmath>
#include <cstddef>

#include "layoutgen/core.hpp"
#include "layoutgen/error.hpp"
#include "layoutgen/parallel.hpp"

namespace layoutgen {

LossValue entropy_loss(const SoftMask& m) {
  check_soft_mask(m);
  const int C = m.tensor.classes;
  const std::size_t N = static_cast<std::size_t>(m.tensor.pixels());

  LossValue out;
  out.height = m.tensor.height;
  out.width = m.tensor.width;
  out.per_pixel.resize(N);
  par::for_each(N, [&](std::size_t p) {
    double e = 0.0;
    for (int c = 0; c < C; ++c) {
      const double v = m.tensor.data[static_cast<std::size_t>(c) * N + p];
      if (v > 0.0) e -= v * std::log(v);
    }
    out.per_pixel[p] = e;
  });
  out.value = par::block_sum(N, [&](std::size_t p) { return out.per_pixel[p]; }) / N;
  return out;
}

LossValue spread_loss(const WeightedDensity& omega) {
  const Tensor3& w = omega.tensor;
  const int C = w.classes;
  const std::size_t N = static_cast<std::size_t>(w.pixels());
  int bad = 0;
  par::for_each(w.data.size(), [&](std::size_t i) {
    if (!std::isfinite(w.data[i]) || w.data[i] < 0.0) bad = 1;
  });
  if (bad) throw ValidationError(Err::NegativeEntry, "weighted density has a negative or non-finite entry");

  LossValue out;
  out.height = w.height;
  out.width = w.width;
  out.per_pixel.resize(N);
  par::for_each(N, [&](std::size_t p) {
    double s = 0.0;
    for (int c = 0; c < C; ++c) s += w.data[static_cast<std::size_t>(c) * N + p];
    const double d = 1.0 - static_cast<double>(N) * s;
    out.per_pixel[p] = d * d;
  });
  out.value = par::block_sum(N, [&](std::size_t p) { return out.per_pixel[p]; }) / N;
  return out;
}

LossValue cond_loss(const FeatureTensor& f, const Palette& t, const LossWeights& weights) {
  const SaaResult fwd = saa(f, t);
  const LossValue ent = entropy_loss(fwd.mask);
  const LossValue spr = spread_loss(fwd.weighted);
  LossValue out;
  out.height = ent.height;
  out.width = ent.width;
  out.value = weights.entropy * ent.value + weights.spread * spr.value;
  out.per_pixel.resize(ent.per_pixel.size());
  par::for_each(out.per_pixel.size(), [&](std::size_t p) {
    out.per_pixel[p] = weights.entropy * ent.per_pixel[p] + weights.spread * spr.per_pixel[p];
  });
  return out;
}

Gradient saa_backward(const SaaResult& fwd, const Palette& t, const Tensor3& g_mask,
                      double spread_weight) {
  const Tensor3& rho = fwd.density.tensor;
  const Tensor3& w = fwd.weighted.tensor;
  const Tensor3& m = fwd.mask.tensor;
  if (!g_mask.same_shape(m))
    throw ValidationError(Err::ShapeMismatch, "mask gradient shape differs from mask");

  const int C = m.classes;
  const std::size_t N = static_cast<std::size_t>(m.pixels());
  Tensor3 g_omega(C, m.height, m.width);

  // Through the pixel normalization: columns with vanishing total see the
  // floored denominator, which is a plain 1/eps scale.
  par::for_each(N, [&](std::size_t p) {
    double sigma = 0.0;
    for (int c = 0; c < C; ++c) sigma += w.data[static_cast<std::size_t>(c) * N + p];
    const double spread_term = spread_weight * (-2.0) * (1.0 - static_cast<double>(N) * sigma);
    if (sigma >= kNormEps) {
      double dot = 0.0;
      for (int c = 0; c < C; ++c) {
        const std::size_t i = static_cast<std::size_t>(c) * N + p;
        dot += g_mask.data[i] * m.data[i];
      }
      const double inv = 1.0 / sigma;
      for (int c = 0; c < C; ++c) {
        const std::size_t i = static_cast<std::size_t>(c) * N + p;
        g_omega.data[i] = (g_mask.data[i] - dot) * inv + spread_term;
      }
    } else {
      const double inv = 1.0 / kNormEps;
      for (int c = 0; c < C; ++c) {
        const std::size_t i = static_cast<std::size_t>(c) * N + p;
        g_omega.data[i] = g_mask.data[i] * inv + spread_term;
      }
    }
  });

  // Through the budget weighting and the per-channel softmax.
  Gradient out;
  out.tensor = Tensor3(C, m.height, m.width);
  for (int c = 0; c < C; ++c) {
    const double* gw = g_omega.channel(c);
    const double* rc = rho.channel(c);
    double* gf = out.tensor.channel(c);
    const double tc = t.proportions[c];
    const double dot = par::block_sum(N, [&](std::size_t p) { return tc * gw[p] * rc[p]; });
    par::for_each(N, [&](std::size_t p) { gf[p] = rc[p] * (tc * gw[p] - dot); });
  }
  return out;
}

Gradient cond_loss_grad(const FeatureTensor& f, const Palette& t, const LossWeights& weights) {
  const SaaResult fwd = saa(f, t);
  const Tensor3& m = fwd.mask.tensor;
  const std::size_t N = static_cast<std::size_t>(m.pixels());

  Tensor3 g_mask(m.classes, m.height, m.width);
  const double scale = weights.entropy / static_cast<double>(N);
  par::for_each(g_mask.data.size(), [&](std::size_t i) {
    const double v = m.data[i];
    g_mask.data[i] = v > 0.0 ? -scale * (std::log(v) + 1.0) : 0.0;
  });
  return saa_backward(fwd, t, g_mask, weights.spread);
}

LossValue matching_loss(const SoftMask& m, const Palette& t) {
  check_soft_mask(m);
  validate_palette(t);
  if (static_cast<int>(t.proportions.size()) != m.tensor.classes)
    throw ValidationError(Err::ShapeMismatch, "palette size does not match mask channels");

  const Palette realized = soft_histogram(m);
  double v = 0.0;
  for (std::size_t c = 0; c < t.proportions.size(); ++c) {
    const double tc = t.proportions[c];
    if (tc <= 0.0) continue;  // zero-budget classes contribute nothing
    v += tc * std::log(tc / std::max(realized.proportions[c], 1e-8));
  }
  LossValue out;
  out.value = v;
  out.height = m.tensor.height;
  out.width = m.tensor.width;
  return out;
}

LossValue novelty_loss(const SoftMask& m, const SoftMask& l,
                       const std::vector<std::pair<int, int>>& edited) {
  check_soft_mask(m);
  check_soft_mask(l);
  if (!m.tensor.same_shape(l.tensor))
    throw ValidationError(Err::ShapeMismatch, "pre- and post-edit masks differ in shape");
  if (edited.empty()) throw ValidationError(Err::EmptyEditSet, "no edited pixels given");

  for (const auto& [i, j] : edited) {
    if (i < 0 || i >= m.tensor.height || j < 0 || j >= m.tensor.width)
      throw ValidationError(Err::RegionOutOfBounds, "edited pixel outside the grid");
  }
  const int C = m.tensor.classes;
  const std::size_t N = static_cast<std::size_t>(m.tensor.pixels());
  const double sum = par::block_sum(edited.size(), [&](std::size_t k) {
    const std::size_t p =
        static_cast<std::size_t>(edited[k].first) * m.tensor.width + edited[k].second;
    double dot = 0.0;
    for (int c = 0; c < C; ++c) {
      const std::size_t idx = static_cast<std::size_t>(c) * N + p;
      dot += l.tensor.data[idx] * m.tensor.data[idx];
    }
    return dot;
  });

  LossValue out;
  out.value = sum / static_cast<double>(edited.size());
  out.height = m.tensor.height;
  out.width = m.tensor.width;
  return out;
}

LossValue multiscale_cond_loss(const std::vector<ScaleInput>& scales, const LossWeights& weights) {
  if (scales.empty()) throw ValidationError(Err::EmptyPyramid, "no scales given");
  for (std::size_t s = 1; s < scales.size(); ++s) {
    if (scales[s].palette.proportions != scales[0].palette.proportions)
      throw ValidationError(Err::ShapeMismatch, "scales disagree on the palette");
  }
  LossValue out;
  out.value = 0.0;
  for (const ScaleInput& s : scales) out.value += cond_loss(s.features, s.palette, weights).value;
  return out;
}

}  // namespace layoutgen
