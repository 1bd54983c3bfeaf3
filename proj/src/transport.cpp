#include "layoutgen/transport.hpp"

#include <cmath>
#include <cstddef>

#include "layoutgen/core.hpp"
#include "layoutgen/error.hpp"
#include "layoutgen/parallel.hpp"

namespace layoutgen {

namespace {

void check_finite(const Tensor3& t) {
  int bad = 0;
  par::for_each(t.data.size(), [&](std::size_t i) {
    if (!std::isfinite(t.data[i])) bad = 1;
  });
  if (bad) throw ValidationError(Err::NonFinite, "feature tensor has a non-finite entry");
}

}  // namespace

DensityMap spatial_softmax(const FeatureTensor& f) {
  if (f.tensor.classes < 1 || f.tensor.pixels() < 1)
    throw ValidationError(Err::ShapeMismatch, "empty feature tensor");
  check_finite(f.tensor);

  const int C = f.tensor.classes;
  const std::size_t N = static_cast<std::size_t>(f.tensor.pixels());
  DensityMap out;
  out.tensor = Tensor3(C, f.tensor.height, f.tensor.width);

  std::vector<double> mx(C);
  par::for_each(C, [&](std::size_t c) {
    const double* src = f.tensor.channel(static_cast<int>(c));
    double m = src[0];
    for (std::size_t p = 1; p < N; ++p) m = std::max(m, src[p]);
    mx[c] = m;
  });

  par::for_each(out.tensor.data.size(), [&](std::size_t i) {
    const int c = static_cast<int>(i / N);
    out.tensor.data[i] = std::exp(f.tensor.data[i] - mx[c]);
  });

  for (int c = 0; c < C; ++c) {
    double* dst = out.tensor.channel(c);
    const double sum = par::block_sum(N, [&](std::size_t p) { return dst[p]; });
    const double inv = 1.0 / sum;  // >= N * exp(-inf gap) > 0 since the max term is 1
    par::for_each(N, [&](std::size_t p) { dst[p] *= inv; });
  }
  return out;
}

WeightedDensity palette_weighting(const DensityMap& rho, const Palette& t) {
  validate_palette(t);
  if (static_cast<int>(t.proportions.size()) != rho.tensor.classes)
    throw ValidationError(Err::ShapeMismatch, "palette size does not match channel count");

  WeightedDensity out;
  out.tensor = Tensor3(rho.tensor.classes, rho.tensor.height, rho.tensor.width);
  out.palette = t;
  const std::size_t N = static_cast<std::size_t>(rho.tensor.pixels());
  par::for_each(out.tensor.data.size(), [&](std::size_t i) {
    out.tensor.data[i] = t.proportions[i / N] * rho.tensor.data[i];
  });
  return out;
}

SoftMask pixel_normalize(const WeightedDensity& omega, NormalizeMode mode) {
  const Tensor3& w = omega.tensor;
  const int C = w.classes;
  const std::size_t N = static_cast<std::size_t>(w.pixels());

  SoftMask out;
  out.tensor = Tensor3(C, w.height, w.width);
  int vanished = 0;
  par::for_each(N, [&](std::size_t p) {
    double s = 0.0;
    for (int c = 0; c < C; ++c) s += w.data[static_cast<std::size_t>(c) * N + p];
    if (s < kNormEps) vanished = 1;
    const double inv = 1.0 / std::max(s, kNormEps);
    for (int c = 0; c < C; ++c) {
      const std::size_t i = static_cast<std::size_t>(c) * N + p;
      out.tensor.data[i] = w.data[i] * inv;
    }
  });
  if (vanished && mode == NormalizeMode::Strict)
    throw ValidationError(Err::AllZeroColumn, "a pixel column carries no mass");
  return out;
}

SaaResult saa(const FeatureTensor& f, const Palette& t, NormalizeMode mode) {
  SaaResult r;
  r.density = spatial_softmax(f);
  r.weighted = palette_weighting(r.density, t);
  r.mask = pixel_normalize(r.weighted, mode);
  return r;
}

std::vector<double> TransportPlan::row_sums() const {
  std::vector<double> s(classes);
  for (int c = 0; c < classes; ++c) {
    const double* row = data.data() + static_cast<std::size_t>(c) * pixels;
    s[c] = par::block_sum(pixels, [&](std::size_t n) { return row[n]; });
  }
  return s;
}

std::vector<double> TransportPlan::col_sums() const {
  std::vector<double> s(pixels);
  par::for_each(pixels, [&](std::size_t n) {
    double acc = 0.0;
    for (int c = 0; c < classes; ++c) acc += data[static_cast<std::size_t>(c) * pixels + n];
    s[n] = acc;
  });
  return s;
}

double TransportPlan::row_residual_l1() const {
  const std::vector<double> rs = row_sums();
  double r = 0.0;
  for (int c = 0; c < classes; ++c) r += std::abs(rs[c] - target.proportions[c]);
  return r;
}

double TransportPlan::col_residual_l1() const {
  const std::vector<double> cs = col_sums();
  const double uniform = 1.0 / pixels;
  return par::block_sum(pixels, [&](std::size_t n) { return std::abs(cs[n] - uniform); });
}

TransportPlan transport_init(const FeatureTensor& f, const Palette& t) {
  validate_palette(t);
  if (static_cast<int>(t.proportions.size()) != f.tensor.classes)
    throw ValidationError(Err::ShapeMismatch, "palette size does not match channel count");
  check_finite(f.tensor);

  TransportPlan plan;
  plan.classes = f.tensor.classes;
  plan.pixels = f.tensor.pixels();
  plan.target = t;
  plan.data.resize(f.tensor.data.size());
  const std::size_t N = static_cast<std::size_t>(plan.pixels);

  // Per-channel stabilization; the shift cancels in the first row scaling.
  std::vector<double> mx(plan.classes);
  par::for_each(plan.classes, [&](std::size_t c) {
    const double* src = f.tensor.channel(static_cast<int>(c));
    double m = src[0];
    for (std::size_t p = 1; p < N; ++p) m = std::max(m, src[p]);
    mx[c] = m;
  });
  par::for_each(plan.data.size(), [&](std::size_t i) {
    plan.data[i] = std::exp(f.tensor.data[i] - mx[i / N]);
  });
  return plan;
}

void sinkhorn_iterate(TransportPlan& plan, int k, NormalizeMode mode) {
  const int C = plan.classes;
  const std::size_t N = static_cast<std::size_t>(plan.pixels);
  const double uniform = 1.0 / plan.pixels;

  for (int it = 0; it < k; ++it) {
    int dead_row = 0;
    for (int c = 0; c < C; ++c) {
      double* row = plan.data.data() + static_cast<std::size_t>(c) * N;
      const double s = par::block_sum(N, [&](std::size_t n) { return row[n]; });
      if (s < kNormEps) dead_row = 1;
      const double scale = plan.target.proportions[c] / std::max(s, kNormEps);
      par::for_each(N, [&](std::size_t n) { row[n] *= scale; });
    }
    if (dead_row && mode == NormalizeMode::Strict)
      throw ValidationError(Err::ZeroRow, "a class row carries no mass");

    int dead_col = 0;
    par::for_each(N, [&](std::size_t n) {
      double s = 0.0;
      for (int c = 0; c < C; ++c) s += plan.data[static_cast<std::size_t>(c) * N + n];
      if (s < kNormEps) dead_col = 1;
      const double scale = uniform / std::max(s, kNormEps);
      for (int c = 0; c < C; ++c) plan.data[static_cast<std::size_t>(c) * N + n] *= scale;
    });
    if (dead_col && mode == NormalizeMode::Strict)
      throw ValidationError(Err::ZeroColumn, "a pixel column carries no mass");
  }
}

TransportPlan sinkhorn(const FeatureTensor& f, const Palette& t, int k, NormalizeMode mode) {
  if (k < 1) throw ValidationError(Err::BadConfig, "iteration count must be at least 1");
  TransportPlan plan = transport_init(f, t);
  sinkhorn_iterate(plan, k, mode);
  return plan;
}

Tensor3 residual_fusion(const Tensor3& features, const SoftMask& mask, const FusionWeights& w) {
  if (w.classes != mask.tensor.classes)
    throw ValidationError(Err::ShapeMismatch, "fusion weights do not match mask channels");
  if (w.features != features.classes)
    throw ValidationError(Err::ShapeMismatch, "fusion weights do not match feature channels");
  if (!features.same_grid(mask.tensor))
    throw ValidationError(Err::ShapeMismatch, "feature and mask grids differ");

  Tensor3 out(features.classes, features.height, features.width);
  const std::size_t N = static_cast<std::size_t>(features.pixels());
  par::for_each(out.data.size(), [&](std::size_t i) {
    const int ftr = static_cast<int>(i / N);
    const std::size_t p = i % N;
    double acc = features.data[i];
    for (int c = 0; c < w.classes; ++c)
      acc += w.at(ftr, c) * mask.tensor.data[static_cast<std::size_t>(c) * N + p];
    out.data[i] = acc;
  });
  return out;
}

}  // namespace layoutgen
