#include "layoutgen/reference.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

#include "layoutgen/core.hpp"
#include "layoutgen/error.hpp"

namespace layoutgen::reference {

namespace {
constexpr double kEps = 1e-12;
}

DensityMap spatial_softmax(const FeatureTensor& f) {
  const int C = f.tensor.classes;
  const std::size_t N = static_cast<std::size_t>(f.tensor.pixels());
  DensityMap out;
  out.tensor = Tensor3(C, f.tensor.height, f.tensor.width);
  for (int c = 0; c < C; ++c) {
    const double* src = f.tensor.channel(c);
    double* dst = out.tensor.channel(c);
    double mx = src[0];
    for (std::size_t p = 1; p < N; ++p) mx = std::max(mx, src[p]);
    double sum = 0.0;
    for (std::size_t p = 0; p < N; ++p) {
      dst[p] = std::exp(src[p] - mx);
      sum += dst[p];
    }
    for (std::size_t p = 0; p < N; ++p) dst[p] /= sum;
  }
  return out;
}

WeightedDensity palette_weighting(const DensityMap& rho, const Palette& t) {
  WeightedDensity out;
  out.tensor = Tensor3(rho.tensor.classes, rho.tensor.height, rho.tensor.width);
  out.palette = t;
  const std::size_t N = static_cast<std::size_t>(rho.tensor.pixels());
  for (int c = 0; c < rho.tensor.classes; ++c) {
    const double* src = rho.tensor.channel(c);
    double* dst = out.tensor.channel(c);
    for (std::size_t p = 0; p < N; ++p) dst[p] = t.proportions[c] * src[p];
  }
  return out;
}

SoftMask pixel_normalize(const WeightedDensity& omega) {
  const int C = omega.tensor.classes;
  const std::size_t N = static_cast<std::size_t>(omega.tensor.pixels());
  SoftMask out;
  out.tensor = Tensor3(C, omega.tensor.height, omega.tensor.width);
  for (std::size_t p = 0; p < N; ++p) {
    double s = 0.0;
    for (int c = 0; c < C; ++c) s += omega.tensor.data[static_cast<std::size_t>(c) * N + p];
    const double inv = 1.0 / std::max(s, kEps);
    for (int c = 0; c < C; ++c) {
      const std::size_t i = static_cast<std::size_t>(c) * N + p;
      out.tensor.data[i] = omega.tensor.data[i] * inv;
    }
  }
  return out;
}

SaaResult saa(const FeatureTensor& f, const Palette& t) {
  SaaResult r;
  r.density = reference::spatial_softmax(f);
  r.weighted = reference::palette_weighting(r.density, t);
  r.mask = reference::pixel_normalize(r.weighted);
  return r;
}

LossValue entropy_loss(const SoftMask& m) {
  const int C = m.tensor.classes;
  const std::size_t N = static_cast<std::size_t>(m.tensor.pixels());
  LossValue out;
  out.height = m.tensor.height;
  out.width = m.tensor.width;
  out.per_pixel.resize(N);
  double total = 0.0;
  for (std::size_t p = 0; p < N; ++p) {
    double e = 0.0;
    for (int c = 0; c < C; ++c) {
      const double v = m.tensor.data[static_cast<std::size_t>(c) * N + p];
      if (v > 0.0) e -= v * std::log(v);
    }
    out.per_pixel[p] = e;
    total += e;
  }
  out.value = total / static_cast<double>(N);
  return out;
}

LossValue spread_loss(const WeightedDensity& omega) {
  const int C = omega.tensor.classes;
  const std::size_t N = static_cast<std::size_t>(omega.tensor.pixels());
  LossValue out;
  out.height = omega.tensor.height;
  out.width = omega.tensor.width;
  out.per_pixel.resize(N);
  double total = 0.0;
  for (std::size_t p = 0; p < N; ++p) {
    double s = 0.0;
    for (int c = 0; c < C; ++c) s += omega.tensor.data[static_cast<std::size_t>(c) * N + p];
    const double d = 1.0 - static_cast<double>(N) * s;
    out.per_pixel[p] = d * d;
    total += d * d;
  }
  out.value = total / static_cast<double>(N);
  return out;
}

double cond_loss(const FeatureTensor& f, const Palette& t, const LossWeights& weights) {
  const SaaResult fwd = reference::saa(f, t);
  return weights.entropy * reference::entropy_loss(fwd.mask).value +
         weights.spread * reference::spread_loss(fwd.weighted).value;
}

Gradient cond_loss_grad(const FeatureTensor& f, const Palette& t, const LossWeights& weights) {
  const SaaResult fwd = reference::saa(f, t);
  const int C = f.tensor.classes;
  const std::size_t N = static_cast<std::size_t>(f.tensor.pixels());
  const Tensor3& m = fwd.mask.tensor;
  const Tensor3& w = fwd.weighted.tensor;
  const Tensor3& rho = fwd.density.tensor;

  // dL/dm of the entropy term.
  Tensor3 gm(C, f.tensor.height, f.tensor.width);
  for (std::size_t i = 0; i < gm.data.size(); ++i) {
    const double v = m.data[i];
    gm.data[i] = v > 0.0 ? -weights.entropy * (std::log(v) + 1.0) / static_cast<double>(N) : 0.0;
  }

  // Back through the per-pixel normalization, plus the spread term which
  // acts on the column totals directly.
  Tensor3 gw(C, f.tensor.height, f.tensor.width);
  for (std::size_t p = 0; p < N; ++p) {
    double sigma = 0.0;
    for (int c = 0; c < C; ++c) sigma += w.data[static_cast<std::size_t>(c) * N + p];
    const double spread = weights.spread * (-2.0) * (1.0 - static_cast<double>(N) * sigma);
    if (sigma >= kEps) {
      double dot = 0.0;
      for (int c = 0; c < C; ++c) {
        const std::size_t i = static_cast<std::size_t>(c) * N + p;
        dot += gm.data[i] * m.data[i];
      }
      for (int c = 0; c < C; ++c) {
        const std::size_t i = static_cast<std::size_t>(c) * N + p;
        gw.data[i] = (gm.data[i] - dot) / sigma + spread;
      }
    } else {
      for (int c = 0; c < C; ++c) {
        const std::size_t i = static_cast<std::size_t>(c) * N + p;
        gw.data[i] = gm.data[i] / kEps + spread;
      }
    }
  }

  // Back through the palette weighting and the channel softmax.
  Gradient out;
  out.tensor = Tensor3(C, f.tensor.height, f.tensor.width);
  for (int c = 0; c < C; ++c) {
    double dot = 0.0;
    for (std::size_t p = 0; p < N; ++p)
      dot += t.proportions[c] * gw.data[static_cast<std::size_t>(c) * N + p] *
             rho.data[static_cast<std::size_t>(c) * N + p];
    for (std::size_t p = 0; p < N; ++p) {
      const std::size_t i = static_cast<std::size_t>(c) * N + p;
      out.tensor.data[i] = rho.data[i] * (t.proportions[c] * gw.data[i] - dot);
    }
  }
  return out;
}

Tensor3 gaussian_blur(const Tensor3& t, double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double ksum = 0.0;
  for (int d = -radius; d <= radius; ++d) {
    k[d + radius] = std::exp(-0.5 * d * d / (sigma * sigma));
    ksum += k[d + radius];
  }
  for (double& v : k) v /= ksum;

  const auto reflect = [](int i, int n) {
    while (i < 0 || i >= n) {
      if (i < 0) i = -i - 1;
      if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
  };

  const int C = t.classes, H = t.height, W = t.width;
  Tensor3 tmp(C, H, W), out(C, H, W);
  for (int c = 0; c < C; ++c) {
    for (int i = 0; i < H; ++i) {
      for (int j = 0; j < W; ++j) {
        double acc = 0.0;
        for (int d = -radius; d <= radius; ++d) acc += k[d + radius] * t(c, i, reflect(j + d, W));
        tmp(c, i, j) = acc;
      }
    }
  }
  for (int c = 0; c < C; ++c) {
    for (int i = 0; i < H; ++i) {
      for (int j = 0; j < W; ++j) {
        double acc = 0.0;
        for (int d = -radius; d <= radius; ++d) acc += k[d + radius] * tmp(c, reflect(i + d, H), j);
        out(c, i, j) = acc;
      }
    }
  }
  return out;
}

TransportPlan sinkhorn(const FeatureTensor& f, const Palette& t, int k) {
  const int C = f.tensor.classes;
  const std::size_t N = static_cast<std::size_t>(f.tensor.pixels());

  TransportPlan plan;
  plan.classes = C;
  plan.pixels = static_cast<int>(N);
  plan.target = t;
  plan.data.resize(f.tensor.data.size());
  for (int c = 0; c < C; ++c) {
    const double* src = f.tensor.channel(c);
    double mx = src[0];
    for (std::size_t p = 1; p < N; ++p) mx = std::max(mx, src[p]);
    for (std::size_t p = 0; p < N; ++p)
      plan.data[static_cast<std::size_t>(c) * N + p] = std::exp(src[p] - mx);
  }

  const double uniform = 1.0 / static_cast<double>(N);
  for (int it = 0; it < k; ++it) {
    for (int c = 0; c < C; ++c) {
      double s = 0.0;
      for (std::size_t p = 0; p < N; ++p) s += plan.data[static_cast<std::size_t>(c) * N + p];
      const double scale = t.proportions[c] / std::max(s, kEps);
      for (std::size_t p = 0; p < N; ++p) plan.data[static_cast<std::size_t>(c) * N + p] *= scale;
    }
    for (std::size_t p = 0; p < N; ++p) {
      double s = 0.0;
      for (int c = 0; c < C; ++c) s += plan.data[static_cast<std::size_t>(c) * N + p];
      const double scale = uniform / std::max(s, kEps);
      for (int c = 0; c < C; ++c) plan.data[static_cast<std::size_t>(c) * N + p] *= scale;
    }
  }
  return plan;
}

}  // namespace layoutgen::reference
