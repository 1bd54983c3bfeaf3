#include "layoutgen/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>

#include "layoutgen/core.hpp"
#include "layoutgen/error.hpp"
#include "layoutgen/losses.hpp"
#include "layoutgen/metrics.hpp"
#include "layoutgen/parallel.hpp"
#include "layoutgen/rng.hpp"
#include "layoutgen/transport.hpp"

namespace layoutgen {

namespace {

void check_config(const SynthesisConfig& cfg) {
  if (cfg.height < 1 || cfg.width < 1)
    throw ValidationError(Err::BadConfig, "grid dimensions must be positive");
  if (cfg.steps < 1) throw ValidationError(Err::BadConfig, "step cap must be at least 1");
  if (!(cfg.step_size > 0.0)) throw ValidationError(Err::BadConfig, "step size must be positive");
  if (!(cfg.momentum >= 0.0) || cfg.momentum >= 1.0)
    throw ValidationError(Err::BadConfig, "momentum must lie in [0, 1)");
  if (!(cfg.init_std >= 0.0))
    throw ValidationError(Err::BadConfig, "initialization scale must be nonnegative");
  if (cfg.checkpoint_every < 1)
    throw ValidationError(Err::BadConfig, "checkpoint interval must be at least 1");
  if (!(cfg.kl_stop >= 0.0))
    throw ValidationError(Err::BadConfig, "stop threshold must be nonnegative");
}

Tensor3 random_features(int C, int H, int W, double std, std::mt19937_64& rng) {
  Tensor3 f(C, H, W);
  // One serial stream in storage order keeps runs reproducible.
  for (double& v : f.data) v = std * normal01(rng);
  return f;
}

Tensor3 upsample_bilinear(const Tensor3& src, int H, int W) {
  Tensor3 out(src.classes, H, W);
  const double sy = static_cast<double>(src.height) / H;
  const double sx = static_cast<double>(src.width) / W;
  const std::size_t n = static_cast<std::size_t>(H) * W;
  par::for_each(out.data.size(), [&](std::size_t idx) {
    const int c = static_cast<int>(idx / n);
    const int i = static_cast<int>((idx % n) / W);
    const int j = static_cast<int>(idx % W);
    const double y = std::clamp((i + 0.5) * sy - 0.5, 0.0, src.height - 1.0);
    const double x = std::clamp((j + 0.5) * sx - 0.5, 0.0, src.width - 1.0);
    const int y0 = static_cast<int>(y);
    const int x0 = static_cast<int>(x);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const int x1 = std::min(x0 + 1, src.width - 1);
    const double fy = y - y0;
    const double fx = x - x0;
    const double v = (1 - fy) * ((1 - fx) * src(c, y0, x0) + fx * src(c, y0, x1)) +
                     fy * ((1 - fx) * src(c, y1, x0) + fx * src(c, y1, x1));
    out.data[idx] = v;
  });
  return out;
}

// Pins the background channel toward 1 outside the edit region.
struct PinSpec {
  bool active = false;
  int bg = 0;
  double weight = 10.0;
  std::vector<std::uint8_t> outside;  // per pixel
};

// Momentum descent on cond_loss until the budget runs out or the realized
// histogram reaches cfg.kl_stop. Appends checkpoints, advances global_step by
// the number of updates applied, and returns the last forward pass.
SaaResult descend(FeatureTensor& f, const Palette& t, const SynthesisConfig& cfg,
                  const PinSpec& pin, int budget, int& global_step, SynthesisTrace& trace,
                  bool& reached) {
  const int C = f.tensor.classes;
  const std::size_t N = static_cast<std::size_t>(f.tensor.pixels());
  Tensor3 velocity(C, f.tensor.height, f.tensor.width);
  reached = false;

  for (int it = 0;; ++it) {
    SaaResult fwd = saa(f, t);
    const double ent = entropy_loss(fwd.mask).value;
    const double spr = spread_loss(fwd.weighted).value;
    const HardLayout layout = argmax_labeling(fwd.mask);
    const double kl = proportion_kl(t, layout);

    // Proportions alone are blind to the pin, so an edit run may only stop
    // early once every pinned pixel actually reads background.
    bool pinned_ok = true;
    if (pin.active) {
      for (std::size_t p = 0; p < N && pinned_ok; ++p)
        if (pin.outside[p] && layout.labels[p] != pin.bg) pinned_ok = false;
    }
    const bool on_target = kl <= cfg.kl_stop && pinned_ok;
    const bool stop = on_target || it >= budget;
    if (on_target) reached = true;
    if (stop || global_step % cfg.checkpoint_every == 0) {
      if (trace.records.empty() || trace.records.back().step != global_step)
        trace.records.push_back({global_step, ent, spr, ent + spr, kl});
    }
    trace.final_kl = kl;
    trace.steps_run = global_step;
    if (stop) return fwd;

    Tensor3 g_mask(C, f.tensor.height, f.tensor.width);
    const double scale = 1.0 / static_cast<double>(N);
    par::for_each(g_mask.data.size(), [&](std::size_t i) {
      const double v = fwd.mask.tensor.data[i];
      g_mask.data[i] = v > 0.0 ? -scale * (std::log(v) + 1.0) : 0.0;
    });
    if (pin.active) {
      double* gbg = g_mask.channel(pin.bg);
      const double* mbg = fwd.mask.tensor.channel(pin.bg);
      par::for_each(N, [&](std::size_t p) {
        if (pin.outside[p]) gbg[p] += pin.weight * (-2.0) * (1.0 - mbg[p]) * scale;
      });
    }
    const Gradient g = saa_backward(fwd, t, g_mask, 1.0);

    par::for_each(f.tensor.data.size(), [&](std::size_t i) {
      velocity.data[i] = cfg.momentum * velocity.data[i] + g.tensor.data[i];
      f.tensor.data[i] -= cfg.step_size * velocity.data[i];
    });
    ++global_step;
  }
}

}  // namespace

SynthesisResult synthesize(const Palette& t, const SynthesisConfig& cfg) {
  validate_palette(t);
  check_config(cfg);
  const int C = static_cast<int>(t.proportions.size());

  std::mt19937_64 rng(cfg.seed);
  SynthesisResult out;
  int global_step = 0;
  bool reached = false;

  if (cfg.multiscale && (cfg.height > 1 || cfg.width > 1)) {
    const int ch = std::max(1, (cfg.height + 1) / 2);
    const int cw = std::max(1, (cfg.width + 1) / 2);
    FeatureTensor f{random_features(C, ch, cw, cfg.init_std, rng)};
    descend(f, t, cfg, {}, cfg.steps / 2, global_step, out.trace, reached);

    FeatureTensor fine{upsample_bilinear(f.tensor, cfg.height, cfg.width)};
    const SaaResult fwd =
        descend(fine, t, cfg, {}, cfg.steps - global_step, global_step, out.trace, reached);
    out.mask = fwd.mask;
  } else {
    FeatureTensor f{random_features(C, cfg.height, cfg.width, cfg.init_std, rng)};
    const SaaResult fwd = descend(f, t, cfg, {}, cfg.steps, global_step, out.trace, reached);
    out.mask = fwd.mask;
  }

  out.trace.converged = reached;
  out.layout = argmax_labeling(out.mask);
  return out;
}

SynthesisResult synthesize_edit(const HardLayout& input, const EditRegion& region,
                                const Palette& augmented, const SynthesisConfig& cfg_in) {
  check_layout(input);
  validate_palette(augmented);
  const int C = input.classes;
  if (static_cast<int>(augmented.proportions.size()) != C + 1)
    throw ValidationError(Err::ShapeMismatch, "palette must add one background entry");
  if (region.height < 1 || region.width < 1 || region.top < 0 || region.left < 0 ||
      region.top + region.height > input.height || region.left + region.width > input.width)
    throw ValidationError(Err::RegionOutOfBounds, "edit region does not fit the layout");

  const double total = static_cast<double>(input.height) * input.width;
  const double area = static_cast<double>(region.height) * region.width;
  const double expected_bg = (total - area) / total;
  if (std::abs(augmented.proportions[C] - expected_bg) > 0.01)
    throw ValidationError(Err::BadBackgroundBudget,
                          "background budget must match the uncropped area fraction");

  SynthesisConfig cfg = cfg_in;
  cfg.height = input.height;
  cfg.width = input.width;
  cfg.multiscale = false;  // region coordinates do not survive rescaling
  check_config(cfg);

  const SoftMask marked = mark_crop(one_hot(input), region);

  PinSpec pin;
  pin.active = true;
  pin.bg = C;
  const std::size_t N = static_cast<std::size_t>(input.height) * input.width;
  pin.outside.assign(N, 1);
  for (int i = region.top; i < region.top + region.height; ++i)
    for (int j = region.left; j < region.left + region.width; ++j)
      pin.outside[static_cast<std::size_t>(i) * input.width + j] = 0;

  std::mt19937_64 rng(cfg.seed);
  FeatureTensor f{random_features(C + 1, cfg.height, cfg.width, cfg.init_std, rng)};

  // Descent from a cold start tends to harden stray background pixels inside
  // the region before the budget can move them. Seeding the background
  // channel with the region shape sidesteps that local minimum; the pin
  // penalty still owns the arrangement during descent.
  constexpr double kEditInitOffset = 4.0;
  double* fb = f.tensor.channel(C);
  par::for_each(N, [&](std::size_t p) {
    fb[p] += pin.outside[p] ? kEditInitOffset : -kEditInitOffset;
  });

  SynthesisResult out;
  int global_step = 0;
  bool reached = false;
  const SaaResult fwd = descend(f, augmented, cfg, pin, cfg.steps, global_step, out.trace, reached);
  out.trace.converged = reached;

  // The pin is soft during descent; snapping the outside columns to pure
  // background makes the passthrough exact.
  Tensor3 aug = fwd.mask.tensor;
  for (int c = 0; c <= C; ++c) {
    double* ch = aug.channel(c);
    const double v = c == C ? 1.0 : 0.0;
    par::for_each(N, [&](std::size_t p) {
      if (pin.outside[p]) ch[p] = v;
    });
  }

  out.mask = merge_edit(AugmentedSoftMask{aug, C}, one_hot(input));
  out.layout = argmax_labeling(out.mask);
  return out;
}

GradCheckReport gradcheck(std::uint64_t seed, int classes, int height, int width, double fd_step) {
  if (classes < 2 || height < 1 || width < 1)
    throw ValidationError(Err::BadConfig, "need at least two classes and a nonempty grid");
  if (!(fd_step > 0.0)) throw ValidationError(Err::BadConfig, "difference step must be positive");

  std::mt19937_64 rng(seed);
  FeatureTensor f{Tensor3(classes, height, width)};
  for (double& v : f.tensor.data) v = normal01(rng);
  Palette t;
  t.proportions.resize(classes);
  double sum = 0.0;
  for (double& v : t.proportions) {
    v = 0.1 + uniform01(rng);
    sum += v;
  }
  for (double& v : t.proportions) v /= sum;

  const Gradient g = cond_loss_grad(f, t);

  GradCheckReport report;
  report.seed = seed;
  report.classes = classes;
  report.height = height;
  report.width = width;
  // Fourth-order central stencil: the larger step this allows keeps the
  // difference quotient well above roundoff even on near-zero entries.
  auto probe = [&](std::size_t i, double delta) {
    const double keep = f.tensor.data[i];
    f.tensor.data[i] = keep + delta;
    const double v = cond_loss(f, t).value;
    f.tensor.data[i] = keep;
    return v;
  };
  for (std::size_t i = 0; i < f.tensor.data.size(); ++i) {
    const double numeric = (8.0 * (probe(i, fd_step) - probe(i, -fd_step)) -
                            (probe(i, 2.0 * fd_step) - probe(i, -2.0 * fd_step))) /
                           (12.0 * fd_step);
    const double analytic = g.tensor.data[i];
    const double rel = std::abs(analytic - numeric) /
                       std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    report.max_rel_err = std::max(report.max_rel_err, rel);
  }
  report.pass = report.max_rel_err < report.tolerance;
  return report;
}

std::array<unsigned char, 3> class_color(int cls) {
  static constexpr unsigned char kTable[16][3] = {
      {31, 119, 180}, {255, 127, 14},  {44, 160, 44},   {214, 39, 40},
      {148, 103, 189}, {140, 86, 75},  {227, 119, 194}, {127, 127, 127},
      {188, 189, 34},  {23, 190, 207}, {174, 199, 232}, {255, 187, 120},
      {152, 223, 138}, {255, 152, 150}, {197, 176, 213}, {196, 156, 148},
  };
  if (cls >= 0 && cls < 16) return {kTable[cls][0], kTable[cls][1], kTable[cls][2]};
  // Knuth multiplicative hash keeps distinct indices visually apart.
  const std::uint32_t x = static_cast<std::uint32_t>(cls) * 2654435761u;
  return {static_cast<unsigned char>(64 + ((x >> 8) & 0x7F)),
          static_cast<unsigned char>(64 + ((x >> 16) & 0x7F)),
          static_cast<unsigned char>(64 + ((x >> 24) & 0x7F))};
}

std::string render(const HardLayout& layout) {
  check_layout(layout);
  std::ostringstream os;
  os << "P3\n" << layout.width << ' ' << layout.height << "\n255\n";
  for (int i = 0; i < layout.height; ++i) {
    for (int j = 0; j < layout.width; ++j) {
      const std::array<unsigned char, 3> rgb = class_color(layout.at(i, j));
      if (j) os << ' ';
      os << static_cast<int>(rgb[0]) << ' ' << static_cast<int>(rgb[1]) << ' '
         << static_cast<int>(rgb[2]);
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace layoutgen
