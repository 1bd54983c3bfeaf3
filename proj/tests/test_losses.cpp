#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "layoutgen/core.hpp"
#include "layoutgen/losses.hpp"
#include "layoutgen/reference.hpp"
#include "layoutgen/rng.hpp"

using namespace layoutgen;

namespace {

FeatureTensor random_features(std::mt19937_64& g, int c, int h, int w) {
  FeatureTensor f{Tensor3(c, h, w)};
  for (auto& v : f.tensor.data) v = normal01(g);
  return f;
}

Palette random_palette(std::mt19937_64& g, int c) {
  std::vector<double> raw(c);
  double sum = 0.0;
  for (auto& v : raw) {
    v = 0.1 + uniform01(g);
    sum += v;
  }
  for (auto& v : raw) v /= sum;
  return validate_palette(raw);
}

// Finite differences of the serial reference loss. Kept independent of the
// production gradient path on purpose. The fourth-order stencil tolerates a
// large step, keeping the quotient clear of roundoff on tiny entries; the
// plain two-point form pins the classic h=1e-5 check.
Gradient fd_gradient(const FeatureTensor& f, const Palette& t, const LossWeights& weights,
                     double step) {
  Gradient g{Tensor3(f.tensor.classes, f.tensor.height, f.tensor.width)};
  FeatureTensor probe = f;
  auto at = [&](std::size_t i, double delta) {
    const double saved = probe.tensor.data[i];
    probe.tensor.data[i] = saved + delta;
    const double v = reference::cond_loss(probe, t, weights);
    probe.tensor.data[i] = saved;
    return v;
  };
  for (std::size_t i = 0; i < f.tensor.data.size(); ++i)
    g.tensor.data[i] = (8.0 * (at(i, step) - at(i, -step)) -
                        (at(i, 2.0 * step) - at(i, -2.0 * step))) /
                       (12.0 * step);
  return g;
}

Gradient fd_gradient_two_point(const FeatureTensor& f, const Palette& t, double step) {
  Gradient g{Tensor3(f.tensor.classes, f.tensor.height, f.tensor.width)};
  FeatureTensor probe = f;
  for (std::size_t i = 0; i < f.tensor.data.size(); ++i) {
    const double saved = probe.tensor.data[i];
    probe.tensor.data[i] = saved + step;
    const double hi = reference::cond_loss(probe, t);
    probe.tensor.data[i] = saved - step;
    const double lo = reference::cond_loss(probe, t);
    probe.tensor.data[i] = saved;
    g.tensor.data[i] = (hi - lo) / (2.0 * step);
  }
  return g;
}

double max_rel_err(const Gradient& a, const Gradient& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.tensor.data.size(); ++i) {
    const double x = a.tensor.data[i];
    const double y = b.tensor.data[i];
    const double denom = std::max({std::abs(x), std::abs(y), 1e-8});
    worst = std::max(worst, std::abs(x - y) / denom);
  }
  return worst;
}

}  // namespace

TEST_CASE("entropy of a uniform two-class column is ln 2") {
  SoftMask m{Tensor3(2, 1, 1)};
  m.tensor(0, 0, 0) = 0.5;
  m.tensor(1, 0, 0) = 0.5;
  LossValue v = entropy_loss(m);
  CHECK(v.value == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(v.per_pixel.size() == 1);
}

TEST_CASE("entropy vanishes on one-hot masks and is bounded by ln classes") {
  SoftMask onehot{Tensor3(3, 1, 2)};
  onehot.tensor(0, 0, 0) = 1.0;
  onehot.tensor(2, 0, 1) = 1.0;
  CHECK(entropy_loss(onehot).value == 0.0);

  std::mt19937_64 g(21);
  for (int trial = 0; trial < 10; ++trial) {
    int c = 2 + int(g() % 6);
    FeatureTensor f = random_features(g, c, 3, 4);
    SoftMask m = saa(f, random_palette(g, c)).mask;
    double v = entropy_loss(m).value;
    CHECK(v >= 0.0);
    CHECK(v <= std::log(double(c)) + 1e-12);
  }
}

TEST_CASE("spread loss matches the two-pixel closed form") {
  // Totals (1, 0) over two pixels: mean of (1-2*1)^2 and (1-2*0)^2 is 1.
  WeightedDensity omega{Tensor3(2, 1, 2), validate_palette({0.4, 0.6})};
  omega.tensor(0, 0, 0) = 0.4;
  omega.tensor(1, 0, 0) = 0.6;
  CHECK(spread_loss(omega).value == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("spread loss vanishes on a perfectly even density") {
  FeatureTensor f{Tensor3(2, 2, 3)};
  Palette t = validate_palette({0.5, 0.5});
  WeightedDensity omega = palette_weighting(spatial_softmax(f), t);
  CHECK(spread_loss(omega).value <= 1e-24);
}

TEST_CASE("combined loss is the weighted sum of its parts") {
  std::mt19937_64 g(22);
  FeatureTensor f = random_features(g, 3, 4, 5);
  Palette t = random_palette(g, 3);
  SaaResult r = saa(f, t);
  LossWeights weights{2.0, 0.5};
  double expected = 2.0 * entropy_loss(r.mask).value + 0.5 * spread_loss(r.weighted).value;
  CHECK(cond_loss(f, t, weights).value == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("matching loss follows the hand-worked values") {
  SoftMask m{Tensor3(2, 1, 2)};
  m.tensor(0, 0, 0) = 0.25;
  m.tensor(1, 0, 0) = 0.75;
  m.tensor(0, 0, 1) = 0.25;
  m.tensor(1, 0, 1) = 0.75;
  Palette t = validate_palette({0.5, 0.5});
  CHECK(matching_loss(m, t).value == doctest::Approx(0.14384103622589042).epsilon(1e-12));

  SoftMask exact{Tensor3(2, 1, 2)};
  exact.tensor(0, 0, 0) = 0.5;
  exact.tensor(1, 0, 0) = 0.5;
  exact.tensor(0, 0, 1) = 0.5;
  exact.tensor(1, 0, 1) = 0.5;
  CHECK(std::abs(matching_loss(exact, t).value) <= 1e-12);
}

TEST_CASE("matching loss reaches zero with an absent class") {
  // Degeneracy witness: the realized histogram equals the target even though
  // class 2 never dominates any pixel.
  Palette t = validate_palette({0.4, 0.4, 0.2});
  SoftMask m{Tensor3(3, 1, 2)};
  m.tensor(0, 0, 0) = 0.5;
  m.tensor(1, 0, 0) = 0.3;
  m.tensor(2, 0, 0) = 0.2;
  m.tensor(0, 0, 1) = 0.3;
  m.tensor(1, 0, 1) = 0.5;
  m.tensor(2, 0, 1) = 0.2;
  CHECK(std::abs(matching_loss(m, t).value) <= 1e-12);
  HardLayout layout = argmax_labeling(m);
  for (int label : layout.labels) CHECK(label != 2);
}

TEST_CASE("novelty loss averages mask dot products over the edited pixels") {
  SoftMask m{Tensor3(2, 1, 1)};
  m.tensor(0, 0, 0) = 0.3;
  m.tensor(1, 0, 0) = 0.7;
  SoftMask l{Tensor3(2, 1, 1)};
  l.tensor(0, 0, 0) = 1.0;
  std::vector<std::pair<int, int>> edited{{0, 0}};
  CHECK(novelty_loss(m, l, edited).value == doctest::Approx(0.3).epsilon(1e-14));

  CHECK_THROWS_AS(novelty_loss(m, l, {}), ValidationError);
  std::vector<std::pair<int, int>> outside{{0, 5}};
  CHECK_THROWS_AS(novelty_loss(m, l, outside), ValidationError);
}

TEST_CASE("novelty loss separates echoes from replacements") {
  SoftMask a{Tensor3(2, 1, 2)};
  a.tensor(0, 0, 0) = 1.0;
  a.tensor(1, 0, 1) = 1.0;
  SoftMask swapped{Tensor3(2, 1, 2)};
  swapped.tensor(1, 0, 0) = 1.0;
  swapped.tensor(0, 0, 1) = 1.0;
  std::vector<std::pair<int, int>> all{{0, 0}, {0, 1}};
  CHECK(novelty_loss(a, a, all).value == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(novelty_loss(swapped, a, all).value == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("multiscale loss sums the per-scale losses") {
  Palette t = validate_palette({0.5, 0.5});
  // Flat features at any size give per-pixel masks equal to t: entropy ln 2,
  // zero spread, at both scales.
  ScaleInput coarse{FeatureTensor{Tensor3(2, 4, 8)}, t};
  ScaleInput fine{FeatureTensor{Tensor3(2, 8, 16)}, t};
  LossValue v = multiscale_cond_loss({coarse, fine});
  CHECK(v.value == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-13));

  std::mt19937_64 g(27);
  FeatureTensor f = random_features(g, 3, 3, 5);
  Palette r = random_palette(g, 3);
  CHECK(multiscale_cond_loss({ScaleInput{f, r}}).value ==
        doctest::Approx(cond_loss(f, r).value).epsilon(1e-14));
  CHECK(multiscale_cond_loss({ScaleInput{f, r}, ScaleInput{f, r}}).value ==
        doctest::Approx(2.0 * cond_loss(f, r).value).epsilon(1e-13));

  CHECK_THROWS_AS(multiscale_cond_loss({}), ValidationError);

  ScaleInput other{FeatureTensor{Tensor3(2, 4, 8)}, validate_palette({0.4, 0.6})};
  CHECK_THROWS_AS(multiscale_cond_loss({coarse, other}), ValidationError);
}

TEST_CASE("analytic gradient matches finite differences of the reference loss") {
  std::mt19937_64 g(23);
  for (int trial = 0; trial < 10; ++trial) {
    int c = 2 + int(g() % 4);
    int h = 1 + int(g() % 6);
    int w = 1 + int(g() % 6);
    FeatureTensor f = random_features(g, c, h, w);
    Palette t = random_palette(g, c);
    Gradient analytic = cond_loss_grad(f, t);
    Gradient numeric = fd_gradient(f, t, {}, 1e-3);
    CHECK(max_rel_err(analytic, numeric) < 1e-5);
  }
}

TEST_CASE("the classic two-point check holds on the documented shape") {
  std::mt19937_64 g(26);
  FeatureTensor f = random_features(g, 3, 4, 4);
  Palette t = random_palette(g, 3);
  Gradient analytic = cond_loss_grad(f, t);
  Gradient numeric = fd_gradient_two_point(f, t, 1e-5);
  CHECK(max_rel_err(analytic, numeric) < 1e-5);
}

TEST_CASE("gradient respects non-default loss weights") {
  std::mt19937_64 g(24);
  FeatureTensor f = random_features(g, 3, 4, 4);
  Palette t = random_palette(g, 3);
  LossWeights weights{2.0, 0.5};
  Gradient analytic = cond_loss_grad(f, t, weights);
  Gradient numeric = fd_gradient(f, t, weights, 1e-3);
  CHECK(max_rel_err(analytic, numeric) < 1e-5);
}

TEST_CASE("gradient of the flat configuration is exactly zero") {
  FeatureTensor f{Tensor3(4, 2, 2)};
  Palette t = validate_palette({0.25, 0.25, 0.25, 0.25});
  Gradient g = cond_loss_grad(f, t);
  for (double v : g.tensor.data) CHECK(v == 0.0);
}

TEST_CASE("reference loss agrees with the production loss") {
  std::mt19937_64 g(25);
  for (int trial = 0; trial < 10; ++trial) {
    int c = 2 + int(g() % 5);
    FeatureTensor f = random_features(g, c, 5, 6);
    Palette t = random_palette(g, c);
    double a = cond_loss(f, t).value;
    double b = reference::cond_loss(f, t);
    CHECK(a == doctest::Approx(b).epsilon(1e-13));
  }
}
