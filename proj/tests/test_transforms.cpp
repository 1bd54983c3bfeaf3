#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "layoutgen/core.hpp"
#include "layoutgen/rng.hpp"
#include "layoutgen/transforms.hpp"

using namespace layoutgen;

namespace {

HardLayout random_layout(std::mt19937_64& g, int classes, int h, int w) {
  HardLayout layout;
  layout.height = h;
  layout.width = w;
  layout.classes = classes;
  layout.labels.resize(std::size_t(h) * w);
  for (auto& l : layout.labels) l = int(g() % classes);
  return layout;
}

}  // namespace

TEST_CASE("one hot mask puts unit mass on the label channel") {
  HardLayout layout;
  layout.height = 1;
  layout.width = 3;
  layout.classes = 3;
  layout.labels = {2, 0, 1};
  SoftMask m = one_hot(layout);
  for (int p = 0; p < 3; ++p)
    for (int c = 0; c < 3; ++c)
      CHECK(m.tensor.data[std::size_t(c) * 3 + p] == (c == layout.labels[p] ? 1.0 : 0.0));
}

TEST_CASE("gaussian blur preserves constant fields") {
  Tensor3 t(2, 5, 7, 0.0);
  for (std::size_t i = 0; i < t.pixels(); ++i) {
    t.channel(0)[i] = 0.25;
    t.channel(1)[i] = 0.75;
  }
  Tensor3 b = gaussian_blur(t, 1.5);
  for (std::size_t i = 0; i < b.pixels(); ++i) {
    CHECK(b.channel(0)[i] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(b.channel(1)[i] == doctest::Approx(0.75).epsilon(1e-12));
  }
}

TEST_CASE("gaussian blur keeps one hot column sums at one") {
  std::mt19937_64 g(31);
  HardLayout layout = random_layout(g, 4, 6, 8);
  Tensor3 b = gaussian_blur(one_hot(layout).tensor, 2.0);
  for (std::size_t p = 0; p < b.pixels(); ++p) {
    double col = 0.0;
    for (int c = 0; c < 4; ++c) col += b.channel(c)[p];
    CHECK(std::abs(col - 1.0) <= 1e-12);
    for (int c = 0; c < 4; ++c) CHECK(b.channel(c)[p] >= -1e-15);
  }
}

TEST_CASE("gaussian blur requires a positive width") {
  Tensor3 t(1, 2, 2, 1.0);
  CHECK_THROWS_AS(gaussian_blur(t, 0.0), ValidationError);
  CHECK_THROWS_AS(gaussian_blur(t, -1.0), ValidationError);
}

TEST_CASE("softened ground truth matches the hand-worked middle pixel") {
  // 1x3 strip with labels 0,1,0 under sigma 1, alpha 0.4.
  HardLayout layout;
  layout.height = 1;
  layout.width = 3;
  layout.classes = 2;
  layout.labels = {0, 1, 0};
  SoftMask m = soften_ground_truth(layout, 1.0, 0.4);
  CHECK(m.tensor(1, 0, 1) == doctest::Approx(0.763166550401177).epsilon(1e-12));
  CHECK(m.tensor(0, 0, 1) == doctest::Approx(1.0 - 0.763166550401177).epsilon(1e-12));
}

TEST_CASE("softening preserves the argmax at every pixel") {
  std::mt19937_64 g(32);
  for (double sigma : {0.5, 1.0, 2.0}) {
    for (int trial = 0; trial < 8; ++trial) {
      HardLayout layout = random_layout(g, 2 + int(g() % 4), 4, 5);
      SoftMask m = soften_ground_truth(layout, sigma, kDefaultSoftAlpha);
      HardLayout back = argmax_labeling(m);
      CHECK(back.labels == layout.labels);
    }
  }
}

TEST_CASE("zero blend returns the exact one hot mask") {
  std::mt19937_64 g(33);
  HardLayout layout = random_layout(g, 3, 3, 4);
  SoftMask soft = soften_ground_truth(layout, 1.0, 0.0);
  SoftMask hard = one_hot(layout);
  for (std::size_t i = 0; i < soft.tensor.data.size(); ++i)
    CHECK(soft.tensor.data[i] == hard.tensor.data[i]);
}

TEST_CASE("blend weight must stay in the argmax-safe range") {
  HardLayout layout;
  layout.height = 1;
  layout.width = 2;
  layout.classes = 2;
  layout.labels = {0, 1};
  CHECK_THROWS_AS(soften_ground_truth(layout, 1.0, 0.5), ValidationError);
  CHECK_THROWS_AS(soften_ground_truth(layout, 1.0, -0.1), ValidationError);
  CHECK_NOTHROW(soften_ground_truth(layout));
}

TEST_CASE("default blur width grows with image height") {
  CHECK(default_blur_sigma(16) == 1.0);
  CHECK(default_blur_sigma(64) == 2.0);
}

TEST_CASE("categorical sampling is deterministic and respects certainty") {
  std::mt19937_64 g(34);
  HardLayout layout = random_layout(g, 3, 4, 5);
  SoftMask m = one_hot(layout);
  std::mt19937_64 r1(99), r2(99);
  HardLayout a = gumbel_sample(m, r1);
  HardLayout b = gumbel_sample(m, r2);
  CHECK(a.labels == layout.labels);
  CHECK(a.labels == b.labels);
}

TEST_CASE("categorical sampling tracks the column probabilities") {
  SoftMask m{Tensor3(2, 40, 100)};
  for (std::size_t p = 0; p < m.tensor.pixels(); ++p) {
    m.tensor.channel(0)[p] = 0.8;
    m.tensor.channel(1)[p] = 0.2;
  }
  std::mt19937_64 r(7);
  HardLayout s = gumbel_sample(m, r);
  double zero_frac = 0.0;
  for (int l : s.labels) zero_frac += (l == 0) ? 1.0 : 0.0;
  zero_frac /= double(s.labels.size());
  CHECK(zero_frac > 0.75);
  CHECK(zero_frac < 0.85);
}

TEST_CASE("marking a crop frees the region and nothing else") {
  std::mt19937_64 g(35);
  HardLayout layout = random_layout(g, 4, 6, 8);
  SoftMask m = one_hot(layout);
  EditRegion region{2, 3, 3, 4};
  SoftMask marked = mark_crop(m, region);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 8; ++j) {
      bool inside = i >= region.top && i < region.top + region.height && j >= region.left &&
                    j < region.left + region.width;
      for (int c = 0; c < 4; ++c) {
        double got = marked.tensor(c, i, j);
        if (inside)
          CHECK(got == 0.25);
        else
          CHECK(got == m.tensor(c, i, j));
      }
    }

  CHECK_THROWS_AS(mark_crop(m, EditRegion{0, 0, 0, 4}), ValidationError);
  CHECK_THROWS_AS(mark_crop(m, EditRegion{4, 4, 3, 8}), ValidationError);
}

TEST_CASE("merging with full background reproduces the input exactly") {
  std::mt19937_64 g(36);
  HardLayout layout = random_layout(g, 3, 4, 4);
  SoftMask input = one_hot(layout);
  AugmentedSoftMask aug{Tensor3(4, 4, 4), 3};
  for (std::size_t p = 0; p < aug.tensor.pixels(); ++p) aug.tensor.channel(3)[p] = 1.0;
  SoftMask merged = merge_edit(aug, input);
  for (std::size_t i = 0; i < merged.tensor.data.size(); ++i)
    CHECK(merged.tensor.data[i] == input.tensor.data[i]);
}

TEST_CASE("merging with zero background keeps only the generated classes") {
  std::mt19937_64 g(37);
  HardLayout layout = random_layout(g, 3, 2, 2);
  SoftMask input = one_hot(layout);
  AugmentedSoftMask aug{Tensor3(4, 2, 2), 3};
  for (std::size_t p = 0; p < aug.tensor.pixels(); ++p) aug.tensor.channel(1)[p] = 1.0;
  SoftMask merged = merge_edit(aug, input);
  for (std::size_t p = 0; p < merged.tensor.pixels(); ++p) {
    CHECK(merged.tensor.channel(1)[p] == 1.0);
    CHECK(merged.tensor.channel(0)[p] == 0.0);
    CHECK(merged.tensor.channel(2)[p] == 0.0);
  }
}

TEST_CASE("merged columns stay normalized for soft inputs") {
  std::mt19937_64 g(38);
  for (int trial = 0; trial < 20; ++trial) {
    int c = 2 + int(g() % 5);
    int h = 2 + int(g() % 4);
    int w = 2 + int(g() % 4);
    std::size_t n = std::size_t(h) * w;
    // Random augmented mask with normalized columns.
    AugmentedSoftMask aug{Tensor3(c + 1, h, w), c};
    for (std::size_t p = 0; p < n; ++p) {
      double sum = 0.0;
      for (int ch = 0; ch <= c; ++ch) {
        double v = 0.05 + uniform01(g);
        aug.tensor.channel(ch)[p] = v;
        sum += v;
      }
      for (int ch = 0; ch <= c; ++ch) aug.tensor.channel(ch)[p] /= sum;
    }
    SoftMask input = one_hot(random_layout(g, c, h, w));
    SoftMask merged = merge_edit(aug, input);
    for (std::size_t p = 0; p < n; ++p) {
      double col = 0.0;
      for (int ch = 0; ch < c; ++ch) col += merged.tensor.channel(ch)[p];
      CHECK(std::abs(col - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("merge rejects mismatched shapes") {
  AugmentedSoftMask aug{Tensor3(3, 2, 2), 2};
  HardLayout layout;
  layout.height = 2;
  layout.width = 2;
  layout.classes = 3;
  layout.labels = {0, 1, 2, 0};
  CHECK_THROWS_AS(merge_edit(aug, one_hot(layout)), ValidationError);

  AugmentedSoftMask wrong_bg{Tensor3(3, 2, 2), 1};
  layout.classes = 2;
  layout.labels = {0, 1, 1, 0};
  CHECK_THROWS_AS(merge_edit(wrong_bg, one_hot(layout)), ValidationError);
}

TEST_CASE("edited pixel set lists non-background pixels in row-major order") {
  AugmentedSoftMask aug{Tensor3(3, 2, 2), 2};
  // Background everywhere except (0,1) and (1,0).
  for (std::size_t p = 0; p < 4; ++p) aug.tensor.channel(2)[p] = 1.0;
  aug.tensor(0, 0, 1) = 0.6;
  aug.tensor(2, 0, 1) = 0.4;
  aug.tensor(1, 1, 0) = 0.7;
  aug.tensor(2, 1, 0) = 0.3;
  auto edited = edited_pixel_set(aug);
  REQUIRE(edited.size() == 2);
  CHECK(edited[0] == std::pair<int, int>{0, 1});
  CHECK(edited[1] == std::pair<int, int>{1, 0});

  AugmentedSoftMask all_bg{Tensor3(3, 2, 2), 2};
  for (std::size_t p = 0; p < 4; ++p) all_bg.tensor.channel(2)[p] = 1.0;
  CHECK(edited_pixel_set(all_bg).empty());
}
