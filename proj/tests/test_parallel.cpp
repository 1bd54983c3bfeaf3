#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cmath>
#include <random>
#include <vector>

#include "layoutgen/core.hpp"
#include "layoutgen/losses.hpp"
#include "layoutgen/parallel.hpp"
#include "layoutgen/reference.hpp"
#include "layoutgen/rng.hpp"
#include "layoutgen/transforms.hpp"
#include "layoutgen/transport.hpp"

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

double rel_gap(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace

TEST_CASE("short reductions equal the plain left-to-right sum bitwise") {
  std::mt19937_64 g(71);
  std::vector<double> v(1000);
  for (auto& x : v) x = normal01(g) * 1e3;
  double plain = 0.0;
  for (double x : v) plain += x;
  double blocked = par::block_sum(std::ptrdiff_t(v.size()), [&](std::ptrdiff_t i) {
    return v[std::size_t(i)];
  });
  CHECK(blocked == plain);
}

TEST_CASE("long reductions agree with the plain sum to rounding error") {
  std::mt19937_64 g(72);
  std::vector<double> v(3 * std::size_t(par::kBlock) + 17);
  for (auto& x : v) x = normal01(g);
  double plain = 0.0;
  for (double x : v) plain += x;
  double blocked = par::block_sum(std::ptrdiff_t(v.size()), [&](std::ptrdiff_t i) {
    return v[std::size_t(i)];
  });
  CHECK(rel_gap(blocked, plain) <= 1e-12);
}

#ifdef _OPENMP
TEST_CASE("reductions are bitwise stable across thread counts") {
  std::mt19937_64 g(73);
  std::vector<double> v(2 * std::size_t(par::kBlock) + 999);
  for (auto& x : v) x = normal01(g) * std::exp(4.0 * uniform01(g));

  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  double ones = par::block_sum(std::ptrdiff_t(v.size()), [&](std::ptrdiff_t i) {
    return v[std::size_t(i)];
  });
  omp_set_num_threads(4);
  double fours = par::block_sum(std::ptrdiff_t(v.size()), [&](std::ptrdiff_t i) {
    return v[std::size_t(i)];
  });
  omp_set_num_threads(saved);
  CHECK(ones == fours);
}

TEST_CASE("the full activation is bitwise stable across thread counts") {
  std::mt19937_64 g(74);
  FeatureTensor f = random_features(g, 4, 32, 48);
  Palette t = random_palette(g, 4);

  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  SaaResult a = saa(f, t);
  Gradient ga = cond_loss_grad(f, t);
  omp_set_num_threads(4);
  SaaResult b = saa(f, t);
  Gradient gb = cond_loss_grad(f, t);
  omp_set_num_threads(saved);

  CHECK(a.mask.tensor.data == b.mask.tensor.data);
  CHECK(a.weighted.tensor.data == b.weighted.tensor.data);
  CHECK(ga.tensor.data == gb.tensor.data);
}
#endif

TEST_CASE("parallel kernels match the serial reference") {
  std::mt19937_64 g(75);
  for (int trial = 0; trial < 8; ++trial) {
    int c = 2 + int(g() % 5);
    int h = 2 + int(g() % 12);
    int w = 2 + int(g() % 12);
    FeatureTensor f = random_features(g, c, h, w);
    Palette t = random_palette(g, c);

    SaaResult fast = saa(f, t);
    SaaResult slow = reference::saa(f, t);
    for (std::size_t i = 0; i < fast.mask.tensor.data.size(); ++i)
      CHECK(rel_gap(fast.mask.tensor.data[i] + 1.0, slow.mask.tensor.data[i] + 1.0) <= 1e-12);

    CHECK(rel_gap(entropy_loss(fast.mask).value + 1.0,
                  reference::entropy_loss(slow.mask).value + 1.0) <= 1e-12);
    CHECK(rel_gap(spread_loss(fast.weighted).value + 1.0,
                  reference::spread_loss(slow.weighted).value + 1.0) <= 1e-12);

    Gradient ga = cond_loss_grad(f, t);
    Gradient gb = reference::cond_loss_grad(f, t);
    for (std::size_t i = 0; i < ga.tensor.data.size(); ++i)
      CHECK(std::abs(ga.tensor.data[i] - gb.tensor.data[i]) <= 1e-12);
  }
}

TEST_CASE("parallel blur matches the serial reference") {
  std::mt19937_64 g(76);
  FeatureTensor f = random_features(g, 3, 17, 23);
  for (double sigma : {0.6, 1.0, 2.5}) {
    Tensor3 a = gaussian_blur(f.tensor, sigma);
    Tensor3 b = reference::gaussian_blur(f.tensor, sigma);
    for (std::size_t i = 0; i < a.data.size(); ++i)
      CHECK(std::abs(a.data[i] - b.data[i]) <= 1e-12);
  }
}

TEST_CASE("parallel transport matches the serial reference") {
  std::mt19937_64 g(77);
  for (int trial = 0; trial < 5; ++trial) {
    int c = 2 + int(g() % 5);
    FeatureTensor f = random_features(g, c, 6, 9);
    Palette t = random_palette(g, c);
    for (int k : {1, 7}) {
      TransportPlan a = sinkhorn(f, t, k);
      TransportPlan b = reference::sinkhorn(f, t, k);
      for (std::size_t i = 0; i < a.data.size(); ++i)
        CHECK(rel_gap(a.data[i] + 1.0, b.data[i] + 1.0) <= 1e-12);
    }
  }
}
