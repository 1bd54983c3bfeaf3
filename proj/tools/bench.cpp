// Times the parallel kernels against their serial references on one
// synthetic workload and reports the speedup per kernel.

#include <chrono>
#include <cstdio>
#include <random>
#include <string>

#include <CLI11.hpp>

#include "layoutgen/losses.hpp"
#include "layoutgen/reference.hpp"
#include "layoutgen/rng.hpp"
#include "layoutgen/transforms.hpp"
#include "layoutgen/transport.hpp"

namespace {

using Clock = std::chrono::steady_clock;

// Best-of-k wall time in milliseconds.
template <typename F>
double time_ms(int iters, F&& body) {
  double best = 1e300;
  for (int i = 0; i < iters; ++i) {
    const auto t0 = Clock::now();
    body();
    const auto t1 = Clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

void report(const char* name, double serial_ms, double parallel_ms) {
  std::printf("%-16s serial %9.3f ms   parallel %9.3f ms   speedup %5.2fx\n", name, serial_ms,
              parallel_ms, serial_ms / parallel_ms);
}

}  // namespace

int main(int argc, char** argv) {
  int classes = 12;
  int height = 256;
  int width = 256;
  int iters = 5;

  CLI::App app{"kernel timing: parallel versus serial reference"};
  app.add_option("--classes", classes, "channel count");
  app.add_option("--height", height, "grid height");
  app.add_option("--width", width, "grid width");
  app.add_option("--iters", iters, "repetitions per kernel (best-of)");
  CLI11_PARSE(app, argc, argv);

  std::mt19937_64 rng(7);
  layoutgen::FeatureTensor f{layoutgen::Tensor3(classes, height, width)};
  for (double& v : f.tensor.data) v = layoutgen::normal01(rng);
  layoutgen::Palette t;
  t.proportions.assign(classes, 1.0 / classes);

  std::printf("workload: %d classes, %dx%d grid, best of %d\n\n", classes, height, width, iters);

  report("activation",
         time_ms(iters, [&] { (void)layoutgen::reference::saa(f, t); }),
         time_ms(iters, [&] { (void)layoutgen::saa(f, t); }));

  report("loss gradient",
         time_ms(iters, [&] { (void)layoutgen::reference::cond_loss_grad(f, t); }),
         time_ms(iters, [&] { (void)layoutgen::cond_loss_grad(f, t); }));

  report("blur sigma=4",
         time_ms(iters, [&] { (void)layoutgen::reference::gaussian_blur(f.tensor, 4.0); }),
         time_ms(iters, [&] { (void)layoutgen::gaussian_blur(f.tensor, 4.0); }));

  report("transport k=10",
         time_ms(iters, [&] { (void)layoutgen::reference::sinkhorn(f, t, 10); }),
         time_ms(iters, [&] { (void)layoutgen::sinkhorn(f, t, 10); }));

  return 0;
}
