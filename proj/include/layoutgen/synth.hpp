#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "layoutgen/transforms.hpp"
#include "layoutgen/types.hpp"

namespace layoutgen {

struct SynthesisConfig {
  int height = 0;
  int width = 0;
  int steps = 2000;
  double step_size = 0.5;
  double momentum = 0.9;
  double init_std = 1.0;
  double kl_stop = 0.01;
  int checkpoint_every = 25;
  bool multiscale = false;
  std::uint64_t seed = 0;
};

struct TraceRecord {
  int step = 0;
  double entropy = 0.0;
  double spread = 0.0;
  double total = 0.0;  // entropy + spread
  double kl = 0.0;     // realized proportion divergence at this step
};

struct SynthesisTrace {
  std::vector<TraceRecord> records;
  double final_kl = 0.0;
  int steps_run = 0;
  bool converged = false;
};

struct SynthesisResult {
  HardLayout layout;
  SoftMask mask;
  SynthesisTrace trace;
};

/// Gradient descent with momentum on the features under the entropy and
/// spread objectives, stopping early once the realized class histogram is
/// within kl_stop of the palette. Deterministic given the seed.
SynthesisResult synthesize(const Palette& t, const SynthesisConfig& cfg);

/// Repaints the region of the input under an augmented palette whose
/// trailing entry is the background budget. Pixels outside the region come
/// back exactly as in the input.
SynthesisResult synthesize_edit(const HardLayout& input, const EditRegion& region,
                                const Palette& augmented, const SynthesisConfig& cfg);

struct GradCheckReport {
  double max_rel_err = 0.0;
  double tolerance = 1e-5;
  bool pass = false;
  int classes = 0;
  int height = 0;
  int width = 0;
  std::uint64_t seed = 0;
};

/// Compares the analytic feature gradient against a fourth-order central
/// finite difference of the loss on a random instance.
GradCheckReport gradcheck(std::uint64_t seed, int classes, int height, int width,
                          double fd_step = 1e-3);

/// Fixed color for a class index: 16 hand-picked entries, then a hash.
std::array<unsigned char, 3> class_color(int cls);

/// Plain-text PPM rendering of a layout with class_color per pixel.
std::string render(const HardLayout& layout);

}  // namespace layoutgen
