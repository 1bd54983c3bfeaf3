#pragma once

#include <cstddef>
#include <vector>

namespace layoutgen {

/// Dense row-major (class, row, column) tensor of doubles.
struct Tensor3 {
  std::vector<double> data;
  int classes = 0;
  int height = 0;
  int width = 0;

  Tensor3() = default;
  Tensor3(int classes_, int height_, int width_, double fill = 0.0)
      : data(static_cast<std::size_t>(classes_) * height_ * width_, fill),
        classes(classes_),
        height(height_),
        width(width_) {}

  double& operator()(int c, int i, int j) {
    return data[(static_cast<std::size_t>(c) * height + i) * width + j];
  }
  double operator()(int c, int i, int j) const {
    return data[(static_cast<std::size_t>(c) * height + i) * width + j];
  }

  double* channel(int c) { return data.data() + static_cast<std::size_t>(c) * pixels(); }
  const double* channel(int c) const {
    return data.data() + static_cast<std::size_t>(c) * pixels();
  }

  std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }

  bool same_shape(const Tensor3& o) const {
    return classes == o.classes && height == o.height && width == o.width;
  }
  bool same_grid(const Tensor3& o) const { return height == o.height && width == o.width; }
};

/// Target class proportions on the probability simplex (the semantic code).
struct Palette {
  std::vector<double> proportions;
  int classes() const { return static_cast<int>(proportions.size()); }
  double operator[](int c) const { return proportions[c]; }
};

/// Raw C-channel scores, input to the activation pipeline.
struct FeatureTensor {
  Tensor3 tensor;
};

/// Per-class spatial distributions; every channel slice sums to 1.
struct DensityMap {
  Tensor3 tensor;
};

/// Density scaled per class by its target proportion; global mass 1.
struct WeightedDensity {
  Tensor3 tensor;
  Palette palette;
};

/// A probability distribution over classes at every pixel.
struct SoftMask {
  Tensor3 tensor;
};

/// Soft mask with one extra background channel (always the last one).
struct AugmentedSoftMask {
  Tensor3 tensor;
  int background_index = 0;
};

/// Integer label map, the argmax of a soft mask.
struct HardLayout {
  std::vector<int> labels;
  int height = 0;
  int width = 0;
  int classes = 0;

  int& at(int i, int j) { return labels[static_cast<std::size_t>(i) * width + j]; }
  int at(int i, int j) const { return labels[static_cast<std::size_t>(i) * width + j]; }
  std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
};

struct Gradient {
  Tensor3 tensor;
};

/// Scalar loss with an optional per-pixel breakdown (row-major H*W).
struct LossValue {
  double value = 0.0;
  std::vector<double> per_pixel;
  int height = 0;
  int width = 0;
};

}  // namespace layoutgen
