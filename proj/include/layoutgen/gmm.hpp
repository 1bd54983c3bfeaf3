#pragma once

#include <random>
#include <string>
#include <vector>

#include "layoutgen/types.hpp"

namespace layoutgen {

struct GmmComponent {
  double weight = 0.0;
  std::vector<double> mean;        // length = dimension
  std::vector<double> covariance;  // row-major dimension x dimension
};

struct GmmModel {
  int dimension = 0;
  std::vector<GmmComponent> components;
};

struct FitOptions {
  int max_iter = 200;
  double tol = 1e-6;
  std::uint64_t seed = 0;
};

struct FitReport {
  GmmModel model;
  std::vector<double> log_likelihoods;  // one entry per EM iteration
  double aic = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Full-covariance EM fit with a distance-weighted seeding pass. Every
/// covariance update adds 1e-6 to the diagonal. Deterministic given the seed.
FitReport fit_gmm(const std::vector<Palette>& samples, int components,
                  const FitOptions& opts = {});

struct SelectionRow {
  int components = 0;
  double aic = 0.0;
  double log_likelihood = 0.0;
};

struct SelectionReport {
  FitReport best;
  std::vector<SelectionRow> table;  // one row per candidate, in input order
};

/// Fits every candidate count and keeps the lowest AIC, ties to the smaller
/// count. All candidates share the seed in opts.
SelectionReport select_components(const std::vector<Palette>& samples,
                                  const std::vector<int>& candidates,
                                  const FitOptions& opts = {});

/// Clips to [0, 1] and L1-normalizes. Rejects vectors that clip to zero.
Palette project_simplex(const std::vector<double>& v);

/// Draws palettes from a model: pick a component, draw a Gaussian sample,
/// project onto the simplex. Zero-clipping draws are retried up to 16 times.
class PaletteSampler {
 public:
  explicit PaletteSampler(const GmmModel& model);

  Palette sample(std::mt19937_64& rng) const;

 private:
  int dimension_;
  std::vector<double> cumulative_;
  std::vector<std::vector<double>> means_;
  std::vector<std::vector<double>> factors_;  // row-major symmetric square roots
};

std::string gmm_to_json(const GmmModel& model);
GmmModel gmm_from_json(const std::string& text);

}  // namespace layoutgen
