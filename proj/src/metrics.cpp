#include "layoutgen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include <Eigen/Dense>

#include "layoutgen/core.hpp"
#include "layoutgen/error.hpp"

namespace layoutgen {

namespace {

constexpr double kHistFloor = 1e-8;

Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (S + S.transpose()));
  if (es.info() != Eigen::Success)
    throw ValidationError(Err::NonFinite, "eigendecomposition failed");
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double proportion_kl(const Palette& target, const HardLayout& layout) {
  validate_palette(target);
  if (static_cast<int>(target.proportions.size()) != layout.classes)
    throw ValidationError(Err::DimensionMismatch, "palette size does not match layout classes");

  const Palette realized = hard_histogram(layout);
  const int C = layout.classes;
  std::vector<double> q(C);
  double qsum = 0.0;
  for (int c = 0; c < C; ++c) {
    q[c] = std::max(realized.proportions[c], kHistFloor);
    qsum += q[c];
  }
  double kl = 0.0;
  for (int c = 0; c < C; ++c) {
    const double t = target.proportions[c];
    if (t <= 0.0) continue;
    kl += t * std::log(t / (q[c] / qsum));
  }
  return kl;
}

PopulationStats population_stats(const std::vector<HardLayout>& layouts) {
  if (layouts.empty()) throw ValidationError(Err::EmptyPopulation, "no layouts given");
  const int C = layouts[0].classes;
  for (const HardLayout& l : layouts) {
    if (l.classes != C)
      throw ValidationError(Err::MixedClassCounts, "layouts disagree on class count");
  }

  const std::size_t n = layouts.size();
  Eigen::MatrixXd H(n, C);
  for (std::size_t i = 0; i < n; ++i) {
    const Palette h = hard_histogram(layouts[i]);
    for (int c = 0; c < C; ++c) H(static_cast<Eigen::Index>(i), c) = h.proportions[c];
  }

  PopulationStats out;
  out.classes = C;
  out.count = static_cast<int>(n);
  const Eigen::RowVectorXd mu = H.colwise().mean();
  out.mean.assign(mu.data(), mu.data() + C);

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(C, C);
  if (n > 1) {
    const Eigen::MatrixXd D = H.rowwise() - mu;
    cov = (D.transpose() * D) / static_cast<double>(n - 1);
  }
  out.covariance.resize(static_cast<std::size_t>(C) * C);
  for (int a = 0; a < C; ++a)
    for (int b = 0; b < C; ++b) out.covariance[static_cast<std::size_t>(a) * C + b] = cov(a, b);
  return out;
}

double frechet_distance(const PopulationStats& a, const PopulationStats& b) {
  if (a.classes != b.classes)
    throw ValidationError(Err::DimensionMismatch, "populations disagree on class count");
  const int C = a.classes;
  if (C < 1) throw ValidationError(Err::DimensionMismatch, "empty statistics");

  Eigen::VectorXd dmu(C);
  Eigen::MatrixXd Sa(C, C), Sb(C, C);
  for (int c = 0; c < C; ++c) dmu(c) = a.mean[c] - b.mean[c];
  for (int i = 0; i < C; ++i) {
    for (int j = 0; j < C; ++j) {
      Sa(i, j) = a.covariance[static_cast<std::size_t>(i) * C + j];
      Sb(i, j) = b.covariance[static_cast<std::size_t>(i) * C + j];
    }
  }

  const Eigen::MatrixXd ra = symmetric_sqrt(Sa);
  const Eigen::MatrixXd cross = symmetric_sqrt(ra * Sb * ra);
  const double v = dmu.squaredNorm() + Sa.trace() + Sb.trace() - 2.0 * cross.trace();
  return std::max(0.0, v);
}

}  // namespace layoutgen
