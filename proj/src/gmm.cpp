#include "layoutgen/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

#include <Eigen/Dense>
#include <json.hpp>

#include "layoutgen/core.hpp"
#include "layoutgen/error.hpp"
#include "layoutgen/rng.hpp"

namespace layoutgen {

namespace {

constexpr double kCovRidge = 1e-6;
constexpr double kMinComponentMass = 1e-12;

Eigen::MatrixXd sample_matrix(const std::vector<Palette>& samples) {
  if (samples.empty()) throw ValidationError(Err::TooFewSamples, "no palettes given");
  const int C = static_cast<int>(samples[0].proportions.size());
  for (const Palette& s : samples) {
    if (static_cast<int>(s.proportions.size()) != C)
      throw ValidationError(Err::MixedClassCounts, "palettes disagree on class count");
  }
  Eigen::MatrixXd X(samples.size(), C);
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (int c = 0; c < C; ++c) X(static_cast<Eigen::Index>(i), c) = samples[i].proportions[c];
  return X;
}

// Distance-weighted seeding: first center uniform, every later center drawn
// with probability proportional to the squared distance to the nearest
// already-chosen center.
std::vector<Eigen::Index> seed_centers(const Eigen::MatrixXd& X, int M, std::mt19937_64& rng) {
  const Eigen::Index n = X.rows();
  std::vector<Eigen::Index> centers;
  centers.push_back(static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n)));

  Eigen::VectorXd d2 = (X.rowwise() - X.row(centers[0])).rowwise().squaredNorm();
  while (static_cast<int>(centers.size()) < M) {
    const double total = d2.sum();
    Eigen::Index pick;
    if (total <= 0.0) {
      pick = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n));
    } else {
      const double u = uniform01(rng) * total;
      double acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2(i);
        if (u <= acc) {
          pick = i;
          break;
        }
      }
    }
    centers.push_back(pick);
    d2 = d2.cwiseMin((X.rowwise() - X.row(pick)).rowwise().squaredNorm());
  }
  return centers;
}

struct Params {
  Eigen::VectorXd weights;                // M
  Eigen::MatrixXd means;                  // M x C
  std::vector<Eigen::MatrixXd> covs;      // M of C x C
  std::vector<Eigen::LLT<Eigen::MatrixXd>> chol;
  std::vector<double> log_norm;           // -0.5 * (C ln 2pi + ln det)
};

void refresh_decompositions(Params& p) {
  const int C = static_cast<int>(p.means.cols());
  p.chol.clear();
  p.log_norm.clear();
  for (const Eigen::MatrixXd& cov : p.covs) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
      throw ValidationError(Err::DegenerateComponent, "covariance is not positive definite");
    double log_det = 0.0;
    for (int i = 0; i < C; ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i));
    p.chol.push_back(std::move(llt));
    p.log_norm.push_back(-0.5 * (C * std::log(2.0 * 3.14159265358979323846) + log_det));
  }
}

// M-step from responsibilities; also used for the hard seeding assignment.
void m_step(const Eigen::MatrixXd& X, const Eigen::MatrixXd& resp, Params& p) {
  const Eigen::Index n = X.rows();
  const int C = static_cast<int>(X.cols());
  const int M = static_cast<int>(resp.cols());

  p.weights.resize(M);
  p.means.resize(M, C);
  p.covs.assign(M, Eigen::MatrixXd::Zero(C, C));
  for (int m = 0; m < M; ++m) {
    const double mass = resp.col(m).sum();
    if (mass < kMinComponentMass)
      throw ValidationError(Err::DegenerateComponent, "a component lost all its mass");
    p.weights(m) = mass / static_cast<double>(n);
    p.means.row(m) = (resp.col(m).transpose() * X) / mass;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(C, C);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd d = X.row(i).transpose() - p.means.row(m).transpose();
      cov.noalias() += resp(i, m) * (d * d.transpose());
    }
    cov /= mass;
    cov.diagonal().array() += kCovRidge;
    p.covs[m] = cov;
  }
  refresh_decompositions(p);
}

// E-step in the log domain. Returns the total log-likelihood and fills resp.
double e_step(const Eigen::MatrixXd& X, const Params& p, Eigen::MatrixXd& resp) {
  const Eigen::Index n = X.rows();
  const int M = static_cast<int>(p.weights.size());
  resp.resize(n, M);
  double ll = 0.0;
  Eigen::VectorXd logp(M);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int m = 0; m < M; ++m) {
      const Eigen::VectorXd d = X.row(i).transpose() - p.means.row(m).transpose();
      const double maha = p.chol[m].matrixL().solve(d).squaredNorm();
      logp(m) = std::log(p.weights(m)) + p.log_norm[m] - 0.5 * maha;
    }
    const double mx = logp.maxCoeff();
    const double lse = mx + std::log((logp.array() - mx).exp().sum());
    ll += lse;
    for (int m = 0; m < M; ++m) resp(i, m) = std::exp(logp(m) - lse);
  }
  return ll;
}

GmmModel to_model(const Params& p) {
  GmmModel model;
  const int M = static_cast<int>(p.weights.size());
  const int C = static_cast<int>(p.means.cols());
  model.dimension = C;
  for (int m = 0; m < M; ++m) {
    GmmComponent comp;
    comp.weight = p.weights(m);
    comp.mean.resize(C);
    for (int c = 0; c < C; ++c) comp.mean[c] = p.means(m, c);
    comp.covariance.resize(static_cast<std::size_t>(C) * C);
    for (int a = 0; a < C; ++a)
      for (int b = 0; b < C; ++b) comp.covariance[static_cast<std::size_t>(a) * C + b] = p.covs[m](a, b);
    model.components.push_back(std::move(comp));
  }
  return model;
}

int parameter_count(int M, int C) {
  // Means, symmetric covariances, and free mixture weights.
  return M * (C + C * (C + 1) / 2) + (M - 1);
}

Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (S + S.transpose()));
  if (es.info() != Eigen::Success)
    throw ValidationError(Err::DegenerateComponent, "covariance eigendecomposition failed");
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

FitReport fit_gmm(const std::vector<Palette>& samples, int components, const FitOptions& opts) {
  if (components < 1) throw ValidationError(Err::BadConfig, "component count must be at least 1");
  const Eigen::MatrixXd X = sample_matrix(samples);
  const Eigen::Index n = X.rows();
  const int C = static_cast<int>(X.cols());
  if (n < components)
    throw ValidationError(Err::TooFewSamples, "fewer samples than components");

  std::mt19937_64 rng(opts.seed);
  const std::vector<Eigen::Index> centers = seed_centers(X, components, rng);

  // Hard assignment to the nearest center gives the starting responsibilities.
  Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(n, components);
  for (Eigen::Index i = 0; i < n; ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int m = 0; m < components; ++m) {
      const double d = (X.row(i) - X.row(centers[m])).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = m;
      }
    }
    resp(i, best) = 1.0;
  }

  Params p;
  m_step(X, resp, p);

  FitReport report;
  double prev = -std::numeric_limits<double>::infinity();
  Params accepted = p;
  for (int it = 0; it < opts.max_iter; ++it) {
    const double ll = e_step(X, p, resp);
    if (it > 0 && ll - prev < opts.tol) {
      report.converged = true;
      // The diagonal ridge keeps each update slightly off the exact
      // maximizer, so a terminal step can dip. Keep the better iterate so
      // the recorded likelihoods never decrease.
      if (ll < prev) {
        p = accepted;
      } else {
        report.log_likelihoods.push_back(ll);
        report.iterations = it + 1;
      }
      break;
    }
    report.log_likelihoods.push_back(ll);
    report.iterations = it + 1;
    prev = ll;
    accepted = p;
    m_step(X, resp, p);
  }

  report.model = to_model(p);
  const double best_ll = report.log_likelihoods.back();
  report.aic = 2.0 * parameter_count(components, C) - 2.0 * best_ll;
  return report;
}

SelectionReport select_components(const std::vector<Palette>& samples,
                                  const std::vector<int>& candidates, const FitOptions& opts) {
  if (candidates.empty()) throw ValidationError(Err::BadConfig, "no candidate counts given");
  SelectionReport out;
  bool have_best = false;
  int best_m = 0;
  for (const int M : candidates) {
    FitReport fit = fit_gmm(samples, M, opts);
    out.table.push_back({M, fit.aic, fit.log_likelihoods.back()});
    if (!have_best || fit.aic < out.best.aic || (fit.aic == out.best.aic && M < best_m)) {
      out.best = std::move(fit);
      best_m = M;
      have_best = true;
    }
  }
  return out;
}

Palette project_simplex(const std::vector<double>& v) {
  for (const double x : v) {
    if (!std::isfinite(x)) throw ValidationError(Err::NonFinite, "vector has a non-finite entry");
  }
  std::vector<double> clipped(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    clipped[i] = std::clamp(v[i], 0.0, 1.0);
    sum += clipped[i];
  }
  if (sum <= 0.0) throw ValidationError(Err::AllZeroAfterClip, "vector clips to zero");
  for (double& x : clipped) x /= sum;
  Palette out{std::move(clipped)};
  validate_palette(out);
  return out;
}

PaletteSampler::PaletteSampler(const GmmModel& model) {
  if (model.dimension < 2 || model.components.empty())
    throw ValidationError(Err::BadConfig, "model must have components over at least two classes");
  dimension_ = model.dimension;
  const int C = dimension_;
  double acc = 0.0;
  for (const GmmComponent& comp : model.components) {
    if (static_cast<int>(comp.mean.size()) != C ||
        static_cast<int>(comp.covariance.size()) != C * C)
      throw ValidationError(Err::DimensionMismatch, "component size does not match dimension");
    acc += comp.weight;
    cumulative_.push_back(acc);
    means_.push_back(comp.mean);
    Eigen::MatrixXd cov(C, C);
    for (int a = 0; a < C; ++a)
      for (int b = 0; b < C; ++b) cov(a, b) = comp.covariance[static_cast<std::size_t>(a) * C + b];
    const Eigen::MatrixXd root = symmetric_sqrt(cov);
    std::vector<double> factor(static_cast<std::size_t>(C) * C);
    for (int a = 0; a < C; ++a)
      for (int b = 0; b < C; ++b) factor[static_cast<std::size_t>(a) * C + b] = root(a, b);
    factors_.push_back(std::move(factor));
  }
  if (std::abs(acc - 1.0) > 1e-9)
    throw ValidationError(Err::NotNormalized, "component weights must sum to 1");
}

Palette PaletteSampler::sample(std::mt19937_64& rng) const {
  const int C = dimension_;
  for (int attempt = 0; attempt < 16; ++attempt) {
    const double u = uniform01(rng);
    std::size_t comp = cumulative_.size() - 1;
    for (std::size_t i = 0; i < cumulative_.size(); ++i) {
      if (u <= cumulative_[i]) {
        comp = i;
        break;
      }
    }
    std::vector<double> z(C);
    for (int c = 0; c < C; ++c) z[c] = normal01(rng);
    std::vector<double> x(means_[comp]);
    const std::vector<double>& A = factors_[comp];
    for (int a = 0; a < C; ++a) {
      double dot = 0.0;
      for (int b = 0; b < C; ++b) dot += A[static_cast<std::size_t>(a) * C + b] * z[b];
      x[a] += dot;
    }
    bool all_zero = true;
    for (const double v : x) {
      if (std::clamp(v, 0.0, 1.0) > 0.0) {
        all_zero = false;
        break;
      }
    }
    if (all_zero) continue;
    return project_simplex(x);
  }
  throw ValidationError(Err::DegenerateSample, "16 consecutive draws clipped to zero");
}

std::string gmm_to_json(const GmmModel& model) {
  nlohmann::json j;
  j["dimension"] = model.dimension;
  j["components"] = nlohmann::json::array();
  for (const GmmComponent& comp : model.components) {
    nlohmann::json c;
    c["weight"] = comp.weight;
    c["mean"] = comp.mean;
    c["covariance"] = comp.covariance;
    j["components"].push_back(std::move(c));
  }
  return j.dump(2);
}

GmmModel gmm_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(Err::MalformedHeader, std::string("model is not valid JSON: ") + e.what());
  }
  GmmModel model;
  try {
    model.dimension = j.at("dimension").get<int>();
    for (const nlohmann::json& c : j.at("components")) {
      GmmComponent comp;
      comp.weight = c.at("weight").get<double>();
      comp.mean = c.at("mean").get<std::vector<double>>();
      comp.covariance = c.at("covariance").get<std::vector<double>>();
      model.components.push_back(std::move(comp));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(Err::MalformedHeader, std::string("model JSON is missing fields: ") + e.what());
  }

  const int C = model.dimension;
  if (C < 2) throw ValidationError(Err::TooFewClasses, "model dimension must be at least 2");
  if (model.components.empty())
    throw ValidationError(Err::BadConfig, "model has no components");
  double wsum = 0.0;
  for (const GmmComponent& comp : model.components) {
    if (!(comp.weight >= 0.0))
      throw ValidationError(Err::NegativeEntry, "component weight is negative");
    wsum += comp.weight;
    if (static_cast<int>(comp.mean.size()) != C ||
        static_cast<int>(comp.covariance.size()) != C * C)
      throw ValidationError(Err::DimensionMismatch, "component size does not match dimension");
    for (const double v : comp.mean)
      if (!std::isfinite(v)) throw ValidationError(Err::NonFinite, "mean has a non-finite entry");
    for (int a = 0; a < C; ++a) {
      for (int b = 0; b < C; ++b) {
        const double ab = comp.covariance[static_cast<std::size_t>(a) * C + b];
        const double ba = comp.covariance[static_cast<std::size_t>(b) * C + a];
        if (!std::isfinite(ab))
          throw ValidationError(Err::NonFinite, "covariance has a non-finite entry");
        if (std::abs(ab - ba) > 1e-9)
          throw ValidationError(Err::ShapeMismatch, "covariance is not symmetric");
      }
    }
  }
  if (std::abs(wsum - 1.0) > 1e-9)
    throw ValidationError(Err::NotNormalized, "component weights must sum to 1");
  return model;
}

}  // namespace layoutgen
