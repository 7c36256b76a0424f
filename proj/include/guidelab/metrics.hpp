#pragma once

#include "guidelab/core.hpp"
#include "guidelab/models.hpp"
#include "guidelab/sampler.hpp"
#include "guidelab/text.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace guidelab {

namespace detail {

inline Vector column_mean(const PointMatrix& x) { return x.colwise().mean().transpose(); }

inline Matrix covariance(const PointMatrix& x, const Vector& mean) {
  const Matrix centered = x.rowwise() - mean.transpose();
  return centered.transpose() * centered / static_cast<double>(std::max<Eigen::Index>(x.rows() - 1, 1));
}

inline Matrix symmetric_sqrt(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
  const Vector roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace detail

/// ||mu_g - mu_r||^2 + Tr(C_g + C_r - 2 (C_g C_r)^{1/2}) on raw coordinates.
/// Tr (C_g C_r)^{1/2} is evaluated as Tr (C_g^{1/2} C_r C_g^{1/2})^{1/2}, which is
/// symmetric positive semidefinite. Both covariances get +1e-10 I.
inline double frechet_distance(const PointMatrix& generated, const PointMatrix& reference,
                               bool allow_rank_deficient = false) {
  require(generated.cols() == reference.cols(), "frechet: dimension mismatch");
  const Eigen::Index D = generated.cols();
  if (!allow_rank_deficient) {
    require(generated.rows() >= D + 1 && reference.rows() >= D + 1,
            "frechet: need at least D + 1 points per set for full-rank covariances");
  }
  require(generated.rows() >= 2 && reference.rows() >= 2, "frechet: need at least two points per set");
  const Vector mu_g = detail::column_mean(generated);
  const Vector mu_r = detail::column_mean(reference);
  const Matrix reg = 1e-10 * Matrix::Identity(D, D);
  const Matrix c_g = detail::covariance(generated, mu_g) + reg;
  const Matrix c_r = detail::covariance(reference, mu_r) + reg;
  const Matrix root_g = detail::symmetric_sqrt(c_g);
  Matrix middle = root_g * c_r * root_g;
  middle = 0.5 * (middle + middle.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(middle, Eigen::EigenvaluesOnly);
  const double cross = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double value = (mu_g - mu_r).squaredNorm() + c_g.trace() + c_r.trace() - 2.0 * cross;
  return std::max(0.0, value);
}

namespace detail {

/// Squared distance from each row of `support` to its k-th nearest other row.
inline std::vector<double> kth_neighbor_radii(const PointMatrix& support, int k, int threads) {
  const auto n = static_cast<std::size_t>(support.rows());
  std::vector<double> radii(n);
  parallel_for(n, threads, [&](std::size_t i) {
    std::vector<double> d;
    d.reserve(n - 1);
    for (Eigen::Index j = 0; j < support.rows(); ++j) {
      if (static_cast<std::size_t>(j) == i) continue;
      d.push_back((support.row(static_cast<Eigen::Index>(i)) - support.row(j)).squaredNorm());
    }
    std::nth_element(d.begin(), d.begin() + (k - 1), d.end());
    radii[i] = d[static_cast<std::size_t>(k - 1)];
  });
  return radii;
}

/// Fraction of `queries` inside the union of k-NN balls around `support`.
inline double coverage(const PointMatrix& queries, const PointMatrix& support, int k, int threads) {
  const std::vector<double> radii = kth_neighbor_radii(support, k, threads);
  const auto n = static_cast<std::size_t>(queries.rows());
  std::vector<unsigned char> inside(n, 0);
  parallel_for(n, threads, [&](std::size_t i) {
    for (Eigen::Index j = 0; j < support.rows(); ++j) {
      if ((queries.row(static_cast<Eigen::Index>(i)) - support.row(j)).squaredNorm() <=
          radii[static_cast<std::size_t>(j)]) {
        inside[i] = 1;
        return;
      }
    }
  });
  std::size_t count = 0;
  for (unsigned char c : inside) count += c;
  return static_cast<double>(count) / static_cast<double>(n);
}

}  // namespace detail

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

/// k-NN manifold estimates: precision is the share of generated points inside the
/// reference support estimate, recall the share of reference points inside the
/// generated one.
inline PrecisionRecall knn_precision_recall(const PointMatrix& generated, const PointMatrix& reference, int k = 3,
                                            int threads = 1) {
  require(k >= 1, "precision/recall: k must be positive");
  require(generated.cols() == reference.cols(), "precision/recall: dimension mismatch");
  require(generated.rows() > k && reference.rows() > k, "precision/recall: k must be smaller than both set sizes");
  return {detail::coverage(generated, reference, k, threads), detail::coverage(reference, generated, k, threads)};
}

/// Share of samples whose most probable class at t = 0 equals the target.
inline double class_fidelity(const PointMatrix& generated, const std::vector<int>& targets,
                             const ClassifierModel& oracle) {
  require(static_cast<std::size_t>(generated.rows()) == targets.size(), "class_fidelity: one target per sample");
  require(generated.rows() >= 1, "class_fidelity: no samples");
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < generated.rows(); ++i) {
    const Vector logp = oracle.class_logprobs(generated.row(i).transpose(), 0);
    Eigen::Index best = 0;
    logp.maxCoeff(&best);
    if (static_cast<int>(best) == targets[static_cast<std::size_t>(i)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(generated.rows());
}

struct NormCurveSummary {
  std::vector<double> mean_norm;  // per executed step, averaged over chains
  double first_mean = 0.0;        // over the first 10% of steps
  double last_mean = 0.0;         // over the last 10% of steps
  double ratio = 1.0;
  bool all_zero = false;          // ratio set to 1 by convention
  /// Largest relative deviation of an active step's norm from `expected`, if given.
  double max_rel_deviation = 0.0;
};

inline NormCurveSummary norm_curve_summary(const std::vector<TrajectoryLog>& logs) {
  require(!logs.empty(), "norm curves: no trajectories");
  const std::size_t steps = logs.front().records.size();
  require(steps >= 1, "norm curves: trajectories carry no step records");
  NormCurveSummary out;
  out.mean_norm.assign(steps, 0.0);
  for (const auto& log : logs) {
    require(log.records.size() == steps, "norm curves: trajectories have different step counts");
    for (std::size_t i = 0; i < steps; ++i) out.mean_norm[i] += log.records[i].adjustment_norm;
  }
  for (double& v : out.mean_norm) v /= static_cast<double>(logs.size());
  const std::size_t decile = std::max<std::size_t>(1, steps / 10);
  for (std::size_t i = 0; i < decile; ++i) {
    out.first_mean += out.mean_norm[i];
    out.last_mean += out.mean_norm[steps - decile + i];
  }
  out.first_mean /= static_cast<double>(decile);
  out.last_mean /= static_cast<double>(decile);
  if (out.first_mean == 0.0) {
    out.ratio = 1.0;
    out.all_zero = out.last_mean == 0.0;
  } else {
    out.ratio = out.last_mean / out.first_mean;
  }
  return out;
}

/// Worst relative gap between any active step's norm and `expected`.
inline double max_active_norm_deviation(const std::vector<TrajectoryLog>& logs, double expected) {
  double worst = 0.0;
  for (const auto& log : logs) {
    for (const auto& r : log.records) {
      if (r.guidance_active) worst = std::max(worst, std::abs(r.adjustment_norm - expected) / expected);
    }
  }
  return worst;
}

inline double median(std::vector<double> values) {
  require(!values.empty(), "median of an empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

struct DistanceLawRow {
  int step = 0;
  int t = 0;
  double alpha_bar = 1.0;
  double d_theory = 0.0;
  double median_d_hat = 0.0;
  double median_rel_error = 0.0;
  bool included = false;  // 1 - alpha_bar >= 0.1
};

struct DistanceLawFit {
  std::vector<DistanceLawRow> rows;
  /// Median relative error pooled over every chain and every included step.
  double aggregate = 0.0;
  std::size_t included_points = 0;
};

/// traces[c] holds one chain's records; chains must trace the same steps.
inline DistanceLawFit distance_law_fit(const std::vector<std::vector<DistanceRecord>>& traces,
                                       double min_noise = 0.1) {
  require(!traces.empty(), "distance law: no traces");
  std::map<int, std::vector<const DistanceRecord*>> by_step;
  for (const auto& chain : traces) {
    for (const auto& r : chain) by_step[r.step].push_back(&r);
  }
  DistanceLawFit fit;
  std::vector<double> pooled;
  for (const auto& [step, records] : by_step) {
    DistanceLawRow row;
    row.step = step;
    row.t = records.front()->t;
    row.alpha_bar = records.front()->alpha_bar;
    row.d_theory = records.front()->d_theory;
    row.included = 1.0 - row.alpha_bar >= min_noise;
    std::vector<double> d_hat;
    std::vector<double> rel;
    for (const auto* r : records) {
      d_hat.push_back(r->d_hat);
      if (r->d_theory > 0.0) rel.push_back(std::abs(r->d_hat - r->d_theory) / r->d_theory);
    }
    row.median_d_hat = median(d_hat);
    row.median_rel_error = rel.empty() ? 0.0 : median(rel);
    if (row.included) pooled.insert(pooled.end(), rel.begin(), rel.end());
    fit.rows.push_back(row);
  }
  std::sort(fit.rows.begin(), fit.rows.end(), [](const auto& a, const auto& b) { return a.step < b.step; });
  fit.included_points = pooled.size();
  fit.aggregate = pooled.empty() ? 0.0 : median(std::move(pooled));
  return fit;
}

/// Rank correlation with average ranks for ties.
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  require(a.size() == b.size() && a.size() >= 2, "spearman: need two equal-length series");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
      std::size_t j = i;
      while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t m = i; m <= j; ++m) r[order[m]] = avg;
      i = j + 1;
    }
    return r;
  };
  const std::vector<double> ra = ranks(a);
  const std::vector<double> rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) return 0.0;
  return cov / std::sqrt(va * vb);
}

struct MetricsReport {
  double frechet = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double class_fidelity = 0.0;
  std::size_t n_generated = 0;
  std::size_t n_reference = 0;
  int k = 3;
  std::uint64_t config_fingerprint = 0;

  static std::string csv_header() {
    return "frechet,precision,recall,class_fidelity,n_generated,n_reference,k,config_fingerprint";
  }

  std::string csv_row() const {
    std::ostringstream out;
    out << text::format(frechet) << ',' << text::format(precision) << ',' << text::format(recall) << ','
        << text::format(class_fidelity) << ',' << n_generated << ',' << n_reference << ',' << k << ','
        << text::hex(config_fingerprint);
    return out.str();
  }

  std::string text_block() const {
    std::ostringstream out;
    out << "frechet (raw coordinates)  " << text::format(frechet) << '\n'
        << "precision (k=" << k << ")        " << text::format(precision) << '\n'
        << "recall (k=" << k << ")           " << text::format(recall) << '\n'
        << "class fidelity (oracle)    " << text::format(class_fidelity) << '\n'
        << "generated / reference      " << n_generated << " / " << n_reference << '\n';
    return out.str();
  }
};

struct EvalOptions {
  int k = 3;
  int threads = 1;
  bool allow_rank_deficient = false;
};

inline MetricsReport evaluate(const PointMatrix& generated, const std::vector<int>& targets,
                              const PointMatrix& reference, const ClassifierModel* oracle,
                              const EvalOptions& options = {}) {
  MetricsReport r;
  r.k = options.k;
  r.n_generated = static_cast<std::size_t>(generated.rows());
  r.n_reference = static_cast<std::size_t>(reference.rows());
  r.frechet = frechet_distance(generated, reference, options.allow_rank_deficient);
  const PrecisionRecall pr = knn_precision_recall(generated, reference, options.k, options.threads);
  r.precision = pr.precision;
  r.recall = pr.recall;
  if (oracle && !targets.empty()) r.class_fidelity = class_fidelity(generated, targets, *oracle);
  return r;
}

}  // namespace guidelab
