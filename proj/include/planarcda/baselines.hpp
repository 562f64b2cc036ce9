#pragma once

// Single-view comparison methods: PCA and LDA on row-major vectorized samples,
// 2DPCA and 2DLDA in right-projection form (features (X - M) W).

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "planarcda/data.hpp"
#include "planarcda/error.hpp"
#include "planarcda/linalg.hpp"

namespace planarcda {

enum class BaselineKind { pca, twodpca, lda, twodlda };

inline const char* baseline_key(BaselineKind k) {
  switch (k) {
    case BaselineKind::pca: return "pca";
    case BaselineKind::twodpca: return "2dpca";
    case BaselineKind::lda: return "lda";
    case BaselineKind::twodlda: return "2dlda";
  }
  return "?";
}

struct LinearModel {
  BaselineKind kind = BaselineKind::pca;
  Mat mean;        // sample mean, in the sample's own shape (m x n)
  Mat projection;  // (m*n) x width for vector kinds, n x width for 2D kinds
  Vec eigenvalues;

  [[nodiscard]] bool bilinear() const { return kind == BaselineKind::twodpca || kind == BaselineKind::twodlda; }
  [[nodiscard]] Eigen::Index width() const { return projection.cols(); }
};

namespace detail {

// Smallest count of leading eigenvalues holding 95% of the total.
inline Eigen::Index variance_width(const Vec& eigenvalues) {
  const double total = eigenvalues.cwiseMax(0.0).sum();
  if (!(total > 0.0)) return 1;
  double acc = 0.0;
  for (Eigen::Index k = 0; k < eigenvalues.size(); ++k) {
    acc += std::max(eigenvalues(k), 0.0);
    if (acc >= 0.95 * total) return k + 1;
  }
  return eigenvalues.size();
}

inline void require_width(Eigen::Index width, Eigen::Index limit, const char* what) {
  if (width < 1 || width > limit) {
    throw ShapeError(std::string(what) + ": width " + std::to_string(width) + " outside [1, " +
                     std::to_string(limit) + "]");
  }
}

inline std::vector<int> first_occurrence(const std::vector<int>& labels) {
  std::vector<int> order;
  for (int l : labels) {
    if (std::find(order.begin(), order.end(), l) == order.end()) order.push_back(l);
  }
  return order;
}

inline void require_samples(const std::vector<Mat>& samples, const char* what) {
  if (samples.size() < 2) throw EmptyInputError(std::string(what) + ": need at least two samples");
  for (const Mat& s : samples) {
    if (s.rows() != samples.front().rows() || s.cols() != samples.front().cols()) {
      throw ShapeError(std::string(what) + ": mixed sample shapes");
    }
  }
}

inline LinearModel finish(BaselineKind kind, Mat mean, GevResult eig, Eigen::Index width) {
  LinearModel out;
  out.kind = kind;
  out.mean = std::move(mean);
  out.projection = eig.eigenvectors.leftCols(width);
  out.eigenvalues = eig.eigenvalues.head(width);
  return out;
}

}  // namespace detail

// width 0 keeps 95% of the variance.
inline LinearModel fit_pca(const std::vector<Mat>& samples, Eigen::Index width = 0) {
  detail::require_samples(samples, "fit_pca");
  const Mat mean = mean_of(samples);
  const Vec mu = vectorize(mean);
  Mat scatter = Mat::Zero(mu.size(), mu.size());
  for (const Mat& s : samples) add_outer(scatter, vectorize(s) - mu);
  scatter = symmetric_from_lower(scatter) / static_cast<double>(samples.size() - 1);
  GevResult eig = sym_eig(scatter);
  if (width == 0) width = detail::variance_width(eig.eigenvalues);
  detail::require_width(width, mu.size(), "fit_pca");
  return detail::finish(BaselineKind::pca, mean, std::move(eig), width);
}

inline LinearModel fit_2dpca(const std::vector<Mat>& samples, Eigen::Index width = 0) {
  detail::require_samples(samples, "fit_2dpca");
  const Mat mean = mean_of(samples);
  Mat scatter = Mat::Zero(mean.cols(), mean.cols());
  for (const Mat& s : samples) add_outer(scatter, (s - mean).transpose());
  scatter = symmetric_from_lower(scatter) / static_cast<double>(samples.size() - 1);
  GevResult eig = sym_eig(scatter);
  if (width == 0) width = detail::variance_width(eig.eigenvalues);
  detail::require_width(width, mean.cols(), "fit_2dpca");
  return detail::finish(BaselineKind::twodpca, mean, std::move(eig), width);
}

namespace detail {

// Fisher scatters of sample "rows": vectors (bilinear = false) or the
// right-sided 2D forms sum (X - M)'(X - M) (bilinear = true).
inline std::pair<Mat, Mat> fisher_scatters(const std::vector<Mat>& samples, const std::vector<int>& labels,
                                           bool bilinear, Mat& total_mean) {
  total_mean = mean_of(samples);
  const std::vector<int> order = first_occurrence(labels);
  const Eigen::Index dim = bilinear ? total_mean.cols() : total_mean.size();
  Mat within = Mat::Zero(dim, dim);
  Mat between = Mat::Zero(dim, dim);
  auto as_columns = [&](const Mat& m) -> Mat {
    if (bilinear) return m.transpose();
    return vectorize(m);
  };
  for (int label : order) {
    std::vector<Mat> members;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (labels[i] == label) members.push_back(samples[i]);
    }
    const Mat class_mean = mean_of(members);
    for (const Mat& s : members) add_outer(within, as_columns(s - class_mean));
    between.selfadjointView<Eigen::Lower>().rankUpdate(as_columns(class_mean - total_mean),
                                                       static_cast<double>(members.size()));
  }
  return {symmetric_from_lower(within), symmetric_from_lower(between)};
}

inline LinearModel fit_discriminant(BaselineKind kind, const std::vector<Mat>& samples, const std::vector<int>& labels,
                                    Eigen::Index width, std::optional<double> ridge) {
  const bool bilinear = kind == BaselineKind::twodlda;
  const char* what = bilinear ? "fit_2dlda" : "fit_lda";
  require_samples(samples, what);
  if (labels.size() != samples.size()) throw ShapeError(std::string(what) + ": label/sample count mismatch");
  const auto classes = static_cast<Eigen::Index>(first_occurrence(labels).size());
  if (classes < 2) throw ProtocolError(std::string(what) + ": needs at least two classes");
  Mat mean;
  auto [within, between] = fisher_scatters(samples, labels, bilinear, mean);
  const Eigen::Index dim = within.rows();
  const Eigen::Index limit = bilinear ? dim : std::min(classes - 1, dim);
  if (width == 0) width = std::min(classes - 1, dim);
  require_width(width, limit, what);
  return finish(kind, mean, gen_eig(between, within, ridge), width);
}

}  // namespace detail

// width 0 selects c - 1.
inline LinearModel fit_lda(const std::vector<Mat>& samples, const std::vector<int>& labels, Eigen::Index width = 0,
                           std::optional<double> ridge = std::nullopt) {
  return detail::fit_discriminant(BaselineKind::lda, samples, labels, width, ridge);
}

// width 0 selects min(c - 1, n).
inline LinearModel fit_2dlda(const std::vector<Mat>& samples, const std::vector<int>& labels, Eigen::Index width = 0,
                             std::optional<double> ridge = std::nullopt) {
  return detail::fit_discriminant(BaselineKind::twodlda, samples, labels, width, ridge);
}

inline Mat baseline_features(const LinearModel& model, const Mat& sample) {
  if (sample.rows() != model.mean.rows() || sample.cols() != model.mean.cols()) {
    throw ShapeError("baseline features: sample shape does not match the model");
  }
  if (model.bilinear()) return (sample - model.mean) * model.projection;
  return model.projection.transpose() * vectorize(sample - model.mean);
}

}  // namespace planarcda
