#pragma once

// Uniform fit/transform surface over every method the evaluation harness and
// the CLI can run.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "planarcda/baselines.hpp"
#include "planarcda/cdtrl.hpp"
#include "planarcda/correlation.hpp"
#include "planarcda/data.hpp"
#include "planarcda/error.hpp"

namespace planarcda {

enum class Method { cca, twodcca, l2dcca, cdtrl, pca, twodpca, lda, twodlda };
enum class View { x, y };

inline const char* method_key(Method m) {
  switch (m) {
    case Method::cca: return "cca";
    case Method::twodcca: return "2dcca";
    case Method::l2dcca: return "l2dcca";
    case Method::cdtrl: return "cdtrl";
    case Method::pca: return "pca";
    case Method::twodpca: return "2dpca";
    case Method::lda: return "lda";
    case Method::twodlda: return "2dlda";
  }
  return "?";
}

inline Method parse_method(const std::string& key) {
  for (Method m : {Method::cca, Method::twodcca, Method::l2dcca, Method::cdtrl, Method::pca, Method::twodpca,
                   Method::lda, Method::twodlda}) {
    if (key == method_key(m)) return m;
  }
  throw ProtocolError("unknown method '" + key + "'");
}

inline const char* mode_key(CdtrlMode m) {
  switch (m) {
    case CdtrlMode::range: return "range";
    case CdtrlMode::null: return "null";
    case CdtrlMode::complete: return "complete";
  }
  return "?";
}

inline CdtrlMode parse_mode(const std::string& key) {
  if (key == "range") return CdtrlMode::range;
  if (key == "null") return CdtrlMode::null;
  if (key == "complete") return CdtrlMode::complete;
  throw ProtocolError("unknown CDTRL mode '" + key + "'");
}

inline bool single_view(Method m) {
  return m == Method::pca || m == Method::twodpca || m == Method::lda || m == Method::twodlda;
}

struct MethodSpec {
  Method method = Method::cdtrl;
  SolverOpts solver;   // 2DCCA stage: d1, d2, ridge, iteration limits
  CdtrlOpts cdtrl;     // CDTRL branches, including the mode
  int width = 0;       // CCA components or baseline width; 0 selects the method default
  double sigma = 0.0;  // L2DCCA heat-kernel width; 0 selects the median pairwise X distance
  std::optional<double> ridge;  // CCA / LDA / 2DLDA
  View view = View::x;          // input view of the single-view baselines
};

// Report name: PCA, 2DPCA, LDA, 2DLDA, CCA, 2DCCA, L2DCCA, CDTRL, CDTRL-range, CDTRL-null.
inline std::string display_name(const MethodSpec& spec) {
  switch (spec.method) {
    case Method::cca: return "CCA";
    case Method::twodcca: return "2DCCA";
    case Method::l2dcca: return "L2DCCA";
    case Method::pca: return "PCA";
    case Method::twodpca: return "2DPCA";
    case Method::lda: return "LDA";
    case Method::twodlda: return "2DLDA";
    case Method::cdtrl:
      if (spec.cdtrl.mode == CdtrlMode::complete) return "CDTRL";
      return std::string("CDTRL-") + mode_key(spec.cdtrl.mode);
  }
  return "?";
}

// CCA, 2DCCA or L2DCCA fit together with the training means.
struct CorrelationModel {
  Method method = Method::twodcca;
  ProjectionPair proj;
  Mat mean_x;
  Mat mean_y;
  double sigma = 0.0;  // L2DCCA only
};

struct BaselineModel {
  LinearModel model;
  View view = View::x;
};

using FittedModel = std::variant<CorrelationModel, CdtrlModel, BaselineModel>;

inline Method model_method(const FittedModel& model) {
  if (const auto* c = std::get_if<CorrelationModel>(&model)) return c->method;
  if (std::holds_alternative<CdtrlModel>(model)) return Method::cdtrl;
  switch (std::get<BaselineModel>(model).model.kind) {
    case BaselineKind::pca: return Method::pca;
    case BaselineKind::twodpca: return Method::twodpca;
    case BaselineKind::lda: return Method::lda;
    case BaselineKind::twodlda: return Method::twodlda;
  }
  return Method::pca;
}

// For CDTRL this is the discriminant alternation; the 2DCCA stage that feeds it
// is reported separately (base.converged) and does not decide the outcome.
inline bool model_converged(const FittedModel& model) {
  if (const auto* c = std::get_if<CorrelationModel>(&model)) return c->proj.converged;
  if (const auto* d = std::get_if<CdtrlModel>(&model)) return d->converged;
  return true;
}

inline FittedModel fit_method(const MethodSpec& spec, const LabeledPairSet& data) {
  data.validate();
  if (single_view(spec.method)) {
    const std::vector<Mat>& view = spec.view == View::x ? data.x : data.y;
    BaselineModel out;
    out.view = spec.view;
    switch (spec.method) {
      case Method::pca: out.model = fit_pca(view, spec.width); break;
      case Method::twodpca: out.model = fit_2dpca(view, spec.width); break;
      case Method::lda: out.model = fit_lda(view, data.labels, spec.width, spec.ridge); break;
      default: out.model = fit_2dlda(view, data.labels, spec.width, spec.ridge); break;
    }
    return out;
  }
  if (spec.method == Method::cdtrl) return fit_cdtrl(data, spec.solver, spec.cdtrl);

  CorrelationModel out;
  out.method = spec.method;
  out.mean_x = mean_of(data.x);
  out.mean_y = mean_of(data.y);
  if (spec.method == Method::cca) {
    std::vector<Vec> xs;
    std::vector<Vec> ys;
    for (std::size_t i = 0; i < data.size(); ++i) {
      xs.push_back(vectorize(data.x[i]));
      ys.push_back(vectorize(data.y[i]));
    }
    const Eigen::Index d = spec.width > 0 ? spec.width : std::min<Eigen::Index>({xs[0].size(), ys[0].size(), 8});
    out.proj = fit_cca(xs, ys, d, spec.ridge);
    return out;
  }
  const CenteredPair centered = center_pair(data);
  if (spec.method == Method::twodcca) {
    out.proj = fit_2dcca(centered, spec.solver);
  } else {
    out.sigma = spec.sigma > 0.0 ? spec.sigma : median_pairwise_distance(centered.x);
    out.proj = fit_l2dcca(centered, make_weights(centered, out.sigma), spec.solver);
  }
  return out;
}

// Feature matrix of one pair under a fitted model.
inline Mat model_features(const FittedModel& model, const Mat& x, const Mat& y) {
  if (const auto* d = std::get_if<CdtrlModel>(&model)) return transform(*d, x, y);
  if (const auto* b = std::get_if<BaselineModel>(&model)) {
    return baseline_features(b->model, b->view == View::x ? x : y);
  }
  const auto& c = std::get<CorrelationModel>(model);
  if (x.rows() != c.mean_x.rows() || x.cols() != c.mean_x.cols() || y.rows() != c.mean_y.rows() ||
      y.cols() != c.mean_y.cols()) {
    throw ShapeError("features: sample shape does not match the model");
  }
  const ProjectionPair& p = c.proj;
  if (c.method == Method::cca) {
    Mat out(2 * p.d1(), 1);
    out << p.left_x.transpose() * vectorize(x - c.mean_x), p.left_y.transpose() * vectorize(y - c.mean_y);
    return out;
  }
  Mat out(2 * p.d1(), p.d2());
  out << p.left_x.transpose() * (x - c.mean_x) * p.right_x, p.left_y.transpose() * (y - c.mean_y) * p.right_y;
  return out;
}

inline std::vector<Mat> model_features(const FittedModel& model, const LabeledPairSet& data) {
  std::vector<Mat> out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out.push_back(model_features(model, data.x[i], data.y[i]));
  return out;
}

}  // namespace planarcda
