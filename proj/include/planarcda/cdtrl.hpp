#pragma once

// Complete discriminative representation over paired 2D data.
//
// Pipeline: center both views, fit 2DCCA, project each pair to d1 x d2 maps,
// stack the two maps vertically into F_i (2d1 x d2), then learn bilinear
// discriminant projections l' F r by alternating left and right updates:
//
//   range branch:  max tr(l' Sb l) / (tr(l' Sw l) + kappa)   over orthonormal l
//   null branch:   max tr(l' Sb l)  subject to  l' Sw l = 0   over orthonormal l
//
// where Sw, Sb are the Fisher scatters of the stacked maps conditioned on the
// fixed opposite side. Both objectives take the same value whether evaluated
// from the left (Sw^r) or the right (Sw^l), so each half-step is an exact
// maximization of one shared function and the alternation is monotone.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "planarcda/correlation.hpp"
#include "planarcda/data.hpp"
#include "planarcda/error.hpp"
#include "planarcda/linalg.hpp"

namespace planarcda {

enum class Side { left, right };
enum class BranchMode { range, null };
enum class CdtrlMode { range, null, complete };

struct ProjectedMaps {
  std::vector<Mat> x;  // L_X' X~_i R_X
  std::vector<Mat> y;  // L_Y' Y~_i R_Y
};

inline ProjectedMaps project_pair(const CenteredPair& data, const ProjectionPair& proj) {
  if (data.x.size() != data.y.size()) throw ShapeError("project_pair: view sample counts differ");
  ProjectedMaps out;
  out.x.reserve(data.x.size());
  out.y.reserve(data.y.size());
  for (std::size_t i = 0; i < data.x.size(); ++i) {
    const Mat& xi = data.x[i];
    const Mat& yi = data.y[i];
    if (xi.rows() != proj.left_x.rows() || xi.cols() != proj.right_x.rows() || yi.rows() != proj.left_y.rows() ||
        yi.cols() != proj.right_y.rows()) {
      throw ShapeError("project_pair: sample " + std::to_string(i) + " does not match the projection shapes");
    }
    out.x.push_back(proj.left_x.transpose() * xi * proj.right_x);
    out.y.push_back(proj.left_y.transpose() * yi * proj.right_y);
  }
  return out;
}

struct StackedMaps {
  std::vector<Mat> f;
  std::vector<int> labels;
  int classes = 0;
  Mat total_mean;
  std::vector<Mat> class_means;   // index label - 1
  std::vector<int> class_counts;  // index label - 1
  std::vector<int> class_order;   // labels in order of first occurrence

  [[nodiscard]] Eigen::Index rows() const { return total_mean.rows(); }
  [[nodiscard]] Eigen::Index cols() const { return total_mean.cols(); }
  [[nodiscard]] int present_classes() const { return static_cast<int>(class_order.size()); }
};

// Builds the mean statistics for arbitrary maps F_i. Sums run in sample order
// and classes in first-occurrence order, so relabeling classes cannot change
// any floating-point result.
inline StackedMaps make_stacked(std::vector<Mat> f, std::vector<int> labels, int classes) {
  if (f.empty()) throw EmptyInputError("stacked maps: no samples");
  if (f.size() != labels.size()) throw ShapeError("stacked maps: label/sample count mismatch");
  StackedMaps out;
  out.classes = classes;
  const Eigen::Index r = f.front().rows();
  const Eigen::Index c = f.front().cols();
  out.total_mean = Mat::Zero(r, c);
  out.class_means.assign(static_cast<std::size_t>(classes), Mat::Zero(r, c));
  out.class_counts.assign(static_cast<std::size_t>(classes), 0);
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i].rows() != r || f[i].cols() != c) throw ShapeError("stacked maps: mixed map shapes");
    const int label = labels[i];
    if (label < 1 || label > classes) throw ProtocolError("stacked maps: label outside [1..classes]");
    const auto k = static_cast<std::size_t>(label - 1);
    if (out.class_counts[k]++ == 0) out.class_order.push_back(label);
    out.class_means[k] += f[i];
    out.total_mean += f[i];
  }
  out.total_mean /= static_cast<double>(f.size());
  for (std::size_t k = 0; k < out.class_means.size(); ++k) {
    if (out.class_counts[k] > 0) out.class_means[k] /= static_cast<double>(out.class_counts[k]);
  }
  out.f = std::move(f);
  out.labels = std::move(labels);
  return out;
}

// F_i = [X_P,i ; Y_P,i].
inline StackedMaps stack_maps(const ProjectedMaps& maps, const std::vector<int>& labels, int classes) {
  if (maps.x.size() != maps.y.size() || maps.x.size() != labels.size()) {
    throw ShapeError("stack_maps: label/sample count mismatch");
  }
  std::vector<Mat> f;
  f.reserve(maps.x.size());
  for (std::size_t i = 0; i < maps.x.size(); ++i) {
    if (maps.x[i].cols() != maps.y[i].cols()) throw ShapeError("stack_maps: views disagree on d2");
    Mat fi(maps.x[i].rows() + maps.y[i].rows(), maps.x[i].cols());
    fi << maps.x[i], maps.y[i];
    f.push_back(std::move(fi));
  }
  return make_stacked(std::move(f), labels, classes);
}

struct SideScatter {
  Side side = Side::left;
  Mat within;
  Mat between;
};

// Left side (fixed = r, d2 rows):  Sw = sum D r r' D',  Sb = sum_j n_j B_j r r' B_j'.
// Right side (fixed = l, 2d1 rows): Sw = sum D' l l' D, Sb = sum_j n_j B_j' l l' B_j.
// D = F_i - class mean, B_j = class mean - total mean.
inline SideScatter side_scatter(const StackedMaps& stacked, const Mat& fixed, Side side) {
  const bool left = side == Side::left;
  const Eigen::Index want = left ? stacked.cols() : stacked.rows();
  if (fixed.rows() != want) {
    throw ShapeError(std::string("side_scatter: fixed projection needs ") + std::to_string(want) + " rows, got " +
                     std::to_string(fixed.rows()));
  }
  const Eigen::Index dim = left ? stacked.rows() : stacked.cols();
  SideScatter out{side, Mat::Zero(dim, dim), Mat::Zero(dim, dim)};
  for (std::size_t i = 0; i < stacked.f.size(); ++i) {
    const Mat dev = stacked.f[i] - stacked.class_means[static_cast<std::size_t>(stacked.labels[i] - 1)];
    add_outer(out.within, left ? Mat(dev * fixed) : Mat(dev.transpose() * fixed));
  }
  for (int label : stacked.class_order) {
    const auto k = static_cast<std::size_t>(label - 1);
    const Mat gap = stacked.class_means[k] - stacked.total_mean;
    const Mat t = left ? Mat(gap * fixed) : Mat(gap.transpose() * fixed);
    out.between.selfadjointView<Eigen::Lower>().rankUpdate(t, static_cast<double>(stacked.class_counts[k]));
  }
  out.within = symmetric_from_lower(out.within);
  out.between = symmetric_from_lower(out.between);
  return out;
}

struct SideUpdate {
  Mat basis;  // orthonormal columns; empty when the branch has nothing to offer
  double objective = 0.0;
  int inner_iterations = 0;
  [[nodiscard]] bool empty() const { return basis.cols() == 0; }
};

// Range objective tr(V' Sb V) / (tr(V' Sw V) + ridge * width); null objective tr(V' Sb V).
inline double branch_objective(const SideScatter& s, const Mat& basis, BranchMode mode, double ridge) {
  const double num = (basis.transpose() * s.between * basis).trace();
  if (mode == BranchMode::null) return num;
  const double den = (basis.transpose() * s.within * basis).trace() + ridge * static_cast<double>(basis.cols());
  if (!(den > 0.0)) throw SingularityError("range objective: zero within-class trace; set a positive ridge");
  return num / den;
}

namespace detail {

inline Mat top_columns(const Mat& sym, Eigen::Index width) {
  const Mat s = 0.5 * (sym + sym.transpose());
  return sym_eig(s).eigenvectors.leftCols(width);
}

}  // namespace detail

// One half-step of the alternation. `previous` (optional) is the current basis
// for this side; the range update starts its trace-ratio iteration from its
// objective, which makes the step non-decreasing.
inline SideUpdate update_side(const StackedMaps& stacked, const Mat& fixed, Side side, BranchMode mode,
                              Eigen::Index width, double ridge, double null_tol, const Mat* previous = nullptr) {
  const SideScatter s = side_scatter(stacked, fixed, side);
  const Eigen::Index dim = s.within.rows();
  if (width < 1 || width > dim) {
    throw ShapeError("update_side: width " + std::to_string(width) + " outside [1, " + std::to_string(dim) + "]");
  }
  if (ridge < 0.0 || !std::isfinite(ridge)) throw NumericError("update_side: ridge must be finite and >= 0");
  SideUpdate out;

  if (mode == BranchMode::null) {
    const Mat z = null_space(s.within, null_tol);
    if (z.cols() == 0) return out;
    const Eigen::Index w = std::min(width, z.cols());
    const Mat reduced = z.transpose() * s.between * z;
    Mat basis = z * detail::top_columns(reduced, w);
    Eigen::HouseholderQR<Mat> qr(basis);
    basis = qr.householderQ() * Mat::Identity(basis.rows(), w);
    apply_sign_convention(basis);
    out.objective = branch_objective(s, basis, mode, ridge);
    out.basis = std::move(basis);
    return out;
  }

  // Range branch. Sw == 0 means the range-space constraint cannot hold.
  if (s.within.trace() == 0.0) return out;

  const bool warm = previous != nullptr && previous->rows() == dim && previous->cols() == width;
  double lambda = warm ? branch_objective(s, *previous, mode, ridge) : 0.0;
  Mat best = warm ? *previous : Mat();
  double best_value = warm ? lambda : -std::numeric_limits<double>::infinity();
  for (int it = 0; it < 200; ++it) {
    Mat v = detail::top_columns(s.between - lambda * s.within, width);
    const double next = branch_objective(s, v, mode, ridge);
    ++out.inner_iterations;
    if (next > best_value) {
      best_value = next;
      best = std::move(v);
    }
    if (!(next > lambda + 1e-14 * std::abs(next))) break;
    lambda = next;
  }
  out.basis = std::move(best);
  out.objective = best_value;
  return out;
}

struct CdtrlOpts {
  int range_left = 0;   // 0: min(c-1, d2, 2d1)
  int range_right = 0;  // 0: min(c-1, d2, 2d1)
  int null_left = 0;    // 0: detected null-space dimension, capped at c-1
  int null_right = 0;   // 0: min(c-1, d2)
  CdtrlMode mode = CdtrlMode::complete;
  int max_iter = 50;
  double conv_tol = 1e-8;
  std::optional<double> ridge;  // unset: 1e-8 * trace(Sw at the initial r) / 2d1
  double null_tol = 1e-8;
};

struct Branch {
  Mat left;   // 2d1 x e
  Mat right;  // d2 x e'
  // Objective after every half-step: left, then (right, left) per iteration.
  std::vector<double> objective_trace;
  int iterations = 0;
  bool converged = false;
  double ridge = 0.0;  // per-column ridge on the left side; right side uses ridge * e_left / e_right

  [[nodiscard]] bool empty() const { return left.cols() == 0; }
};

struct CdtrlModel {
  ProjectionPair base;
  Mat mean_x;
  Mat mean_y;
  CdtrlMode mode = CdtrlMode::complete;
  int classes = 0;
  Branch range;
  Branch null;
  bool converged = false;
};

namespace detail {

inline Branch fit_branch(const StackedMaps& stacked, BranchMode mode, Eigen::Index e_left, Eigen::Index e_right,
                         double ridge, const CdtrlOpts& opts) {
  Branch br;
  br.ridge = ridge;
  const double right_ridge = ridge * static_cast<double>(e_left) / static_cast<double>(e_right);
  Mat r = Mat::Identity(stacked.cols(), e_right);

  SideUpdate lu = update_side(stacked, r, Side::left, mode, e_left, ridge, opts.null_tol);
  if (lu.empty()) return br;
  Mat l = std::move(lu.basis);
  br.objective_trace.push_back(lu.objective);
  double prev = lu.objective;

  for (int it = 1; it <= opts.max_iter; ++it) {
    SideUpdate ru = update_side(stacked, l, Side::right, mode, e_right, right_ridge, opts.null_tol, &r);
    if (ru.empty()) break;
    r = std::move(ru.basis);
    br.objective_trace.push_back(ru.objective);

    lu = update_side(stacked, r, Side::left, mode, l.cols(), ridge, opts.null_tol, &l);
    if (lu.empty()) break;
    l = std::move(lu.basis);
    br.objective_trace.push_back(lu.objective);
    br.iterations = it;

    const double cur = lu.objective;
    const double scale = std::max(std::abs(cur), std::numeric_limits<double>::min());
    if (std::abs(cur - prev) / scale < opts.conv_tol) {
      br.converged = true;
      break;
    }
    prev = cur;
  }
  br.left = std::move(l);
  br.right = std::move(r);
  return br;
}

}  // namespace detail

inline CdtrlModel fit_cdtrl(const LabeledPairSet& data, const SolverOpts& solver = {}, const CdtrlOpts& opts = {}) {
  data.validate();
  if (data.classes < 2) throw ProtocolError("CDTRL needs at least two classes");
  if (opts.max_iter < 1) throw ProtocolError("CDTRL: max_iter must be >= 1");
  if (!(opts.conv_tol > 0.0) || !(opts.null_tol > 0.0)) throw ProtocolError("CDTRL: tolerances must be positive");

  const CenteredPair centered = center_pair(data);
  CdtrlModel model;
  model.mode = opts.mode;
  model.classes = data.classes;
  model.mean_x = centered.mean_x;
  model.mean_y = centered.mean_y;
  model.base = fit_2dcca(centered, solver);
  const StackedMaps stacked = stack_maps(project_pair(centered, model.base), data.labels, data.classes);

  const Eigen::Index rows = stacked.rows();  // 2 d1
  const Eigen::Index cols = stacked.cols();  // d2
  const Eigen::Index cm1 = stacked.present_classes() - 1;

  if (opts.mode != CdtrlMode::null) {
    const Eigen::Index e = std::min({cm1, cols, rows});
    const Eigen::Index el = opts.range_left > 0 ? opts.range_left : e;
    const Eigen::Index er = opts.range_right > 0 ? opts.range_right : e;
    if (el > rows || er > cols) throw ShapeError("CDTRL: range widths exceed the stacked map shape");
    double ridge = 0.0;
    if (opts.ridge) {
      ridge = *opts.ridge;
    } else {
      const SideScatter s0 = side_scatter(stacked, Mat::Identity(cols, er), Side::left);
      ridge = 1e-8 * s0.within.trace() / static_cast<double>(rows);
    }
    model.range = detail::fit_branch(stacked, BranchMode::range, el, er, ridge, opts);
  }
  if (opts.mode != CdtrlMode::range) {
    const Eigen::Index er = opts.null_right > 0 ? opts.null_right : std::min(cm1, cols);
    if (er > cols) throw ShapeError("CDTRL: null right width exceeds d2");
    Eigen::Index el = opts.null_left;
    if (el <= 0) {
      const SideScatter s0 = side_scatter(stacked, Mat::Identity(cols, er), Side::left);
      el = std::min(null_space(s0.within, opts.null_tol).cols(), cm1);
    }
    if (el > rows) throw ShapeError("CDTRL: null left width exceeds 2 d1");
    if (el > 0) model.null = detail::fit_branch(stacked, BranchMode::null, el, er, 0.0, opts);
  }
  model.converged = (model.range.empty() || model.range.converged) && (model.null.empty() || model.null.converged);
  return model;
}

// Feature matrix of one pair: range features l_R' F r_R and null features
// l_N' F r_N side by side (complete mode), the shorter block zero-padded.
// 0 x 0 when every branch the mode asks for is empty.
inline Mat transform(const CdtrlModel& model, const Mat& x, const Mat& y) {
  if (x.rows() != model.mean_x.rows() || x.cols() != model.mean_x.cols() || y.rows() != model.mean_y.rows() ||
      y.cols() != model.mean_y.cols()) {
    throw ShapeError("transform: sample shape does not match the model");
  }
  const ProjectionPair& b = model.base;
  Mat f(2 * b.d1(), b.d2());
  f << b.left_x.transpose() * (x - model.mean_x) * b.right_x, b.left_y.transpose() * (y - model.mean_y) * b.right_y;

  const bool use_range = model.mode != CdtrlMode::null && !model.range.empty();
  const bool use_null = model.mode != CdtrlMode::range && !model.null.empty();
  if (!use_range && !use_null) return Mat(0, 0);  // the selected branch came out empty
  Mat rf = use_range ? Mat(model.range.left.transpose() * f * model.range.right) : Mat();
  Mat nf = use_null ? Mat(model.null.left.transpose() * f * model.null.right) : Mat();
  if (!use_null) return rf;
  if (!use_range) return nf;
  Mat out = Mat::Zero(std::max(rf.rows(), nf.rows()), rf.cols() + nf.cols());
  out.topLeftCorner(rf.rows(), rf.cols()) = rf;
  out.block(0, rf.cols(), nf.rows(), nf.cols()) = nf;
  return out;
}

inline std::vector<Mat> transform(const CdtrlModel& model, const LabeledPairSet& data) {
  std::vector<Mat> out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out.push_back(transform(model, data.x[i], data.y[i]));
  return out;
}

}  // namespace planarcda
