#pragma once

// Unsupervised correlation solvers: vectorized CCA, 2DCCA and the
// locality-weighted L2DCCA.
//
// Every solver reduces to one canonical-correlation core. Given factors Fx, Fy
// with Cxx = Fx Fx', Cyy = Fy Fy' and Cxy = Fx Fy', the core whitens each side
// with a ridged Cholesky factor (Cxx + eps I = Lx Lx') and takes the SVD of
// Lx^-1 Cxy Ly^-T. That solves the same generalized eigenproblem as
// Cxy Cyy^-1 Cyx w = rho^2 Cxx w, and the whitening constraints w' (Cxx + eps I) w = I
// hold by construction.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "planarcda/data.hpp"
#include "planarcda/error.hpp"
#include "planarcda/linalg.hpp"

namespace planarcda {

enum class RightInit {
  identity,  // first d2 columns of the identity
  pca,       // leading eigenvectors of sum_i X_i' X_i (resp. Y)
};

struct SolverOpts {
  int d1 = 0;  // 0 selects min(m, p, 8)
  int d2 = 0;  // 0 selects min(n, q, 8)
  int max_iter = 50;
  double conv_tol = 1e-8;
  std::optional<double> ridge;  // unset: 1e-8 * trace / dim per covariance
  RightInit init = RightInit::identity;
};

struct ProjectionPair {
  Mat left_x;   // m x d1
  Mat right_x;  // n x d2
  Mat left_y;   // p x d1
  Mat right_y;  // q x d2
  Vec left_correlations;
  Vec right_correlations;
  int iterations_run = 0;
  bool converged = false;

  // Sum of left correlations after every left update, initial one included.
  std::vector<double> correlation_trace;
  // Right projections in force at the final left update, and left projections
  // in force at the final right update. Empty for vectorized CCA.
  Mat left_context_rx;
  Mat left_context_ry;
  Mat right_context_lx;
  Mat right_context_ly;

  [[nodiscard]] Eigen::Index d1() const { return left_x.cols(); }
  [[nodiscard]] Eigen::Index d2() const { return right_x.cols(); }
};

struct CcaSolution {
  Mat wx;
  Mat wy;
  Vec correlations;
};

namespace detail {

struct Whitener {
  Mat factor;  // lower Cholesky factor of C + eps I, stored in place
  Mat whitened;  // L^-1 F
};

inline Whitener whiten(const Mat& f, std::optional<double> ridge, const char* side) {
  Whitener w;
  w.factor = Mat::Zero(f.rows(), f.rows());
  add_outer(w.factor, f);
  const double eps = ridge.value_or(default_ridge(w.factor));
  if (eps < 0.0 || !std::isfinite(eps)) throw NumericError("ridge must be finite and >= 0");
  w.factor.diagonal().array() += eps;
  const double tr = w.factor.trace();
  Eigen::LLT<Eigen::Ref<Mat>> llt(w.factor);
  bool singular = llt.info() != Eigen::Success || !(tr > 0.0);
  for (Eigen::Index k = 0; !singular && k < w.factor.rows(); ++k) {
    if (w.factor(k, k) * w.factor(k, k) < 1e-12 * tr) singular = true;
  }
  if (singular) {
    throw SingularityError(std::string(side) +
                           "-side covariance is singular; raise the ridge or reduce the dimension");
  }
  w.whitened = w.factor.triangularView<Eigen::Lower>().solve(f);
  return w;
}

// Thin QR: returns (Q, R) with Q rows x cols orthonormal and R cols x cols upper.
inline std::pair<Mat, Mat> thin_qr(const Mat& a) {
  Eigen::HouseholderQR<Mat> qr(a);
  Mat q = qr.householderQ() * Mat::Identity(a.rows(), a.cols());
  Mat r = qr.matrixQR().topRows(a.cols()).triangularView<Eigen::Upper>();
  return {std::move(q), std::move(r)};
}

}  // namespace detail

// Canonical pairs of the factored covariances, correlations descending.
inline CcaSolution cca_factored(const Mat& fx, const Mat& fy, Eigen::Index d, std::optional<double> ridge) {
  if (fx.cols() != fy.cols()) throw ShapeError("cca: factor column counts differ");
  if (d < 1 || d > std::min(fx.rows(), fy.rows())) {
    throw ShapeError("cca: component count " + std::to_string(d) + " outside [1, min(dim X, dim Y)]");
  }
  const detail::Whitener wx = detail::whiten(fx, ridge, "X");
  const detail::Whitener wy = detail::whiten(fy, ridge, "Y");

  const Eigen::Index k = fx.cols();
  Mat u;
  Mat v;
  Vec s;
  if (k < std::min(fx.rows(), fy.rows())) {
    // Low-rank cross covariance: SVD of the k x k core R_a R_b'.
    auto [qa, ra] = detail::thin_qr(wx.whitened);
    auto [qb, rb] = detail::thin_qr(wy.whitened);
    Eigen::BDCSVD<Mat> svd(ra * rb.transpose(), Eigen::ComputeThinU | Eigen::ComputeThinV);
    u = qa * svd.matrixU();
    v = qb * svd.matrixV();
    s = svd.singularValues();
  } else {
    Eigen::BDCSVD<Mat> svd(wx.whitened * wy.whitened.transpose(), Eigen::ComputeThinU | Eigen::ComputeThinV);
    u = svd.matrixU();
    v = svd.matrixV();
    s = svd.singularValues();
  }
  if (s.size() < d) throw ShapeError("cca: fewer canonical pairs than requested components");

  CcaSolution out;
  out.wx = wx.factor.triangularView<Eigen::Lower>().transpose().solve(u.leftCols(d));
  out.wy = wy.factor.triangularView<Eigen::Lower>().transpose().solve(v.leftCols(d));
  out.correlations = s.head(d).cwiseMax(0.0).cwiseMin(1.0);
  // Sign convention on the X side; the Y side follows so correlations stay >= 0.
  for (Eigen::Index j = 0; j < d; ++j) {
    Eigen::Index arg = 0;
    out.wx.col(j).cwiseAbs().maxCoeff(&arg);
    if (out.wx(arg, j) < 0.0) {
      out.wx.col(j) = -out.wx.col(j);
      out.wy.col(j) = -out.wy.col(j);
    }
  }
  return out;
}

// CCA on vectors. Centers internally; the result uses 1x1 identity right sides.
inline ProjectionPair fit_cca(const std::vector<Vec>& xs, const std::vector<Vec>& ys, Eigen::Index d,
                              std::optional<double> ridge = std::nullopt) {
  if (xs.size() != ys.size()) throw ShapeError("fit_cca: view sample counts differ");
  if (xs.size() < 2) throw EmptyInputError("fit_cca: need at least two samples");
  const Eigen::Index dx = xs.front().size();
  const Eigen::Index dy = ys.front().size();
  Vec mx = Vec::Zero(dx);
  Vec my = Vec::Zero(dy);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].size() != dx || ys[i].size() != dy) throw ShapeError("fit_cca: mixed vector lengths");
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(xs.size());
  my /= static_cast<double>(ys.size());
  Mat fx(dx, static_cast<Eigen::Index>(xs.size()));
  Mat fy(dy, static_cast<Eigen::Index>(ys.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    fx.col(static_cast<Eigen::Index>(i)) = xs[i] - mx;
    fy.col(static_cast<Eigen::Index>(i)) = ys[i] - my;
  }
  CcaSolution sol = cca_factored(fx, fy, d, ridge);
  ProjectionPair out;
  out.left_x = std::move(sol.wx);
  out.left_y = std::move(sol.wy);
  out.right_x = Mat::Identity(1, 1);
  out.right_y = Mat::Identity(1, 1);
  out.left_correlations = sol.correlations;
  out.right_correlations = Vec::Ones(1);
  out.iterations_run = 1;
  out.converged = true;
  out.correlation_trace = {sol.correlations.sum()};
  return out;
}

// ---------------------------------------------------------------------------
// 2DCCA / L2DCCA

namespace detail {

struct ResolvedDims {
  Eigen::Index d1;
  Eigen::Index d2;
};

inline ResolvedDims resolve_dims(const CenteredPair& data, const SolverOpts& opts) {
  if (data.x.size() < 2 || data.x.size() != data.y.size()) {
    throw EmptyInputError("2DCCA needs at least two paired samples");
  }
  const Eigen::Index m = data.x.front().rows();
  const Eigen::Index n = data.x.front().cols();
  const Eigen::Index p = data.y.front().rows();
  const Eigen::Index q = data.y.front().cols();
  const Eigen::Index d1 = opts.d1 > 0 ? opts.d1 : std::min<Eigen::Index>({m, p, 8});
  const Eigen::Index d2 = opts.d2 > 0 ? opts.d2 : std::min<Eigen::Index>({n, q, 8});
  if (d1 > std::min(m, p) || d2 > std::min(n, q)) {
    throw ShapeError("2DCCA: requested d1 x d2 = " + std::to_string(d1) + "x" + std::to_string(d2) +
                     " exceeds view shapes");
  }
  if (opts.max_iter < 1) throw ProtocolError("2DCCA: max_iter must be >= 1");
  if (!(opts.conv_tol > 0.0)) throw ProtocolError("2DCCA: conv_tol must be positive");
  return {d1, d2};
}

inline Mat init_right(const std::vector<Mat>& view, Eigen::Index d2, RightInit init) {
  const Eigen::Index cols = view.front().cols();
  if (init == RightInit::identity) return Mat::Identity(cols, d2);
  Mat scatter = Mat::Zero(cols, cols);
  for (const Mat& s : view) add_outer(scatter, s.transpose());
  return sym_eig(symmetric_from_lower(scatter)).eigenvectors.leftCols(d2);
}

// Left step: columns are the blocks X_i R (m x N*d2), each scaled by sqrt(w_i).
inline Mat left_factor(const std::vector<Mat>& view, const Mat& right, const std::vector<double>& w) {
  const Eigen::Index d = right.cols();
  Mat f(view.front().rows(), d * static_cast<Eigen::Index>(view.size()));
  for (std::size_t i = 0; i < view.size(); ++i) {
    f.middleCols(static_cast<Eigen::Index>(i) * d, d) = view[i] * right;
    if (!w.empty()) f.middleCols(static_cast<Eigen::Index>(i) * d, d) *= std::sqrt(w[i]);
  }
  return f;
}

// Right step: columns are the blocks X_i' L (n x N*d1).
inline Mat right_factor(const std::vector<Mat>& view, const Mat& left, const std::vector<double>& w) {
  const Eigen::Index d = left.cols();
  Mat f(view.front().cols(), d * static_cast<Eigen::Index>(view.size()));
  for (std::size_t i = 0; i < view.size(); ++i) {
    f.middleCols(static_cast<Eigen::Index>(i) * d, d) = view[i].transpose() * left;
    if (!w.empty()) f.middleCols(static_cast<Eigen::Index>(i) * d, d) *= std::sqrt(w[i]);
  }
  return f;
}

inline ProjectionPair alternate_2dcca(const CenteredPair& data, const SolverOpts& opts,
                                      const std::vector<double>& wx, const std::vector<double>& wy) {
  const auto dims = resolve_dims(data, opts);
  ProjectionPair out;
  out.right_x = init_right(data.x, dims.d2, opts.init);
  out.right_y = init_right(data.y, dims.d2, opts.init);

  auto left_update = [&] {
    CcaSolution sol = cca_factored(left_factor(data.x, out.right_x, wx), left_factor(data.y, out.right_y, wy),
                                   dims.d1, opts.ridge);
    out.left_context_rx = out.right_x;
    out.left_context_ry = out.right_y;
    out.left_x = std::move(sol.wx);
    out.left_y = std::move(sol.wy);
    out.left_correlations = std::move(sol.correlations);
    out.correlation_trace.push_back(out.left_correlations.sum());
  };
  auto right_update = [&] {
    CcaSolution sol = cca_factored(right_factor(data.x, out.left_x, wx), right_factor(data.y, out.left_y, wy),
                                   dims.d2, opts.ridge);
    out.right_context_lx = out.left_x;
    out.right_context_ly = out.left_y;
    out.right_x = std::move(sol.wx);
    out.right_y = std::move(sol.wy);
    out.right_correlations = std::move(sol.correlations);
  };

  left_update();
  for (int it = 1; it <= opts.max_iter; ++it) {
    right_update();
    left_update();
    out.iterations_run = it;
    const auto& tr = out.correlation_trace;
    if (std::abs(tr[tr.size() - 1] - tr[tr.size() - 2]) < opts.conv_tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace detail

// Alternates a right-fixed left CCA and a left-fixed right CCA, ending on a
// left update, until the sum of left correlations moves by less than conv_tol.
inline ProjectionPair fit_2dcca(const CenteredPair& data, const SolverOpts& opts = {}) {
  return detail::alternate_2dcca(data, opts, {}, {});
}

inline Mat heat_kernel_weights(const std::vector<Mat>& samples, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw NumericError("heat kernel sigma must be positive");
  const auto n = static_cast<Eigen::Index>(samples.size());
  Mat a = Mat::Ones(n, n);
  const double s2 = sigma * sigma;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto ii = static_cast<std::size_t>(i);
      const auto jj = static_cast<std::size_t>(j);
      if (samples[ii].rows() != samples[jj].rows() || samples[ii].cols() != samples[jj].cols()) {
        throw ShapeError("heat kernel: mixed sample shapes");
      }
      const double w = std::exp(-(samples[ii] - samples[jj]).squaredNorm() / s2);
      a(i, j) = w;
      a(j, i) = w;
    }
  }
  return a;
}

// Median Frobenius distance over all unordered sample pairs.
inline double median_pairwise_distance(const std::vector<Mat>& samples) {
  std::vector<double> d;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = i + 1; j < samples.size(); ++j) d.push_back((samples[i] - samples[j]).norm());
  }
  if (d.empty()) throw EmptyInputError("median distance needs two samples");
  const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid;
}

struct WeightMatrix {
  Mat a_x;
  Mat a_y;
  double sigma = 1.0;
};

inline WeightMatrix make_weights(const CenteredPair& data, double sigma) {
  return {heat_kernel_weights(data.x, sigma), heat_kernel_weights(data.y, sigma), sigma};
}

// Per-sample weights w_i = (1/N) sum_j A_ij. Sample i enters each view's
// covariances scaled by sqrt(w_i), so the cross term carries sqrt(wX_i wY_i).
inline std::vector<double> locality_weights(const Mat& a) {
  std::vector<double> w(static_cast<std::size_t>(a.rows()));
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    w[static_cast<std::size_t>(i)] = a.row(i).sum() / static_cast<double>(a.cols());
  }
  return w;
}

inline ProjectionPair fit_l2dcca(const CenteredPair& data, const WeightMatrix& weights, const SolverOpts& opts = {}) {
  const auto n = static_cast<Eigen::Index>(data.x.size());
  if (weights.a_x.rows() != n || weights.a_x.cols() != n || weights.a_y.rows() != n || weights.a_y.cols() != n) {
    throw ShapeError("fit_l2dcca: weight matrices must be N x N");
  }
  return detail::alternate_2dcca(data, opts, locality_weights(weights.a_x), locality_weights(weights.a_y));
}

}  // namespace planarcda
