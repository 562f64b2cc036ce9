#pragma once

// Dense symmetric eigen-solvers shared by every fit in the library.
//
// All routines are deterministic: Eigen's dense decompositions run without
// threading here, eigenpairs are ordered by a stable descending sort, and each
// eigenvector is flipped so its largest-magnitude entry is positive.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "planarcda/error.hpp"

namespace planarcda {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct GevResult {
  Vec eigenvalues;   // descending
  Mat eigenvectors;  // columns aligned with eigenvalues
  double ridge_used = 0.0;
};

namespace detail {

inline std::string shape_str(const Mat& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

inline void require_finite(const Mat& m, const char* what) {
  if (!m.allFinite()) throw NumericError(std::string(what) + ": non-finite entries");
}

inline void require_square(const Mat& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw ShapeError(std::string(what) + ": expected a non-empty square matrix, got " +
                     shape_str(m));
  }
}

inline void require_symmetric(const Mat& m, const char* what) {
  require_square(m, what);
  const double scale = m.norm();
  const double asym = (m - m.transpose()).norm();
  if (asym > 1e-10 * scale) {
    throw ShapeError(std::string(what) + ": matrix is not symmetric (relative asymmetry " +
                     std::to_string(scale > 0 ? asym / scale : asym) + ")");
  }
}

// Stable descending order of `values`, so exact ties keep the solver's order.
inline std::vector<Eigen::Index> descending_order(const Vec& values) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(values.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return values(a) > values(b); });
  return idx;
}

}  // namespace detail

// Flip each column so its largest-magnitude entry (first one on ties) is positive.
inline void apply_sign_convention(Mat& vectors) {
  for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
      const double a = std::abs(vectors(i, j));
      if (a > best) {
        best = a;
        arg = i;
      }
    }
    if (vectors.rows() > 0 && vectors(arg, j) < 0.0) vectors.col(j) = -vectors.col(j);
  }
}

// Scale-invariant ridge: 1e-8 * trace(B) / dim(B).
inline double default_ridge(const Mat& b) {
  if (b.rows() == 0) return 0.0;
  return 1e-8 * b.trace() / static_cast<double>(b.rows());
}

inline GevResult sym_eig(const Mat& s) {
  detail::require_finite(s, "sym_eig");
  detail::require_symmetric(s, "sym_eig");
  Eigen::SelfAdjointEigenSolver<Mat> solver(s, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw NumericError("sym_eig: eigensolver did not converge");

  const auto order = detail::descending_order(solver.eigenvalues());
  GevResult out;
  out.eigenvalues.resize(s.rows());
  out.eigenvectors.resize(s.rows(), s.cols());
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    out.eigenvalues(kk) = solver.eigenvalues()(order[k]);
    out.eigenvectors.col(kk) = solver.eigenvectors().col(order[k]);
  }
  apply_sign_convention(out.eigenvectors);
  return out;
}

// Solves A v = lambda (B + ridge I) v by Cholesky whitening. The returned
// vectors are (B + ridge I)-orthonormal. `ridge` defaults to default_ridge(B).
inline GevResult gen_eig(const Mat& a, const Mat& b, std::optional<double> ridge = std::nullopt) {
  detail::require_finite(a, "gen_eig(A)");
  detail::require_finite(b, "gen_eig(B)");
  detail::require_symmetric(a, "gen_eig(A)");
  detail::require_symmetric(b, "gen_eig(B)");
  if (a.rows() != b.rows()) {
    throw ShapeError("gen_eig: A is " + detail::shape_str(a) + " but B is " + detail::shape_str(b));
  }
  const double eps = ridge.value_or(default_ridge(b));
  if (eps < 0.0 || !std::isfinite(eps)) throw NumericError("gen_eig: ridge must be finite and >= 0");

  Mat bp = b;
  bp.diagonal().array() += eps;
  const double tr = bp.trace();
  Eigen::LLT<Mat> llt(bp);
  bool singular = llt.info() != Eigen::Success || !(tr > 0.0);
  if (!singular) {
    const Mat& l = llt.matrixLLT();
    for (Eigen::Index k = 0; k < l.rows(); ++k) {
      if (l(k, k) * l(k, k) < 1e-12 * tr) {
        singular = true;
        break;
      }
    }
  }
  if (singular) {
    throw SingularityError(
        "gen_eig: B + ridge*I is numerically singular; raise the ridge or use the null-space path");
  }

  const auto lower = llt.matrixL();
  Mat half = lower.solve(a);                      // L^-1 A
  Mat c = lower.solve(half.transpose());          // L^-1 A L^-T
  c = 0.5 * (c + c.transpose()).eval();

  GevResult inner = sym_eig(c);
  GevResult out;
  out.eigenvalues = std::move(inner.eigenvalues);
  out.eigenvectors = llt.matrixU().solve(inner.eigenvectors);  // L^-T U
  apply_sign_convention(out.eigenvectors);
  out.ridge_used = eps;
  return out;
}

// Orthonormal basis of the eigenvectors of S whose eigenvalue is at most
// rel_tol * lambda_max. Zero columns when S is numerically full rank.
inline Mat null_space(const Mat& s, double rel_tol) {
  if (!(rel_tol > 0.0)) throw NumericError("null_space: rel_tol must be positive");
  const GevResult eig = sym_eig(s);
  const double top = std::max(eig.eigenvalues(0), 0.0);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < eig.eigenvalues.size(); ++k) {
    if (eig.eigenvalues(k) <= rel_tol * top) keep.push_back(k);
  }
  Mat z(s.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    z.col(static_cast<Eigen::Index>(j)) = eig.eigenvectors.col(keep[j]);
  }
  return z;
}

// Symmetric rank-k accumulation S += T T' with an exactly symmetric result.
inline void add_outer(Mat& s, const Mat& t) {
  s.selfadjointView<Eigen::Lower>().rankUpdate(t);
}

inline Mat symmetric_from_lower(const Mat& s) {
  Mat out = s.selfadjointView<Eigen::Lower>();
  return out;
}

}  // namespace planarcda
