#pragma once

// Paired two-view datasets: representation, centering, synthetic generation,
// Haar wavelet second views and the reference-replication pairing protocol.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "planarcda/error.hpp"
#include "planarcda/linalg.hpp"

namespace planarcda {

// N paired samples (X_i, Y_i) with class ids in [1..classes].
struct LabeledPairSet {
  std::vector<Mat> x;
  std::vector<Mat> y;
  std::vector<int> labels;
  int classes = 0;

  [[nodiscard]] std::size_t size() const { return labels.size(); }
  [[nodiscard]] Eigen::Index m() const { return x.empty() ? 0 : x.front().rows(); }
  [[nodiscard]] Eigen::Index n() const { return x.empty() ? 0 : x.front().cols(); }
  [[nodiscard]] Eigen::Index p() const { return y.empty() ? 0 : y.front().rows(); }
  [[nodiscard]] Eigen::Index q() const { return y.empty() ? 0 : y.front().cols(); }

  // Throws on any broken invariant: uneven views, mixed shapes, label outside
  // [1..classes] or a class with no samples.
  void validate() const {
    if (labels.empty()) throw EmptyInputError("dataset has no samples");
    if (x.size() != labels.size() || y.size() != labels.size()) {
      throw ShapeError("dataset views disagree on sample count");
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i].rows() != m() || x[i].cols() != n() || x[i].size() == 0) {
        throw ShapeError("X sample " + std::to_string(i) + " has shape " + detail::shape_str(x[i]));
      }
      if (y[i].rows() != p() || y[i].cols() != q() || y[i].size() == 0) {
        throw ShapeError("Y sample " + std::to_string(i) + " has shape " + detail::shape_str(y[i]));
      }
    }
    if (classes < 1) throw ProtocolError("dataset declares no classes");
    std::vector<int> count(static_cast<std::size_t>(classes) + 1, 0);
    for (int label : labels) {
      if (label < 1 || label > classes) {
        throw ProtocolError("label " + std::to_string(label) + " outside [1.." +
                            std::to_string(classes) + "]");
      }
      ++count[static_cast<std::size_t>(label)];
    }
    for (int k = 1; k <= classes; ++k) {
      if (count[static_cast<std::size_t>(k)] == 0) {
        throw ProtocolError("class " + std::to_string(k) + " has no samples");
      }
    }
  }
};

inline LabeledPairSet make_pair_set(std::vector<Mat> x, std::vector<Mat> y, std::vector<int> labels) {
  LabeledPairSet out{std::move(x), std::move(y), std::move(labels), 0};
  for (int l : out.labels) out.classes = std::max(out.classes, l);
  out.validate();
  return out;
}

// Subset in the given order. Class count is kept; the result may violate the
// "every class present" invariant, which callers check when it matters.
inline LabeledPairSet select(const LabeledPairSet& data, const std::vector<std::size_t>& idx) {
  LabeledPairSet out;
  out.classes = data.classes;
  out.x.reserve(idx.size());
  out.y.reserve(idx.size());
  out.labels.reserve(idx.size());
  for (std::size_t i : idx) {
    out.x.push_back(data.x.at(i));
    out.y.push_back(data.y.at(i));
    out.labels.push_back(data.labels.at(i));
  }
  return out;
}

struct CenteredPair {
  std::vector<Mat> x;
  std::vector<Mat> y;
  Mat mean_x;
  Mat mean_y;
};

inline Mat mean_of(const std::vector<Mat>& samples) {
  if (samples.empty()) throw EmptyInputError("mean of an empty sample list");
  Mat acc = Mat::Zero(samples.front().rows(), samples.front().cols());
  for (const Mat& s : samples) acc += s;
  return acc / static_cast<double>(samples.size());
}

inline CenteredPair center_pair(const LabeledPairSet& data) {
  if (data.size() == 0) throw EmptyInputError("center_pair: empty dataset");
  data.validate();
  CenteredPair out;
  out.mean_x = mean_of(data.x);
  out.mean_y = mean_of(data.y);
  out.x.reserve(data.size());
  out.y.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    out.x.push_back(data.x[i] - out.mean_x);
    out.y.push_back(data.y[i] - out.mean_y);
  }
  return out;
}

// Row-major flattening into a column vector.
inline Vec vectorize(const Mat& m) {
  Vec v(m.size());
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) v(k++) = m(i, j);
  }
  return v;
}

// ---------------------------------------------------------------------------
// Haar wavelet

// Low-low subband after `levels` orthonormal 2D Haar analysis steps.
inline Mat haar_dwt2(const Mat& image, int levels) {
  if (levels < 1) throw ShapeError("haar_dwt2: levels must be positive");
  const Eigen::Index div = Eigen::Index{1} << levels;
  if (image.rows() == 0 || image.rows() % div != 0 || image.cols() % div != 0) {
    throw ShapeError("haar_dwt2: shape " + detail::shape_str(image) + " not divisible by " +
                     std::to_string(div));
  }
  Mat cur = image;
  for (int level = 0; level < levels; ++level) {
    Mat next(cur.rows() / 2, cur.cols() / 2);
    for (Eigen::Index i = 0; i < next.rows(); ++i) {
      for (Eigen::Index j = 0; j < next.cols(); ++j) {
        next(i, j) = 0.5 * (cur(2 * i, 2 * j) + cur(2 * i, 2 * j + 1) + cur(2 * i + 1, 2 * j) +
                            cur(2 * i + 1, 2 * j + 1));
      }
    }
    cur = std::move(next);
  }
  return cur;
}

// ---------------------------------------------------------------------------
// Reference replication

struct LabeledImages {
  std::vector<Mat> images;
  std::vector<int> labels;
};

// Pairs every variant with a copy of its class's single reference sample.
inline LabeledPairSet replicate_references(const LabeledImages& refs, const LabeledImages& variants) {
  if (refs.images.size() != refs.labels.size() || variants.images.size() != variants.labels.size()) {
    throw ShapeError("replicate_references: image and label counts differ");
  }
  if (variants.images.empty()) throw EmptyInputError("replicate_references: no variants");
  std::vector<Mat> x;
  std::vector<Mat> y;
  x.reserve(variants.images.size());
  y.reserve(variants.images.size());
  for (std::size_t i = 0; i < variants.images.size(); ++i) {
    const int label = variants.labels[i];
    const auto hits = std::count(refs.labels.begin(), refs.labels.end(), label);
    if (hits != 1) {
      throw ProtocolError("replicate_references: class " + std::to_string(label) + " has " +
                          std::to_string(hits) + " reference samples, expected exactly 1");
    }
    const auto at = std::find(refs.labels.begin(), refs.labels.end(), label) - refs.labels.begin();
    x.push_back(refs.images[static_cast<std::size_t>(at)]);
    y.push_back(variants.images[i]);
  }
  return make_pair_set(std::move(x), std::move(y), variants.labels);
}

// ---------------------------------------------------------------------------
// Synthetic generator

struct SynthSpec {
  int classes = 3;
  int per_class = 20;
  int m = 16;
  int n = 16;
  int p = 8;
  int q = 8;
  double class_separation = 5.0;
  double noise_sigma = 0.5;
  std::uint64_t seed = 7;
  // 0 is the canonical ("front") rendering of the class patterns; k > 0 applies
  // the k-th fixed right-side distortion, a stand-in for a pose change.
  int variant = 0;
  // When positive, Y is the Haar low-low subband of X after this many levels
  // and p, q are ignored.
  int y_wavelet_levels = 0;

  void validate() const {
    if (classes < 2) throw ProtocolError("synthetic spec: classes must be >= 2");
    if (per_class < 1) throw ProtocolError("synthetic spec: per_class must be >= 1");
    if (m < 1 || n < 1 || p < 1 || q < 1) throw ShapeError("synthetic spec: shapes must be positive");
    if (!(class_separation >= 0.0)) throw ProtocolError("synthetic spec: separation must be >= 0");
    if (!(noise_sigma > 0.0)) throw ProtocolError("synthetic spec: noise sigma must be positive");
    if (variant < 0) throw ProtocolError("synthetic spec: variant must be >= 0");
    if (y_wavelet_levels < 0) throw ProtocolError("synthetic spec: wavelet levels must be >= 0");
    if (y_wavelet_levels > 0) {
      const int div = 1 << y_wavelet_levels;
      if (m % div != 0 || n % div != 0) {
        throw ShapeError("synthetic spec: X shape not divisible by 2^levels");
      }
    }
  }
};

namespace detail {

inline Mat gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat out(rows, cols);
  // Fill in row-major order so the stream layout does not depend on storage order.
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = normal(rng);
  }
  return out;
}

inline Mat orthonormal_columns(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  const Mat g = gaussian(rng, rows, cols);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ() * Mat::Identity(rows, cols);
  return q;
}

inline std::mt19937_64 stream(std::uint64_t seed, std::uint32_t purpose, std::uint32_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    purpose, index};
  return std::mt19937_64(seq);
}

}  // namespace detail

// Each class k owns a latent core a_k (length r = min(6, m, n, p, q)). The X
// pattern is P_k = s * Ux diag(a_k) Vx' and the Y pattern s * Uy diag(a_k) Vy',
// i.e. the fixed distortion A P_k B with A = Uy Ux', B = Vx Vy'. Every U, V has
// orthonormal columns, so both views carry the same signal energy. A pose
// variant right-multiplies the X pattern by T_v and carries through to Y.
// X_i = P_k T_v + noise, Y_i = A P_k T_v B + independent noise.
inline LabeledPairSet gen_synthetic(const SynthSpec& spec) {
  spec.validate();
  const Eigen::Index m = spec.m;
  const Eigen::Index n = spec.n;
  const bool wavelet = spec.y_wavelet_levels > 0;
  const Eigen::Index p = wavelet ? m >> spec.y_wavelet_levels : spec.p;
  const Eigen::Index q = wavelet ? n >> spec.y_wavelet_levels : spec.q;
  const Eigen::Index rank = std::min<Eigen::Index>({6, m, n, p, q});

  auto pattern_rng = detail::stream(spec.seed, 1, 0);
  const Mat ux = detail::orthonormal_columns(pattern_rng, m, rank);
  const Mat vx = detail::orthonormal_columns(pattern_rng, n, rank);
  const Mat uy = detail::orthonormal_columns(pattern_rng, p, rank);
  const Mat vy = detail::orthonormal_columns(pattern_rng, q, rank);
  std::vector<Mat> patterns;
  patterns.reserve(static_cast<std::size_t>(spec.classes));
  for (int k = 0; k < spec.classes; ++k) {
    const Mat a = detail::gaussian(pattern_rng, rank, 1);
    patterns.push_back(spec.class_separation * ux * a.col(0).asDiagonal() * vx.transpose());
  }
  const Mat left_mix = uy * ux.transpose();
  const Mat right_mix = vx * vy.transpose();

  Mat pose = Mat::Identity(n, n);
  if (spec.variant > 0) {
    auto pose_rng = detail::stream(spec.seed, 2, static_cast<std::uint32_t>(spec.variant));
    pose += 0.25 * detail::gaussian(pose_rng, n, n) / std::sqrt(static_cast<double>(n));
  }

  auto noise_rng = detail::stream(spec.seed, 3, static_cast<std::uint32_t>(spec.variant));
  LabeledPairSet out;
  out.classes = spec.classes;
  const auto total = static_cast<std::size_t>(spec.classes) * static_cast<std::size_t>(spec.per_class);
  out.x.reserve(total);
  out.y.reserve(total);
  out.labels.reserve(total);
  for (int k = 0; k < spec.classes; ++k) {
    const Mat clean = patterns[static_cast<std::size_t>(k)] * pose;
    const Mat clean_y = left_mix * clean * right_mix;
    for (int s = 0; s < spec.per_class; ++s) {
      Mat xi = clean + spec.noise_sigma * detail::gaussian(noise_rng, m, n);
      Mat yi = wavelet ? haar_dwt2(xi, spec.y_wavelet_levels)
                       : Mat(clean_y + spec.noise_sigma * detail::gaussian(noise_rng, p, q));
      out.x.push_back(std::move(xi));
      out.y.push_back(std::move(yi));
      out.labels.push_back(k + 1);
    }
  }
  return out;
}

// Affine map of each view onto [0, 1] using the view's global min and max.
inline LabeledPairSet to_unit_range(LabeledPairSet data) {
  auto rescale = [](std::vector<Mat>& view) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const Mat& s : view) {
      lo = std::min(lo, s.minCoeff());
      hi = std::max(hi, s.maxCoeff());
    }
    const double span = hi - lo;
    for (Mat& s : view) {
      s = span > 0.0 ? Mat((s.array() - lo) / span) : Mat::Zero(s.rows(), s.cols());
    }
  };
  rescale(data.x);
  rescale(data.y);
  return data;
}

}  // namespace planarcda
