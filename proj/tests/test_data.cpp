#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <random>

#include "oracles.hpp"
#include "planarcda/data.hpp"
#include "planarcda/dataset_io.hpp"
#include "temp_dir.hpp"

using namespace planarcda;

namespace {

Mat scalar(double v) { return Mat::Constant(1, 1, v); }

LabeledPairSet random_set(std::uint64_t seed, int n, Eigen::Index r, Eigen::Index c) {
  std::mt19937_64 rng(seed);
  LabeledPairSet d;
  d.classes = 2;
  for (int i = 0; i < n; ++i) {
    d.x.push_back(oracle::randn(rng, r, c) * 3.0 + Mat::Constant(r, c, 2.0));
    d.y.push_back(oracle::randn(rng, c, r));
    d.labels.push_back(1 + i % 2);
  }
  return d;
}

void write_raw_pgm(const std::filesystem::path& p, int w, int h, int maxval, const std::vector<unsigned>& px) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << "P5\n# test image\n" << w << " " << h << "\n" << maxval << "\n";
  for (unsigned v : px) {
    if (maxval > 255) out.put(static_cast<char>(v >> 8));
    out.put(static_cast<char>(v & 0xFF));
  }
}

}  // namespace

// ---------------------------------------------------------------- centering

TEST(CenterPair, SingleSample) {
  const LabeledPairSet d = make_pair_set({scalar(3)}, {scalar(-1)}, {1});
  const CenteredPair c = center_pair(d);
  EXPECT_EQ(c.x[0](0, 0), 0.0);
  EXPECT_EQ(c.mean_x(0, 0), 3.0);
  EXPECT_EQ(c.mean_y(0, 0), -1.0);
}

TEST(CenterPair, TwoPointMean) {
  LabeledPairSet d = make_pair_set({scalar(0), scalar(2)}, {scalar(0), scalar(0)}, {1, 1});
  const CenteredPair c = center_pair(d);
  EXPECT_EQ(c.mean_x(0, 0), 1.0);
  EXPECT_EQ(c.x[0](0, 0), -1.0);
  EXPECT_EQ(c.x[1](0, 0), 1.0);
}

TEST(CenterPair, ColumnSumsVanish) {
  const LabeledPairSet d = random_set(21, 10, 4, 5);
  const CenteredPair c = center_pair(d);
  Mat sum_x = Mat::Zero(4, 5);
  Mat sum_y = Mat::Zero(5, 4);
  for (std::size_t i = 0; i < d.size(); ++i) {
    sum_x += c.x[i];
    sum_y += c.y[i];
  }
  EXPECT_LE(oracle::max_abs(sum_x), 1e-12);
  EXPECT_LE(oracle::max_abs(sum_y), 1e-12);
  EXPECT_LE(oracle::max_abs(c.mean_x - oracle::mean_loop(d.x)), 1e-14);
}

TEST(CenterPair, ReconstructionToRounding) {
  const LabeledPairSet d = random_set(22, 10, 3, 3);
  const CenteredPair c = center_pair(d);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const Mat back = c.x[i] + c.mean_x;
    // x - m + m is exact up to one rounding of the subtraction.
    EXPECT_LE(oracle::max_abs(back - d.x[i]), 4 * std::numeric_limits<double>::epsilon() * oracle::max_abs(d.x[i]));
  }
}

TEST(CenterPair, EmptyInput) {
  LabeledPairSet empty;
  EXPECT_THROW(center_pair(empty), EmptyInputError);
}

TEST(LabeledPairSet, ValidateCatchesBrokenInvariants) {
  EXPECT_THROW(make_pair_set({scalar(1)}, {scalar(1), scalar(2)}, {1}), ShapeError);
  EXPECT_THROW(make_pair_set({scalar(1), Mat::Zero(2, 1)}, {scalar(1), scalar(2)}, {1, 1}), ShapeError);
  LabeledPairSet gap{{scalar(1), scalar(2)}, {scalar(1), scalar(2)}, {1, 3}, 3};
  EXPECT_THROW(gap.validate(), ProtocolError);
}

TEST(Vectorize, RowMajor) {
  Mat m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  const Vec v = vectorize(m);
  for (int k = 0; k < 6; ++k) EXPECT_EQ(v(k), k + 1);
}

// ---------------------------------------------------------------- synthetic

TEST(Synthetic, NoiselessLimit) {
  SynthSpec s;
  s.noise_sigma = 1e-300;
  const LabeledPairSet d = gen_synthetic(s);
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = 0; j < d.size(); ++j) {
      if (d.labels[i] == d.labels[j]) {
        EXPECT_TRUE(d.x[i] == d.x[j]);
        EXPECT_TRUE(d.y[i] == d.y[j]);
      } else {
        EXPECT_GT((d.x[i] - d.x[j]).norm(), 1.0);
      }
    }
  }
}

TEST(Synthetic, SameSeedBitIdentical) {
  SynthSpec s;
  const LabeledPairSet a = gen_synthetic(s);
  const LabeledPairSet b = gen_synthetic(s);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(a.x[i] == b.x[i]);
    EXPECT_TRUE(a.y[i] == b.y[i]);
  }
  s.seed = 8;
  EXPECT_FALSE(gen_synthetic(s).x[0] == a.x[0]);
}

TEST(Synthetic, UniformLabelsAndShapes) {
  SynthSpec s;
  s.classes = 4;
  s.per_class = 7;
  s.m = 10;
  s.n = 6;
  s.p = 5;
  s.q = 3;
  const LabeledPairSet d = gen_synthetic(s);
  d.validate();
  EXPECT_EQ(d.size(), 28U);
  std::map<int, int> hist;
  for (int l : d.labels) ++hist[l];
  for (const auto& [label, count] : hist) EXPECT_EQ(count, 7) << label;
  EXPECT_EQ(d.m(), 10);
  EXPECT_EQ(d.n(), 6);
  EXPECT_EQ(d.p(), 5);
  EXPECT_EQ(d.q(), 3);
}

// Leave-one-out nearest class mean on raw X, computed here.
TEST(Synthetic, SeededSetIsSeparableByClassMeans) {
  SynthSpec s;  // c=3, per_class=20, separation 5, sigma 0.5, seed 7
  const LabeledPairSet d = gen_synthetic(s);
  int correct = 0;
  for (std::size_t hold = 0; hold < d.size(); ++hold) {
    std::vector<Mat> sums(3, Mat::Zero(d.m(), d.n()));
    std::vector<int> counts(3, 0);
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (i == hold) continue;
      sums[static_cast<std::size_t>(d.labels[i] - 1)] += d.x[i];
      ++counts[static_cast<std::size_t>(d.labels[i] - 1)];
    }
    int best = 0;
    double best_d = 1e300;
    for (int k = 0; k < 3; ++k) {
      const double dist = (d.x[hold] - sums[static_cast<std::size_t>(k)] / counts[static_cast<std::size_t>(k)]).norm();
      if (dist < best_d) {
        best_d = dist;
        best = k + 1;
      }
    }
    correct += best == d.labels[hold];
  }
  EXPECT_GE(correct, 57);  // 95% of 60
}

TEST(Synthetic, WaveletSecondView) {
  SynthSpec s;
  s.y_wavelet_levels = 2;
  const LabeledPairSet d = gen_synthetic(s);
  EXPECT_EQ(d.p(), 4);
  EXPECT_EQ(d.q(), 4);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_TRUE(d.y[i] == haar_dwt2(d.x[i], 2));
}

TEST(Synthetic, SpecValidation) {
  SynthSpec s;
  s.classes = 1;
  EXPECT_THROW(gen_synthetic(s), ProtocolError);
  s = SynthSpec{};
  s.noise_sigma = 0.0;
  EXPECT_THROW(gen_synthetic(s), ProtocolError);
  s = SynthSpec{};
  s.m = 6;
  s.y_wavelet_levels = 2;
  EXPECT_THROW(gen_synthetic(s), ShapeError);
}

TEST(Synthetic, UnitRange) {
  const LabeledPairSet d = to_unit_range(gen_synthetic(SynthSpec{}));
  double lo = 1, hi = 0;
  for (const Mat& x : d.x) {
    lo = std::min(lo, x.minCoeff());
    hi = std::max(hi, x.maxCoeff());
  }
  EXPECT_EQ(lo, 0.0);
  EXPECT_EQ(hi, 1.0);
}

// ---------------------------------------------------------------- Haar

TEST(Haar, ConstantImage) {
  const Mat out = haar_dwt2(Mat::Constant(4, 6, 1.5), 1);
  EXPECT_EQ(out.rows(), 2);
  EXPECT_EQ(out.cols(), 3);
  EXPECT_LE(oracle::max_abs(out - Mat::Constant(2, 3, 3.0)), 0.0);
}

TEST(Haar, OnesBlock) { EXPECT_EQ(haar_dwt2(Mat::Ones(2, 2), 1)(0, 0), 2.0); }

TEST(Haar, TwoLevelsEqualTwoSingleCalls) {
  std::mt19937_64 rng(9);
  const Mat img = oracle::randn(rng, 8, 8);
  EXPECT_TRUE(haar_dwt2(img, 2) == haar_dwt2(haar_dwt2(img, 1), 1));
}

// The oracle computes all four subbands with the orthonormal Haar filters.
TEST(Haar, EnergySplitsAcrossSubbands) {
  std::mt19937_64 rng(10);
  const double r = 1.0 / std::sqrt(2.0);
  for (int t = 0; t < 10; ++t) {
    const Mat img = oracle::randn(rng, 8, 12);
    Mat ll(4, 6), lh(4, 6), hl(4, 6), hh(4, 6);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 6; ++j) {
        const double a = img(2 * i, 2 * j), b = img(2 * i, 2 * j + 1);
        const double c = img(2 * i + 1, 2 * j), d = img(2 * i + 1, 2 * j + 1);
        // rows first, then columns
        const double lo0 = r * (a + b), hi0 = r * (a - b), lo1 = r * (c + d), hi1 = r * (c - d);
        ll(i, j) = r * (lo0 + lo1);
        lh(i, j) = r * (lo0 - lo1);
        hl(i, j) = r * (hi0 + hi1);
        hh(i, j) = r * (hi0 - hi1);
      }
    const Mat got = haar_dwt2(img, 1);
    EXPECT_LE(oracle::max_abs(got - ll), 1e-14);
    const double total = img.squaredNorm();
    const double parts = got.squaredNorm() + lh.squaredNorm() + hl.squaredNorm() + hh.squaredNorm();
    EXPECT_LE(std::abs(total - parts) / total, 1e-12);
  }
}

TEST(Haar, IndivisibleShape) {
  EXPECT_THROW(haar_dwt2(Mat::Ones(6, 4), 2), ShapeError);
  EXPECT_THROW(haar_dwt2(Mat::Ones(3, 4), 1), ShapeError);
  EXPECT_THROW(haar_dwt2(Mat::Ones(4, 4), 0), ShapeError);
}

// ---------------------------------------------------------------- replication

TEST(Replicate, TwoRefsThreeVariantsEach) {
  LabeledImages refs{{scalar(10), scalar(20)}, {1, 2}};
  LabeledImages var{{scalar(1), scalar(2), scalar(3), scalar(4), scalar(5), scalar(6)}, {1, 2, 1, 2, 1, 2}};
  const LabeledPairSet d = replicate_references(refs, var);
  ASSERT_EQ(d.size(), 6U);
  int ones = 0;
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(d.x[i](0, 0), d.labels[i] == 1 ? 10.0 : 20.0);
    EXPECT_EQ(d.y[i](0, 0), static_cast<double>(i + 1));
    ones += d.x[i](0, 0) == 10.0;
  }
  EXPECT_EQ(ones, 3);
}

TEST(Replicate, ArScaleCount) {
  LabeledImages refs, var;
  for (int k = 1; k <= 120; ++k) {
    refs.images.push_back(scalar(k));
    refs.labels.push_back(k);
    for (int v = 0; v < 3; ++v) {
      var.images.push_back(scalar(k + 0.1 * v));
      var.labels.push_back(k);
    }
  }
  EXPECT_EQ(replicate_references(refs, var).size(), 360U);
}

TEST(Replicate, SinglePair) {
  const LabeledPairSet d = replicate_references({{scalar(1)}, {1}}, {{scalar(2)}, {1}});
  ASSERT_EQ(d.size(), 1U);
  EXPECT_EQ(d.x[0](0, 0), 1.0);
  EXPECT_EQ(d.y[0](0, 0), 2.0);
}

TEST(Replicate, BadReferenceCounts) {
  EXPECT_THROW(replicate_references({{scalar(1)}, {1}}, {{scalar(2)}, {2}}), ProtocolError);
  EXPECT_THROW(replicate_references({{scalar(1), scalar(3)}, {1, 1}}, {{scalar(2)}, {1}}), ProtocolError);
}

// ---------------------------------------------------------------- PGM I/O

TEST(ImageDir, EightBitScaling) {
  TempDir tmp("pgm8");
  for (const char* view : {"x", "y"}) {
    write_raw_pgm(tmp / view / "a" / "s1.pgm", 2, 2, 255, {255, 0, 51, 255});
    write_raw_pgm(tmp / view / "b" / "s2.pgm", 2, 2, 255, {0, 0, 0, 0});
  }
  const LabeledPairSet d = load_image_dir(tmp.path());
  ASSERT_EQ(d.size(), 2U);
  EXPECT_EQ(d.classes, 2);
  EXPECT_EQ(d.x[0](0, 0), 1.0);
  EXPECT_EQ(d.x[0](0, 1), 0.0);
  EXPECT_DOUBLE_EQ(d.x[0](1, 0), 0.2);
  EXPECT_EQ(d.labels[0], 1);
  EXPECT_EQ(d.labels[1], 2);
}

TEST(ImageDir, SixteenBitBigEndian) {
  TempDir tmp("pgm16");
  write_raw_pgm(tmp / "one.pgm", 3, 1, 1000, {1000, 500, 1});
  const Mat m = read_pgm(tmp / "one.pgm");
  EXPECT_EQ(m.rows(), 1);
  EXPECT_EQ(m.cols(), 3);
  EXPECT_EQ(m(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(m(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(m(0, 2), 0.001);
}

TEST(ImageDir, UnpairedIdIsReported) {
  TempDir tmp("unpaired");
  write_raw_pgm(tmp / "x" / "a" / "s1.pgm", 1, 1, 255, {1});
  write_raw_pgm(tmp / "y" / "a" / "s1.pgm", 1, 1, 255, {1});
  write_raw_pgm(tmp / "x" / "a" / "orphan.pgm", 1, 1, 255, {1});
  try {
    load_image_dir(tmp.path());
    FAIL() << "expected a pairing error";
  } catch (const PairingError& e) {
    EXPECT_NE(std::string(e.what()).find("orphan"), std::string::npos);
  }
}

TEST(ImageDir, MixedShapesRejected) {
  TempDir tmp("mixed");
  for (const char* view : {"x", "y"}) {
    write_raw_pgm(tmp / view / "a" / "s1.pgm", 1, 1, 255, {1});
    write_raw_pgm(tmp / view / "b" / "s2.pgm", 2, 1, 255, {1, 2});
  }
  EXPECT_THROW(load_image_dir(tmp.path()), ShapeError);
}

TEST(ImageDir, OrderIsLexicographicById) {
  TempDir tmp("order");
  for (const char* view : {"x", "y"}) {
    write_raw_pgm(tmp / view / "zeta" / "a2.pgm", 1, 1, 255, {2});
    write_raw_pgm(tmp / view / "alpha" / "b1.pgm", 1, 1, 255, {3});
    write_raw_pgm(tmp / view / "zeta" / "a1.pgm", 1, 1, 255, {1});
  }
  const LabeledPairSet d = load_image_dir(tmp.path());
  ASSERT_EQ(d.size(), 3U);
  EXPECT_DOUBLE_EQ(d.x[0](0, 0) * 255, 1.0);
  EXPECT_DOUBLE_EQ(d.x[1](0, 0) * 255, 2.0);
  EXPECT_DOUBLE_EQ(d.x[2](0, 0) * 255, 3.0);
  EXPECT_EQ(d.labels, (std::vector<int>{2, 2, 1}));  // alpha = 1, zeta = 2
}

TEST(ImageDir, WriteReadRoundTrip) {
  SynthSpec s;
  s.classes = 4;
  s.per_class = 5;
  s.seed = 33;
  const LabeledPairSet d = to_unit_range(gen_synthetic(s));
  for (int maxval : {255, 65535}) {
    TempDir tmp("roundtrip");
    write_image_dir(tmp.path(), d, maxval);
    const LabeledPairSet back = load_image_dir(tmp.path());
    ASSERT_EQ(back.size(), d.size());
    EXPECT_EQ(back.labels, d.labels);
    const double tol = 1.0 / (2.0 * maxval) + 1e-15;
    for (std::size_t i = 0; i < d.size(); ++i) {
      EXPECT_LE(oracle::max_abs(back.x[i] - d.x[i]), tol);
      EXPECT_LE(oracle::max_abs(back.y[i] - d.y[i]), tol);
    }
  }
}

TEST(ImageDir, BadFiles) {
  TempDir tmp("bad");
  {
    std::ofstream out(tmp / "p2.pgm");
    out << "P2\n1 1\n255\n0\n";
  }
  EXPECT_THROW(read_pgm(tmp / "p2.pgm"), IoError);
  write_raw_pgm(tmp / "short.pgm", 4, 4, 255, {1, 2});
  EXPECT_THROW(read_pgm(tmp / "short.pgm"), IoError);
  EXPECT_THROW(load_image_dir(tmp / "missing"), IoError);
  EXPECT_THROW(write_pgm(tmp / "out.pgm", Mat::Constant(1, 1, 1.5)), NumericError);
}
