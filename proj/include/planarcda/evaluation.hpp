#pragma once

// 1-NN classification, leave-one-out and train/test split protocols, and the
// TSV recognition-accuracy report.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "planarcda/data.hpp"
#include "planarcda/error.hpp"
#include "planarcda/models.hpp"

namespace planarcda {

// Label of the Frobenius-nearest training feature; ties go to the lowest index.
inline int nn_classify(const std::vector<Mat>& train, const std::vector<int>& labels, const Mat& probe) {
  if (train.empty()) throw EmptyInputError("nn_classify: no training features");
  if (train.size() != labels.size()) throw ShapeError("nn_classify: label/feature count mismatch");
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train[i].rows() != probe.rows() || train[i].cols() != probe.cols()) {
      throw ShapeError("nn_classify: feature shape " + detail::shape_str(train[i]) + " vs probe " +
                       detail::shape_str(probe));
    }
    const double d = (train[i] - probe).squaredNorm();
    if (d < best_dist) {
      best_dist = d;
      best = i;
    }
  }
  return labels[best];
}

// Maps one pair (x, y) to a feature matrix.
using Featurizer = std::function<Mat(const Mat&, const Mat&)>;
// Fits on a training set and returns its featurizer.
using Fitter = std::function<Featurizer(const LabeledPairSet&)>;

inline Fitter make_fitter(const MethodSpec& spec) {
  return [spec](const LabeledPairSet& train) -> Featurizer {
    auto model = std::make_shared<const FittedModel>(fit_method(spec, train));
    return [model](const Mat& x, const Mat& y) { return model_features(*model, x, y); };
  };
}

struct EvalRow {
  std::string method;
  std::string protocol;
  double accuracy = 0.0;  // fraction in [0, 1]
  std::size_t n_test = 0;
  long long runtime_ms = 0;
  std::size_t skipped = 0;  // LOO folds dropped because the held-out class vanished from training

  bool operator==(const EvalRow&) const = default;
};

struct EvalOptions {
  bool timing = false;  // record wall-clock runtime; 0 otherwise so reports are reproducible
  int threads = 0;      // 0: read PLANARCDA_THREADS (unset or 0 means sequential)
};

inline int thread_cap(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("PLANARCDA_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

namespace detail {

inline void run_indexed(std::size_t count, int threads, const std::function<void(std::size_t)>& job) {
  if (threads <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = static_cast<std::size_t>(t); i < count; i += static_cast<std::size_t>(threads)) job(i);
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

inline long long elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace detail

// Leave-one-out: each fold fits on N-1 pairs and classifies the held-out pair.
// Accuracy is taken over the folds that were not skipped.
inline EvalRow loo_cv(const LabeledPairSet& data, const Fitter& fit, const std::string& method,
                      const EvalOptions& opts = {}) {
  data.validate();
  if (data.size() < 2) throw EmptyInputError("loo_cv: need at least two samples");
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = data.size();
  enum Outcome : int { wrong = 0, right = 1, skip = 2 };
  std::vector<int> outcome(n, wrong);

  detail::run_indexed(n, thread_cap(opts.threads), [&](std::size_t hold) {
    std::vector<std::size_t> idx;
    idx.reserve(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      if (i != hold) idx.push_back(i);
    }
    const LabeledPairSet train = select(data, idx);
    if (std::find(train.labels.begin(), train.labels.end(), data.labels[hold]) == train.labels.end()) {
      outcome[hold] = skip;
      return;
    }
    const Featurizer feat = fit(train);
    std::vector<Mat> train_feats;
    train_feats.reserve(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) train_feats.push_back(feat(train.x[i], train.y[i]));
    const int guess = nn_classify(train_feats, train.labels, feat(data.x[hold], data.y[hold]));
    outcome[hold] = guess == data.labels[hold] ? right : wrong;
  });

  EvalRow row{method, "loo", 0.0, 0, 0, 0};
  std::size_t correct = 0;
  for (int o : outcome) {
    if (o == skip) {
      ++row.skipped;
    } else {
      ++row.n_test;
      correct += static_cast<std::size_t>(o == right);
    }
  }
  if (row.n_test == 0) throw ProtocolError("loo_cv: every fold collapsed a class");
  row.accuracy = static_cast<double>(correct) / static_cast<double>(row.n_test);
  if (opts.timing) row.runtime_ms = detail::elapsed_ms(start);
  return row;
}

// Fit once on `train`, classify every pair of `test`.
inline EvalRow split_eval(const LabeledPairSet& train, const LabeledPairSet& test, const Fitter& fit,
                          const std::string& method, const std::string& protocol = "split",
                          const EvalOptions& opts = {}) {
  if (test.size() == 0) throw ProtocolError("split_eval: empty test set");
  train.validate();
  for (int label : test.labels) {
    if (std::find(train.labels.begin(), train.labels.end(), label) == train.labels.end()) {
      throw ProtocolError("split_eval: test label " + std::to_string(label) + " never seen in training");
    }
  }
  const auto start = std::chrono::steady_clock::now();
  const Featurizer feat = fit(train);
  std::vector<Mat> train_feats;
  train_feats.reserve(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) train_feats.push_back(feat(train.x[i], train.y[i]));

  std::vector<int> hit(test.size(), 0);
  detail::run_indexed(test.size(), thread_cap(opts.threads), [&](std::size_t i) {
    hit[i] = nn_classify(train_feats, train.labels, feat(test.x[i], test.y[i])) == test.labels[i];
  });
  EvalRow row{method, protocol, 0.0, test.size(), 0, 0};
  std::size_t correct = 0;
  for (int h : hit) correct += static_cast<std::size_t>(h);
  row.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
  if (opts.timing) row.runtime_ms = detail::elapsed_ms(start);
  return row;
}

enum class LooScope { variants, all };

// Single-view pool for the baselines. `variants` keeps the chosen view of the N
// pairs; `all` pools every distinct X image with every Y image (views must share
// a shape), as when references were replicated into X. Both views of the result
// hold the same image.
inline LabeledPairSet single_view_pool(const LabeledPairSet& data, LooScope scope, View view) {
  data.validate();
  std::vector<Mat> images;
  std::vector<int> labels;
  if (scope == LooScope::variants) {
    images = view == View::x ? data.x : data.y;
    labels = data.labels;
  } else {
    if (data.m() != data.p() || data.n() != data.q()) {
      throw ProtocolError("loo scope 'all' needs X and Y images of the same shape");
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
      bool seen = false;
      for (std::size_t j = 0; j < images.size() && !seen; ++j) {
        seen = labels[j] == data.labels[i] && images[j] == data.x[i];
      }
      if (!seen) {
        images.push_back(data.x[i]);
        labels.push_back(data.labels[i]);
      }
    }
    images.insert(images.end(), data.y.begin(), data.y.end());
    labels.insert(labels.end(), data.labels.begin(), data.labels.end());
  }
  LabeledPairSet out{images, images, labels, data.classes};
  out.validate();
  return out;
}

// ---------------------------------------------------------------------------
// Report

inline constexpr const char* kReportHeader = "method\tprotocol\trecognition_accuracy\tn_test\truntime_ms";

inline std::string format_accuracy(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", fraction * 100.0);
  return buf;
}

inline std::string emit_report(const std::vector<EvalRow>& rows) {
  std::ostringstream out;
  out << kReportHeader << '\n';
  for (const EvalRow& r : rows) {
    out << r.method << '\t' << r.protocol << '\t' << format_accuracy(r.accuracy) << '\t' << r.n_test << '\t'
        << r.runtime_ms << '\n';
  }
  return out.str();
}

inline std::vector<EvalRow> parse_report(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kReportHeader) throw IoError("report: missing header line");
  std::vector<EvalRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, '\t')) cells.push_back(cell);
    if (cells.size() != 5 || cells[2].empty() || cells[2].back() != '%') {
      throw IoError("report: malformed row '" + line + "'");
    }
    EvalRow r;
    r.method = cells[0];
    r.protocol = cells[1];
    r.accuracy = std::stod(cells[2].substr(0, cells[2].size() - 1)) / 100.0;
    r.n_test = static_cast<std::size_t>(std::stoull(cells[3]));
    r.runtime_ms = std::stoll(cells[4]);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace planarcda
