#pragma once

// Fit-time benchmark: vectorized CCA against 2DCCA and CDTRL on the same data.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "planarcda/cdtrl.hpp"
#include "planarcda/correlation.hpp"
#include "planarcda/data.hpp"

namespace planarcda {

struct BenchRow {
  std::string method;
  int m = 0;  // X is m x m, Y is (m/2) x (m/2)
  int samples = 0;
  double median_ms = 0.0;
};

struct BenchOptions {
  std::vector<int> sizes{32, 64};
  std::vector<int> samples{100};
  int reps = 3;
  std::uint64_t seed = 1;
  // Absolute ridge for vectorized CCA. The sample count is below the vector
  // dimension at every interesting size, so the covariances are singular.
  double cca_ridge = 1e-2;
};

namespace detail {

template <typename F>
double median_ms(int reps, F&& run) {
  std::vector<double> t;
  for (int r = 0; r < reps; ++r) {
    const auto start = std::chrono::steady_clock::now();
    run();
    t.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
  }
  std::sort(t.begin(), t.end());
  return t[t.size() / 2];
}

inline double median_ms_cca(const LabeledPairSet& data, int reps, double ridge) {
  return median_ms(reps, [&] {
    std::vector<Vec> xs;
    std::vector<Vec> ys;
    for (std::size_t i = 0; i < data.size(); ++i) {
      xs.push_back(vectorize(data.x[i]));
      ys.push_back(vectorize(data.y[i]));
    }
    const Eigen::Index d = std::min<Eigen::Index>({xs[0].size(), ys[0].size(), 8});
    (void)fit_cca(xs, ys, d, ridge);
  });
}

}  // namespace detail

inline std::vector<BenchRow> run_bench(const BenchOptions& opts) {
  if (opts.reps < 1) throw ProtocolError("bench: reps must be >= 1");
  std::vector<BenchRow> rows;
  for (int m : opts.sizes) {
    for (int n_samples : opts.samples) {
      if (m < 2 || n_samples < 4) throw ProtocolError("bench: need m >= 2 and N >= 4");
      SynthSpec spec;
      spec.classes = 4;
      spec.per_class = (n_samples + spec.classes - 1) / spec.classes;
      spec.m = spec.n = m;
      spec.p = spec.q = std::max(1, m / 2);
      spec.class_separation = 3.0;
      spec.noise_sigma = 1.0;
      spec.seed = opts.seed;
      const LabeledPairSet full = gen_synthetic(spec);
      std::vector<std::size_t> idx(static_cast<std::size_t>(n_samples));
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      const LabeledPairSet data = select(full, idx);

      rows.push_back({"CCA", m, n_samples, detail::median_ms_cca(data, opts.reps, opts.cca_ridge)});
      rows.push_back({"2DCCA", m, n_samples, detail::median_ms(opts.reps, [&] {
                        const CenteredPair centered = center_pair(data);
                        (void)fit_2dcca(centered);
                      })});
      rows.push_back({"CDTRL", m, n_samples, detail::median_ms(opts.reps, [&] { (void)fit_cdtrl(data); })});
    }
  }
  return rows;
}

inline std::string emit_bench(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  out << "method\tm\tn\tN\tmedian_ms\n";
  for (const BenchRow& r : rows) {
    char ms[32];
    std::snprintf(ms, sizeof ms, "%.3f", r.median_ms);
    out << r.method << '\t' << r.m << '\t' << r.m << '\t' << r.samples << '\t' << ms << '\n';
  }
  return out.str();
}

}  // namespace planarcda
