#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace cardiograph {

// Mean over samples of ||pred_i - truth_i||_2 / ||truth_i||_2.  Rows are
// contiguous blocks of `cols` values; a zero-norm truth row with a nonzero
// prediction contributes 1, and 0 when the prediction is zero too.
double rel_l2(const std::vector<double>& pred, const std::vector<double>& truth,
              std::size_t cols);

// Per-sample relative L2 errors, one entry per row.
std::vector<double> rel_l2_per_sample(const std::vector<double>& pred,
                                      const std::vector<double>& truth, std::size_t cols);

// 1 - Pearson correlation of the two fields, in [0, 2].  0 means perfectly
// correlated; constant inputs have undefined correlation and raise.
double pearson_dissimilarity(const std::vector<double>& a, const std::vector<double>& b);

struct FiveNumber {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double whisker_lo = 0.0;  // clamped to observed range
  double whisker_hi = 0.0;
};

struct ErrorDistribution {
  std::vector<double> bin_edges;   // bins + 1 edges over [0, max]
  std::vector<std::size_t> counts;
  FiveNumber summary;
  double outlier_fraction = 0.0;   // fraction of values strictly above threshold
  double threshold = 0.0;
};

// Histogram over [0, max(values)] with `bins` equal-width bins (last bin
// closed on the right), quartiles by linear interpolation of order
// statistics, and whiskers at 1.5 * IQR clamped to the data range.
ErrorDistribution error_distribution(const std::vector<double>& values, std::size_t bins,
                                     double outlier_threshold);

struct BenchResult {
  double wall_seconds = 0.0;
  double per_call_seconds = 0.0;
  std::size_t calls = 0;
  std::uint64_t peak_rss_kb = 0;  // VmHWM after the run, 0 if unavailable
};

// Runs fn `calls` times and reports wall time plus the process peak RSS.
BenchResult bench(const std::function<void()>& fn, std::size_t calls);

// VmHWM from /proc/self/status in kilobytes, 0 if the field is missing.
std::uint64_t peak_rss_kb();

}  // namespace cardiograph
