#include "cardiograph/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cardiograph/errors.hpp"

namespace cardiograph {

namespace {

// Linear interpolation between order statistics (the common "type 7" rule):
// q(p) lands at index p * (n - 1) of the sorted sample.
double quantile_sorted(const std::vector<double>& sorted, double p) {
  const double idx = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(idx);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = idx - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::vector<double> rel_l2_per_sample(const std::vector<double>& pred,
                                      const std::vector<double>& truth, std::size_t cols) {
  if (cols == 0) raise(errc::ShapeMismatch, "row length must be positive");
  if (pred.size() != truth.size() || pred.size() % cols != 0)
    raise(errc::ShapeMismatch, "prediction and truth are not matching row blocks");
  const std::size_t rows = pred.size() / cols;
  if (rows == 0) raise(errc::TooSmall, "need at least one row");

  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double num = 0.0, den = 0.0;
    const double* p = pred.data() + r * cols;
    const double* y = truth.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) {
      const double d = p[c] - y[c];
      num += d * d;
      den += y[c] * y[c];
    }
    if (den == 0.0)
      out[r] = num == 0.0 ? 0.0 : 1.0;
    else
      out[r] = std::sqrt(num / den);
  }
  return out;
}

double rel_l2(const std::vector<double>& pred, const std::vector<double>& truth,
              std::size_t cols) {
  const std::vector<double> per = rel_l2_per_sample(pred, truth, cols);
  double acc = 0.0;
  for (double v : per) acc += v;
  return acc / static_cast<double>(per.size());
}

double pearson_dissimilarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) raise(errc::ShapeMismatch, "fields differ in length");
  if (a.size() < 2) raise(errc::TooSmall, "correlation needs at least two values");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va == 0.0 || vb == 0.0)
    raise(errc::ConstantVector, "correlation is undefined for a constant field");
  return 1.0 - cov / std::sqrt(va * vb);
}

ErrorDistribution error_distribution(const std::vector<double>& values, std::size_t bins,
                                     double outlier_threshold) {
  if (values.empty()) raise(errc::EmptyList, "distribution needs at least one value");
  if (bins == 0) raise(errc::ConfigError, "bin count must be positive");

  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const double vmax = sorted.back();

  ErrorDistribution d;
  d.threshold = outlier_threshold;
  d.bin_edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i)
    d.bin_edges[i] = vmax * static_cast<double>(i) / static_cast<double>(bins);
  d.counts.assign(bins, 0);
  for (double v : values) {
    std::size_t b = vmax > 0.0 ? static_cast<std::size_t>(v / vmax * static_cast<double>(bins))
                               : 0;
    if (b >= bins) b = bins - 1;
    ++d.counts[b];
  }

  d.summary.min = sorted.front();
  d.summary.q1 = quantile_sorted(sorted, 0.25);
  d.summary.median = quantile_sorted(sorted, 0.5);
  d.summary.q3 = quantile_sorted(sorted, 0.75);
  d.summary.max = sorted.back();
  const double iqr = d.summary.q3 - d.summary.q1;
  d.summary.whisker_lo = std::max(d.summary.min, d.summary.q1 - 1.5 * iqr);
  d.summary.whisker_hi = std::min(d.summary.max, d.summary.q3 + 1.5 * iqr);

  std::size_t over = 0;
  for (double v : values)
    if (v > outlier_threshold) ++over;
  d.outlier_fraction = static_cast<double>(over) / static_cast<double>(values.size());
  return d;
}

std::uint64_t peak_rss_kb() {
  std::ifstream status("/proc/self/status");
  std::string line;
  while (std::getline(status, line)) {
    if (line.rfind("VmHWM:", 0) != 0) continue;
    std::istringstream iss(line.substr(6));
    std::uint64_t kb = 0;
    iss >> kb;
    return kb;
  }
  return 0;
}

BenchResult bench(const std::function<void()>& fn, std::size_t calls) {
  if (calls == 0) raise(errc::ConfigError, "benchmark needs at least one call");
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < calls; ++i) fn();
  const auto t1 = std::chrono::steady_clock::now();
  BenchResult r;
  r.calls = calls;
  r.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
  r.per_call_seconds = r.wall_seconds / static_cast<double>(calls);
  r.peak_rss_kb = peak_rss_kb();
  return r;
}

}  // namespace cardiograph
