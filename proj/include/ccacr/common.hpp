#ifndef CCACR_COMMON_HPP_
#define CCACR_COMMON_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccacr {

/// Column-major numeric matrix. Columns are contiguous so tree code can
/// scan one feature at a time.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }

  std::span<double> col(std::size_t j) { return {data_.data() + j * rows_, rows_}; }
  std::span<const double> col(std::size_t j) const { return {data_.data() + j * rows_, rows_}; }

  std::vector<double> row(std::size_t i) const {
    std::vector<double> r(cols_);
    for (std::size_t j = 0; j < cols_; ++j) r[j] = (*this)(i, j);
    return r;
  }

  /// Row-subset copy.
  Matrix take_rows(const std::vector<std::size_t>& idx) const {
    Matrix out(idx.size(), cols_);
    for (std::size_t j = 0; j < cols_; ++j)
      for (std::size_t i = 0; i < idx.size(); ++i) out(i, j) = (*this)(idx[i], j);
    return out;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Thrown on invalid data or violated preconditions; the CLI maps it to
/// exit code 1.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// ---- deterministic RNG streams -------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream keyed by (seed, a, b, c). Parallel loops derive one stream per
/// work item, so results do not depend on the thread count.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t a = 0,
                                std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = splitmix64(seed);
  s = splitmix64(s ^ splitmix64(a + 0x100000001ULL));
  s = splitmix64(s ^ splitmix64(b + 0x200000002ULL));
  s = splitmix64(s ^ splitmix64(c + 0x300000003ULL));
  return std::mt19937_64(s);
}

// ---- basic statistics -----------------------------------------------------

inline double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double mean(const std::vector<double>& v) {
  return mean(std::span<const double>(v));
}

/// Sample variance (n-1 denominator).
inline double variance(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

inline double variance(const std::vector<double>& v) {
  return variance(std::span<const double>(v));
}

inline double covariance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) return 0.0;
  double ma = mean(a), mb = mean(b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma) * (b[i] - mb);
  return s / static_cast<double>(a.size() - 1);
}

/// Type-7 quantile (linear interpolation between order statistics).
double quantile_type7(std::vector<double> values, double p);

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Standard normal quantile (Acklam's rational approximation with one
/// Halley refinement step; |error| well below 1e-9).
double normal_quantile(double p);

// ---- threading ------------------------------------------------------------

/// Worker count for parallel kernels. 0 means "all cores". Every kernel
/// has a serial path used when the effective count is 1; results are
/// identical either way.
void set_num_threads(int n);
int num_threads();

}  // namespace ccacr

#endif  // CCACR_COMMON_HPP_
