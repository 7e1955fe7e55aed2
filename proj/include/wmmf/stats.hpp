#ifndef WMMF_STATS_HPP
#define WMMF_STATS_HPP

#include <atomic>
#include <cmath>
#include <cstddef>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

namespace wmmf {

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

struct MeanCI {
  double mean = 0.0;
  double stderr_ = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t n = 0;
};

inline MeanCI mean_ci95(const std::vector<double>& v) {
  MeanCI r;
  r.n = v.size();
  r.mean = mean_of(v);
  r.stderr_ = r.n > 1 ? sample_std(v) / std::sqrt(static_cast<double>(r.n)) : 0.0;
  r.lo = r.mean - 1.96 * r.stderr_;
  r.hi = r.mean + 1.96 * r.stderr_;
  return r;
}

// Normal-approximation CI for a binomial frequency.
inline MeanCI freq_ci95(std::size_t successes, std::size_t n) {
  MeanCI r;
  r.n = n;
  r.mean = n ? static_cast<double>(successes) / static_cast<double>(n) : 0.0;
  r.stderr_ = n ? std::sqrt(r.mean * (1.0 - r.mean) / static_cast<double>(n)) : 0.0;
  r.lo = std::max(0.0, r.mean - 1.96 * r.stderr_);
  r.hi = std::min(1.0, r.mean + 1.96 * r.stderr_);
  return r;
}

inline double least_squares_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("least_squares_slope: need >= 2 points");
  double mx = mean_of(xs), my = mean_of(ys);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    num += (xs[i] - mx) * (ys[i] - my);
    den += (xs[i] - mx) * (xs[i] - mx);
  }
  return num / den;
}

// Index-parallel loop; results must be written into slots owned by index so
// the outcome is independent of the thread count.
inline void parallel_for(std::size_t n, std::size_t degree, const std::function<void(std::size_t)>& body) {
  if (degree <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::size_t workers = std::min(degree, n);
  std::exception_ptr error;
  std::mutex error_mu;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> g(error_mu);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace wmmf

#endif  // WMMF_STATS_HPP
