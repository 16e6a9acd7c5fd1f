#include "trc/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace trc {

double pairwise_sum(std::span<const double> v) {
  constexpr std::size_t block = 64;
  if (v.size() <= block) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

double log_sum_exp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

MeanVar mean_variance(std::span<const double> v) {
  MeanVar r;
  r.count = v.size();
  if (v.empty()) return r;
  r.mean = pairwise_sum(v) / static_cast<double>(v.size());
  if (v.size() < 2) return r;
  std::vector<double> dev(v.size());
  std::transform(v.begin(), v.end(), dev.begin(), [&](double x) { return (x - r.mean) * (x - r.mean); });
  r.variance = pairwise_sum(dev) / static_cast<double>(v.size() - 1);
  return r;
}

double safe_pow(double x, double a) {
  if (x <= 0.0) return 0.0;
  return std::pow(x, a);
}

double xlogx_over_y(double x, double y) {
  if (x <= 0.0) return 0.0;
  return x * std::log(x / y);
}

std::size_t checked_pow(std::size_t base, std::size_t exp, std::size_t budget) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (base != 0 && r > budget / base) return 0;
    r *= base;
  }
  return r <= budget ? r : 0;
}

} // namespace trc

#include "trc/parallel.hpp"

#include <exception>
#include <mutex>
#include <thread>

namespace trc {

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn, unsigned threads) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers = std::min<std::size_t>(threads, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = count * w / workers;
    const std::size_t end = count * (w + 1) / workers;
    pool.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

} // namespace trc
