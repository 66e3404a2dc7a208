#include "preavg/numeric.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "preavg/errors.hpp"

namespace preavg {

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw error("normal_quantile: p must lie in (0,1)");
  static const boost::math::normal_distribution<double> dist;
  return boost::math::quantile(dist, p);
}

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 16) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

double sample_mean(std::span<const double> v) {
  if (v.empty()) throw error("sample_mean: empty input");
  return pairwise_sum(v) / double(v.size());
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void parallel_for(long count, int workers, const std::function<void(long)>& fn) {
  if (count <= 0) return;
  long nw = workers > 0 ? workers : long(std::thread::hardware_concurrency());
  if (nw < 1) nw = 1;
  if (nw > count) nw = count;
  if (nw == 1) {
    for (long i = 0; i < count; ++i) fn(i);
    return;
  }

  std::atomic<long> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      const long i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(std::size_t(nw));
  for (long t = 0; t < nw; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace preavg
