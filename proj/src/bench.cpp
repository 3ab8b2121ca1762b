#include "gpseg/bench.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>

#include "gpseg/fast_gp.hpp"

namespace gpseg {

namespace {

double time_seconds(const std::function<double()>& work, int repeats) {
  double best = std::numeric_limits<double>::infinity();
  volatile double sink = 0.0;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    sink = work();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  (void)sink;
  return best;
}

}  // namespace

std::vector<BenchRow> run_scaling_bench(const std::vector<int>& sides,
                                        KernelFamily family, int repeats,
                                        std::uint64_t seed) {
  if (repeats < 1) throw std::invalid_argument("repeats must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<BenchRow> rows;
  for (int side : sides) {
    if (side < 2) throw std::invalid_argument("lattice side must be >= 2");
    GrayImage y(side, side);
    for (int j = 0; j < side; ++j)
      for (int i = 0; i < side; ++i) y(i, j) = 2.0 + gauss(rng);
    const KernelSpec k{family, side / 5.0};
    const double eta = 0.1;

    BenchRow row;
    row.side = side;
    row.fast_seconds = time_seconds(
        [&] { return profile_loglik_fast(y, k, k, eta).loglik; }, repeats);
    if (side * side <= 10000) {
      double ll_fast = profile_loglik_fast(y, k, k, eta).loglik;
      double ll_direct = 0.0;
      row.direct_seconds = time_seconds(
          [&] {
            ll_direct = profile_loglik_direct(y, k, k, eta).loglik;
            return ll_direct;
          },
          repeats);
      row.max_abs_diff = std::abs(ll_fast - ll_direct);
    } else {
      row.direct_seconds = std::numeric_limits<double>::quiet_NaN();
      row.max_abs_diff = std::numeric_limits<double>::quiet_NaN();
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace gpseg
