#pragma once

#include <cstdint>
#include <vector>

#include "gpseg/kernels.hpp"

namespace gpseg {

struct BenchRow {
  int side = 0;              // square lattice side, N = side * side
  double fast_seconds = 0.0;
  double direct_seconds = 0.0;  // NaN when the direct path was skipped
  double max_abs_diff = 0.0;    // |loglik_fast - loglik_direct|, NaN if skipped
};

// Times one profile-likelihood evaluation per method on random data at each
// lattice side. The direct path is skipped (NaN) for sides whose N exceeds
// its size guard.
std::vector<BenchRow> run_scaling_bench(const std::vector<int>& sides,
                                        KernelFamily family, int repeats,
                                        std::uint64_t seed);

}  // namespace gpseg
