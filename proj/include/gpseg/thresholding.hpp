#pragma once

#include "gpseg/kernels.hpp"
#include "gpseg/types.hpp"

namespace gpseg {

// Record of the automatic threshold search on one field. The count curve is
// evaluated on `alphas` (equally spaced on [0,1], endpoints included);
// `diffs[k] = counts[k] - counts[k+1]` is the drop entering `alphas[k+1]`.
struct ThresholdTrace {
  Eigen::VectorXd alphas;
  Eigen::VectorXi counts;
  Eigen::VectorXd diffs;
  Eigen::VectorXd smoothed;
  double tau = 0.0;          // sample stddev of the smoothed drops
  int argmax_index = 0;      // alpha index of the largest smoothed drop
  int alpha_index = 0;       // alpha index of the selected threshold
  double alpha_star = 1.0;
  bool all_background = false;      // field has no positive values
  bool smoothing_passthrough = false;  // drops constant; smoother skipped
  bool degenerate_tau = false;
  bool fallback = false;            // stabilization never reached
};

// Pixel counts above each normalized threshold: counts[m] = #{F / max(F) >
// alphas[m]}. Requires grid_size >= 2; sets all_background when max(F) <= 0.
ThresholdTrace count_curve(const GrayImage& field, int grid_size);

// Smooths the drop sequence with a 1-D latent-mean fit; constant sequences
// pass through untouched.
void smooth_diffs(ThresholdTrace& trace,
                  KernelFamily family = KernelFamily::matern52);

// Picks the first grid point after the largest smoothed drop at which
// consecutive smoothed drops differ by less than `stabilization * tau`.
// A positive min_alpha_index restricts the search to grid points strictly
// after it (used when re-thresholding an outlier tile).
void select_threshold(ThresholdTrace& trace, double stabilization = 0.05,
                      int min_alpha_index = 0);

BinaryMask binarize(const GrayImage& field, double alpha);

// count_curve + smooth_diffs + select_threshold + binarize.
struct ThresholdResult {
  BinaryMask mask;
  ThresholdTrace trace;
};
ThresholdResult threshold_field(const GrayImage& field, int grid_size = 100,
                                double stabilization = 0.05,
                                KernelFamily family = KernelFamily::matern52);

}  // namespace gpseg
