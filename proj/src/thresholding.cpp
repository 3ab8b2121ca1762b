#include "gpseg/thresholding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "gpseg/fast_gp.hpp"

namespace gpseg {

ThresholdTrace count_curve(const GrayImage& field, int grid_size) {
  if (grid_size < 2) throw std::invalid_argument("grid_size must be >= 2");
  if (field.size() == 0) throw std::invalid_argument("empty field");
  if (!field.allFinite())
    throw std::domain_error("field contains non-finite values");

  ThresholdTrace trace;
  trace.alphas = Eigen::VectorXd::LinSpaced(grid_size, 0.0, 1.0);
  trace.counts = Eigen::VectorXi::Zero(grid_size);
  trace.alpha_star = 1.0;
  trace.alpha_index = grid_size - 1;

  const double fmax = field.maxCoeff();
  if (!(fmax > 0.0)) {
    trace.all_background = true;
    trace.diffs = Eigen::VectorXd::Zero(grid_size - 1);
    trace.smoothed = trace.diffs;
    return trace;
  }

  // Sorted normalized values make each count a binary search.
  std::vector<double> vals(field.data(), field.data() + field.size());
  for (double& v : vals) v /= fmax;
  std::sort(vals.begin(), vals.end());
  for (int m = 0; m < grid_size; ++m) {
    const auto it =
        std::upper_bound(vals.begin(), vals.end(), trace.alphas(m));
    trace.counts(m) = static_cast<int>(vals.end() - it);
  }

  trace.diffs.resize(grid_size - 1);
  for (int k = 0; k + 1 < grid_size; ++k)
    trace.diffs(k) = static_cast<double>(trace.counts(k) - trace.counts(k + 1));
  trace.smoothed = trace.diffs;
  return trace;
}

void smooth_diffs(ThresholdTrace& trace, KernelFamily family) {
  const int g = static_cast<int>(trace.diffs.size());
  if (g == 0) throw std::invalid_argument("trace has no drop sequence");
  trace.smoothed = trace.diffs;
  if (trace.all_background) return;

  const double lo = trace.diffs.minCoeff();
  const double hi = trace.diffs.maxCoeff();
  if (g < 3 || hi - lo == 0.0) {
    trace.smoothing_passthrough = true;
    return;
  }

  const FitResult fit = fit_mle_1d(trace.diffs, family);
  if (fit.degenerate) {
    trace.smoothing_passthrough = true;
    return;
  }
  const GrayImage column = trace.diffs;
  trace.smoothed = predict(column, fit.params, /*want_variance=*/false,
                           AxisGrid::integer_lattice(g),
                           AxisGrid::integer_lattice(1))
                       .mean;
}

void select_threshold(ThresholdTrace& trace, double stabilization,
                      int min_alpha_index) {
  const int m = static_cast<int>(trace.alphas.size());
  const int g = static_cast<int>(trace.smoothed.size());
  if (g != m - 1) throw std::invalid_argument("trace not smoothed yet");
  if (!(stabilization > 0.0))
    throw std::invalid_argument("stabilization must be positive");
  if (min_alpha_index < 0 || min_alpha_index >= m)
    throw std::invalid_argument("min_alpha_index out of range");

  if (trace.all_background) {
    trace.alpha_index = m - 1;
    trace.alpha_star = trace.alphas(m - 1);
    trace.argmax_index = 0;
    return;
  }

  // Largest smoothed drop (first occurrence), in drop-sequence coordinates.
  int jstar = 0;
  trace.smoothed.maxCoeff(&jstar);
  trace.argmax_index = jstar + 1;  // alpha index of that drop

  const double mean = trace.smoothed.mean();
  const double denom = std::max(1, g - 1);
  trace.tau =
      std::sqrt((trace.smoothed.array() - mean).square().sum() / denom);

  auto finish = [&](int alpha_index) {
    trace.alpha_index =
        std::min(std::max(alpha_index, min_alpha_index + 1), m - 1);
    trace.alpha_star = trace.alphas(trace.alpha_index);
  };

  if (!(trace.tau > 0.0)) {
    trace.degenerate_tau = true;
    finish(trace.argmax_index + 1);
    return;
  }

  // Stabilization means entering the settled regime, not an incidental dip:
  // a flat-topped spike has two nearly equal neighboring drops whose one-step
  // change momentarily passes the tolerance right where the curve is most
  // erratic. Demand the change stay small for a short run.
  constexpr int kStabilizationRun = 3;
  const double tol = stabilization * trace.tau;
  int run_start = -1;
  int run = 0;
  for (int j = std::max(jstar + 1, min_alpha_index); j < g; ++j) {
    if (std::abs(trace.smoothed(j) - trace.smoothed(j - 1)) < tol) {
      if (run == 0) run_start = j;
      if (++run == kStabilizationRun || j == g - 1) {
        finish(run_start + 1);
        return;
      }
    } else {
      run = 0;
    }
  }

  // Never stabilized: settle one step past the last local peak of the
  // absolute drop-to-drop change.
  trace.fallback = true;
  std::vector<double> change(g, 0.0);
  for (int j = 1; j < g; ++j)
    change[j] = std::abs(trace.smoothed(j) - trace.smoothed(j - 1));
  int pick = g - 1;
  for (int j = g - 1; j >= 1; --j) {
    const bool left_ok = change[j] >= change[j - 1];
    const bool right_ok = j == g - 1 || change[j] >= change[j + 1];
    if (left_ok && right_ok) {
      pick = j;
      break;
    }
  }
  finish(std::max(pick + 2, trace.argmax_index + 1));
}

BinaryMask binarize(const GrayImage& field, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::invalid_argument("alpha must lie in [0,1]");
  BinaryMask mask = BinaryMask::Zero(field.rows(), field.cols());
  const double fmax = field.maxCoeff();
  if (!(fmax > 0.0)) return mask;
  for (int j = 0; j < field.cols(); ++j)
    for (int i = 0; i < field.rows(); ++i)
      if (field(i, j) / fmax > alpha) mask(i, j) = 1;
  return mask;
}

ThresholdResult threshold_field(const GrayImage& field, int grid_size,
                                double stabilization, KernelFamily family) {
  ThresholdResult out;
  out.trace = count_curve(field, grid_size);
  smooth_diffs(out.trace, family);
  select_threshold(out.trace, stabilization);
  out.mask = binarize(field, out.trace.alpha_star);
  return out;
}

}  // namespace gpseg
