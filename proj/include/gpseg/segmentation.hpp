#pragma once

#include <optional>
#include <vector>

#include "gpseg/thresholding.hpp"
#include "gpseg/tiling.hpp"
#include "gpseg/types.hpp"

namespace gpseg {

// 8-connected components of the foreground, labeled 1..K in raster order of
// first discovery.
LabelMask connected_components(const BinaryMask& mask);

// Exact Euclidean distance of each foreground pixel to the nearest
// background pixel. The image border is treated as adjacent to background:
// a one-pixel virtual background ring surrounds the mask, so foreground
// touching the border gets distance 1 there. Background pixels get 0.
Eigen::MatrixXd distance_transform(const BinaryMask& mask);

// Priority-flood watershed on -distance. Each regional maximum plateau of
// the distance map seeds one basin; when basins meet, a basin whose depth
// relative to the meeting level is below merge_tolerance is absorbed into
// the deeper neighbor, and surviving fronts split contested pixels by
// nearest seed centroid. Labels are renumbered 1..K in raster order.
LabelMask watershed(const Eigen::MatrixXd& distance,
                    double merge_tolerance = 1.0);

// Drops small objects: area <= interior_frac * A for interior objects, or
// <= boundary_frac * A for objects touching the image border, where A is the
// mean object area (or `fixed_mean_area` when provided). Survivors are
// relabeled contiguously in ascending original order.
LabelMask filter_small(const LabelMask& labels, double interior_frac = 0.15,
                       double boundary_frac = 0.05,
                       std::optional<double> fixed_mean_area = std::nullopt);

struct PipelineConfig {
  KernelFamily kernel = KernelFamily::matern52;
  int tile_side = 100;
  int alpha_grid_size = 100;
  double stabilization = 0.05;
  double interior_min_frac = 0.15;
  double boundary_min_frac = 0.05;
  double merge_tolerance = 1.0;
  // A tile with more than rethreshold_factor times the median object count
  // is re-thresholded above its first cut.
  int rethreshold_factor = 3;
  // Segmentation itself is deterministic; the seed feeds the generators.
  std::uint64_t seed = 0;
};

struct SegmentResult {
  DenoiseResult denoised;
  std::vector<ThresholdTrace> traces;    // one per tile
  std::vector<std::uint8_t> rethresholded;  // per-tile flag
  BinaryMask binary;
  LabelMask labels;
};

// Full pipeline: tiled denoising, per-tile automatic thresholding (with the
// outlier re-threshold pass), restitching, distance transform, watershed,
// and small-object removal.
SegmentResult segment_image(const GrayImage& y, const PipelineConfig& config);

}  // namespace gpseg
