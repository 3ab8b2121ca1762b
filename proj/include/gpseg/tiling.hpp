#pragma once

#include <string>
#include <vector>

#include "gpseg/fast_gp.hpp"
#include "gpseg/types.hpp"

namespace gpseg {

struct Tile {
  int row0 = 0;
  int col0 = 0;
  int rows = 0;
  int cols = 0;
};

// Non-overlapping rectangular cover of a rows x cols image. Tiles are stored
// in raster order (row blocks outer, column blocks inner).
struct TileLayout {
  int rows = 0;
  int cols = 0;
  int tile_rows = 0;  // number of tile blocks along axis 1
  int tile_cols = 0;
  std::vector<Tile> tiles;
};

// Splits each axis into ceil(n / target) nearly equal pieces, reducing the
// piece count while any piece would fall below 16 pixels. Images smaller than
// the target on an axis keep that axis whole.
TileLayout make_layout(int rows, int cols, int target_side = 100);

std::string layout_to_json(const TileLayout& layout);
TileLayout layout_from_json(const std::string& text);

struct TileFit {
  double mu = 0.0;
  double sigma2 = 0.0;
  bool degenerate = false;  // constant tile; mean copied, variance zero
};

struct DenoiseResult {
  TileLayout layout;
  // Range and nugget-ratio are shared across tiles, calibrated on the tile
  // with the highest sample variance; mean and scale are re-estimated per
  // tile in closed form.
  GpParams shared;
  int calibration_tile = 0;
  bool fit_at_bound = false;
  std::vector<TileFit> tile_fits;
  GrayImage mean;            // restitched posterior mean
  GrayImage variance;        // restitched posterior variance
};

DenoiseResult denoise_tiled(const GrayImage& y, const TileLayout& layout,
                            KernelFamily family, bool want_variance = true,
                            const FitOptions& opts = {});

DenoiseResult denoise_tiled(const GrayImage& y, KernelFamily family,
                            int target_side = 100, bool want_variance = true,
                            const FitOptions& opts = {});

}  // namespace gpseg
