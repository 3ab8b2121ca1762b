#include "gpseg/tiling.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace gpseg {

namespace {

// Piece sizes for one axis: as many pieces as possible at or under the
// target, but never shorter than 16 pixels unless the whole axis is shorter.
std::vector<int> split_axis(int n, int target) {
  if (n < 1) throw std::invalid_argument("axis length must be positive");
  if (target < 1) throw std::invalid_argument("tile target must be positive");
  int k = (n + target - 1) / target;
  while (k > 1 && n / k < 16) --k;
  std::vector<int> sizes(k);
  const int base = n / k;
  const int extra = n % k;
  for (int i = 0; i < k; ++i) sizes[i] = base + (i < extra ? 1 : 0);
  return sizes;
}

}  // namespace

TileLayout make_layout(int rows, int cols, int target_side) {
  const std::vector<int> row_sizes = split_axis(rows, target_side);
  const std::vector<int> col_sizes = split_axis(cols, target_side);
  TileLayout layout;
  layout.rows = rows;
  layout.cols = cols;
  layout.tile_rows = static_cast<int>(row_sizes.size());
  layout.tile_cols = static_cast<int>(col_sizes.size());
  int r0 = 0;
  for (int br = 0; br < layout.tile_rows; ++br) {
    int c0 = 0;
    for (int bc = 0; bc < layout.tile_cols; ++bc) {
      layout.tiles.push_back({r0, c0, row_sizes[br], col_sizes[bc]});
      c0 += col_sizes[bc];
    }
    r0 += row_sizes[br];
  }
  return layout;
}

std::string layout_to_json(const TileLayout& layout) {
  nlohmann::json j;
  j["rows"] = layout.rows;
  j["cols"] = layout.cols;
  j["tile_rows"] = layout.tile_rows;
  j["tile_cols"] = layout.tile_cols;
  j["tiles"] = nlohmann::json::array();
  for (const Tile& t : layout.tiles)
    j["tiles"].push_back({{"row0", t.row0},
                          {"col0", t.col0},
                          {"rows", t.rows},
                          {"cols", t.cols}});
  return j.dump(2);
}

TileLayout layout_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  TileLayout layout;
  layout.rows = j.at("rows").get<int>();
  layout.cols = j.at("cols").get<int>();
  layout.tile_rows = j.at("tile_rows").get<int>();
  layout.tile_cols = j.at("tile_cols").get<int>();
  for (const auto& t : j.at("tiles"))
    layout.tiles.push_back({t.at("row0").get<int>(), t.at("col0").get<int>(),
                            t.at("rows").get<int>(), t.at("cols").get<int>()});
  if (static_cast<int>(layout.tiles.size()) !=
      layout.tile_rows * layout.tile_cols)
    throw std::invalid_argument("tile list does not match the grid shape");
  return layout;
}

namespace {

void check_layout(const GrayImage& y, const TileLayout& layout) {
  if (layout.rows != y.rows() || layout.cols != y.cols())
    throw std::invalid_argument("layout does not match the image shape");
  // The layout generator guarantees coverage; cheap sanity check on extents.
  long covered = 0;
  for (const Tile& t : layout.tiles) {
    if (t.row0 < 0 || t.col0 < 0 || t.rows < 1 || t.cols < 1 ||
        t.row0 + t.rows > layout.rows || t.col0 + t.cols > layout.cols)
      throw std::invalid_argument("tile exceeds the image bounds");
    covered += static_cast<long>(t.rows) * t.cols;
  }
  if (covered != static_cast<long>(layout.rows) * layout.cols)
    throw std::invalid_argument("tiles do not cover the image exactly");
}

}  // namespace

DenoiseResult denoise_tiled(const GrayImage& y, const TileLayout& layout,
                            KernelFamily family, bool want_variance,
                            const FitOptions& opts) {
  if (!y.allFinite()) throw std::domain_error("image contains non-finite values");
  check_layout(y, layout);

  DenoiseResult out;
  out.layout = layout;

  // Calibration tile: highest sample variance (ties to the first in raster
  // order). Constant images are still denoised, with a degenerate fit.
  int calib = 0;
  double best_var = -1.0;
  for (int k = 0; k < static_cast<int>(layout.tiles.size()); ++k) {
    const Tile& t = layout.tiles[k];
    const auto block = y.block(t.row0, t.col0, t.rows, t.cols);
    const double m = block.mean();
    const double denom = std::max<long>(1, block.size() - 1);
    const double v = (block.array() - m).square().sum() / denom;
    if (v > best_var) {
      best_var = v;
      calib = k;
    }
  }
  out.calibration_tile = calib;

  const Tile& ct = layout.tiles[calib];
  const GrayImage calib_block = y.block(ct.row0, ct.col0, ct.rows, ct.cols);
  const FitResult fit = fit_mle(calib_block, family, opts);
  out.shared = fit.params;
  out.fit_at_bound = fit.at_bound;

  out.mean.resize(y.rows(), y.cols());
  if (want_variance) out.variance.setZero(y.rows(), y.cols());

  for (const Tile& t : layout.tiles) {
    const GrayImage block = y.block(t.row0, t.col0, t.rows, t.cols);
    TileFit tf;
    if (fit.degenerate) {
      // No usable correlation structure anywhere: pass tiles through.
      tf.mu = block.mean();
      tf.sigma2 = 0.0;
      tf.degenerate = true;
      out.mean.block(t.row0, t.col0, t.rows, t.cols) = block;
    } else {
      const ProfileLik p = profile_loglik_fast(
          block, out.shared.kernel1, out.shared.kernel2, out.shared.eta);
      tf.mu = p.mu_hat;
      tf.sigma2 = p.sigma2_hat;
      tf.degenerate = p.degenerate;
      if (p.degenerate) {
        // Constant-looking tile: copy it through rather than smoothing the
        // rounding noise that made the fit collapse.
        out.mean.block(t.row0, t.col0, t.rows, t.cols) = block;
        tf.sigma2 = 0.0;
      } else {
        GpParams params = out.shared;
        params.mu = p.mu_hat;
        params.sigma2 = p.sigma2_hat;
        const PredictiveField f = predict(block, params, want_variance);
        out.mean.block(t.row0, t.col0, t.rows, t.cols) = f.mean;
        if (want_variance)
          out.variance.block(t.row0, t.col0, t.rows, t.cols) = f.variance;
      }
    }
    out.tile_fits.push_back(tf);
  }
  return out;
}

DenoiseResult denoise_tiled(const GrayImage& y, KernelFamily family,
                            int target_side, bool want_variance,
                            const FitOptions& opts) {
  return denoise_tiled(y,
                       make_layout(static_cast<int>(y.rows()),
                                   static_cast<int>(y.cols()), target_side),
                       family, want_variance, opts);
}

}  // namespace gpseg
