#include "gpseg/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <queue>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace gpseg {

namespace {

constexpr int kDr[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
constexpr int kDc[8] = {-1, 0, 1, -1, 1, -1, 0, 1};

void check_mask(const BinaryMask& mask) {
  if (mask.size() == 0) throw std::invalid_argument("empty mask");
  for (int j = 0; j < mask.cols(); ++j)
    for (int i = 0; i < mask.rows(); ++i)
      if (mask(i, j) > 1)
        throw std::invalid_argument("mask entries must be 0 or 1");
}

}  // namespace

LabelMask connected_components(const BinaryMask& mask) {
  check_mask(mask);
  const int rows = static_cast<int>(mask.rows());
  const int cols = static_cast<int>(mask.cols());
  LabelMask labels = LabelMask::Zero(rows, cols);
  int next = 0;
  std::vector<std::pair<int, int>> stack;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      if (!mask(i, j) || labels(i, j)) continue;
      ++next;
      labels(i, j) = next;
      stack.push_back({i, j});
      while (!stack.empty()) {
        const auto [r, c] = stack.back();
        stack.pop_back();
        for (int d = 0; d < 8; ++d) {
          const int nr = r + kDr[d];
          const int nc = c + kDc[d];
          if (nr < 0 || nr >= rows || nc < 0 || nc >= cols) continue;
          if (!mask(nr, nc) || labels(nr, nc)) continue;
          labels(nr, nc) = next;
          stack.push_back({nr, nc});
        }
      }
    }
  }
  return labels;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lower envelope of parabolas (exact 1-D squared-distance transform).
void squared_dt_1d(const std::vector<double>& f, std::vector<double>& d) {
  const int n = static_cast<int>(f.size());
  std::vector<int> v(n);
  std::vector<double> z(n + 1);
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    if (f[q] == kInf) continue;  // parabola at infinity never wins
    double s;
    while (true) {
      const int p = v[k];
      if (f[p] == kInf) {
        // An infinite predecessor is dominated everywhere.
        if (k > 0) {
          --k;
          continue;
        }
        s = -kInf;
        break;
      }
      s = ((f[q] + q * q) - (f[p] + p * p)) / (2.0 * (q - p));
      if (s <= z[k] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const int p = v[k];
    d[q] = f[p] == kInf ? kInf : (q - p) * (q - p) + f[p];
  }
}

}  // namespace

Eigen::MatrixXd distance_transform(const BinaryMask& mask) {
  check_mask(mask);
  const int rows = static_cast<int>(mask.rows());
  const int cols = static_cast<int>(mask.cols());
  const int pr = rows + 2;
  const int pc = cols + 2;

  // Padded grid: the ring and all background pixels are sources.
  Eigen::MatrixXd g(pr, pc);
  g.setZero();
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i)
      g(i + 1, j + 1) = mask(i, j) ? kInf : 0.0;

  std::vector<double> buf(std::max(pr, pc)), out(std::max(pr, pc));
  for (int j = 0; j < pc; ++j) {
    for (int i = 0; i < pr; ++i) buf[i] = g(i, j);
    buf.resize(pr);
    out.resize(pr);
    squared_dt_1d(buf, out);
    for (int i = 0; i < pr; ++i) g(i, j) = out[i];
  }
  for (int i = 0; i < pr; ++i) {
    buf.resize(pc);
    out.resize(pc);
    for (int j = 0; j < pc; ++j) buf[j] = g(i, j);
    squared_dt_1d(buf, out);
    for (int j = 0; j < pc; ++j) g(i, j) = out[j];
  }

  Eigen::MatrixXd dist(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) dist(i, j) = std::sqrt(g(i + 1, j + 1));
  return dist;
}

namespace {

struct BasinForest {
  std::vector<int> parent;
  std::vector<double> min_height;  // height of the deepest seed in the set
  std::vector<int> canon;          // label of that deepest seed
  std::vector<double> cent_r, cent_c;

  int find(int a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  }

  // Returns the surviving root; the deeper basin (tie: lower canon label)
  // keeps its identity.
  int merge(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return a;
    const bool a_deeper = std::tie(min_height[a], canon[a]) <
                          std::tie(min_height[b], canon[b]);
    const int keep = a_deeper ? a : b;
    const int lose = a_deeper ? b : a;
    parent[lose] = keep;
    return keep;
  }
};

}  // namespace

LabelMask watershed(const Eigen::MatrixXd& distance, double merge_tolerance) {
  if (distance.size() == 0) throw std::invalid_argument("empty distance map");
  if (!(merge_tolerance >= 0.0))
    throw std::invalid_argument("merge_tolerance must be nonnegative");
  if (!distance.allFinite() || distance.minCoeff() < 0.0)
    throw std::domain_error("distance map must be finite and nonnegative");
  const int rows = static_cast<int>(distance.rows());
  const int cols = static_cast<int>(distance.cols());
  constexpr double kPlateauTol = 1e-9;

  // Seeds: regional maximum plateaus of the distance map, one basin each,
  // numbered in raster order of first encounter.
  LabelMask labels = LabelMask::Zero(rows, cols);
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> seen =
      Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(rows,
                                                                        cols);
  BasinForest forest;
  forest.parent.push_back(0);  // dummy index 0
  forest.min_height.push_back(0.0);
  forest.canon.push_back(0);
  forest.cent_r.push_back(0.0);
  forest.cent_c.push_back(0.0);

  std::vector<std::pair<int, int>> plateau;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      if (seen(i, j) || !(distance(i, j) > 0.0)) continue;
      const double level = distance(i, j);
      plateau.clear();
      plateau.push_back({i, j});
      seen(i, j) = 1;
      bool is_max = true;
      for (std::size_t q = 0; q < plateau.size(); ++q) {
        const auto [r, c] = plateau[q];
        for (int d = 0; d < 8; ++d) {
          const int nr = r + kDr[d];
          const int nc = c + kDc[d];
          if (nr < 0 || nr >= rows || nc < 0 || nc >= cols) continue;
          const double dv = distance(nr, nc);
          if (dv > level + kPlateauTol) is_max = false;
          if (!seen(nr, nc) && std::abs(dv - level) <= kPlateauTol) {
            seen(nr, nc) = 1;
            plateau.push_back({nr, nc});
          }
        }
      }
      if (!is_max) continue;
      const int label = static_cast<int>(forest.parent.size());
      double sr = 0.0, sc = 0.0;
      for (const auto& [r, c] : plateau) {
        labels(r, c) = label;
        sr += r;
        sc += c;
      }
      forest.parent.push_back(label);
      forest.min_height.push_back(-level);
      forest.canon.push_back(label);
      forest.cent_r.push_back(sr / plateau.size());
      forest.cent_c.push_back(sc / plateau.size());
    }
  }
  const int n_seeds = static_cast<int>(forest.parent.size()) - 1;
  if (n_seeds == 0) return LabelMask::Zero(rows, cols);

  // Flood in order of increasing height -distance; FIFO within a level.
  struct QueueEntry {
    double height;
    std::uint64_t seq;
    int r, c;
    bool operator>(const QueueEntry& other) const {
      return std::tie(height, seq) > std::tie(other.height, other.seq);
    }
  };
  std::priority_queue<QueueEntry, std::vector<QueueEntry>,
                      std::greater<QueueEntry>>
      queue;
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> queued =
      Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(rows,
                                                                        cols);
  std::uint64_t seq = 0;
  auto push_neighbors = [&](int r, int c) {
    for (int d = 0; d < 8; ++d) {
      const int nr = r + kDr[d];
      const int nc = c + kDc[d];
      if (nr < 0 || nr >= rows || nc < 0 || nc >= cols) continue;
      if (queued(nr, nc) || labels(nr, nc) || !(distance(nr, nc) > 0.0))
        continue;
      queued(nr, nc) = 1;
      queue.push({-distance(nr, nc), seq++, nr, nc});
    }
  };
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      if (labels(i, j)) push_neighbors(i, j);

  std::vector<int> roots;
  while (!queue.empty()) {
    const QueueEntry e = queue.top();
    queue.pop();
    if (labels(e.r, e.c)) continue;

    roots.clear();
    for (int d = 0; d < 8; ++d) {
      const int nr = e.r + kDr[d];
      const int nc = e.c + kDc[d];
      if (nr < 0 || nr >= rows || nc < 0 || nc >= cols) continue;
      if (!labels(nr, nc)) continue;
      const int root = forest.find(labels(nr, nc));
      if (std::find(roots.begin(), roots.end(), root) == roots.end())
        roots.push_back(root);
    }

    if (roots.size() > 1) {
      // Deepest basin at this meeting point (tie: lowest seed label).
      int deepest = roots[0];
      for (int root : roots)
        if (std::tie(forest.min_height[root], forest.canon[root]) <
            std::tie(forest.min_height[deepest], forest.canon[deepest]))
          deepest = root;
      for (int root : roots) {
        if (root == deepest) continue;
        if (e.height - forest.min_height[root] < merge_tolerance)
          forest.merge(root, deepest);
      }
      std::vector<int> survivors;
      for (int root : roots) {
        const int now = forest.find(root);
        if (std::find(survivors.begin(), survivors.end(), now) ==
            survivors.end())
          survivors.push_back(now);
      }
      roots.swap(survivors);
    }

    int chosen = roots[0];
    if (roots.size() > 1) {
      double best = kInf;
      for (int root : roots) {
        const double dr = e.r - forest.cent_r[root];
        const double dc = e.c - forest.cent_c[root];
        const double d2 = dr * dr + dc * dc;
        if (d2 < best ||
            (d2 == best && forest.canon[root] < forest.canon[chosen])) {
          best = d2;
          chosen = root;
        }
      }
    }
    labels(e.r, e.c) = forest.canon[chosen];
    push_neighbors(e.r, e.c);
  }

  // Resolve merges and renumber 1..K in raster order of first occurrence.
  std::vector<int> canon_of_label(forest.parent.size());
  for (std::size_t l = 1; l < forest.parent.size(); ++l)
    canon_of_label[l] = forest.canon[forest.find(static_cast<int>(l))];
  std::map<int, int> renumber;
  LabelMask out = LabelMask::Zero(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      if (!labels(i, j)) continue;
      const int canon = canon_of_label[labels(i, j)];
      auto [it, inserted] =
          renumber.insert({canon, static_cast<int>(renumber.size()) + 1});
      out(i, j) = it->second;
    }
  }
  return out;
}

LabelMask filter_small(const LabelMask& labels, double interior_frac,
                       double boundary_frac,
                       std::optional<double> fixed_mean_area) {
  if (labels.size() == 0) throw std::invalid_argument("empty label mask");
  if (labels.minCoeff() < 0)
    throw std::invalid_argument("labels must be nonnegative");
  if (!(interior_frac >= 0.0) || !(boundary_frac >= 0.0))
    throw std::invalid_argument("size fractions must be nonnegative");
  const int rows = static_cast<int>(labels.rows());
  const int cols = static_cast<int>(labels.cols());

  std::map<int, long> area;
  std::map<int, bool> touches;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const int l = labels(i, j);
      if (!l) continue;
      ++area[l];
      if (i == 0 || j == 0 || i == rows - 1 || j == cols - 1) touches[l] = true;
    }
  }
  if (area.empty()) return LabelMask::Zero(rows, cols);

  double mean_area = 0.0;
  if (fixed_mean_area) {
    if (!(*fixed_mean_area > 0.0))
      throw std::invalid_argument("fixed mean area must be positive");
    mean_area = *fixed_mean_area;
  } else {
    for (const auto& [l, a] : area) mean_area += static_cast<double>(a);
    mean_area /= static_cast<double>(area.size());
  }

  std::map<int, int> renumber;
  for (const auto& [l, a] : area) {
    const double cut = touches[l] ? boundary_frac : interior_frac;
    if (static_cast<double>(a) > cut * mean_area)
      renumber[l] = static_cast<int>(renumber.size()) + 1;
  }

  LabelMask out = LabelMask::Zero(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const int l = labels(i, j);
      if (!l) continue;
      const auto it = renumber.find(l);
      if (it != renumber.end()) out(i, j) = it->second;
    }
  }
  return out;
}

SegmentResult segment_image(const GrayImage& y, const PipelineConfig& config) {
  if (config.alpha_grid_size < 2)
    throw std::invalid_argument("alpha_grid_size must be >= 2");
  if (config.rethreshold_factor < 1)
    throw std::invalid_argument("rethreshold_factor must be >= 1");

  SegmentResult res;
  const TileLayout layout = make_layout(static_cast<int>(y.rows()),
                                        static_cast<int>(y.cols()),
                                        config.tile_side);
  res.denoised =
      denoise_tiled(y, layout, config.kernel, /*want_variance=*/false);

  const int n_tiles = static_cast<int>(layout.tiles.size());
  res.binary = BinaryMask::Zero(y.rows(), y.cols());
  res.traces.resize(n_tiles);
  res.rethresholded.assign(n_tiles, 0);

  std::vector<BinaryMask> tile_masks(n_tiles);
  std::vector<int> object_counts(n_tiles);
  for (int k = 0; k < n_tiles; ++k) {
    const Tile& t = layout.tiles[k];
    const GrayImage field =
        res.denoised.mean.block(t.row0, t.col0, t.rows, t.cols);
    ThresholdResult tr = threshold_field(field, config.alpha_grid_size,
                                         config.stabilization, config.kernel);
    res.traces[k] = tr.trace;
    tile_masks[k] = tr.mask;
    object_counts[k] = tile_masks[k].any()
                           ? connected_components(tile_masks[k]).maxCoeff()
                           : 0;
  }

  // Outlier tiles (far more objects than typical) grabbed noise below the
  // real intensity gap — a tile without bright objects normalizes its
  // background to full scale. Rescue them the same way (gamma, eta) are
  // handled: share calibration across tiles. The ordinary tiles agree on an
  // absolute brightness cutoff (median of alpha* x tile max); an outlier tile
  // adopts it, rescaled into its own normalized units and snapped up to the
  // alpha grid, which empties pure-background tiles.
  if (n_tiles > 1) {
    std::vector<int> sorted = object_counts;
    std::sort(sorted.begin(), sorted.end());
    const int mid = n_tiles / 2;
    const double median =
        n_tiles % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
    const double cutoff = config.rethreshold_factor * median;
    std::vector<double> abs_cuts;
    std::vector<double> tile_max(n_tiles, 0.0);
    for (int k = 0; k < n_tiles; ++k) {
      const Tile& t = layout.tiles[k];
      tile_max[k] =
          res.denoised.mean.block(t.row0, t.col0, t.rows, t.cols).maxCoeff();
      if (object_counts[k] <= cutoff && !res.traces[k].all_background &&
          tile_max[k] > 0.0)
        abs_cuts.push_back(res.traces[k].alpha_star * tile_max[k]);
    }
    if (median > 0.0 && !abs_cuts.empty()) {
      const auto nth = abs_cuts.begin() + abs_cuts.size() / 2;
      std::nth_element(abs_cuts.begin(), nth, abs_cuts.end());
      const double consensus = *nth;
      const int last_index = config.alpha_grid_size - 1;
      for (int k = 0; k < n_tiles; ++k) {
        if (object_counts[k] <= cutoff || !(tile_max[k] > 0.0)) continue;
        const Tile& t = layout.tiles[k];
        const GrayImage field =
            res.denoised.mean.block(t.row0, t.col0, t.rows, t.cols);
        ThresholdTrace& trace = res.traces[k];
        const double rescaled = consensus / tile_max[k];
        int index = static_cast<int>(std::ceil(rescaled * last_index));
        index = std::clamp(index, trace.argmax_index + 1, last_index);
        trace.alpha_index = index;
        trace.alpha_star = trace.alphas(index);
        tile_masks[k] = binarize(field, trace.alpha_star);
        res.rethresholded[k] = 1;
      }
    }
  }

  for (int k = 0; k < n_tiles; ++k) {
    const Tile& t = layout.tiles[k];
    res.binary.block(t.row0, t.col0, t.rows, t.cols) = tile_masks[k];
  }

  if (!res.binary.any()) {
    res.labels = LabelMask::Zero(y.rows(), y.cols());
    return res;
  }
  const Eigen::MatrixXd dist = distance_transform(res.binary);
  const LabelMask basins = watershed(dist, config.merge_tolerance);
  res.labels = filter_small(basins, config.interior_min_frac,
                            config.boundary_min_frac);
  return res;
}

}  // namespace gpseg
