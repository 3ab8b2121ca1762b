#include "gpseg/synthetic.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace gpseg {

double branin_value(double x1, double x2, const BraninParams& p) {
  const double q = x2 - p.b * x1 * x1 + p.c * x1 - p.r;
  return p.a * q * q + p.s * (1.0 - p.t) * std::cos(x1) + p.s;
}

GrayImage branin_field(int n1, int n2, const BraninParams& p) {
  if (n1 < 2 || n2 < 2) throw std::invalid_argument("grid needs >= 2 points per axis");
  GrayImage f(n1, n2);
  for (int i = 0; i < n1; ++i) {
    const double x1 = -5.0 + 15.0 * i / (n1 - 1);
    for (int j = 0; j < n2; ++j)
      f(i, j) = branin_value(x1, 15.0 * j / (n2 - 1), p);
  }
  return f;
}

GrayImage diffusion_field(const DiffusionConfig& config) {
  if (config.nx < 2 || config.nt < 2)
    throw std::invalid_argument("diffusion grid needs >= 2 points per axis");
  if (!(config.diffusivity > 0.0) || !(config.x_max > 0.0) ||
      !(config.t_max > 0.0))
    throw std::invalid_argument("diffusion parameters must be positive");

  const double dx = config.x_max / (config.nx - 1);
  const double dt_save = config.t_max / (config.nt - 1);
  // Stability: D * dt / dx^2 <= 0.5, with margin for the marginal mode.
  const double dt_stable = 0.45 * dx * dx / config.diffusivity;
  const int substeps = std::max(1, static_cast<int>(std::ceil(dt_save / dt_stable)));
  const double dt = dt_save / substeps;
  const double r = config.diffusivity * dt / (dx * dx);

  Eigen::VectorXd u = Eigen::VectorXd::Zero(config.nx);
  u(0) = config.boundary_value;

  GrayImage out(config.nx, config.nt);
  out.col(0) = u;
  Eigen::VectorXd next = u;
  for (int j = 1; j < config.nt; ++j) {
    for (int s = 0; s < substeps; ++s) {
      next(0) = config.boundary_value;
      for (int i = 1; i < config.nx - 1; ++i)
        next(i) = u(i) + r * (u(i - 1) - 2.0 * u(i) + u(i + 1));
      // Zero flux at the far end: mirror ghost point.
      next(config.nx - 1) =
          u(config.nx - 1) +
          r * (2.0 * u(config.nx - 2) - 2.0 * u(config.nx - 1));
      u.swap(next);
    }
    out.col(j) = u;
  }
  return out;
}

GrayImage add_noise(const GrayImage& field, double sigma0, std::uint64_t seed) {
  if (!(sigma0 >= 0.0)) throw std::invalid_argument("sigma0 must be >= 0");
  if (sigma0 == 0.0) return field;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, sigma0);
  GrayImage noisy = field;
  for (int j = 0; j < noisy.cols(); ++j)
    for (int i = 0; i < noisy.rows(); ++i) noisy(i, j) += gauss(rng);
  return noisy;
}

namespace {

// Radial intensity profile of a blob: flat core, raised-cosine shoulder.
double blob_profile(double u) {
  if (u <= 0.7) return 1.0;
  if (u >= 1.0) return 0.0;
  return 0.5 * (1.0 + std::cos(std::numbers::pi * (u - 0.7) / 0.3));
}

}  // namespace

Phantom phantom_cells(const PhantomConfig& config) {
  if (config.rows < 1 || config.cols < 1)
    throw std::invalid_argument("phantom dimensions must be positive");
  if (config.count < 0) throw std::invalid_argument("object count must be >= 0");
  if (!(config.radius_min > 0.0) || config.radius_max < config.radius_min)
    throw std::invalid_argument("invalid radius range");
  if (!(config.peak_min <= config.peak_max))
    throw std::invalid_argument("invalid peak range");

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Phantom ph;
  ph.image = GrayImage::Constant(config.rows, config.cols, config.background);
  ph.truth = LabelMask::Zero(config.rows, config.cols);
  if (config.count == 0) return ph;

  constexpr int kMaxAttempts = 10000;
  int attempts = 0;
  while (static_cast<int>(ph.radius.size()) < config.count) {
    if (++attempts > kMaxAttempts)
      throw std::runtime_error("phantom placement failed after 10000 attempts");
    const double radius =
        config.radius_min + (config.radius_max - config.radius_min) * unit(rng);
    const double clear = radius + config.margin;
    if (2.0 * clear >= config.rows || 2.0 * clear >= config.cols) continue;
    const double cr = clear + (config.rows - 1 - 2.0 * clear) * unit(rng);
    const double cc = clear + (config.cols - 1 - 2.0 * clear) * unit(rng);
    if (!config.allow_overlap) {
      bool clash = false;
      for (std::size_t k = 0; k < ph.radius.size(); ++k) {
        const double dr = cr - ph.center_r[k];
        const double dc = cc - ph.center_c[k];
        const double min_gap = radius + ph.radius[k] + config.margin;
        if (dr * dr + dc * dc < min_gap * min_gap) {
          clash = true;
          break;
        }
      }
      if (clash) continue;
    }
    ph.center_r.push_back(cr);
    ph.center_c.push_back(cc);
    ph.radius.push_back(radius);
    ph.peak.push_back(config.peak_min +
                      (config.peak_max - config.peak_min) * unit(rng));
  }

  // Ground-truth support: the full disc, or the blob out to its half-maximum
  // radius. Contested pixels go to the nearer center (ties: lower label).
  const double truth_scale = config.shape == CellShape::disc ? 1.0 : 0.85;
  for (int i = 0; i < config.rows; ++i) {
    for (int j = 0; j < config.cols; ++j) {
      double best_d2 = 0.0;
      int best_label = 0;
      double intensity = 0.0;
      for (int k = 0; k < config.count; ++k) {
        const double dr = i - ph.center_r[k];
        const double dc = j - ph.center_c[k];
        const double d2 = dr * dr + dc * dc;
        const double u = std::sqrt(d2) / ph.radius[k];
        const double contrib =
            config.shape == CellShape::disc
                ? (u <= 1.0 ? ph.peak[k] : 0.0)
                : ph.peak[k] * blob_profile(u);
        intensity = std::max(intensity, contrib);
        if (u <= truth_scale && (best_label == 0 || d2 < best_d2)) {
          best_d2 = d2;
          best_label = k + 1;
        }
      }
      ph.image(i, j) = std::max(config.background, intensity);
      ph.truth(i, j) = best_label;
    }
  }

  // Overlap resolution must not erase an object entirely.
  std::vector<long> area(config.count, 0);
  for (int i = 0; i < config.rows; ++i)
    for (int j = 0; j < config.cols; ++j)
      if (ph.truth(i, j)) ++area[ph.truth(i, j) - 1];
  for (long a : area)
    if (a == 0)
      throw std::runtime_error("phantom object fully occluded; use a larger canvas");
  return ph;
}

GrayImage sample_gp(int n1, int n2, const GpParams& params,
                    std::uint64_t seed) {
  if (n1 < 1 || n2 < 1) throw std::invalid_argument("lattice must be nonempty");
  if (!(params.sigma2 >= 0.0) || !(params.eta >= 0.0))
    throw std::invalid_argument("variance parameters must be nonnegative");
  const Eigen::MatrixXd R1 =
      correlation_matrix(params.kernel1, AxisGrid::integer_lattice(n1));
  const Eigen::MatrixXd R2 =
      correlation_matrix(params.kernel2, AxisGrid::integer_lattice(n2));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e1(R1), e2(R2);
  const Eigen::MatrixXd S1 =
      e1.eigenvectors() *
      e1.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  const Eigen::MatrixXd S2 =
      e2.eigenvectors() *
      e2.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  GrayImage z(n1, n2);
  for (int j = 0; j < n2; ++j)
    for (int i = 0; i < n1; ++i) z(i, j) = gauss(rng);

  const double sigma = std::sqrt(params.sigma2);
  const double sigma0 = std::sqrt(params.sigma2 * params.eta);
  GrayImage y = params.mu + (sigma * (S1 * z * S2.transpose())).array();
  for (int j = 0; j < n2; ++j)
    for (int i = 0; i < n1; ++i) y(i, j) += sigma0 * gauss(rng);
  return y;
}

}  // namespace gpseg
