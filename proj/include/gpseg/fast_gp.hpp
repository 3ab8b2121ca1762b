#pragma once

#include <optional>

#include "gpseg/kernels.hpp"
#include "gpseg/types.hpp"

namespace gpseg {

// Full parameter set of the separable lattice model
//   y ~ N(mu * 1, sigma2 * (R2 (x) R1 + eta * I)).
struct GpParams {
  KernelSpec kernel1;  // axis 1 (rows)
  KernelSpec kernel2;  // axis 2 (columns)
  double eta = 0.1;    // nugget-to-signal variance ratio
  double mu = 0.0;
  double sigma2 = 1.0;
};

// Profile likelihood evaluation at fixed (gamma1, gamma2, eta): the mean and
// signal variance are replaced by their closed-form maximizers.
struct ProfileLik {
  double loglik = 0.0;
  double mu_hat = 0.0;
  double sigma2_hat = 0.0;
  // True when the residual quadratic form vanished (constant-looking data);
  // the profile likelihood diverges and loglik is evaluated at a floored
  // residual, so downstream consumers should not trust its magnitude.
  bool degenerate = false;
};

// Eigendecomposition path: O(n1^3 + n2^3 + n1*n2*(n1+n2)) flops.
ProfileLik profile_loglik_fast(const GrayImage& y, const KernelSpec& k1,
                               const KernelSpec& k2, double eta);
ProfileLik profile_loglik_fast(const GrayImage& y, const KernelSpec& k1,
                               const KernelSpec& k2, double eta,
                               const AxisGrid& g1, const AxisGrid& g2);

// Reference implementation on the assembled N x N covariance via Cholesky.
// Only intended as an oracle and for benchmarking; refuses N > 10000.
ProfileLik profile_loglik_direct(const GrayImage& y, const KernelSpec& k1,
                                 const KernelSpec& k2, double eta);
ProfileLik profile_loglik_direct(const GrayImage& y, const KernelSpec& k1,
                                 const KernelSpec& k2, double eta,
                                 const AxisGrid& g1, const AxisGrid& g2);

struct PredictiveField {
  GrayImage mean;
  GrayImage variance;  // empty unless requested; clamped to [0, sigma2]
};

// Posterior mean (and optionally variance) of the latent field at the
// observed lattice points.
PredictiveField predict(const GrayImage& y, const GpParams& params,
                        bool want_variance = true);
PredictiveField predict(const GrayImage& y, const GpParams& params,
                        bool want_variance, const AxisGrid& g1,
                        const AxisGrid& g2);

// Dense-solve counterpart of predict(); refuses N > 10000.
PredictiveField predict_direct(const GrayImage& y, const GpParams& params,
                               bool want_variance = true);

struct FitOptions {
  int max_iterations = 500;
  double simplex_tolerance = 1e-6;
  // Number of top seed-grid points refined with Nelder-Mead.
  int refine_top = 3;
};

struct FitResult {
  GpParams params;
  double loglik = 0.0;
  bool degenerate = false;       // data indistinguishable from a constant
  bool at_bound = false;         // optimum pinned near a search bound
  double best_seed_loglik = 0.0; // highest seed-grid likelihood (diagnostic)
};

// Maximum profile likelihood over (gamma1, gamma2, eta), seeded on a
// 3 x 3 x 3 log-space grid and refined with Nelder-Mead in log coordinates.
FitResult fit_mle(const GrayImage& y, KernelFamily family,
                  const FitOptions& opts = {});
FitResult fit_mle(const GrayImage& y, KernelFamily family, const AxisGrid& g1,
                  const AxisGrid& g2, const FitOptions& opts = {});

// One-dimensional convenience wrapper (single-column data): optimizes
// (gamma, eta) only.
FitResult fit_mle_1d(const Eigen::VectorXd& y, KernelFamily family,
                     const FitOptions& opts = {});

}  // namespace gpseg
