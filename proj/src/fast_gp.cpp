#include "gpseg/fast_gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "nelder_mead.hpp"

namespace gpseg {
namespace {

constexpr double kEigenFloor = 1e-12;
constexpr double kResidualFloor = 1e-300;
// Centered quadratic form this far below the uncentered one (same metric) is
// cancellation noise — the basis transform leaves O((n*eps)^2) relative
// residue on constant data, while any real variation sits many orders higher.
constexpr double kDegenerateRel = 1e-20;
constexpr int kDirectLimit = 10000;

double exact_constant(double n) {
  // Maximized Gaussian log density constant: (N/2) (log N - 1 - log 2 pi).
  return 0.5 * n * (std::log(n) - 1.0 - std::log(2.0 * std::numbers::pi));
}

void check_data(const GrayImage& y, const AxisGrid& g1, const AxisGrid& g2) {
  if (y.rows() != g1.size() || y.cols() != g2.size())
    throw std::invalid_argument("data shape does not match the grids");
  if (y.size() < 2)
    throw std::invalid_argument("need at least two lattice points");
  if (!y.allFinite()) throw std::domain_error("data contains non-finite values");
}

struct AxisEigen {
  Eigen::MatrixXd U;
  Eigen::VectorXd lambda;
};

AxisEigen axis_eigen(const KernelSpec& spec, const AxisGrid& grid) {
  const Eigen::MatrixXd R = correlation_matrix(spec, grid);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(R);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("axis eigendecomposition failed");
  return {es.eigenvectors(), es.eigenvalues().cwiseMax(kEigenFloor)};
}

struct FastCore {
  Eigen::MatrixXd D;    // lambda1 lambda2^T + eta
  Eigen::MatrixXd Y0;   // U1^T y U2
  Eigen::VectorXd u1;   // U1^T 1
  Eigen::VectorXd u2;   // U2^T 1
  double mu_hat = 0.0;
  double s2 = 0.0;      // residual quadratic form at mu_hat
  double logdet = 0.0;
  bool floored = false;
};

FastCore fast_core(const GrayImage& y, const AxisEigen& e1, const AxisEigen& e2,
                   double eta) {
  if (!(eta >= 0.0)) throw std::domain_error("eta must be nonnegative");
  FastCore c;
  c.D = e1.lambda * e2.lambda.transpose();
  c.D.array() += eta;
  c.Y0 = e1.U.transpose() * y * e2.U;
  c.u1 = e1.U.colwise().sum().transpose();
  c.u2 = e2.U.colwise().sum().transpose();

  const Eigen::MatrixXd invD = c.D.cwiseInverse();
  const double num = c.u1.dot((c.Y0.cwiseProduct(invD)) * c.u2);
  const double den =
      c.u1.array().square().matrix().dot(invD * c.u2.array().square().matrix());
  c.mu_hat = num / den;

  const Eigen::MatrixXd resid = c.Y0 - c.mu_hat * (c.u1 * c.u2.transpose());
  c.s2 = (resid.array().square() * invD.array()).sum();
  c.logdet = c.D.array().log().sum();
  const double scale = (c.Y0.array().square() * invD.array()).sum();
  if (!(c.s2 > std::max(kResidualFloor, kDegenerateRel * scale))) {
    c.s2 = kResidualFloor;
    c.floored = true;
  }
  return c;
}

ProfileLik profile_from_core(const FastCore& c, double n) {
  ProfileLik out;
  out.mu_hat = c.mu_hat;
  out.sigma2_hat = c.s2 / n;
  out.degenerate = c.floored;
  out.loglik = exact_constant(n) - 0.5 * c.logdet - 0.5 * n * std::log(c.s2);
  return out;
}

// Column-major Kronecker covariance R2 (x) R1 + eta I, assembled in place.
Eigen::MatrixXd assemble_covariance(const Eigen::MatrixXd& R1,
                                    const Eigen::MatrixXd& R2, double eta) {
  const int n1 = static_cast<int>(R1.rows());
  const int n2 = static_cast<int>(R2.rows());
  const int n = n1 * n2;
  Eigen::MatrixXd Rt(n, n);
  for (int j2 = 0; j2 < n2; ++j2)
    for (int i2 = 0; i2 < n2; ++i2)
      Rt.block(i2 * n1, j2 * n1, n1, n1) = R2(i2, j2) * R1;
  Rt.diagonal().array() += eta;
  return Rt;
}

ProfileLik profile_direct_impl(const GrayImage& y, const KernelSpec& k1,
                               const KernelSpec& k2, double eta,
                               const AxisGrid& g1, const AxisGrid& g2) {
  check_data(y, g1, g2);
  const int n = static_cast<int>(y.size());
  if (n > kDirectLimit)
    throw std::invalid_argument("direct likelihood limited to 10000 points");
  if (!(eta >= 0.0)) throw std::domain_error("eta must be nonnegative");

  Eigen::MatrixXd Rt = assemble_covariance(correlation_matrix(k1, g1),
                                           correlation_matrix(k2, g2), eta);
  Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(Rt);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("covariance is not positive definite");

  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd a = llt.solve(ones);
  const Eigen::VectorXd b = llt.solve(yv);

  ProfileLik out;
  out.mu_hat = yv.dot(a) / ones.dot(a);
  const Eigen::VectorXd r = yv - out.mu_hat * ones;
  double s2 = r.dot(llt.solve(r));
  const double scale = yv.dot(b);
  if (!(s2 > std::max(kResidualFloor, kDegenerateRel * scale))) {
    s2 = kResidualFloor;
    out.degenerate = true;
  }
  out.sigma2_hat = s2 / n;
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  out.loglik = exact_constant(n) - 0.5 * logdet - 0.5 * n * std::log(s2);
  return out;
}

}  // namespace

ProfileLik profile_loglik_fast(const GrayImage& y, const KernelSpec& k1,
                               const KernelSpec& k2, double eta,
                               const AxisGrid& g1, const AxisGrid& g2) {
  check_data(y, g1, g2);
  const AxisEigen e1 = axis_eigen(k1, g1);
  const AxisEigen e2 = axis_eigen(k2, g2);
  return profile_from_core(fast_core(y, e1, e2, eta),
                           static_cast<double>(y.size()));
}

ProfileLik profile_loglik_fast(const GrayImage& y, const KernelSpec& k1,
                               const KernelSpec& k2, double eta) {
  return profile_loglik_fast(y, k1, k2, eta,
                             AxisGrid::integer_lattice(static_cast<int>(y.rows())),
                             AxisGrid::integer_lattice(static_cast<int>(y.cols())));
}

ProfileLik profile_loglik_direct(const GrayImage& y, const KernelSpec& k1,
                                 const KernelSpec& k2, double eta,
                                 const AxisGrid& g1, const AxisGrid& g2) {
  return profile_direct_impl(y, k1, k2, eta, g1, g2);
}

ProfileLik profile_loglik_direct(const GrayImage& y, const KernelSpec& k1,
                                 const KernelSpec& k2, double eta) {
  return profile_direct_impl(
      y, k1, k2, eta, AxisGrid::integer_lattice(static_cast<int>(y.rows())),
      AxisGrid::integer_lattice(static_cast<int>(y.cols())));
}

PredictiveField predict(const GrayImage& y, const GpParams& params,
                        bool want_variance, const AxisGrid& g1,
                        const AxisGrid& g2) {
  check_data(y, g1, g2);
  if (!(params.eta >= 0.0)) throw std::domain_error("eta must be nonnegative");
  if (!(params.sigma2 >= 0.0))
    throw std::domain_error("sigma2 must be nonnegative");
  const AxisEigen e1 = axis_eigen(params.kernel1, g1);
  const AxisEigen e2 = axis_eigen(params.kernel2, g2);

  Eigen::MatrixXd D = e1.lambda * e2.lambda.transpose();
  D.array() += params.eta;
  const Eigen::VectorXd u1 = e1.U.colwise().sum().transpose();
  const Eigen::VectorXd u2 = e2.U.colwise().sum().transpose();
  const Eigen::MatrixXd Yt = e1.U.transpose() * y * e2.U -
                             params.mu * (u1 * u2.transpose());
  const Eigen::MatrixXd W = Yt.cwiseQuotient(D);

  PredictiveField out;
  out.mean = e1.U * (e1.lambda.asDiagonal() * W * e2.lambda.asDiagonal()) *
                 e2.U.transpose();
  out.mean.array() += params.mu;

  if (want_variance) {
    const Eigen::MatrixXd A1 =
        (e1.U * e1.lambda.asDiagonal()).array().square().matrix();
    const Eigen::MatrixXd A2 =
        (e2.U * e2.lambda.asDiagonal()).array().square().matrix();
    Eigen::MatrixXd cs = -(A1 * D.cwiseInverse() * A2.transpose());
    cs.array() += 1.0;
    out.variance =
        params.sigma2 * cs.cwiseMax(0.0).cwiseMin(1.0);
  }
  return out;
}

PredictiveField predict(const GrayImage& y, const GpParams& params,
                        bool want_variance) {
  return predict(y, params, want_variance,
                 AxisGrid::integer_lattice(static_cast<int>(y.rows())),
                 AxisGrid::integer_lattice(static_cast<int>(y.cols())));
}

PredictiveField predict_direct(const GrayImage& y, const GpParams& params,
                               bool want_variance) {
  const int n1 = static_cast<int>(y.rows());
  const int n2 = static_cast<int>(y.cols());
  const int n = n1 * n2;
  if (n > kDirectLimit)
    throw std::invalid_argument("direct prediction limited to 10000 points");
  const AxisGrid g1 = AxisGrid::integer_lattice(n1);
  const AxisGrid g2 = AxisGrid::integer_lattice(n2);
  check_data(y, g1, g2);

  const Eigen::MatrixXd R1 = correlation_matrix(params.kernel1, g1);
  const Eigen::MatrixXd R2 = correlation_matrix(params.kernel2, g2);
  const Eigen::MatrixXd R = assemble_covariance(R1, R2, 0.0);
  Eigen::MatrixXd Rt = R;
  Rt.diagonal().array() += params.eta;
  const Eigen::LLT<Eigen::MatrixXd> llt(Rt);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("covariance is not positive definite");

  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
  const Eigen::VectorXd r = yv.array() - params.mu;
  const Eigen::VectorXd mean = params.mu + (R * llt.solve(r)).array();

  PredictiveField out;
  out.mean = Eigen::Map<const Eigen::MatrixXd>(mean.data(), n1, n2);
  if (want_variance) {
    const Eigen::MatrixXd X = llt.solve(R);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) {
      const double c = 1.0 - R.col(i).dot(X.col(i));
      v(i) = params.sigma2 * std::clamp(c, 0.0, 1.0);
    }
    out.variance = Eigen::Map<const Eigen::MatrixXd>(v.data(), n1, n2);
  }
  return out;
}

namespace {

struct SeedPoint {
  Eigen::VectorXd x;  // active log parameters
  double loglik = -std::numeric_limits<double>::infinity();
};

FitResult fit_impl(const GrayImage& y, KernelFamily family, const AxisGrid& g1,
                   const AxisGrid& g2, const FitOptions& opts) {
  check_data(y, g1, g2);
  const int n1 = g1.size();
  const int n2 = g2.size();
  const double n = static_cast<double>(y.size());

  // Only axes with more than one point have an identifiable range.
  const bool active1 = n1 >= 2;
  const bool active2 = n2 >= 2;
  const int dim = (active1 ? 1 : 0) + (active2 ? 1 : 0) + 1;

  const double span1 = active1 ? g1.coords(n1 - 1) - g1.coords(0) + 1.0 : 1.0;
  const double span2 = active2 ? g2.coords(n2 - 1) - g2.coords(0) + 1.0 : 1.0;

  const double lo_gamma = std::log(1e-2);
  const double hi_gamma1 = std::log(10.0 * span1);
  const double hi_gamma2 = std::log(10.0 * span2);
  const double lo_eta = std::log(1e-8);
  const double hi_eta = std::log(1e4);

  // Pack/unpack between the active optimization vector and full parameters.
  auto unpack = [&](const Eigen::VectorXd& x, double& gamma1, double& gamma2,
                    double& eta) {
    int k = 0;
    gamma1 = active1 ? std::exp(x(k++)) : 1.0;
    gamma2 = active2 ? std::exp(x(k++)) : 1.0;
    eta = std::exp(x(k));
  };

  // Returns -inf outside the search box and for degenerate evaluations, so
  // the optimizer never chases a floored residual.
  auto evaluate = [&](const Eigen::VectorXd& x) -> double {
    int k = 0;
    if (active1 && (x(k) < lo_gamma || x(k) > hi_gamma1))
      return -std::numeric_limits<double>::infinity();
    if (active1) ++k;
    if (active2 && (x(k) < lo_gamma || x(k) > hi_gamma2))
      return -std::numeric_limits<double>::infinity();
    if (active2) ++k;
    if (x(k) < lo_eta || x(k) > hi_eta)
      return -std::numeric_limits<double>::infinity();
    double gamma1, gamma2, eta;
    unpack(x, gamma1, gamma2, eta);
    const ProfileLik p = profile_loglik_fast(
        y, {family, gamma1}, {family, gamma2}, eta, g1, g2);
    if (p.degenerate || !std::isfinite(p.loglik))
      return -std::numeric_limits<double>::infinity();
    return p.loglik;
  };

  // Log-space seed grid.
  const std::vector<double> gamma_fracs = {1.0 / 20.0, 1.0 / 5.0, 1.0 / 2.0};
  const std::vector<double> etas = {0.01, 0.1, 1.0};
  std::vector<SeedPoint> seeds;
  auto push_seed = [&](double gamma1, double gamma2, double eta) {
    Eigen::VectorXd x(dim);
    int k = 0;
    if (active1) x(k++) = std::log(gamma1);
    if (active2) x(k++) = std::log(gamma2);
    x(k) = std::log(eta);
    seeds.push_back({x, evaluate(x)});
  };
  if (active1 && active2) {
    for (double f1 : gamma_fracs)
      for (double f2 : gamma_fracs)
        for (double eta : etas) push_seed(f1 * span1, f2 * span2, eta);
  } else {
    const double span = active1 ? span1 : span2;
    for (double f : gamma_fracs)
      for (double eta : etas)
        push_seed(active1 ? f * span : 1.0, active2 ? f * span : 1.0, eta);
  }

  std::stable_sort(seeds.begin(), seeds.end(),
                   [](const SeedPoint& a, const SeedPoint& b) {
                     return a.loglik > b.loglik;
                   });

  FitResult res;
  res.best_seed_loglik = seeds.front().loglik;

  if (!std::isfinite(seeds.front().loglik)) {
    // Constant-looking data everywhere on the grid: report the degenerate fit.
    double gamma1, gamma2, eta;
    unpack(seeds.front().x, gamma1, gamma2, eta);
    const ProfileLik p = profile_loglik_fast(
        y, {family, gamma1}, {family, gamma2}, eta, g1, g2);
    res.params = {{family, gamma1}, {family, gamma2}, eta, p.mu_hat,
                  p.sigma2_hat};
    res.loglik = p.loglik;
    res.degenerate = true;
    return res;
  }

  int refine = std::max(1, opts.refine_top);
  if (n >= 25000.0) refine = std::min(refine, 2);
  refine = std::min<int>(refine, static_cast<int>(seeds.size()));

  Eigen::VectorXd best_x = seeds.front().x;
  double best_ll = seeds.front().loglik;
  for (int s = 0; s < refine; ++s) {
    if (!std::isfinite(seeds[s].loglik)) break;
    const auto nm = detail::nelder_mead(
        [&](const Eigen::VectorXd& x) { return -evaluate(x); }, seeds[s].x,
        0.5, opts.simplex_tolerance, opts.max_iterations);
    if (std::isfinite(nm.fmin) && -nm.fmin > best_ll) {
      best_ll = -nm.fmin;
      best_x = nm.x;
    }
  }

  double gamma1, gamma2, eta;
  unpack(best_x, gamma1, gamma2, eta);
  const ProfileLik p = profile_loglik_fast(y, {family, gamma1},
                                           {family, gamma2}, eta, g1, g2);
  res.params = {{family, gamma1}, {family, gamma2}, eta, p.mu_hat,
                p.sigma2_hat};
  res.loglik = p.loglik;
  res.degenerate = p.degenerate;

  const double edge = 1e-3;
  int k = 0;
  if (active1) {
    res.at_bound |= best_x(k) < lo_gamma + edge || best_x(k) > hi_gamma1 - edge;
    ++k;
  }
  if (active2) {
    res.at_bound |= best_x(k) < lo_gamma + edge || best_x(k) > hi_gamma2 - edge;
    ++k;
  }
  res.at_bound |= best_x(k) < lo_eta + edge || best_x(k) > hi_eta - edge;
  return res;
}

}  // namespace

FitResult fit_mle(const GrayImage& y, KernelFamily family, const AxisGrid& g1,
                  const AxisGrid& g2, const FitOptions& opts) {
  return fit_impl(y, family, g1, g2, opts);
}

FitResult fit_mle(const GrayImage& y, KernelFamily family,
                  const FitOptions& opts) {
  return fit_impl(y, family,
                  AxisGrid::integer_lattice(static_cast<int>(y.rows())),
                  AxisGrid::integer_lattice(static_cast<int>(y.cols())), opts);
}

FitResult fit_mle_1d(const Eigen::VectorXd& y, KernelFamily family,
                     const FitOptions& opts) {
  const GrayImage ym = y;
  return fit_impl(ym, family,
                  AxisGrid::integer_lattice(static_cast<int>(y.size())),
                  AxisGrid::integer_lattice(1), opts);
}

}  // namespace gpseg
