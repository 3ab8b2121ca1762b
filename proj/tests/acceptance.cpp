// Acceptance gate: one check per release criterion, each reported as a
// single [PASS]/[FAIL] line. The process exits nonzero if any check fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gpseg/bench.hpp"
#include "gpseg/evaluation.hpp"
#include "gpseg/fast_gp.hpp"
#include "gpseg/segmentation.hpp"
#include "gpseg/synthetic.hpp"
#include "gpseg/thresholding.hpp"
#include "gpseg/tiling.hpp"

using namespace gpseg;

namespace {

double rel_scalar(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(b), 1e-6);
}

double rel_field(const GrayImage& a, const GrayImage& b) {
  const double scale = std::max(b.cwiseAbs().maxCoeff(), 1e-9);
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

// --- criterion 1: eigendecomposition path vs dense reference ---------------

bool crit_oracle_equivalence(std::string& detail) {
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    std::uniform_int_distribution<int> dim(4, 30);
    const int n1 = dim(rng);
    const int n2 = dim(rng);
    const KernelFamily family =
        k % 2 ? KernelFamily::exponential : KernelFamily::matern52;
    std::uniform_real_distribution<double> g1(0.5, static_cast<double>(n1));
    std::uniform_real_distribution<double> g2(0.5, static_cast<double>(n2));
    std::uniform_real_distribution<double> le(std::log(1e-3), std::log(10.0));
    const KernelSpec k1{family, g1(rng)};
    const KernelSpec k2{family, g2(rng)};
    const double eta = std::exp(le(rng));
    GrayImage y(n1, n2);
    for (int j = 0; j < n2; ++j)
      for (int i = 0; i < n1; ++i) y(i, j) = 0.3 + gauss(rng);

    const ProfileLik fast = profile_loglik_fast(y, k1, k2, eta);
    const ProfileLik direct = profile_loglik_direct(y, k1, k2, eta);
    worst = std::max(worst, rel_scalar(fast.loglik, direct.loglik));
    worst = std::max(worst, rel_scalar(fast.mu_hat, direct.mu_hat));
    worst = std::max(worst, rel_scalar(fast.sigma2_hat, direct.sigma2_hat));

    GpParams params{k1, k2, eta, direct.mu_hat, direct.sigma2_hat};
    const PredictiveField pf = predict(y, params, true);
    const PredictiveField pd = predict_direct(y, params, true);
    worst = std::max(worst, rel_field(pf.mean, pd.mean));
    worst = std::max(worst, rel_field(pf.variance, pd.variance));
  }
  detail = "50 instances, worst relative error " + fmt(worst);
  return worst < 1e-8;
}

// --- criterion 2: likelihood evaluation scaling -----------------------------

bool crit_scaling(std::string& detail) {
  const std::vector<int> sides = {10, 20, 40, 80};
  const auto rows = run_scaling_bench(sides, KernelFamily::matern52,
                                      /*repeats=*/3, /*seed=*/7);
  std::ofstream csv("acceptance_scaling.csv");
  csv << "N,method,seconds\n";
  for (const BenchRow& r : rows) {
    csv << r.side * r.side << ",fast," << r.fast_seconds << "\n";
    if (std::isfinite(r.direct_seconds))
      csv << r.side * r.side << ",direct," << r.direct_seconds << "\n";
  }
  const BenchRow& big = rows.back();
  const double ratio = big.direct_seconds / big.fast_seconds;
  detail = "N=6400: direct " + fmt(big.direct_seconds) + "s vs fast " +
           fmt(big.fast_seconds) + "s (" + fmt(ratio) +
           "x), loglik diff " + fmt(big.max_abs_diff);
  return std::isfinite(ratio) && ratio >= 10.0 && big.max_abs_diff < 1e-6;
}

// --- criterion 3: smooth-surface denoising under heavy noise ----------------

bool crit_branin(std::string& detail) {
  const GrayImage clean = branin_field(60, 60);
  const double levels[] = {1.0, 5.0, 10.0};
  bool all_below = true;
  double worst_ratio = 0.0;
  std::vector<double> rmse_at_10;
  for (int level = 0; level < 3; ++level) {
    const double sigma0 = levels[level];
    for (int rep = 0; rep < 10; ++rep) {
      const std::uint64_t seed = 3000 + 100 * level + rep;
      const GrayImage noisy = add_noise(clean, sigma0, seed);
      const FitResult fit = fit_mle(noisy, KernelFamily::matern52);
      const GrayImage mean = predict(noisy, fit.params, false).mean;
      const double err = rmse(mean, clean);
      worst_ratio = std::max(worst_ratio, err / sigma0);
      if (err >= sigma0) all_below = false;
      if (level == 2) rmse_at_10.push_back(err);
    }
  }
  std::sort(rmse_at_10.begin(), rmse_at_10.end());
  const double median = 0.5 * (rmse_at_10[4] + rmse_at_10[5]);
  detail = "worst rmse/sigma0 " + fmt(worst_ratio) +
           ", median rmse at sigma0=10: " + fmt(median);
  return all_below && median < 5.0;
}

// --- criterion 4: diffusion profile denoising and solver check --------------

bool crit_diffusion(std::string& detail) {
  const DiffusionConfig dc;
  const GrayImage field = diffusion_field(dc);

  // Early-time profile against the closed-form half-space solution.
  const double t_save = dc.t_max / (dc.nt - 1);
  const int jt = static_cast<int>(std::lround(0.01 / t_save));
  const double t = jt * t_save;
  double solver_err = 0.0;
  for (int i = 0; i < dc.nx; ++i) {
    const double x = dc.x_max * i / (dc.nx - 1);
    if (x >= 0.5) break;
    const double analytic =
        dc.boundary_value * std::erfc(x / (2.0 * std::sqrt(dc.diffusivity * t)));
    solver_err = std::max(solver_err, std::abs(field(i, jt) - analytic));
  }

  const double levels[] = {0.05, 0.1, 0.3};
  bool all_below = true;
  double worst_ratio = 0.0;
  for (int level = 0; level < 3; ++level) {
    const double sigma0 = levels[level];
    for (int rep = 0; rep < 10; ++rep) {
      const std::uint64_t seed = 4000 + 100 * level + rep;
      const GrayImage noisy = add_noise(field, sigma0, seed);
      const FitResult fit = fit_mle(noisy, KernelFamily::matern52);
      const GrayImage mean = predict(noisy, fit.params, false).mean;
      const double err = rmse(mean, field);
      worst_ratio = std::max(worst_ratio, err / sigma0);
      if (err >= sigma0) all_below = false;
    }
  }
  detail = "solver err " + fmt(solver_err) + ", worst rmse/sigma0 " +
           fmt(worst_ratio);
  return solver_err < 0.01 && all_below;
}

// --- criterion 5: automatic threshold on bimodal phantoms -------------------

bool crit_threshold(std::string& detail) {
  int iou_ok = 0;
  int index_ok = 0;
  double min_iou = 1.0;
  const double sigmas[] = {0.05, 0.1};
  for (int s = 1; s <= 10; ++s) {
    PhantomConfig pc;
    pc.rows = 256;
    pc.cols = 256;
    pc.count = 5;
    pc.shape = CellShape::disc;
    pc.seed = static_cast<std::uint64_t>(s);
    pc.radius_min = 28.0;
    pc.radius_max = 34.0;
    pc.peak_min = 0.9;
    pc.peak_max = 0.9;
    pc.background = 0.1;
    pc.margin = 6.0;
    const Phantom ph = phantom_cells(pc);
    const BinaryMask truth = (ph.truth.array() > 0).cast<std::uint8_t>();
    for (const double sigma0 : sigmas) {
      const GrayImage noisy = add_noise(ph.image, sigma0, 200 + s);
      const DenoiseResult den =
          denoise_tiled(noisy, KernelFamily::matern52, 256, false);
      const ThresholdResult tr = threshold_field(den.mean);
      const double score = iou(tr.mask, truth);
      min_iou = std::min(min_iou, score);
      if (score >= 0.9) ++iou_ok;
      if (tr.trace.alpha_index > tr.trace.argmax_index) ++index_ok;
    }
  }
  detail = "IoU >= 0.9 in " + std::to_string(iou_ok) + "/20 (min " +
           fmt(min_iou) + "), index above peak in " +
           std::to_string(index_ok) + "/20";
  return iou_ok >= 18 && index_ok == 20;
}

// --- criterion 6: watershed split and exact distance transform --------------

bool crit_watershed(std::string& detail) {
  BinaryMask m = BinaryMask::Zero(64, 64);
  for (int j = 0; j < 64; ++j)
    for (int i = 0; i < 64; ++i)
      if (std::hypot(i - 32.0, j - 22.0) <= 12.0 ||
          std::hypot(i - 32.0, j - 42.0) <= 12.0)
        m(i, j) = 1;
  const Eigen::MatrixXd dist = distance_transform(m);
  const LabelMask labels = watershed(dist);
  const int n_labels = labels.maxCoeff();
  const bool partition = ((labels.array() > 0) == (dist.array() > 0.0)).all();
  const int left = labels(32, 22);
  const int right = labels(32, 42);
  int violations = 0;
  for (int j = 0; j < 64; ++j)
    for (int i = 0; i < 64; ++i) {
      if (!labels(i, j)) continue;
      // Equidistance line between the centers is the column midline at 32;
      // a pixel more than 1 px on the wrong side is a violation.
      if (labels(i, j) == left && j > 33) ++violations;
      if (labels(i, j) == right && j < 31) ++violations;
    }

  // Exact agreement with an all-pairs squared-distance scan.
  std::mt19937 rng(777);
  std::bernoulli_distribution coin(0.5);
  double max_diff = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    BinaryMask r(40, 40);
    for (int j = 0; j < 40; ++j)
      for (int i = 0; i < 40; ++i) r(i, j) = coin(rng) ? 1 : 0;
    const Eigen::MatrixXd got = distance_transform(r);
    for (int j = 0; j < 40; ++j)
      for (int i = 0; i < 40; ++i) {
        if (!r(i, j)) {
          max_diff = std::max(max_diff, std::abs(got(i, j)));
          continue;
        }
        long best = std::min({i + 1, 40 - i, j + 1, 40 - j});
        best *= best;
        for (int c = 0; c < 40; ++c)
          for (int q = 0; q < 40; ++q)
            if (!r(q, c)) {
              const long d2 = static_cast<long>(q - i) * (q - i) +
                              static_cast<long>(c - j) * (c - j);
              best = std::min(best, d2);
            }
        max_diff = std::max(
            max_diff,
            std::abs(got(i, j) - std::sqrt(static_cast<double>(best))));
      }
  }
  detail = std::to_string(n_labels) + " labels, " +
           std::to_string(violations) + " boundary violations, edt diff " +
           fmt(max_diff);
  return n_labels == 2 && partition && left != right && violations == 0 &&
         max_diff == 0.0;
}

// --- criterion 7: end-to-end pipeline on the standard phantom ---------------

bool crit_end_to_end(std::string& detail) {
  PhantomConfig pc;  // 256 x 256, 12 discs
  pc.seed = 1;
  const Phantom ph = phantom_cells(pc);
  const GrayImage noisy = add_noise(ph.image, 0.1, pc.seed + 90);
  PipelineConfig cfg;  // tile side 100
  const SegmentResult seg = segment_image(noisy, cfg);
  const int n_labels = seg.labels.maxCoeff();

  const MatchResult match = match_masks(ph.truth, seg.labels, 0.5);
  const double ap = average_precision(match);
  const auto curve = ap_curve(ph.truth, seg.labels);
  bool non_increasing = true;
  for (std::size_t i = 1; i < curve.size(); ++i)
    if (curve[i].second > curve[i - 1].second + 1e-12) non_increasing = false;

  detail = std::to_string(n_labels) + " labels, AP(0.5) " + fmt(ap) +
           ", curve non-increasing: " + (non_increasing ? "yes" : "no");
  return n_labels == 12 && ap == 1.0 && non_increasing;
}

// --- criterion 8: exact metric examples --------------------------------------

bool crit_metrics(std::string& detail) {
  int failed = 0;
  auto expect = [&](bool ok, const char* what) {
    if (!ok) {
      ++failed;
      if (detail.size() < 160) detail += std::string(what) + "; ";
    }
  };

  // iou
  BinaryMask a = BinaryMask::Zero(4, 4), b = BinaryMask::Zero(4, 4);
  expect(iou(a, b) == 1.0, "iou empty");
  a.block(0, 0, 2, 2).setConstant(1);
  expect(iou(a, a) == 1.0, "iou identical");
  b.block(2, 2, 2, 2).setConstant(1);
  expect(iou(a, b) == 0.0, "iou disjoint");
  BinaryMask s1 = BinaryMask::Zero(4, 4), s2 = BinaryMask::Zero(4, 4);
  s1.block(1, 1, 2, 2).setConstant(1);
  s2.block(1, 2, 2, 2).setConstant(1);
  expect(std::abs(iou(s1, s2) - 1.0 / 3.0) < 1e-15, "iou shifted");

  // rmse
  GrayImage g(3, 3);
  g << 1, 2, 3, 4, 5, 6, 7, 8, 9;
  expect(rmse(g, g) == 0.0, "rmse zero");
  expect(std::abs(rmse(GrayImage(g.array() + 0.5), g) - 0.5) < 1e-15,
         "rmse shift");

  // average precision
  LabelMask gt = LabelMask::Zero(5, 10), pred = LabelMask::Zero(5, 10);
  for (int j = 0; j < 10; ++j) gt(2, j) = 1;
  for (int j = 0; j < 7; ++j) pred(2, j) = 1;
  expect(average_precision(match_masks(gt, gt, 0.5)) == 1.0, "ap identical");
  expect(average_precision(match_masks(gt, pred, 0.8)) == 0.0, "ap high cut");
  LabelMask gt2 = LabelMask::Zero(12, 12);
  gt2.block(0, 0, 4, 4).setConstant(1);
  gt2.block(7, 7, 4, 4).setConstant(2);
  LabelMask pred2 = LabelMask::Zero(12, 12);
  pred2.block(0, 0, 4, 4).setConstant(1);
  expect(average_precision(match_masks(gt2, pred2, 0.5)) == 0.5, "ap half");
  expect(match_masks(LabelMask::Zero(3, 3), LabelMask::Zero(3, 3), 0.5).vacuous,
         "ap vacuous flag");

  // filter_small
  LabelMask l = LabelMask::Zero(30, 30);
  l.block(5, 5, 10, 10).setConstant(1);
  for (int j = 10; j < 20; ++j) l(20, j) = 2;
  expect(filter_small(l).maxCoeff() == 2, "filter keeps 10 of mean 55");
  LabelMask l2 = LabelMask::Zero(30, 30);
  l2.block(5, 5, 10, 10).setConstant(1);
  for (int j = 10; j < 18; ++j) l2(20, j) = 2;
  expect(filter_small(l2).maxCoeff() == 1, "filter drops 8 of mean 54");
  LabelMask l3 = LabelMask::Zero(30, 30);
  l3.block(5, 5, 10, 10).setConstant(1);
  for (int j = 12; j < 16; ++j) l3(0, j) = 2;
  expect(filter_small(l3).maxCoeff() == 2, "filter border rule");

  // count_curve
  GrayImage f(2, 2);
  f << 1.0, 0.5, 0.25, 0.1;
  const ThresholdTrace t = count_curve(f, 11);
  expect(t.counts(0) == 4 && t.counts(3) == 2 && t.counts(10) == 0,
         "count curve");

  if (failed == 0) detail = "all exact examples hold";
  return failed == 0;
}

}  // namespace

int main() {
  struct Entry {
    const char* name;
    bool (*fn)(std::string&);
  };
  const Entry entries[] = {
      {"fast and dense likelihood paths agree", crit_oracle_equivalence},
      {"fast evaluation is at least 10x quicker at N=6400", crit_scaling},
      {"smooth-surface denoising beats the noise floor", crit_branin},
      {"diffusion denoising and solver accuracy", crit_diffusion},
      {"automatic threshold recovers bimodal phantoms", crit_threshold},
      {"watershed splits touching discs with exact distances", crit_watershed},
      {"end-to-end segmentation of the standard phantom", crit_end_to_end},
      {"metric examples hold exactly", crit_metrics},
  };

  int failures = 0;
  int idx = 0;
  for (const Entry& e : entries) {
    ++idx;
    std::string detail;
    bool ok = false;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      ok = e.fn(detail);
    } catch (const std::exception& ex) {
      detail = std::string("exception: ") + ex.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << idx << ": "
              << e.name << " — " << detail << " [" << fmt(secs) << "s]"
              << std::endl;
    if (!ok) ++failures;
  }
  if (failures) {
    std::cout << failures << " criterion(s) failed" << std::endl;
    return 1;
  }
  std::cout << "all criteria passed" << std::endl;
  return 0;
}
