#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gpseg/evaluation.hpp"
#include "gpseg/fast_gp.hpp"
#include "gpseg/kernels.hpp"
#include "gpseg/segmentation.hpp"
#include "gpseg/synthetic.hpp"
#include "gpseg/thresholding.hpp"
#include "gpseg/tiling.hpp"

namespace py = pybind11;
using namespace gpseg;

namespace {

KernelSpec make_spec(const std::string& family, double range) {
  return {kernel_family_from_string(family), range};
}

GpParams make_params(const std::string& family, double gamma1, double gamma2,
                     double eta) {
  GpParams p;
  p.kernel1 = make_spec(family, gamma1);
  p.kernel2 = make_spec(family, gamma2);
  p.eta = eta;
  return p;
}

py::dict loglik_dict(const ProfileLik& r) {
  py::dict d;
  d["loglik"] = r.loglik;
  d["mu_hat"] = r.mu_hat;
  d["sigma2_hat"] = r.sigma2_hat;
  d["degenerate"] = r.degenerate;
  return d;
}

py::dict trace_dict(const ThresholdTrace& t) {
  py::dict d;
  d["alphas"] = t.alphas;
  d["counts"] = t.counts;
  d["diffs"] = t.diffs;
  d["smoothed"] = t.smoothed;
  d["tau"] = t.tau;
  d["argmax_index"] = t.argmax_index;
  d["alpha_index"] = t.alpha_index;
  d["alpha_star"] = t.alpha_star;
  d["all_background"] = t.all_background;
  d["fallback"] = t.fallback;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Fast Gaussian-process denoising and segmentation for lattice images";

  m.def(
      "kernel_eval",
      [](const std::string& family, double range, double d) {
        return kernel_eval(make_spec(family, range), d);
      },
      py::arg("family"), py::arg("range"), py::arg("d"));

  m.def(
      "correlation_matrix",
      [](const std::string& family, double range, const Eigen::VectorXd& x) {
        return correlation_matrix(make_spec(family, range), AxisGrid{x});
      },
      py::arg("family"), py::arg("range"), py::arg("coords"));

  m.def(
      "profile_loglik_fast",
      [](const GrayImage& y, const std::string& family, double gamma1,
         double gamma2, double eta) {
        return loglik_dict(profile_loglik_fast(
            y, make_spec(family, gamma1), make_spec(family, gamma2), eta));
      },
      py::arg("y"), py::arg("family"), py::arg("gamma1"), py::arg("gamma2"),
      py::arg("eta"));

  m.def(
      "profile_loglik_direct",
      [](const GrayImage& y, const std::string& family, double gamma1,
         double gamma2, double eta) {
        return loglik_dict(profile_loglik_direct(
            y, make_spec(family, gamma1), make_spec(family, gamma2), eta));
      },
      py::arg("y"), py::arg("family"), py::arg("gamma1"), py::arg("gamma2"),
      py::arg("eta"));

  m.def(
      "fit_mle",
      [](const GrayImage& y, const std::string& family) {
        const FitResult r = fit_mle(y, kernel_family_from_string(family));
        py::dict d;
        d["gamma1"] = r.params.kernel1.range;
        d["gamma2"] = r.params.kernel2.range;
        d["eta"] = r.params.eta;
        d["mu"] = r.params.mu;
        d["sigma2"] = r.params.sigma2;
        d["loglik"] = r.loglik;
        d["degenerate"] = r.degenerate;
        d["at_bound"] = r.at_bound;
        return d;
      },
      py::arg("y"), py::arg("family") = "matern52");

  m.def(
      "predict",
      [](const GrayImage& y, const std::string& family, double gamma1,
         double gamma2, double eta) {
        const GpParams base = make_params(family, gamma1, gamma2, eta);
        const ProfileLik prof = profile_loglik_fast(
            y, base.kernel1, base.kernel2, base.eta);
        GpParams p = base;
        p.mu = prof.mu_hat;
        p.sigma2 = prof.sigma2_hat;
        const PredictiveField f = predict(y, p);
        return py::make_tuple(f.mean, f.variance);
      },
      py::arg("y"), py::arg("family"), py::arg("gamma1"), py::arg("gamma2"),
      py::arg("eta"));

  m.def(
      "denoise_tiled",
      [](const GrayImage& y, const std::string& family, int tile_side) {
        const DenoiseResult r =
            denoise_tiled(y, kernel_family_from_string(family), tile_side);
        py::dict d;
        d["mean"] = r.mean;
        d["variance"] = r.variance;
        d["gamma1"] = r.shared.kernel1.range;
        d["gamma2"] = r.shared.kernel2.range;
        d["eta"] = r.shared.eta;
        d["calibration_tile"] = r.calibration_tile;
        return d;
      },
      py::arg("y"), py::arg("family") = "matern52", py::arg("tile_side") = 100);

  m.def(
      "threshold_field",
      [](const GrayImage& field, int grid_size, double stabilization) {
        const ThresholdResult r =
            threshold_field(field, grid_size, stabilization);
        return py::make_tuple(r.mask, trace_dict(r.trace));
      },
      py::arg("field"), py::arg("grid_size") = 100,
      py::arg("stabilization") = 0.05);

  m.def("binarize", &binarize, py::arg("field"), py::arg("alpha"));
  m.def("connected_components", &connected_components, py::arg("mask"));
  m.def("distance_transform", &distance_transform, py::arg("mask"));
  m.def("watershed", &watershed, py::arg("distance"),
        py::arg("merge_tolerance") = 1.0);
  m.def(
      "filter_small",
      [](const LabelMask& labels, double interior_frac, double boundary_frac) {
        return filter_small(labels, interior_frac, boundary_frac);
      },
      py::arg("labels"), py::arg("interior_frac") = 0.15,
      py::arg("boundary_frac") = 0.05);

  m.def(
      "segment_image",
      [](const GrayImage& y, const std::string& family, int tile_side,
         int alpha_grid, double stabilization, double merge_tolerance) {
        PipelineConfig cfg;
        cfg.kernel = kernel_family_from_string(family);
        cfg.tile_side = tile_side;
        cfg.alpha_grid_size = alpha_grid;
        cfg.stabilization = stabilization;
        cfg.merge_tolerance = merge_tolerance;
        const SegmentResult r = segment_image(y, cfg);
        py::dict d;
        d["labels"] = r.labels;
        d["binary"] = r.binary;
        d["mean"] = r.denoised.mean;
        d["gamma1"] = r.denoised.shared.kernel1.range;
        d["gamma2"] = r.denoised.shared.kernel2.range;
        d["eta"] = r.denoised.shared.eta;
        return d;
      },
      py::arg("y"), py::arg("family") = "matern52", py::arg("tile_side") = 100,
      py::arg("alpha_grid") = 100, py::arg("stabilization") = 0.05,
      py::arg("merge_tolerance") = 1.0);

  m.def(
      "branin_field",
      [](int rows, int cols) { return branin_field(rows, cols); },
      py::arg("rows"), py::arg("cols"));

  m.def(
      "diffusion_field",
      [](double diffusivity, int nx, int nt, double x_max, double t_max) {
        DiffusionConfig c;
        c.diffusivity = diffusivity;
        c.nx = nx;
        c.nt = nt;
        c.x_max = x_max;
        c.t_max = t_max;
        return diffusion_field(c);
      },
      py::arg("diffusivity") = 1.0, py::arg("nx") = 200, py::arg("nt") = 200,
      py::arg("x_max") = 1.0, py::arg("t_max") = 0.2);

  m.def("add_noise", &add_noise, py::arg("field"), py::arg("sigma"),
        py::arg("seed"));

  m.def(
      "phantom_cells",
      [](int rows, int cols, int count, const std::string& shape,
         std::uint64_t seed, bool allow_overlap, double radius_min,
         double radius_max, double peak_min, double peak_max,
         double background, double margin) {
        PhantomConfig c;
        c.rows = rows;
        c.cols = cols;
        c.count = count;
        c.shape = shape == "blob" ? CellShape::blob : CellShape::disc;
        c.seed = seed;
        c.allow_overlap = allow_overlap;
        c.radius_min = radius_min;
        c.radius_max = radius_max;
        c.peak_min = peak_min;
        c.peak_max = peak_max;
        c.background = background;
        c.margin = margin;
        const Phantom p = phantom_cells(c);
        py::dict d;
        d["image"] = p.image;
        d["truth"] = p.truth;
        d["center_r"] = p.center_r;
        d["center_c"] = p.center_c;
        d["radius"] = p.radius;
        d["peak"] = p.peak;
        return d;
      },
      py::arg("rows") = 256, py::arg("cols") = 256, py::arg("count") = 12,
      py::arg("shape") = "disc", py::arg("seed") = 1,
      py::arg("allow_overlap") = false, py::arg("radius_min") = 8.0,
      py::arg("radius_max") = 14.0, py::arg("peak_min") = 0.7,
      py::arg("peak_max") = 1.0, py::arg("background") = 0.1,
      py::arg("margin") = 3.0);

  m.def(
      "sample_gp",
      [](int rows, int cols, const std::string& family, double gamma1,
         double gamma2, double eta, std::uint64_t seed) {
        return sample_gp(rows, cols, make_params(family, gamma1, gamma2, eta),
                         seed);
      },
      py::arg("rows"), py::arg("cols"), py::arg("family"), py::arg("gamma1"),
      py::arg("gamma2"), py::arg("eta"), py::arg("seed"));

  m.def("rmse", &rmse, py::arg("estimate"), py::arg("truth"));
  m.def("iou", &iou, py::arg("a"), py::arg("b"));

  m.def(
      "match_masks",
      [](const LabelMask& gt, const LabelMask& pred, double alpha) {
        const MatchResult r = match_masks(gt, pred, alpha);
        py::dict d;
        d["alpha"] = r.alpha;
        d["tp"] = r.tp;
        d["fp"] = r.fp;
        d["fn"] = r.fn;
        d["vacuous"] = r.vacuous;
        py::list pairs;
        for (const MatchPair& p : r.pairs)
          pairs.append(py::make_tuple(p.gt_label, p.pred_label, p.iou));
        d["pairs"] = pairs;
        return d;
      },
      py::arg("gt"), py::arg("pred"), py::arg("alpha") = 0.5);

  m.def(
      "average_precision",
      [](const LabelMask& gt, const LabelMask& pred, double alpha) {
        return average_precision(match_masks(gt, pred, alpha));
      },
      py::arg("gt"), py::arg("pred"), py::arg("alpha") = 0.5);

  m.def(
      "ap_curve",
      [](const LabelMask& gt, const LabelMask& pred,
         const std::vector<double>& alphas) {
        const auto pts =
            alphas.empty() ? ap_curve(gt, pred) : ap_curve(gt, pred, alphas);
        py::list out;
        for (const auto& [a, ap] : pts) out.append(py::make_tuple(a, ap));
        return out;
      },
      py::arg("gt"), py::arg("pred"),
      py::arg("alphas") = std::vector<double>{});
}
