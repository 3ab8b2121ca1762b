#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gpseg/bench.hpp"
#include "gpseg/config.hpp"
#include "gpseg/evaluation.hpp"
#include "gpseg/io.hpp"
#include "gpseg/segmentation.hpp"
#include "gpseg/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

// Tracks files written by a command so a failure leaves no partial output.
class OutputTracker {
 public:
  std::string claim(const fs::path& path) {
    paths_.push_back(path);
    return path.string();
  }
  void keep() { paths_.clear(); }
  ~OutputTracker() {
    for (const fs::path& p : paths_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }
  const std::vector<fs::path>& paths() const { return paths_; }

 private:
  std::vector<fs::path> paths_;
};

void write_json_log(const std::string& log_path, const std::string& command,
                    const nlohmann::json& options,
                    const std::vector<fs::path>& outputs) {
  if (log_path.empty()) return;
  nlohmann::json j;
  j["command"] = command;
  j["options"] = options;
  j["outputs"] = nlohmann::json::array();
  for (const fs::path& p : outputs) j["outputs"].push_back(p.string());
  gpseg::write_text_file(log_path, j.dump(2) + "\n");
}

struct CommonFlags {
  std::string config_path;
  std::map<std::string, std::string> overrides;
  std::string json_log;
};

// Hooks the shared pipeline-config flags onto a subcommand; flag values land
// in `overrides` only when actually passed, preserving precedence.
void add_config_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path,
                  "key=value config file (flags win over file entries)");
  cmd->add_option("--json-log", flags.json_log,
                  "write a JSON run log to this path");
  auto passthrough = [&flags](const std::string& key) {
    return [&flags, key](const std::string& value) {
      flags.overrides[key] = value;
    };
  };
  cmd->add_option_function<std::string>(
         "--kernel", passthrough("kernel"), "kernel family")
      ->check(CLI::IsMember({"matern52", "exp"}));
  cmd->add_option_function<std::string>("--tile-side",
                                        passthrough("tile-side"),
                                        "target tile side in pixels");
  cmd->add_option_function<std::string>("--alpha-grid",
                                        passthrough("alpha-grid"),
                                        "threshold grid size M");
  cmd->add_option_function<std::string>("--seed", passthrough("seed"),
                                        "generator seed");
}

gpseg::PipelineConfig build_config(const CommonFlags& flags) {
  std::map<std::string, std::string> file_entries;
  if (!flags.config_path.empty())
    file_entries = gpseg::parse_config_file(flags.config_path);
  return gpseg::resolve_config(file_entries, flags.overrides);
}

nlohmann::json config_to_json(const gpseg::PipelineConfig& c) {
  return {{"kernel", gpseg::to_string(c.kernel)},
          {"tile_side", c.tile_side},
          {"alpha_grid", c.alpha_grid_size},
          {"stabilization", c.stabilization},
          {"interior_frac", c.interior_min_frac},
          {"boundary_frac", c.boundary_min_frac},
          {"merge_tolerance", c.merge_tolerance},
          {"rethreshold_factor", c.rethreshold_factor},
          {"seed", c.seed}};
}

std::string matrix_to_csv(const Eigen::MatrixXd& m) {
  std::ostringstream os;
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << gpseg::format_full(m(i, j));
    }
    os << '\n';
  }
  return os.str();
}

Eigen::MatrixXd csv_to_matrix(const std::string& path) {
  std::istringstream in(gpseg::read_text_file(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error("ragged CSV: " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("empty CSV: " + path);
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
  return m;
}

int run_denoise(const std::string& input, const std::string& output_dir,
                const CommonFlags& flags) {
  const gpseg::PipelineConfig cfg = build_config(flags);
  const gpseg::GrayImage y = gpseg::load_image(input);
  const gpseg::DenoiseResult den =
      gpseg::denoise_tiled(y, cfg.kernel, cfg.tile_side);

  fs::create_directories(output_dir);
  OutputTracker tracker;
  gpseg::save_image(den.mean, tracker.claim(fs::path(output_dir) / "mean.png"));
  const double vmax = den.variance.size() ? den.variance.maxCoeff() : 0.0;
  gpseg::GrayImage vscaled = den.variance;
  if (vmax > 0.0) vscaled /= vmax;
  gpseg::save_image(vscaled,
                    tracker.claim(fs::path(output_dir) / "variance.png"));

  nlohmann::json j;
  j["config"] = config_to_json(cfg);
  j["shared"] = {{"gamma1", den.shared.kernel1.range},
                 {"gamma2", den.shared.kernel2.range},
                 {"eta", den.shared.eta}};
  j["calibration_tile"] = den.calibration_tile;
  j["fit_at_bound"] = den.fit_at_bound;
  j["variance_scale"] = vmax;  // variance.png is normalized by this
  j["layout"] = nlohmann::json::parse(gpseg::layout_to_json(den.layout));
  j["tiles"] = nlohmann::json::array();
  for (const gpseg::TileFit& tf : den.tile_fits)
    j["tiles"].push_back({{"mu", tf.mu},
                          {"sigma2", tf.sigma2},
                          {"degenerate", tf.degenerate}});
  gpseg::write_text_file(tracker.claim(fs::path(output_dir) / "denoise.json"),
                         j.dump(2) + "\n");
  write_json_log(flags.json_log, "denoise",
                 {{"input", input}, {"output_dir", output_dir}},
                 tracker.paths());
  tracker.keep();
  return 0;
}

int run_segment(const std::string& input, const std::string& output_dir,
                const CommonFlags& flags) {
  const gpseg::PipelineConfig cfg = build_config(flags);
  const gpseg::GrayImage y = gpseg::load_image(input);
  const gpseg::SegmentResult seg = gpseg::segment_image(y, cfg);

  fs::create_directories(output_dir);
  OutputTracker tracker;
  gpseg::save_label_mask(seg.labels,
                         tracker.claim(fs::path(output_dir) / "labels.png"));
  gpseg::LabelMask binary = seg.binary.cast<int>();
  gpseg::save_label_mask(binary,
                         tracker.claim(fs::path(output_dir) / "binary.png"));
  gpseg::save_image(seg.denoised.mean,
                    tracker.claim(fs::path(output_dir) / "mean.png"));
  gpseg::write_text_file(
      tracker.claim(fs::path(output_dir) / "objects.json"),
      gpseg::objects_to_json(seg.labels) + "\n");
  gpseg::write_text_file(tracker.claim(fs::path(output_dir) / "layout.json"),
                         gpseg::layout_to_json(seg.denoised.layout) + "\n");
  for (std::size_t k = 0; k < seg.traces.size(); ++k) {
    const std::string name = "trace_tile_" + std::to_string(k) + ".csv";
    gpseg::write_text_file(tracker.claim(fs::path(output_dir) / name),
                           gpseg::trace_to_csv(seg.traces[k]));
  }

  nlohmann::json j;
  j["config"] = config_to_json(cfg);
  j["shared"] = {{"gamma1", seg.denoised.shared.kernel1.range},
                 {"gamma2", seg.denoised.shared.kernel2.range},
                 {"eta", seg.denoised.shared.eta}};
  j["label_count"] = seg.labels.size() ? seg.labels.maxCoeff() : 0;
  j["tiles"] = nlohmann::json::array();
  for (std::size_t k = 0; k < seg.traces.size(); ++k)
    j["tiles"].push_back(
        {{"alpha_star", seg.traces[k].alpha_star},
         {"alpha_index", seg.traces[k].alpha_index},
         {"argmax_index", seg.traces[k].argmax_index},
         {"all_background", seg.traces[k].all_background},
         {"fallback", seg.traces[k].fallback},
         {"rethresholded", static_cast<bool>(seg.rethresholded[k])}});
  gpseg::write_text_file(tracker.claim(fs::path(output_dir) / "segment.json"),
                         j.dump(2) + "\n");
  write_json_log(flags.json_log, "segment",
                 {{"input", input}, {"output_dir", output_dir}},
                 tracker.paths());
  tracker.keep();
  return 0;
}

int run_eval(const std::string& gt_path, const std::string& pred_path,
             const std::string& est_path, const std::string& truth_path,
             const std::string& output_dir, const std::string& json_log) {
  if (gt_path.empty() != pred_path.empty())
    throw std::runtime_error("--gt and --pred must be given together");
  if (est_path.empty() != truth_path.empty())
    throw std::runtime_error("--est and --truth must be given together");
  if (gt_path.empty() && est_path.empty())
    throw std::runtime_error("nothing to evaluate: give --gt/--pred and/or --est/--truth");

  fs::create_directories(output_dir);
  OutputTracker tracker;
  if (!gt_path.empty()) {
    const gpseg::LabelMask gt = gpseg::load_label_mask(gt_path);
    const gpseg::LabelMask pred = gpseg::load_label_mask(pred_path);
    std::ostringstream os;
    os << "image,alpha,TP,FP,FN,AP\n";
    const std::string name = fs::path(pred_path).filename().string();
    for (double alpha : {0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8}) {
      const gpseg::MatchResult m = gpseg::match_masks(gt, pred, alpha);
      os << name << ',' << gpseg::format_full(alpha) << ',' << m.tp << ','
         << m.fp << ',' << m.fn << ','
         << gpseg::format_full(gpseg::average_precision(m)) << '\n';
    }
    gpseg::write_text_file(tracker.claim(fs::path(output_dir) / "ap.csv"),
                           os.str());
  }
  if (!est_path.empty()) {
    auto load_field = [](const std::string& p) {
      return fs::path(p).extension() == ".csv" ? csv_to_matrix(p)
                                               : gpseg::load_image(p);
    };
    const Eigen::MatrixXd est = load_field(est_path);
    const Eigen::MatrixXd truth = load_field(truth_path);
    std::ostringstream os;
    os << "estimate,truth,rmse\n";
    os << fs::path(est_path).filename().string() << ','
       << fs::path(truth_path).filename().string() << ','
       << gpseg::format_full(gpseg::rmse(est, truth)) << '\n';
    gpseg::write_text_file(tracker.claim(fs::path(output_dir) / "rmse.csv"),
                           os.str());
  }
  write_json_log(json_log, "eval",
                 {{"gt", gt_path},
                  {"pred", pred_path},
                  {"est", est_path},
                  {"truth", truth_path},
                  {"output_dir", output_dir}},
                 tracker.paths());
  tracker.keep();
  return 0;
}

int run_synth(const std::string& kind, const std::string& output_dir,
              int rows, int cols, int objects, const std::string& shape,
              double sigma0, std::uint64_t seed, bool allow_overlap,
              const std::string& json_log) {
  fs::create_directories(output_dir);
  OutputTracker tracker;
  if (kind == "phantom") {
    gpseg::PhantomConfig pc;
    pc.rows = rows;
    pc.cols = cols;
    pc.count = objects;
    pc.shape = shape == "blob" ? gpseg::CellShape::blob
                               : gpseg::CellShape::disc;
    pc.seed = seed;
    pc.allow_overlap = allow_overlap;
    const gpseg::Phantom ph = gpseg::phantom_cells(pc);
    gpseg::save_image(ph.image,
                      tracker.claim(fs::path(output_dir) / "image.png"));
    gpseg::save_label_mask(ph.truth,
                           tracker.claim(fs::path(output_dir) / "truth.png"));
    if (sigma0 > 0.0)
      gpseg::save_image(gpseg::add_noise(ph.image, sigma0, seed ^ 0x9e3779b9),
                        tracker.claim(fs::path(output_dir) / "noisy.png"));
  } else if (kind == "branin") {
    const gpseg::GrayImage f = gpseg::branin_field(rows, cols);
    gpseg::write_text_file(tracker.claim(fs::path(output_dir) / "field.csv"),
                           matrix_to_csv(f));
    if (sigma0 > 0.0)
      gpseg::write_text_file(
          tracker.claim(fs::path(output_dir) / "noisy.csv"),
          matrix_to_csv(gpseg::add_noise(f, sigma0, seed)));
  } else if (kind == "diffusion") {
    const gpseg::GrayImage f = gpseg::diffusion_field({});
    gpseg::write_text_file(tracker.claim(fs::path(output_dir) / "field.csv"),
                           matrix_to_csv(f));
    if (sigma0 > 0.0)
      gpseg::write_text_file(
          tracker.claim(fs::path(output_dir) / "noisy.csv"),
          matrix_to_csv(gpseg::add_noise(f, sigma0, seed)));
  } else {
    throw std::runtime_error("unknown synth kind: " + kind);
  }
  write_json_log(json_log, "synth",
                 {{"kind", kind},
                  {"rows", rows},
                  {"cols", cols},
                  {"objects", objects},
                  {"sigma0", sigma0},
                  {"seed", seed},
                  {"output_dir", output_dir}},
                 tracker.paths());
  tracker.keep();
  return 0;
}

int run_bench(const std::string& output_dir, std::vector<int> sides,
              int repeats, std::uint64_t seed, const std::string& json_log) {
  if (sides.empty()) sides = {10, 20, 40, 80};
  const auto rows =
      gpseg::run_scaling_bench(sides, gpseg::KernelFamily::matern52, repeats,
                               seed);
  fs::create_directories(output_dir);
  OutputTracker tracker;
  std::ostringstream os;
  os << "N,method,seconds\n";
  for (const gpseg::BenchRow& r : rows) {
    os << r.side * r.side << ",fast," << gpseg::format_full(r.fast_seconds)
       << '\n';
    if (std::isfinite(r.direct_seconds))
      os << r.side * r.side << ",direct,"
         << gpseg::format_full(r.direct_seconds) << '\n';
  }
  gpseg::write_text_file(tracker.claim(fs::path(output_dir) / "bench.csv"),
                         os.str());
  write_json_log(json_log, "bench", {{"output_dir", output_dir}},
                 tracker.paths());
  tracker.keep();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lattice Gaussian-process denoising and cell segmentation"};
  app.require_subcommand(1);

  std::string input, output_dir = ".";

  CommonFlags denoise_flags;
  CLI::App* denoise = app.add_subcommand("denoise", "denoise an image");
  denoise->add_option("--input", input, "input image")->required();
  denoise->add_option("--output-dir", output_dir, "output directory");
  add_config_flags(denoise, denoise_flags);

  CommonFlags segment_flags;
  CLI::App* segment = app.add_subcommand("segment", "segment an image");
  segment->add_option("--input", input, "input image")->required();
  segment->add_option("--output-dir", output_dir, "output directory");
  add_config_flags(segment, segment_flags);

  std::string gt_path, pred_path, est_path, truth_path, eval_log;
  CLI::App* eval = app.add_subcommand("eval", "score predictions");
  eval->add_option("--gt", gt_path, "ground-truth label mask");
  eval->add_option("--pred", pred_path, "predicted label mask");
  eval->add_option("--est", est_path, "estimated field (image or CSV)");
  eval->add_option("--truth", truth_path, "true field (image or CSV)");
  eval->add_option("--output-dir", output_dir, "output directory");
  eval->add_option("--json-log", eval_log, "write a JSON run log");

  std::string kind = "phantom", shape = "disc", synth_log;
  int rows = 256, cols = 256, objects = 12;
  double sigma0 = 0.0;
  std::uint64_t seed = 1;
  bool allow_overlap = false;
  CLI::App* synth = app.add_subcommand("synth", "generate benchmark data");
  synth->add_option("--kind", kind, "phantom | branin | diffusion")
      ->check(CLI::IsMember({"phantom", "branin", "diffusion"}));
  synth->add_option("--rows", rows, "grid rows");
  synth->add_option("--cols", cols, "grid cols");
  synth->add_option("--objects", objects, "phantom object count");
  synth->add_option("--shape", shape, "disc | blob")
      ->check(CLI::IsMember({"disc", "blob"}));
  synth->add_option("--sigma0", sigma0, "noise stddev (0 = clean only)");
  synth->add_option("--seed", seed, "generator seed");
  synth->add_flag("--allow-overlap", allow_overlap, "allow overlapping objects");
  synth->add_option("--output-dir", output_dir, "output directory");
  synth->add_option("--json-log", synth_log, "write a JSON run log");

  std::vector<int> sides;
  int repeats = 3;
  std::uint64_t bench_seed = 7;
  std::string bench_log;
  CLI::App* bench = app.add_subcommand("bench", "time fast vs direct likelihood");
  bench->add_option("--sides", sides, "lattice sides (default 10 20 40 80)");
  bench->add_option("--repeats", repeats, "timing repeats per size");
  bench->add_option("--seed", bench_seed, "data seed");
  bench->add_option("--output-dir", output_dir, "output directory");
  bench->add_option("--json-log", bench_log, "write a JSON run log");

  CLI11_PARSE(app, argc, argv);

  try {
    if (denoise->parsed()) return run_denoise(input, output_dir, denoise_flags);
    if (segment->parsed()) return run_segment(input, output_dir, segment_flags);
    if (eval->parsed())
      return run_eval(gt_path, pred_path, est_path, truth_path, output_dir,
                      eval_log);
    if (synth->parsed())
      return run_synth(kind, output_dir, rows, cols, objects, shape, sigma0,
                       seed, allow_overlap, synth_log);
    if (bench->parsed())
      return run_bench(output_dir, sides, repeats, bench_seed, bench_log);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
