#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>

#include <json.hpp>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "gpseg/config.hpp"
#include "gpseg/io.hpp"

using namespace gpseg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("gpseg_io_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

}  // namespace

TEST_CASE("16-bit image round trip with clamping") {
  TempDir tmp;
  GrayImage img(3, 4);
  img << 0.0, 0.25, 0.5, 1.0,  //
      0.1, 0.9, 0.33, 0.66,    //
      -0.5, 2.0, 0.0001, 0.9999;
  const std::string path = tmp.file("img.png");
  save_image(img, path);
  const GrayImage back = load_image(path);
  REQUIRE(back.rows() == 3);
  REQUIRE(back.cols() == 4);
  for (int j = 0; j < 4; ++j)
    for (int i = 0; i < 3; ++i) {
      const double clamped = std::clamp(img(i, j), 0.0, 1.0);
      // 16-bit quantization error is at most half a step.
      CHECK(std::abs(back(i, j) - clamped) <= 0.5 / 65535.0 + 1e-12);
    }
  CHECK(back(2, 0) == 0.0);  // clamped below
  CHECK(back(2, 1) == 1.0);  // clamped above
  CHECK_THROWS_AS(save_image(GrayImage(), tmp.file("e.png")),
                  std::invalid_argument);
  CHECK_THROWS_AS(load_image(tmp.file("missing.png")), std::runtime_error);
}

TEST_CASE("8-bit images scale by 255") {
  TempDir tmp;
  cv::Mat m(2, 2, CV_8U);
  m.at<std::uint8_t>(0, 0) = 0;
  m.at<std::uint8_t>(0, 1) = 128;
  m.at<std::uint8_t>(1, 0) = 255;
  m.at<std::uint8_t>(1, 1) = 51;
  const std::string path = tmp.file("img8.png");
  REQUIRE(cv::imwrite(path, m));
  const GrayImage img = load_image(path);
  CHECK(img(0, 0) == 0.0);
  CHECK(img(0, 1) == doctest::Approx(128.0 / 255.0).epsilon(1e-15));
  CHECK(img(1, 0) == 1.0);
  CHECK(img(1, 1) == doctest::Approx(51.0 / 255.0).epsilon(1e-15));
}

TEST_CASE("color images collapse to the unweighted channel mean") {
  TempDir tmp;
  cv::Mat m(1, 2, CV_8UC3);
  m.at<cv::Vec3b>(0, 0) = {10, 20, 30};
  m.at<cv::Vec3b>(0, 1) = {255, 255, 255};
  const std::string path = tmp.file("rgb.png");
  REQUIRE(cv::imwrite(path, m));
  const GrayImage img = load_image(path);
  CHECK(img(0, 0) == doctest::Approx(20.0 / 255.0).epsilon(1e-15));
  CHECK(img(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("label masks round trip up to 65535") {
  TempDir tmp;
  LabelMask labels = LabelMask::Zero(4, 5);
  labels(0, 0) = 1;
  labels(1, 2) = 77;
  labels(3, 4) = 65535;
  const std::string path = tmp.file("labels.png");
  save_label_mask(labels, path);
  const LabelMask back = load_label_mask(path);
  CHECK((back.array() == labels.array()).all());

  LabelMask too_big = labels;
  too_big(2, 2) = 65536;
  CHECK_THROWS_AS(save_label_mask(too_big, tmp.file("x.png")),
                  std::invalid_argument);
  LabelMask negative = labels;
  negative(2, 2) = -3;
  CHECK_THROWS_AS(save_label_mask(negative, tmp.file("x.png")),
                  std::invalid_argument);

  // An 8-bit file is not a valid label mask.
  cv::Mat m(2, 2, CV_8U, cv::Scalar(7));
  REQUIRE(cv::imwrite(tmp.file("bad.png"), m));
  CHECK_THROWS_AS(load_label_mask(tmp.file("bad.png")), std::runtime_error);
}

TEST_CASE("full-precision formatting round trips doubles") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> mantissa(-1.0, 1.0);
  std::uniform_int_distribution<int> expo(-200, 200);
  for (int rep = 0; rep < 50; ++rep) {
    const double v = std::ldexp(mantissa(rng), expo(rng));
    CHECK(std::stod(format_full(v)) == v);
  }
  CHECK(std::stod(format_full(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(format_full(1.0) == "1");
  CHECK(format_full(0.25) == "0.25");
}

TEST_CASE("trace csv lists alphas with lagged differences") {
  GrayImage f(2, 2);
  f << 1.0, 0.5, 0.25, 0.1;
  const ThresholdTrace t = count_curve(f, 5);
  const std::string csv = trace_to_csv(t);
  CHECK(csv ==
        "alpha,count,diff,smoothed_diff\n"
        "0,4,,\n"
        "0.25,2,2,2\n"
        "0.5,1,1,1\n"
        "0.75,1,0,0\n"
        "1,0,1,1\n");
}

TEST_CASE("object summaries carry counts, centroids, and boxes") {
  LabelMask labels = LabelMask::Zero(6, 6);
  labels.block(0, 0, 2, 2).setConstant(1);      // touches the border
  for (int j = 1; j <= 3; ++j) labels(3, j) = 4;  // interior row of 3
  const nlohmann::json j = nlohmann::json::parse(objects_to_json(labels));
  CHECK(j.at("object_count").get<int>() == 2);
  REQUIRE(j.at("objects").size() == 2);
  const auto& a = j.at("objects")[0];
  CHECK(a.at("label").get<int>() == 1);
  CHECK(a.at("pixels").get<int>() == 4);
  CHECK(a.at("centroid_row").get<double>() == doctest::Approx(0.5));
  CHECK(a.at("centroid_col").get<double>() == doctest::Approx(0.5));
  CHECK(a.at("touches_border").get<bool>());
  const auto& b = j.at("objects")[1];
  CHECK(b.at("label").get<int>() == 4);
  CHECK(b.at("pixels").get<int>() == 3);
  CHECK(b.at("centroid_row").get<double>() == doctest::Approx(3.0));
  CHECK(b.at("centroid_col").get<double>() == doctest::Approx(2.0));
  CHECK(b.at("bbox") == nlohmann::json({3, 1, 3, 3}));
  CHECK_FALSE(b.at("touches_border").get<bool>());
}

TEST_CASE("text files round trip") {
  TempDir tmp;
  const std::string path = tmp.file("t.txt");
  write_text_file(path, "line1\nline2\n");
  CHECK(read_text_file(path) == "line1\nline2\n");
  CHECK_THROWS_AS(read_text_file(tmp.file("nope.txt")), std::runtime_error);
}

TEST_CASE("config files parse key=value lines with comments") {
  TempDir tmp;
  const std::string path = tmp.file("cfg");
  write_text_file(path,
                  "# header comment\n"
                  "kernel = exponential\n"
                  "tile-side=64\n"
                  "\n"
                  "alpha-grid = 50   # inline comment\n");
  const auto entries = parse_config_file(path);
  REQUIRE(entries.size() == 3);
  CHECK(entries.at("kernel") == "exponential");
  CHECK(entries.at("tile-side") == "64");
  CHECK(entries.at("alpha-grid") == "50");

  write_text_file(path, "a=1\nbad-line\n");
  CHECK_THROWS_WITH_AS(parse_config_file(path),
                       "config line 2 is not key=value: bad-line",
                       std::invalid_argument);
  CHECK_THROWS_AS(parse_config_file(tmp.file("missing")), std::runtime_error);
}

TEST_CASE("flags override the config file which overrides defaults") {
  const std::map<std::string, std::string> file_entries = {
      {"tile-side", "64"}, {"kernel", "exponential"}};
  const std::map<std::string, std::string> flags = {{"tile-side", "32"}};
  const PipelineConfig cfg = resolve_config(file_entries, flags);
  CHECK(cfg.tile_side == 32);
  CHECK(cfg.kernel == KernelFamily::exponential);
  CHECK(cfg.alpha_grid_size == 100);  // untouched default
  CHECK(cfg.stabilization == 0.05);

  PipelineConfig base;
  CHECK_THROWS_AS(apply_config(base, {{"mystery", "1"}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(apply_config(base, {{"tile-side", "12x"}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(apply_config(base, {{"alpha-grid", "1"}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(apply_config(base, {{"stabilization", "-0.1"}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(apply_config(base, {{"seed", "12x"}}),
                  std::invalid_argument);
  CHECK_NOTHROW(apply_config(base, {{"merge-tolerance", "2.5"},
                                    {"rethreshold-factor", "4"},
                                    {"interior-frac", "0.2"},
                                    {"boundary-frac", "0.01"}}));
  CHECK(base.merge_tolerance == 2.5);
  CHECK(base.rethreshold_factor == 4);
}
