#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "gpseg/thresholding.hpp"

using namespace gpseg;

namespace {

GrayImage two_level_disc(int side, double background, double peak,
                         double radius) {
  GrayImage f = GrayImage::Constant(side, side, background);
  const double c = (side - 1) / 2.0;
  for (int j = 0; j < side; ++j)
    for (int i = 0; i < side; ++i)
      if (std::hypot(i - c, j - c) <= radius) f(i, j) = peak;
  return f;
}

// A trace whose smoothed drop sequence is set by hand; select_threshold only
// consumes alphas, smoothed, and the flags it fills in itself.
ThresholdTrace hand_trace(std::initializer_list<double> smoothed) {
  ThresholdTrace t;
  const int g = static_cast<int>(smoothed.size());
  t.smoothed.resize(g);
  int k = 0;
  for (double v : smoothed) t.smoothed(k++) = v;
  t.diffs = t.smoothed;
  t.alphas = Eigen::VectorXd::LinSpaced(g + 1, 0.0, 1.0);
  t.counts = Eigen::VectorXi::Zero(g + 1);
  return t;
}

}  // namespace

TEST_CASE("count curve on a 2x2 field") {
  GrayImage f(2, 2);
  f << 1.0, 0.5, 0.25, 0.1;
  const ThresholdTrace t = count_curve(f, 11);  // alphas 0.0, 0.1, ..., 1.0
  CHECK(t.counts(0) == 4);                      // everything exceeds 0
  CHECK(t.counts(3) == 2);                      // only 1.0 and 0.5 exceed 0.3
  CHECK(t.counts(10) == 0);                     // nothing exceeds 1
  for (int m = 1; m < 11; ++m) CHECK(t.counts(m) <= t.counts(m - 1));
  // Drops telescope back to the endpoint difference.
  CHECK(t.diffs.sum() == doctest::Approx(4.0));
  CHECK_FALSE(t.all_background);

  CHECK_THROWS_AS(count_curve(f, 1), std::invalid_argument);
  CHECK_THROWS_AS(count_curve(GrayImage(), 10), std::invalid_argument);
  GrayImage bad = f;
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(count_curve(bad, 10), std::domain_error);
}

TEST_CASE("binarize compares against the normalized field") {
  GrayImage f(2, 2);
  f << 1.0, 0.5, 0.25, 0.1;
  const BinaryMask m = binarize(f, 0.3);
  CHECK(m(0, 0) == 1);
  CHECK(m(0, 1) == 1);
  CHECK(m(1, 0) == 0);
  CHECK(m(1, 1) == 0);
  CHECK(binarize(f, 0.0).cast<int>().sum() == 4);
  CHECK(binarize(f, 1.0).cast<int>().sum() == 0);
  // Scaling the field does not move the cut.
  const GrayImage scaled = f * 37.0;
  CHECK((binarize(scaled, 0.3).array() == m.array()).all());
  CHECK_THROWS_AS(binarize(f, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(binarize(f, 1.5), std::invalid_argument);
}

TEST_CASE("fields without positive values are all background") {
  const GrayImage zeros = GrayImage::Zero(5, 5);
  const ThresholdTrace t = count_curve(zeros, 20);
  CHECK(t.all_background);
  CHECK(t.alpha_star == 1.0);
  const ThresholdResult r = threshold_field(zeros);
  CHECK(r.trace.all_background);
  CHECK(r.mask.cast<int>().sum() == 0);
  CHECK(binarize(GrayImage::Constant(3, 3, -2.0), 0.5).cast<int>().sum() == 0);
}

TEST_CASE("constant drop sequences skip the smoother") {
  // 16 values evenly spread in (0,1]; on a 17-point grid every step removes
  // exactly one pixel, so the drop sequence is constant.
  GrayImage f(4, 4);
  for (int k = 0; k < 16; ++k) f(k % 4, k / 4) = (k + 1) / 16.0;
  ThresholdTrace t = count_curve(f, 17);
  smooth_diffs(t);
  CHECK(t.smoothing_passthrough);
  CHECK((t.smoothed.array() == t.diffs.array()).all());
}

TEST_CASE("smoothing flattens a lone spike without moving its center") {
  GrayImage f = GrayImage::Constant(30, 30, 0.05);
  f.block(10, 10, 8, 8).setConstant(1.0);
  ThresholdTrace t = count_curve(f, 100);
  const ThresholdTrace raw = t;
  smooth_diffs(t);
  REQUIRE(t.smoothed.size() == raw.diffs.size());
  int jraw = 0, jsm = 0;
  raw.diffs.maxCoeff(&jraw);
  t.smoothed.maxCoeff(&jsm);
  CHECK(std::abs(jraw - jsm) <= 2);
  CHECK(t.smoothed.maxCoeff() <= raw.diffs.maxCoeff() + 1e-9);
}

TEST_CASE("a flat-topped spike does not fake stabilization") {
  // The two near-equal drops at the top of the spike (40, 39.5) pass the
  // one-step tolerance exactly once; selection must wait for the settled
  // tail (the run starting at position 8) instead.
  ThresholdTrace t = hand_trace(
      {2.0, 3.0, 40.0, 39.5, 30.0, 8.0, 2.0, 1.2, 1.1, 1.05, 1.0, 0.98});
  select_threshold(t);
  CHECK(t.argmax_index == 3);
  CHECK(t.alpha_index == 9);
  CHECK_FALSE(t.fallback);
  CHECK_FALSE(t.degenerate_tau);
}

TEST_CASE("a settled run hitting the end of the grid still counts") {
  ThresholdTrace t = hand_trace({1.0, 50.0, 10.0, 3.0, 2.9});
  select_threshold(t);
  CHECK(t.alpha_index == 5);
  CHECK_FALSE(t.fallback);
}

TEST_CASE("an oscillating sequence falls back past the last swing") {
  ThresholdTrace t =
      hand_trace({0.0, 10.0, 0.0, 10.0, 0.0, 10.0, 0.0, 10.0});
  select_threshold(t);
  CHECK(t.fallback);
  CHECK(t.alpha_index == 8);  // clamped to the end of the grid
}

TEST_CASE("zero spread in the drops is flagged as degenerate") {
  ThresholdTrace t = hand_trace({5.0, 5.0, 5.0, 5.0});
  select_threshold(t);
  CHECK(t.degenerate_tau);
  CHECK(t.alpha_index == t.argmax_index + 1);
}

TEST_CASE("min_alpha_index pushes the search window right") {
  ThresholdTrace t = hand_trace(
      {2.0, 3.0, 40.0, 39.5, 30.0, 8.0, 2.0, 1.2, 1.1, 1.05, 1.0, 0.98});
  select_threshold(t, 0.05, 10);
  CHECK(t.alpha_index == 11);
  ThresholdTrace bad = hand_trace({1.0, 2.0, 3.0});
  CHECK_THROWS_AS(select_threshold(bad, 0.05, 99), std::invalid_argument);
  CHECK_THROWS_AS(select_threshold(bad, 0.0), std::invalid_argument);
}

TEST_CASE("selection lands strictly after the largest drop") {
  GrayImage f = two_level_disc(40, 0.1, 1.0, 8.0);
  // Mild deterministic texture so the count curve is not purely two-level.
  for (int j = 0; j < 40; ++j)
    for (int i = 0; i < 40; ++i)
      f(i, j) += 0.02 * std::sin(0.7 * i) * std::cos(0.9 * j);
  const ThresholdResult r = threshold_field(f);
  CHECK(r.trace.alpha_index > r.trace.argmax_index);
  CHECK(r.trace.alpha_star > 0.0);
  CHECK(r.trace.alpha_star <= 1.0);
}

TEST_CASE("a clean two-level disc is recovered exactly") {
  const GrayImage f = two_level_disc(40, 0.1, 1.0, 8.0);
  const ThresholdResult r = threshold_field(f);
  CHECK_FALSE(r.trace.all_background);
  CHECK(r.trace.alpha_star > 0.1);
  CHECK(r.trace.alpha_star < 1.0);
  const BinaryMask want = binarize(f, 0.5);
  CHECK((r.mask.array() == want.array()).all());

  const ThresholdResult again = threshold_field(f);
  CHECK(again.trace.alpha_index == r.trace.alpha_index);
}
