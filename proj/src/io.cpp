#include "gpseg/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace gpseg {

GrayImage load_image(const std::string& path) {
  const cv::Mat raw = cv::imread(path, cv::IMREAD_UNCHANGED);
  if (raw.empty())
    throw std::runtime_error("cannot read image: " + path);

  cv::Mat gray;
  if (raw.channels() == 1) {
    gray = raw;
  } else if (raw.channels() == 3 || raw.channels() == 4) {
    // Unweighted mean of the color channels (alpha ignored).
    std::vector<cv::Mat> ch;
    cv::split(raw, ch);
    cv::Mat acc;
    ch[0].convertTo(acc, CV_64F);
    for (int c = 1; c < 3; ++c) {
      cv::Mat tmp;
      ch[c].convertTo(tmp, CV_64F);
      acc += tmp;
    }
    acc /= 3.0;
    gray = acc;
  } else {
    throw std::runtime_error("unsupported channel count (" +
                             std::to_string(raw.channels()) + "): " + path);
  }

  double scale = 0.0;
  switch (raw.depth()) {
    case CV_8U: scale = 255.0; break;
    case CV_16U: scale = 65535.0; break;
    default:
      throw std::runtime_error("unsupported bit depth (only 8/16-bit): " +
                               path);
  }

  cv::Mat f64;
  gray.convertTo(f64, CV_64F);
  GrayImage out(raw.rows, raw.cols);
  for (int i = 0; i < raw.rows; ++i)
    for (int j = 0; j < raw.cols; ++j) out(i, j) = f64.at<double>(i, j) / scale;
  return out;
}

void save_image(const GrayImage& image, const std::string& path) {
  if (image.size() == 0) throw std::invalid_argument("empty image");
  cv::Mat m(static_cast<int>(image.rows()), static_cast<int>(image.cols()),
            CV_16U);
  for (int i = 0; i < m.rows; ++i) {
    for (int j = 0; j < m.cols; ++j) {
      const double v = std::min(1.0, std::max(0.0, image(i, j)));
      m.at<std::uint16_t>(i, j) =
          static_cast<std::uint16_t>(std::lround(v * 65535.0));
    }
  }
  if (!cv::imwrite(path, m))
    throw std::runtime_error("cannot write image: " + path);
}

void save_label_mask(const LabelMask& mask, const std::string& path) {
  if (mask.size() == 0) throw std::invalid_argument("empty mask");
  if (mask.minCoeff() < 0)
    throw std::invalid_argument("labels must be nonnegative");
  if (mask.maxCoeff() > 65535)
    throw std::invalid_argument("more than 65535 labels cannot be saved");
  cv::Mat m(static_cast<int>(mask.rows()), static_cast<int>(mask.cols()),
            CV_16U);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j)
      m.at<std::uint16_t>(i, j) = static_cast<std::uint16_t>(mask(i, j));
  if (!cv::imwrite(path, m))
    throw std::runtime_error("cannot write mask: " + path);
}

LabelMask load_label_mask(const std::string& path) {
  const cv::Mat raw = cv::imread(path, cv::IMREAD_UNCHANGED);
  if (raw.empty()) throw std::runtime_error("cannot read mask: " + path);
  if (raw.channels() != 1 || raw.depth() != CV_16U)
    throw std::runtime_error("label masks must be single-channel 16-bit: " +
                             path);
  LabelMask out(raw.rows, raw.cols);
  for (int i = 0; i < raw.rows; ++i)
    for (int j = 0; j < raw.cols; ++j) out(i, j) = raw.at<std::uint16_t>(i, j);
  return out;
}

std::string format_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trace_to_csv(const ThresholdTrace& trace) {
  std::ostringstream os;
  os << "alpha,count,diff,smoothed_diff\n";
  for (int m = 0; m < trace.alphas.size(); ++m) {
    os << format_full(trace.alphas(m)) << ',' << trace.counts(m) << ',';
    if (m >= 1 && m - 1 < trace.diffs.size())
      os << format_full(trace.diffs(m - 1)) << ','
         << format_full(trace.smoothed(m - 1));
    else
      os << ',';
    os << '\n';
  }
  return os.str();
}

std::string objects_to_json(const LabelMask& labels) {
  const int rows = static_cast<int>(labels.rows());
  const int cols = static_cast<int>(labels.cols());
  struct Stats {
    long count = 0;
    double sum_r = 0.0, sum_c = 0.0;
    int min_r = 1 << 30, min_c = 1 << 30, max_r = -1, max_c = -1;
    bool border = false;
  };
  std::map<int, Stats> stats;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const int l = labels(i, j);
      if (!l) continue;
      Stats& s = stats[l];
      ++s.count;
      s.sum_r += i;
      s.sum_c += j;
      s.min_r = std::min(s.min_r, i);
      s.min_c = std::min(s.min_c, j);
      s.max_r = std::max(s.max_r, i);
      s.max_c = std::max(s.max_c, j);
      if (i == 0 || j == 0 || i == rows - 1 || j == cols - 1) s.border = true;
    }
  }
  nlohmann::json j;
  j["object_count"] = stats.size();
  j["objects"] = nlohmann::json::array();
  for (const auto& [label, s] : stats) {
    j["objects"].push_back({{"label", label},
                            {"pixels", s.count},
                            {"centroid_row", s.sum_r / s.count},
                            {"centroid_col", s.sum_c / s.count},
                            {"bbox", {s.min_r, s.min_c, s.max_r, s.max_c}},
                            {"touches_border", s.border}});
  }
  return j.dump(2);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace gpseg
