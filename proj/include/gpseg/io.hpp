#pragma once

#include <string>

#include "gpseg/thresholding.hpp"
#include "gpseg/types.hpp"

namespace gpseg {

// Reads an 8- or 16-bit grayscale (or RGB, averaged) PNG/TIFF into [0,1].
GrayImage load_image(const std::string& path);

// Writes intensities clamped to [0,1] as 16-bit grayscale PNG/TIFF.
void save_image(const GrayImage& image, const std::string& path);

// Label masks as 16-bit PNG, pixel value = label. Round-trips exactly for
// labels up to 65535; larger labels are refused.
void save_label_mask(const LabelMask& mask, const std::string& path);
LabelMask load_label_mask(const std::string& path);

// Full-precision decimal formatting (round-trips doubles exactly).
std::string format_full(double v);

// CSV with columns (alpha, count, diff, smoothed_diff); the first row has
// empty difference fields.
std::string trace_to_csv(const ThresholdTrace& trace);

// Per-object summary: pixel count, centroid, bounding box, border flag.
std::string objects_to_json(const LabelMask& labels);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace gpseg
