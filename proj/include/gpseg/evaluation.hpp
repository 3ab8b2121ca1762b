#pragma once

#include <vector>

#include "gpseg/types.hpp"

namespace gpseg {

double rmse(const GrayImage& estimate, const GrayImage& truth);

// Intersection-over-union of two pixel sets on the same lattice; two empty
// sets count as identical (1.0).
double iou(const BinaryMask& a, const BinaryMask& b);

struct MatchPair {
  int gt_label = 0;
  int pred_label = 0;
  double iou = 0.0;
};

struct MatchResult {
  double alpha = 0.0;
  std::vector<MatchPair> pairs;       // surviving matches (IoU >= alpha)
  std::vector<int> unmatched_gt;
  std::vector<int> unmatched_pred;
  int tp = 0;
  int fp = 0;
  int fn = 0;
  bool vacuous = false;  // no objects on either side
};

// Greedy one-to-one matching in descending IoU order (ties: lower (gt,pred)
// pair), followed by the alpha cutoff.
MatchResult match_masks(const LabelMask& gt, const LabelMask& pred,
                        double alpha);

// TP / (TP + FP + FN); 1.0 when there are no objects at all (vacuous flag).
double average_precision(const MatchResult& match);

// AP at each alpha; defaults to {0.5, 0.55, ..., 0.8}.
std::vector<std::pair<double, double>> ap_curve(const LabelMask& gt,
                                                const LabelMask& pred);
std::vector<std::pair<double, double>> ap_curve(
    const LabelMask& gt, const LabelMask& pred,
    const std::vector<double>& alphas);

}  // namespace gpseg
