#include "gpseg/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>

namespace gpseg {

double rmse(const GrayImage& estimate, const GrayImage& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols())
    throw std::invalid_argument("rmse inputs must share dimensions");
  if (estimate.size() == 0) throw std::invalid_argument("empty inputs");
  return std::sqrt((estimate - truth).array().square().mean());
}

double iou(const BinaryMask& a, const BinaryMask& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("iou inputs must share dimensions");
  long inter = 0, uni = 0;
  for (int j = 0; j < a.cols(); ++j) {
    for (int i = 0; i < a.rows(); ++i) {
      const bool in_a = a(i, j) != 0;
      const bool in_b = b(i, j) != 0;
      inter += in_a && in_b;
      uni += in_a || in_b;
    }
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

MatchResult match_masks(const LabelMask& gt, const LabelMask& pred,
                        double alpha) {
  if (gt.rows() != pred.rows() || gt.cols() != pred.cols())
    throw std::invalid_argument("masks must share dimensions");
  if (gt.size() > 0 && (gt.minCoeff() < 0 || pred.minCoeff() < 0))
    throw std::invalid_argument("labels must be nonnegative");

  std::map<int, long> gt_area, pred_area;
  std::map<std::pair<int, int>, long> inter;
  for (int j = 0; j < gt.cols(); ++j) {
    for (int i = 0; i < gt.rows(); ++i) {
      const int g = gt(i, j);
      const int p = pred(i, j);
      if (g) ++gt_area[g];
      if (p) ++pred_area[p];
      if (g && p) ++inter[{g, p}];
    }
  }

  struct Candidate {
    double iou;
    int g, p;
  };
  std::vector<Candidate> cands;
  for (const auto& [gp, n] : inter) {
    const auto [g, p] = gp;
    const double u =
        static_cast<double>(gt_area[g] + pred_area[p] - n);
    cands.push_back({static_cast<double>(n) / u, g, p});
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a,
                                           const Candidate& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    return std::tie(a.g, a.p) < std::tie(b.g, b.p);
  });

  MatchResult res;
  res.alpha = alpha;
  std::set<int> used_gt, used_pred;
  for (const Candidate& c : cands) {
    if (used_gt.count(c.g) || used_pred.count(c.p)) continue;
    used_gt.insert(c.g);
    used_pred.insert(c.p);
    if (c.iou >= alpha) res.pairs.push_back({c.g, c.p, c.iou});
  }

  std::set<int> matched_gt, matched_pred;
  for (const MatchPair& pair : res.pairs) {
    matched_gt.insert(pair.gt_label);
    matched_pred.insert(pair.pred_label);
  }
  for (const auto& [g, n] : gt_area)
    if (!matched_gt.count(g)) res.unmatched_gt.push_back(g);
  for (const auto& [p, n] : pred_area)
    if (!matched_pred.count(p)) res.unmatched_pred.push_back(p);

  res.tp = static_cast<int>(res.pairs.size());
  res.fp = static_cast<int>(res.unmatched_pred.size());
  res.fn = static_cast<int>(res.unmatched_gt.size());
  res.vacuous = gt_area.empty() && pred_area.empty();
  return res;
}

double average_precision(const MatchResult& match) {
  const long denom =
      static_cast<long>(match.tp) + match.fp + match.fn;
  if (denom == 0) return 1.0;
  return static_cast<double>(match.tp) / static_cast<double>(denom);
}

std::vector<std::pair<double, double>> ap_curve(
    const LabelMask& gt, const LabelMask& pred,
    const std::vector<double>& alphas) {
  std::vector<std::pair<double, double>> out;
  for (double alpha : alphas)
    out.push_back({alpha, average_precision(match_masks(gt, pred, alpha))});
  return out;
}

std::vector<std::pair<double, double>> ap_curve(const LabelMask& gt,
                                                const LabelMask& pred) {
  return ap_curve(gt, pred, {0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8});
}

}  // namespace gpseg
