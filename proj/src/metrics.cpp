#include "manta/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "manta/errors.hpp"

namespace manta {

MetricConfig::MetricConfig() {
  overlap_grid.reserve(21);
  for (int i = 0; i <= 20; ++i) overlap_grid.push_back(i * 0.05);
  center_grid.reserve(51);
  for (int i = 0; i <= 50; ++i) center_grid.push_back(static_cast<double>(i));
}

void MetricConfig::validate() const {
  if (!(tau_c > 0 && tau_s > 0 && sigma_c > 0 && sigma_s > 0))
    throw std::invalid_argument("MetricConfig: thresholds and tolerances must be positive");
  auto strictly_increasing = [](const std::vector<double>& g) {
    return !g.empty() && std::is_sorted(g.begin(), g.end()) &&
           std::adjacent_find(g.begin(), g.end()) == g.end();
  };
  if (!strictly_increasing(overlap_grid) || !strictly_increasing(center_grid))
    throw std::invalid_argument("MetricConfig: grids must be strictly increasing");
}

double center_error_norm(const FramePair& pair) {
  return (pair.pred.center() - pair.gt.center()).norm() / pair.gt.diag();
}

double center_error_px(const FramePair& pair) {
  return (pair.pred.center() - pair.gt.center()).norm();
}

std::pair<double, double> scale_errors(const FramePair& pair) {
  return {std::abs(pair.pred.w - pair.gt.w) / pair.gt.w,
          std::abs(pair.pred.h - pair.gt.h) / pair.gt.h};
}

double csc(std::span<const FramePair> pairs, double tau_c, double tau_s) {
  if (pairs.empty()) throw DataError("csc: empty sequence");
  long hits = 0;
  for (const FramePair& p : pairs) {
    const auto [ew, eh] = scale_errors(p);
    if (center_error_norm(p) < tau_c && ew < tau_s && eh < tau_s) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(pairs.size());
}

double gas(const FramePair& pair, double sigma_c, double sigma_s) {
  const double ec = center_error_norm(pair);
  const double es = ((pair.pred.w - pair.gt.w) * (pair.pred.w - pair.gt.w) +
                     (pair.pred.h - pair.gt.h) * (pair.pred.h - pair.gt.h)) /
                    (pair.gt.w * pair.gt.w + pair.gt.h * pair.gt.h);
  return std::exp(-(ec * ec) / (sigma_c * sigma_c)) * std::exp(-es / (sigma_s * sigma_s));
}

Curve success_curve(std::span<const FramePair> pairs, const std::vector<double>& grid) {
  if (pairs.empty()) throw DataError("success_curve: empty sequence");
  Curve curve;
  curve.thresholds = grid;
  curve.values.reserve(grid.size());
  std::vector<double> ious;
  ious.reserve(pairs.size());
  for (const FramePair& p : pairs) ious.push_back(iou(p.pred, p.gt));
  for (double t : grid) {
    long hits = 0;
    for (double v : ious)
      if (v > t) ++hits;
    curve.values.push_back(static_cast<double>(hits) / static_cast<double>(pairs.size()));
  }
  double total = 0;
  for (double v : curve.values) total += v;
  curve.auc = total / static_cast<double>(curve.values.size());
  return curve;
}

Curve precision_curve(std::span<const FramePair> pairs, const std::vector<double>& grid) {
  if (pairs.empty()) throw DataError("precision_curve: empty sequence");
  Curve curve;
  curve.thresholds = grid;
  curve.values.reserve(grid.size());
  std::vector<double> errors;
  errors.reserve(pairs.size());
  for (const FramePair& p : pairs) errors.push_back(center_error_px(p));
  for (double t : grid) {
    long hits = 0;
    for (double e : errors)
      if (e <= t) ++hits;
    curve.values.push_back(static_cast<double>(hits) / static_cast<double>(pairs.size()));
  }
  double total = 0;
  for (double v : curve.values) total += v;
  curve.auc = total / static_cast<double>(curve.values.size());
  return curve;
}

namespace {

double value_at(const Curve& curve, double threshold) {
  for (std::size_t i = 0; i < curve.thresholds.size(); ++i)
    if (std::abs(curve.thresholds[i] - threshold) < 1e-12) return curve.values[i];
  throw std::invalid_argument("metric grid does not contain the requested threshold");
}

}  // namespace

MetricReport report(std::span<const FramePair> pairs, const MetricConfig& config) {
  config.validate();
  if (pairs.empty()) throw DataError("report: no evaluable frames");
  MetricReport rep;
  rep.frames_evaluated = static_cast<int>(pairs.size());
  rep.success = success_curve(pairs, config.overlap_grid);
  rep.precision = precision_curve(pairs, config.center_grid);
  rep.success_auc = rep.success.auc;
  rep.success_at_05 = value_at(rep.success, 0.5);
  rep.precision_auc = rep.precision.auc;
  rep.precision_at_20px = value_at(rep.precision, 20.0);
  double iou_sum = 0, gas_sum = 0;
  for (const FramePair& p : pairs) {
    iou_sum += iou(p.pred, p.gt);
    gas_sum += gas(p, config.sigma_c, config.sigma_s);
  }
  rep.miou = iou_sum / static_cast<double>(pairs.size());
  rep.mgas = gas_sum / static_cast<double>(pairs.size());
  rep.mcsc = csc(pairs, config.tau_c, config.tau_s);
  return rep;
}

MetricReport report(const std::vector<BBox>& predictions,
                    const std::vector<std::optional<BBox>>& ground_truth,
                    const MetricConfig& config) {
  if (predictions.size() != ground_truth.size())
    throw DataError("report: prediction count " + std::to_string(predictions.size()) +
                    " != ground-truth count " + std::to_string(ground_truth.size()));
  std::vector<FramePair> pairs;
  pairs.reserve(predictions.size());
  int excluded = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (!ground_truth[i]) {
      ++excluded;
      continue;
    }
    pairs.push_back({predictions[i], *ground_truth[i]});
  }
  MetricReport rep = report(std::span<const FramePair>(pairs), config);
  rep.frames_excluded = excluded;
  return rep;
}

}  // namespace manta
