#pragma once

#include <optional>
#include <span>
#include <vector>

#include "manta/bbox.hpp"

namespace manta {

struct MetricConfig {
  double tau_c = 0.2, tau_s = 0.2;      // strict CSC thresholds
  double sigma_c = 0.5, sigma_s = 0.5;  // GAS tolerances
  std::vector<double> overlap_grid;     // default 0.00..1.00 step 0.05
  std::vector<double> center_grid;      // default 0..50 px step 1

  MetricConfig();
  void validate() const;
};

struct FramePair {
  BBox pred, gt;
};

struct Curve {
  std::vector<double> thresholds;
  std::vector<double> values;
  double auc = 0.0;  // arithmetic mean of the grid values
};

struct MetricReport {
  double success_auc = 0.0;
  double success_at_05 = 0.0;
  double precision_auc = 0.0;
  double precision_at_20px = 0.0;
  double miou = 0.0;
  double mgas = 0.0;
  double mcsc = 0.0;
  Curve success;
  Curve precision;
  int frames_evaluated = 0;
  int frames_excluded = 0;  // ground-truth marked absent (all-zero box)
};

// Center distance normalized by the ground-truth diagonal.
double center_error_norm(const FramePair& pair);

// Pixel (unnormalized) center distance, for the precision curve.
double center_error_px(const FramePair& pair);

// Relative width and height errors (|wp - wg| / wg, |hp - hg| / hg).
std::pair<double, double> scale_errors(const FramePair& pair);

// Fraction of frames with e_c < tau_c and both scale errors < tau_s
// (strict inequalities).
double csc(std::span<const FramePair> pairs, double tau_c, double tau_s);

// exp(-e_c^2 / sigma_c^2) * exp(-e_s / sigma_s^2), with
// e_s = ((wp-wg)^2 + (hp-hg)^2) / (wg^2 + hg^2). The center term enters
// squared and the scale term linearly; e_s is already a squared-error ratio.
double gas(const FramePair& pair, double sigma_c, double sigma_s);

// success(t) = fraction of frames with IoU strictly above t.
Curve success_curve(std::span<const FramePair> pairs, const std::vector<double>& grid);

// precision(t) = fraction of frames with pixel center error <= t.
Curve precision_curve(std::span<const FramePair> pairs, const std::vector<double>& grid);

// Full per-sequence report. Ground-truth entries without a box (target
// marked absent) are excluded from every metric.
MetricReport report(const std::vector<BBox>& predictions,
                    const std::vector<std::optional<BBox>>& ground_truth,
                    const MetricConfig& config = {});

MetricReport report(std::span<const FramePair> pairs, const MetricConfig& config = {});

}  // namespace manta
