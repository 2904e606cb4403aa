#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace manta {

// Axis-aligned bounding box with top-left corner (x, y) and positive size
// (w, h), understood as the half-open rectangle [x, x+w) x [y, y+h).
// Degenerate sizes are rejected here so downstream geometry never has to.
template <typename Scalar>
struct BBoxT {
  Scalar x{0}, y{0}, w{1}, h{1};

  BBoxT() = default;

  BBoxT(Scalar x_, Scalar y_, Scalar w_, Scalar h_) : x(x_), y(y_), w(w_), h(h_) {
    if (!(std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(h)))
      throw std::invalid_argument("BBox: coordinates must be finite");
    if (!(w > Scalar(0)) || !(h > Scalar(0)))
      throw std::invalid_argument("BBox: width and height must be positive");
  }

  Eigen::Matrix<Scalar, 2, 1> center() const {
    return {x + w / Scalar(2), y + h / Scalar(2)};
  }
  Scalar diag() const { return std::sqrt(w * w + h * h); }
  Scalar area() const { return w * h; }
  Scalar right() const { return x + w; }
  Scalar bottom() const { return y + h; }

  BBoxT translated(Scalar dx, Scalar dy) const { return {x + dx, y + dy, w, h}; }
  BBoxT scaled(Scalar f) const { return {x * f, y * f, w * f, h * f}; }

  bool operator==(const BBoxT&) const = default;
};

using BBox = BBoxT<double>;

// Weights of the composite geometric score. The scale weight is the single
// knob for box-size agreement (elsewhere also called the size weight).
struct ScoreWeights {
  double w_dist = 1.0;
  double w_scale = 1.0;

  void validate() const {
    if (w_dist < 0 || w_scale < 0 || !(w_dist + w_scale > 0))
      throw std::invalid_argument("ScoreWeights: weights must be >= 0 and not both zero");
  }
};

struct SimilarityThresholds {
  double theta_cos = 0.9;
  double max_size_ratio = 2.0;

  void validate() const {
    if (theta_cos < -1.0 || theta_cos > 1.0)
      throw std::invalid_argument("SimilarityThresholds: theta_cos must be in [-1, 1]");
    if (max_size_ratio < 1.0)
      throw std::invalid_argument("SimilarityThresholds: max_size_ratio must be >= 1");
  }
};

template <typename Scalar>
Scalar intersection_area(const BBoxT<Scalar>& a, const BBoxT<Scalar>& b) {
  const Scalar iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const Scalar ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  if (iw <= Scalar(0) || ih <= Scalar(0)) return Scalar(0);
  return iw * ih;
}

template <typename Scalar>
Scalar iou(const BBoxT<Scalar>& a, const BBoxT<Scalar>& b) {
  const Scalar inter = intersection_area(a, b);
  const Scalar uni = a.area() + b.area() - inter;
  return inter / uni;  // uni > 0 since both areas are positive
}

// 1 - center distance / larger diagonal. 1 when centers coincide, negative
// once the centers are further apart than the larger of the two diagonals.
template <typename Scalar>
Scalar dist_score(const BBoxT<Scalar>& a, const BBoxT<Scalar>& b) {
  const Scalar d = (a.center() - b.center()).norm();
  return Scalar(1) - d / std::max(a.diag(), b.diag());
}

template <typename Scalar>
Scalar scale_score(const BBoxT<Scalar>& a, const BBoxT<Scalar>& b) {
  const Scalar aa = a.area(), ab = b.area();
  return std::min(aa, ab) / std::max(aa, ab);
}

template <typename Scalar>
Scalar composite_score(const BBoxT<Scalar>& a, const BBoxT<Scalar>& b,
                       const ScoreWeights& w = {}) {
  return w.w_dist * dist_score(a, b) + w.w_scale * scale_score(a, b);
}

// Both width ratio and height ratio at most max_ratio (boundary included).
template <typename Scalar>
bool size_ok(const BBoxT<Scalar>& a, const BBoxT<Scalar>& b, double max_ratio = 2.0) {
  const Scalar wr = std::max(a.w, b.w) / std::min(a.w, b.w);
  const Scalar hr = std::max(a.h, b.h) / std::min(a.h, b.h);
  return wr <= Scalar(max_ratio) && hr <= Scalar(max_ratio);
}

inline double cosine(const Eigen::Ref<const Eigen::VectorXd>& a,
                     const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("cosine: dimension mismatch");
  return a.dot(b);
}

// Geometric and appearance consistency gate: compatible sizes, strictly
// positive overlap, and embedding cosine at or above theta_cos.
template <typename Scalar>
bool are_similar(const BBoxT<Scalar>& a, const BBoxT<Scalar>& b,
                 const Eigen::Ref<const Eigen::VectorXd>& ea,
                 const Eigen::Ref<const Eigen::VectorXd>& eb,
                 const SimilarityThresholds& th = {}) {
  return size_ok(a, b, th.max_size_ratio) && iou(a, b) > Scalar(0) &&
         cosine(ea, eb) >= th.theta_cos;
}

}  // namespace manta
