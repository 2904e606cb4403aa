#include "manta/motion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "manta/assignment.hpp"
#include "manta/errors.hpp"

namespace manta {

void TrackerConfig::validate() const {
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0))
    throw std::invalid_argument("TrackerConfig: iou_threshold must be in (0,1)");
  if (max_age < 1) throw std::invalid_argument("TrackerConfig: max_age must be >= 1");
  if (min_hits < 1) throw std::invalid_argument("TrackerConfig: min_hits must be >= 1");
  if (min_score < 0) throw std::invalid_argument("TrackerConfig: min_score must be >= 0");
  if (process_noise_scale <= 0 || measurement_noise_scale <= 0)
    throw std::invalid_argument("TrackerConfig: noise scales must be > 0");
}

namespace {

Eigen::Matrix<double, 7, 7> motion_matrix() {
  Eigen::Matrix<double, 7, 7> f = Eigen::Matrix<double, 7, 7>::Identity();
  f(0, 4) = f(1, 5) = f(2, 6) = 1.0;
  return f;
}

Eigen::Matrix<double, 4, 7> measurement_matrix() {
  Eigen::Matrix<double, 4, 7> h = Eigen::Matrix<double, 4, 7>::Zero();
  h.leftCols<4>().setIdentity();
  return h;
}

}  // namespace

KalmanBoxFilter::Measurement KalmanBoxFilter::to_measurement(const BBox& b) {
  Measurement z;
  z << b.x + b.w / 2.0, b.y + b.h / 2.0, b.w * b.h, b.w / b.h;
  return z;
}

BBox KalmanBoxFilter::to_bbox(const State& x) {
  const double s = std::max(x[2], 1e-6);
  const double r = std::max(x[3], 1e-6);
  const double w = std::sqrt(s * r);
  const double h = s / w;
  return {x[0] - w / 2.0, x[1] - h / 2.0, w, h};
}

KalmanBoxFilter::KalmanBoxFilter(const BBox& initial, double process_noise_scale,
                                 double measurement_noise_scale) {
  x_.setZero();
  x_.head<4>() = to_measurement(initial);
  p_ = StateCov::Identity();
  p_.diagonal().head<4>().setConstant(10.0);
  p_.diagonal().tail<3>().setConstant(1e4);  // unobserved velocities
  q_ = StateCov::Identity();
  q_(4, 4) = q_(5, 5) = 0.01;
  q_(6, 6) = 1e-4;
  q_ *= process_noise_scale;
  r_.setIdentity();
  r_(2, 2) = r_(3, 3) = 10.0;
  r_ *= measurement_noise_scale;
}

void KalmanBoxFilter::predict() {
  if (x_[2] + x_[6] <= 0) x_[6] = 0;  // keep the area positive
  static const StateCov f = motion_matrix();
  x_ = f * x_;
  p_ = f * p_ * f.transpose() + q_;
}

void KalmanBoxFilter::update(const Measurement& z) {
  static const Eigen::Matrix<double, 4, 7> h = measurement_matrix();
  const Measurement y = z - h * x_;
  const Eigen::Matrix4d s = h * p_ * h.transpose() + r_;
  const Eigen::Matrix<double, 7, 4> k = p_ * h.transpose() * s.inverse();
  x_ += k * y;
  p_ = (StateCov::Identity() - k * h) * p_;
}

BBox KalmanBoxFilter::bbox() const { return to_bbox(x_); }

AssociateResult associate(const std::vector<BBox>& tracks, const std::vector<BBox>& detections,
                          double iou_threshold) {
  AssociateResult result;
  const int nt = static_cast<int>(tracks.size());
  const int nd = static_cast<int>(detections.size());
  if (nt == 0 || nd == 0) {
    for (int i = 0; i < nt; ++i) result.unmatched_tracks.push_back(i);
    for (int j = 0; j < nd; ++j) result.unmatched_detections.push_back(j);
    return result;
  }

  Eigen::MatrixXd iou_mat(nt, nd);
  for (int i = 0; i < nt; ++i)
    for (int j = 0; j < nd; ++j)
      iou_mat(i, j) = iou(tracks[static_cast<std::size_t>(i)],
                          detections[static_cast<std::size_t>(j)]);

  const AssignmentResult assignment = solve_assignment(1.0 - iou_mat.array());
  result.assignment_cost = assignment.cost;

  std::vector<bool> det_matched(static_cast<std::size_t>(nd), false);
  for (int i = 0; i < nt; ++i) {
    const int j = assignment.row_to_col[static_cast<std::size_t>(i)];
    if (j >= 0 && iou_mat(i, j) >= iou_threshold) {
      result.matches.emplace_back(i, j);
      det_matched[static_cast<std::size_t>(j)] = true;
    } else {
      result.unmatched_tracks.push_back(i);
    }
  }
  for (int j = 0; j < nd; ++j)
    if (!det_matched[static_cast<std::size_t>(j)]) result.unmatched_detections.push_back(j);
  return result;
}

MotionTracker::MotionTracker(TrackerConfig config) : config_(config) {
  config_.validate();
}

std::vector<Detection> MotionTracker::step(int frame, const std::vector<Detection>& detections) {
  if (frame != last_frame_ + 1)
    throw DataError("tracker: expected frame " + std::to_string(last_frame_ + 1) +
                    ", got " + std::to_string(frame));
  last_frame_ = frame;

  std::vector<Detection> usable;
  for (const Detection& d : detections) {
    if (d.frame != frame)
      throw DataError("tracker: detection carries frame " + std::to_string(d.frame) +
                      " while stepping frame " + std::to_string(frame));
    if (d.score >= config_.min_score) usable.push_back(d);
  }

  std::vector<BBox> predicted;
  predicted.reserve(tracks_.size());
  for (Track& t : tracks_) {
    if (t.time_since_update > 0) t.hit_streak = 0;
    ++t.time_since_update;
    ++t.age;
    t.kf.predict();
    predicted.push_back(t.kf.bbox());
  }

  std::vector<BBox> det_boxes;
  det_boxes.reserve(usable.size());
  for (const Detection& d : usable) det_boxes.push_back(d.bbox);

  const AssociateResult assoc = associate(predicted, det_boxes, config_.iou_threshold);

  for (const auto& [ti, di] : assoc.matches) {
    Track& t = tracks_[static_cast<std::size_t>(ti)];
    const auto z = KalmanBoxFilter::to_measurement(usable[static_cast<std::size_t>(di)].bbox);
    const int gap = frame - t.last_update_frame;
    if (gap > 1) {
      // Re-run the filter across the gap with observations interpolated
      // between the last accepted measurement and the new one.
      t.kf.set_state(t.saved_state, t.saved_cov);
      for (int step_i = 1; step_i <= gap; ++step_i) {
        const double alpha = static_cast<double>(step_i) / static_cast<double>(gap);
        const KalmanBoxFilter::Measurement virt =
            t.last_observation + alpha * (z - t.last_observation);
        t.kf.predict();
        t.kf.update(virt);
      }
    } else {
      t.kf.update(z);
    }
    t.time_since_update = 0;
    ++t.hits;
    ++t.hit_streak;
    t.last_score = usable[static_cast<std::size_t>(di)].score;
    t.last_observation = z;
    t.last_update_frame = frame;
    t.saved_state = t.kf.state();
    t.saved_cov = t.kf.covariance();
    if (t.hit_streak >= config_.min_hits) {
      t.status = TrackStatus::kConfirmed;
      t.ever_confirmed = true;
    } else if (t.ever_confirmed) {
      t.status = TrackStatus::kConfirmed;
    }
  }

  for (int ti : assoc.unmatched_tracks) {
    Track& t = tracks_[static_cast<std::size_t>(ti)];
    if (t.ever_confirmed) t.status = TrackStatus::kLost;
  }

  for (int di : assoc.unmatched_detections) {
    const Detection& d = usable[static_cast<std::size_t>(di)];
    Track t{next_id_++,
            KalmanBoxFilter(d.bbox, config_.process_noise_scale,
                            config_.measurement_noise_scale)};
    t.hits = t.hit_streak = 1;
    t.time_since_update = 0;
    t.last_score = d.score;
    t.last_observation = KalmanBoxFilter::to_measurement(d.bbox);
    t.last_update_frame = frame;
    t.saved_state = t.kf.state();
    t.saved_cov = t.kf.covariance();
    tracks_.push_back(std::move(t));
  }

  std::erase_if(tracks_, [&](const Track& t) {
    return t.time_since_update > config_.max_age;
  });

  std::vector<Detection> output;
  for (const Track& t : tracks_) {
    if (t.time_since_update != 0) continue;
    if (t.hit_streak >= config_.min_hits || frame <= config_.min_hits) {
      Detection row;
      row.frame = frame;
      row.bbox = t.kf.bbox();
      row.score = t.last_score;
      row.track_id = t.id;
      output.push_back(row);
    }
  }
  std::sort(output.begin(), output.end(),
            [](const Detection& a, const Detection& b) { return a.track_id < b.track_id; });
  return output;
}

std::vector<std::vector<Detection>> run_tracker(
    const std::vector<std::vector<Detection>>& detections_per_frame,
    const TrackerConfig& config) {
  MotionTracker tracker(config);
  std::vector<std::vector<Detection>> out;
  out.reserve(detections_per_frame.size());
  for (std::size_t f = 0; f < detections_per_frame.size(); ++f)
    out.push_back(tracker.step(static_cast<int>(f) + 1, detections_per_frame[f]));
  return out;
}

}  // namespace manta
