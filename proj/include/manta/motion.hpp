#pragma once

#include <Eigen/Core>

#include <vector>

#include "manta/bbox.hpp"

namespace manta {

struct Detection {
  int frame = 1;          // 1-based
  BBox bbox;
  double score = 1.0;
  int track_id = -1;      // -1 for raw detector output
};

struct TrackerConfig {
  double iou_threshold = 0.3;
  int max_age = 30;
  int min_hits = 3;
  double min_score = 0.1;  // detections below are dropped before association
  double process_noise_scale = 1.0;
  double measurement_noise_scale = 1.0;

  void validate() const;
};

enum class TrackStatus { kTentative, kConfirmed, kLost };

// Constant-velocity Kalman filter over (cx, cy, area, aspect) with
// velocities on the first three; aspect ratio is carried without one.
class KalmanBoxFilter {
 public:
  using State = Eigen::Matrix<double, 7, 1>;
  using StateCov = Eigen::Matrix<double, 7, 7>;
  using Measurement = Eigen::Matrix<double, 4, 1>;

  KalmanBoxFilter(const BBox& initial, double process_noise_scale,
                  double measurement_noise_scale);

  void predict();
  void update(const Measurement& z);

  BBox bbox() const;
  const State& state() const { return x_; }
  const StateCov& covariance() const { return p_; }
  void set_state(const State& x, const StateCov& p) { x_ = x; p_ = p; }

  static Measurement to_measurement(const BBox& b);
  static BBox to_bbox(const State& x);

 private:
  State x_;
  StateCov p_;
  StateCov q_;                    // process noise
  Eigen::Matrix<double, 4, 4> r_; // measurement noise
};

struct Track {
  int id = 0;
  KalmanBoxFilter kf;
  int hits = 0;
  int hit_streak = 0;
  int time_since_update = 0;
  int age = 0;  // frames since creation
  TrackStatus status = TrackStatus::kTentative;
  bool ever_confirmed = false;
  double last_score = 1.0;

  // Posterior at the last accepted observation, for the re-update that runs
  // when the track is matched again after a gap.
  KalmanBoxFilter::Measurement last_observation;
  int last_update_frame = 0;
  KalmanBoxFilter::State saved_state;
  KalmanBoxFilter::StateCov saved_cov;
};

struct AssociateResult {
  std::vector<std::pair<int, int>> matches;  // (track index, detection index)
  std::vector<int> unmatched_tracks;
  std::vector<int> unmatched_detections;
  // Optimal total of (1 - IoU) over the full assignment, before the
  // threshold filter; summed in descending order for exact comparability.
  double assignment_cost = 0.0;
};

// Exact min-cost assignment on 1 - IoU; pairs below iou_threshold are
// unmatched afterwards.
AssociateResult associate(const std::vector<BBox>& tracks, const std::vector<BBox>& detections,
                          double iou_threshold);

// Frame-by-frame multi-object tracker: predict, assign by IoU, update,
// spawn, retire. Emits one labeled row per matched reportable track.
class MotionTracker {
 public:
  explicit MotionTracker(TrackerConfig config = {});

  // Detections must carry the next frame index (frames are contiguous).
  std::vector<Detection> step(int frame, const std::vector<Detection>& detections);

  const std::vector<Track>& tracks() const { return tracks_; }
  int frames_processed() const { return last_frame_; }

 private:
  TrackerConfig config_;
  std::vector<Track> tracks_;
  int next_id_ = 1;
  int last_frame_ = 0;
};

// Runs the tracker over per-frame detection lists (index 0 = frame 1).
std::vector<std::vector<Detection>> run_tracker(
    const std::vector<std::vector<Detection>>& detections_per_frame,
    const TrackerConfig& config);

}  // namespace manta
