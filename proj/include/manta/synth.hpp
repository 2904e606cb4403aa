#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "manta/contrastive.hpp"
#include "manta/image.hpp"
#include "manta/motion.hpp"

namespace manta {

struct Waypoint {
  int frame = 1;  // 1-based
  double cx = 0, cy = 0, w = 20, h = 16;
};

// Inclusive frame range in which the target produces no detections (the
// target stays rendered; only the detector misses it).
struct OcclusionWindow {
  int first = 0, last = 0;
};

struct SynthConfig {
  int frames = 100;
  int width = 160, height = 120;
  std::vector<Waypoint> waypoints;  // piecewise-linear; empty = gentle diagonal
  std::vector<OcclusionWindow> occlusions;
  int distractors = 2;
  double center_jitter = 1.0;  // px std dev on detection centers
  double size_jitter = 0.05;   // fractional std dev on detection sizes
  double miss_prob = 0.0;      // per-frame detector miss probability
  double fp_rate = 0.0;        // per-frame false-positive probability
  std::uint64_t seed = 1;
  bool emit_depth = false;
  double depth_scale = 10.0;
  std::string shape = "rect";  // rect | ellipse

  void validate() const;
};

struct SynthBundle {
  std::vector<Image> frames;
  std::vector<std::optional<BBox>> ground_truth;
  std::vector<std::vector<Detection>> detections;
  std::vector<DepthMap> depths;  // empty unless emit_depth
};

// Deterministic under seed: a textured target with a stable color signature
// moves along the waypoints over a speckled water background; distractors
// carry different hues and textures; detections are the true boxes plus the
// configured noise.
SynthBundle generate_synthetic(const SynthConfig& config);

// Layout: frames/000001.png..., detections.csv, groundtruth.txt,
// depth/000001.png (when present).
void write_bundle(const SynthBundle& bundle, const std::filesystem::path& dir);

// Small two-class crop corpus for the contrastive training checks: even
// sequences share one hue family, odd the other, each with its own texture.
CropCorpus synthetic_crop_corpus(int sequences, int frames_per_sequence, std::uint64_t seed);

}  // namespace manta
