#include "manta/synth.hpp"

#include <algorithm>
#include <cmath>

#include "manta/errors.hpp"
#include "manta/formats.hpp"
#include "manta/image_io.hpp"
#include "manta/rng.hpp"

namespace manta {

namespace {

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Position-keyed noise in [0, 1): stable across frames, independent of draw
// order.
double hash_noise(std::uint64_t seed, std::int64_t a, std::int64_t b) {
  const std::uint64_t h =
      mix64(seed ^ mix64(static_cast<std::uint64_t>(a) * 0x9e3779b97f4a7c15ULL) ^
            mix64(static_cast<std::uint64_t>(b) * 0xc2b2ae3d27d4eb4fULL));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

struct ObjectAppearance {
  Eigen::Vector3d color;
  std::uint64_t texture_seed = 0;
  bool ellipse = false;
};

// Texture lives in object-normalized coordinates so it scales with the box
// and stays fixed from frame to frame.
void render_object(Image& canvas, const BBox& box, const ObjectAppearance& app) {
  const int x0 = std::max(0, static_cast<int>(std::floor(box.x)));
  const int y0 = std::max(0, static_cast<int>(std::floor(box.y)));
  const int x1 = std::min<int>(static_cast<int>(canvas.width()),
                               static_cast<int>(std::ceil(box.right())));
  const int y1 = std::min<int>(static_cast<int>(canvas.height()),
                               static_cast<int>(std::ceil(box.bottom())));
  const auto c = box.center();
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      if (px < box.x || px >= box.right() || py < box.y || py >= box.bottom()) continue;
      if (app.ellipse) {
        const double dx = (px - c.x()) / (box.w / 2.0);
        const double dy = (py - c.y()) / (box.h / 2.0);
        if (dx * dx + dy * dy > 1.0) continue;
      }
      const auto u = static_cast<std::int64_t>((px - box.x) / box.w * 16.0);
      const auto v = static_cast<std::int64_t>((py - box.y) / box.h * 16.0);
      const double speckle = 0.55 + 0.9 * hash_noise(app.texture_seed, u, v);
      for (int k = 0; k < 3; ++k)
        canvas.ch[k](y, x) = std::clamp(app.color[k] * speckle, 0.0, 1.0);
    }
  }
}

Image render_background(int height, int width, std::uint64_t seed) {
  Image im(height, width);
  for (int y = 0; y < height; ++y) {
    const double t = height > 1 ? static_cast<double>(y) / (height - 1) : 0.0;
    const double r = 0.22 - 0.14 * t;
    const double g = 0.43 - 0.20 * t;
    const double b = 0.52 - 0.18 * t;
    for (int x = 0; x < width; ++x) {
      const double n = 0.04 * (hash_noise(seed, x, y) - 0.5);
      im.ch[0](y, x) = std::clamp(r + n, 0.0, 1.0);
      im.ch[1](y, x) = std::clamp(g + n, 0.0, 1.0);
      im.ch[2](y, x) = std::clamp(b + n, 0.0, 1.0);
    }
  }
  return im;
}

BBox interpolate_waypoints(const std::vector<Waypoint>& wps, int frame) {
  if (frame <= wps.front().frame) {
    const Waypoint& w = wps.front();
    return {w.cx - w.w / 2, w.cy - w.h / 2, w.w, w.h};
  }
  if (frame >= wps.back().frame) {
    const Waypoint& w = wps.back();
    return {w.cx - w.w / 2, w.cy - w.h / 2, w.w, w.h};
  }
  for (std::size_t i = 1; i < wps.size(); ++i) {
    if (frame > wps[i].frame) continue;
    const Waypoint& a = wps[i - 1];
    const Waypoint& b = wps[i];
    const double t = static_cast<double>(frame - a.frame) / (b.frame - a.frame);
    const double cx = a.cx + t * (b.cx - a.cx);
    const double cy = a.cy + t * (b.cy - a.cy);
    const double w = a.w + t * (b.w - a.w);
    const double h = a.h + t * (b.h - a.h);
    return {cx - w / 2, cy - h / 2, w, h};
  }
  throw InternalError("interpolate_waypoints: unreachable");
}

const Eigen::Vector3d kTargetColor{0.88, 0.52, 0.18};  // warm against blue water
const Eigen::Vector3d kDistractorColors[] = {
    {0.25, 0.75, 0.45}, {0.75, 0.75, 0.30}, {0.55, 0.35, 0.75},
    {0.30, 0.60, 0.80}, {0.80, 0.30, 0.45}, {0.60, 0.80, 0.75},
};

}  // namespace

void SynthConfig::validate() const {
  if (frames < 1) throw std::invalid_argument("SynthConfig: frames must be >= 1");
  if (width < 16 || height < 16)
    throw std::invalid_argument("SynthConfig: image must be at least 16x16");
  for (const OcclusionWindow& o : occlusions)
    if (o.first < 1 || o.last < o.first || o.last > frames)
      throw std::invalid_argument("SynthConfig: occlusion window outside frame range");
  if (center_jitter < 0 || size_jitter < 0 || miss_prob < 0 || miss_prob > 1 || fp_rate < 0 ||
      fp_rate > 1)
    throw std::invalid_argument("SynthConfig: noise parameters out of range");
  if (distractors < 0) throw std::invalid_argument("SynthConfig: distractors must be >= 0");
  if (shape != "rect" && shape != "ellipse")
    throw std::invalid_argument("SynthConfig: shape must be rect or ellipse");
  if (!waypoints.empty()) {
    for (std::size_t i = 1; i < waypoints.size(); ++i)
      if (waypoints[i].frame <= waypoints[i - 1].frame)
        throw std::invalid_argument("SynthConfig: waypoint frames must increase");
  }
}

SynthBundle generate_synthetic(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const double w = config.width, h = config.height;

  std::vector<Waypoint> wps = config.waypoints;
  if (wps.empty()) {
    wps = {{1, w * 0.28, h * 0.38, 24, 18}, {config.frames, w * 0.70, h * 0.62, 24, 18}};
  }

  // Distractor paths: random endpoints, sizes near the target's.
  struct Mover {
    BBox from{0, 0, 1, 1}, to{0, 0, 1, 1};
    ObjectAppearance look;
  };
  std::vector<Mover> distractors;
  for (int i = 0; i < config.distractors; ++i) {
    Mover m;
    const double dw = rng.uniform(14.0, 26.0);
    const double dh = rng.uniform(12.0, 22.0);
    auto random_box = [&]() {
      const double cx = rng.uniform(dw, w - dw);
      const double cy = rng.uniform(dh, h - dh);
      return BBox(cx - dw / 2, cy - dh / 2, dw, dh);
    };
    m.from = random_box();
    m.to = random_box();
    m.look.color = kDistractorColors[static_cast<std::size_t>(i) %
                                     std::size(kDistractorColors)];
    m.look.texture_seed = mix64(config.seed ^ (0xd15c0ULL + static_cast<std::uint64_t>(i)));
    m.look.ellipse = (i % 2 == 1);
    distractors.push_back(m);
  }

  ObjectAppearance target_look{kTargetColor, mix64(config.seed ^ 0x7a96e7ULL),
                               config.shape == "ellipse"};

  auto occluded = [&](int frame) {
    for (const OcclusionWindow& o : config.occlusions)
      if (frame >= o.first && frame <= o.last) return true;
    return false;
  };

  SynthBundle bundle;
  bundle.frames.reserve(static_cast<std::size_t>(config.frames));
  for (int f = 1; f <= config.frames; ++f) {
    const BBox truth = interpolate_waypoints(wps, f);
    Image canvas = render_background(config.height, config.width, mix64(config.seed ^ 0xb6ULL));

    const double t = config.frames > 1 ? static_cast<double>(f - 1) / (config.frames - 1) : 0.0;
    std::vector<BBox> distractor_boxes;
    for (const Mover& m : distractors) {
      BBox b(m.from.x + t * (m.to.x - m.from.x), m.from.y + t * (m.to.y - m.from.y), m.from.w,
             m.from.h);
      render_object(canvas, b, m.look);
      distractor_boxes.push_back(b);
    }
    render_object(canvas, truth, target_look);  // target on top

    std::vector<Detection> dets;
    auto jitter_box = [&](const BBox& b) {
      const double cx = b.x + b.w / 2 + rng.normal(0.0, config.center_jitter);
      const double cy = b.y + b.h / 2 + rng.normal(0.0, config.center_jitter);
      const double bw = std::max(2.0, b.w * (1.0 + rng.normal(0.0, config.size_jitter)));
      const double bh = std::max(2.0, b.h * (1.0 + rng.normal(0.0, config.size_jitter)));
      return BBox(cx - bw / 2, cy - bh / 2, bw, bh);
    };

    if (!occluded(f) && !rng.bernoulli(config.miss_prob)) {
      Detection d;
      d.frame = f;
      d.bbox = jitter_box(truth);
      d.score = rng.uniform(0.85, 1.0);
      dets.push_back(d);
    }
    for (const BBox& b : distractor_boxes) {
      Detection d;
      d.frame = f;
      d.bbox = jitter_box(b);
      d.score = rng.uniform(0.5, 0.95);
      dets.push_back(d);
    }
    if (rng.bernoulli(config.fp_rate)) {
      const double fw = rng.uniform(10.0, 30.0);
      const double fh = rng.uniform(8.0, 24.0);
      Detection d;
      d.frame = f;
      d.bbox = BBox(rng.uniform(0.0, w - fw), rng.uniform(0.0, h - fh), fw, fh);
      d.score = rng.uniform(0.3, 0.7);
      dets.push_back(d);
    }
    std::stable_sort(dets.begin(), dets.end(),
                     [](const Detection& a, const Detection& b) { return a.score > b.score; });

    bundle.frames.push_back(std::move(canvas));
    bundle.ground_truth.push_back(truth);
    bundle.detections.push_back(std::move(dets));
    if (config.emit_depth) {
      DepthMap depth(config.height, config.width);
      for (int y = 0; y < config.height; ++y)
        depth.row(y).setConstant(config.height > 1
                                     ? 5.0 * static_cast<double>(y) / (config.height - 1)
                                     : 1.0);
      bundle.depths.push_back(std::move(depth));
    }
  }
  return bundle;
}

void write_bundle(const SynthBundle& bundle, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "frames");
  char name[16];
  for (std::size_t f = 0; f < bundle.frames.size(); ++f) {
    std::snprintf(name, sizeof(name), "%06zu.png", f + 1);
    write_png(dir / "frames" / name, bundle.frames[f]);
  }
  if (!bundle.depths.empty()) {
    fs::create_directories(dir / "depth");
    for (std::size_t f = 0; f < bundle.depths.size(); ++f) {
      std::snprintf(name, sizeof(name), "%06zu.png", f + 1);
      write_depth_png(dir / "depth" / name, bundle.depths[f], 10.0);
    }
  }
  std::vector<Detection> rows;
  for (const auto& per_frame : bundle.detections)
    rows.insert(rows.end(), per_frame.begin(), per_frame.end());
  write_detections(dir / "detections.csv", rows);
  write_ground_truth(dir / "groundtruth.txt", bundle.ground_truth);
}

CropCorpus synthetic_crop_corpus(int sequences, int frames_per_sequence, std::uint64_t seed) {
  if (sequences < 2 || frames_per_sequence < 2)
    throw std::invalid_argument("synthetic_crop_corpus: need >= 2 sequences and >= 2 frames");
  Rng rng(seed);
  const Eigen::Vector3d class_colors[2] = {{0.85, 0.45, 0.20}, {0.25, 0.70, 0.45}};
  CropCorpus corpus;
  for (int s = 0; s < sequences; ++s) {
    CropSequence seq;
    seq.id = "seq" + std::to_string(s);
    ObjectAppearance look{class_colors[s % 2],
                          mix64(seed ^ (0xc0ffeeULL + static_cast<std::uint64_t>(s) * 97)),
                          s % 2 == 1};
    const int side = 40;
    for (int f = 0; f < frames_per_sequence; ++f) {
      Image canvas = render_background(side, side, mix64(seed ^ 0xba5eULL));
      const double jx = rng.uniform(-2.0, 2.0);
      const double jy = rng.uniform(-2.0, 2.0);
      render_object(canvas, BBox(4 + jx, 4 + jy, side - 10, side - 10), look);
      seq.crops.push_back(std::move(canvas));
      seq.frames.push_back(f + 1);
    }
    corpus.sequences.push_back(std::move(seq));
  }
  return corpus;
}

}  // namespace manta
