#include "manta/association.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "manta/errors.hpp"

namespace manta {

HistoryStack::HistoryStack(int capacity) : capacity_(capacity) {
  if (capacity_ < 1) throw std::invalid_argument("HistoryStack: capacity must be >= 1");
}

void HistoryStack::push(int id) {
  if (id < 0) throw std::invalid_argument("HistoryStack: ids must be non-negative");
  auto it = std::find(ids_.begin(), ids_.end(), id);
  if (it != ids_.end()) ids_.erase(it);
  ids_.push_front(id);
  if (static_cast<int>(ids_.size()) > capacity_) ids_.pop_back();
}

void SearchConfig::validate() const {
  if (!(stride_factor > 0.0 && stride_factor <= 1.0))
    throw std::invalid_argument("SearchConfig: stride_factor must be in (0,1]");
  if (expansion_factor < 1.0)
    throw std::invalid_argument("SearchConfig: expansion_factor must be >= 1");
  similarity().validate();
  weights.validate();
  if (history_capacity < 1)
    throw std::invalid_argument("SearchConfig: history_capacity must be >= 1");
}

const char* to_string(CascadeStep step) {
  switch (step) {
    case CascadeStep::kInitialize: return "initialize";
    case CascadeStep::kHistoryReuse: return "history_reuse";
    case CascadeStep::kRetainActive: return "retain_active";
    case CascadeStep::kReacquire: return "reacquire";
    case CascadeStep::kLocalSearch: return "local_search";
    case CascadeStep::kCarryForward: return "carry_forward";
  }
  return "unknown";
}

SequenceEmbeddingProvider::SequenceEmbeddingProvider(const Embedder* embedder,
                                                     const std::vector<Image>* frames)
    : embedder_(embedder), frames_(frames) {}

void SequenceEmbeddingProvider::set_store(const EmbeddingStore* store, std::uint32_t seq_hash) {
  store_ = store;
  seq_hash_ = seq_hash;
}

void SequenceEmbeddingProvider::precompute_detections(
    const std::vector<std::vector<Detection>>& per_frame) {
  for (std::size_t f = 0; f < per_frame.size(); ++f)
    for (std::size_t d = 0; d < per_frame[f].size(); ++d)
      detection_embedding(static_cast<int>(f) + 1, static_cast<int>(d), per_frame[f][d].bbox);
}

std::optional<Embedding> SequenceEmbeddingProvider::detection_embedding(int frame, int det_index,
                                                                        const BBox& box) {
  const auto key = std::make_pair(frame, det_index);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  if (store_) {
    const auto hit = store_->find({seq_hash_, static_cast<std::uint32_t>(frame),
                                   static_cast<std::uint32_t>(det_index)});
    if (hit) {
      cache_.emplace(key, *hit);
      return hit;
    }
  }
  auto computed = crop_embedding(frame, box);
  if (computed) cache_.emplace(key, *computed);
  return computed;
}

std::optional<Embedding> SequenceEmbeddingProvider::crop_embedding(int frame, const BBox& box) {
  const Image* im = frame_image(frame);
  if (!im || !embedder_) return std::nullopt;
  const IRect r = clip_rect(to_pixel_rect(box), im->height(), im->width());
  if (r.empty()) return std::nullopt;
  return embedder_->embed(crop(*im, r));
}

const Image* SequenceEmbeddingProvider::frame_image(int frame) {
  if (!frames_ || frame < 1 || frame > static_cast<int>(frames_->size())) return nullptr;
  return &(*frames_)[static_cast<std::size_t>(frame - 1)];
}

std::optional<std::pair<int, double>> select_by_composite(
    const std::vector<Detection>& detections, const BBox& reference, const ScoreWeights& w) {
  std::optional<std::pair<int, double>> best;
  int best_id = 0;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const Detection& d = detections[i];
    const double s = composite_score(reference, d.bbox, w);
    const bool better =
        !best || s > best->second ||
        (s == best->second && (d.track_id < best_id));
    if (better) {
      best = {static_cast<int>(i), s};
      best_id = d.track_id;
    }
  }
  return best;
}

namespace {

bool similar_with_embeddings(const BBox& current, const Detection& d,
                             const std::optional<Embedding>& target,
                             EmbeddingProvider& provider, int frame, int det_index,
                             const SearchConfig& cfg, double* cos_out) {
  if (!size_ok(current, d.bbox, cfg.max_size_ratio)) return false;
  if (!(iou(current, d.bbox) > 0.0)) return false;
  if (!target) return false;
  const auto det_emb = provider.detection_embedding(frame, det_index, d.bbox);
  if (!det_emb) return false;
  const double c = cosine(*target, *det_emb);
  if (cos_out) *cos_out = c;
  return c >= cfg.theta_cos;
}

}  // namespace

std::optional<StepAdoption> history_reuse(HistoryStack& history,
                                          const std::vector<Detection>& detections,
                                          const BBox& current,
                                          const std::optional<Embedding>& target,
                                          EmbeddingProvider& provider, int frame,
                                          const SearchConfig& cfg) {
  for (int id : history.ids()) {
    for (std::size_t i = 0; i < detections.size(); ++i) {
      const Detection& d = detections[i];
      if (d.track_id != id) continue;
      double c = std::numeric_limits<double>::quiet_NaN();
      if (similar_with_embeddings(current, d, target, provider, frame,
                                  static_cast<int>(i), cfg, &c)) {
        history.push(id);
        StepAdoption adoption{d.bbox, static_cast<int>(i),
                              composite_score(current, d.bbox, cfg.weights), c};
        return adoption;
      }
    }
  }
  return std::nullopt;
}

std::optional<StepAdoption> retain_active(const HistoryStack& history,
                                          const std::vector<Detection>& detections,
                                          const BBox& current,
                                          const std::optional<Embedding>& target,
                                          EmbeddingProvider& provider, int frame,
                                          const SearchConfig& cfg) {
  const int front = history.peek();
  if (front == HistoryStack::kSentinel) return std::nullopt;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const Detection& d = detections[i];
    if (d.track_id != front) continue;
    double c = std::numeric_limits<double>::quiet_NaN();
    if (similar_with_embeddings(current, d, target, provider, frame, static_cast<int>(i),
                                cfg, &c)) {
      StepAdoption adoption{d.bbox, static_cast<int>(i),
                            composite_score(current, d.bbox, cfg.weights), c};
      return adoption;
    }
  }
  return std::nullopt;
}

std::optional<StepAdoption> reacquire(const std::vector<Detection>& detections,
                                      const BBox& reference, const SearchConfig& cfg) {
  const auto best = select_by_composite(detections, reference, cfg.weights);
  if (!best || best->second < cfg.reacquire_floor) return std::nullopt;
  const Detection& d = detections[static_cast<std::size_t>(best->first)];
  StepAdoption adoption;
  adoption.bbox = d.bbox;
  adoption.detection_index = best->first;
  adoption.score = best->second;
  return adoption;
}

std::vector<BBox> local_search_windows(const BBox& previous, const SearchConfig& cfg,
                                       Eigen::Index image_height, Eigen::Index image_width) {
  const auto c = previous.center();
  const double rw = previous.w * cfg.expansion_factor;
  const double rh = previous.h * cfg.expansion_factor;
  double rx0 = std::max(c.x() - rw / 2.0, 0.0);
  double ry0 = std::max(c.y() - rh / 2.0, 0.0);
  const double rx1 = std::min(c.x() + rw / 2.0, static_cast<double>(image_width));
  const double ry1 = std::min(c.y() + rh / 2.0, static_cast<double>(image_height));
  if (!(rx1 > rx0 && ry1 > ry0)) return {};

  const double sx = cfg.stride_factor * previous.w;
  const double sy = cfg.stride_factor * previous.h;
  std::vector<BBox> windows;
  // Windows start on the stride grid while inside the region and are clipped
  // to it, so the region edge contributes a final partial row/column.
  for (double y = ry0; y < ry1 - 1e-9; y += sy) {
    const double h = std::min(previous.h, ry1 - y);
    for (double x = rx0; x < rx1 - 1e-9; x += sx) {
      const double w = std::min(previous.w, rx1 - x);
      windows.emplace_back(x, y, w, h);
    }
  }
  return windows;
}

std::optional<LocalSearchResult> local_search(const Image& frame_image, const BBox& previous,
                                              const Embedding& target,
                                              const SearchConfig& cfg,
                                              const Embedder& embedder, double* best_cos) {
  const std::vector<BBox> windows =
      local_search_windows(previous, cfg, frame_image.height(), frame_image.width());
  std::optional<LocalSearchResult> best;
  for (const BBox& win : windows) {
    const IRect r = clip_rect(to_pixel_rect(win), frame_image.height(), frame_image.width());
    if (r.empty()) continue;
    Embedding e = embedder.embed(crop(frame_image, r));
    const double c = cosine(target, e);
    if (!best || c > best->cos) best = LocalSearchResult{win, std::move(e), c};
  }
  if (best_cos) *best_cos = best ? best->cos : std::numeric_limits<double>::quiet_NaN();
  if (!best || best->cos < cfg.theta_cos) return std::nullopt;
  return best;
}

TrajectoryResult associate_sequence(const std::vector<std::vector<Detection>>& tracks_per_frame,
                                    const AnchorSpec& anchor, const SearchConfig& cfg,
                                    EmbeddingProvider& provider, const Embedder& embedder) {
  cfg.validate();
  const int n_frames = static_cast<int>(tracks_per_frame.size());
  TrajectoryResult result;
  result.boxes.reserve(static_cast<std::size_t>(n_frames));
  result.audit.reserve(static_cast<std::size_t>(n_frames));

  HistoryStack history(cfg.history_capacity);
  BBox current = anchor.bbox;
  std::optional<Embedding> target;
  if (anchor.crop && !anchor.crop->empty()) target = embedder.embed(*anchor.crop);

  for (int frame = 1; frame <= n_frames; ++frame) {
    const std::vector<Detection>& dets = tracks_per_frame[static_cast<std::size_t>(frame - 1)];
    AuditEntry entry;
    entry.frame = frame;

    if (history.is_sentinel()) {
      // Initialization: the anchor stays the current box; the best-scoring
      // detection only seeds the history.
      current = anchor.bbox;
      entry.step = CascadeStep::kInitialize;
      if (const auto best = select_by_composite(dets, anchor.bbox, cfg.weights)) {
        history.push(dets[static_cast<std::size_t>(best->first)].track_id);
        entry.score = best->second;
      }
      if (!target) {
        if (auto e = provider.crop_embedding(frame, anchor.bbox)) target = std::move(e);
      }
    } else {
      std::optional<StepAdoption> adoption;
      if (cfg.enable_history_reuse &&
          (adoption = history_reuse(history, dets, current, target, provider, frame, cfg))) {
        entry.step = CascadeStep::kHistoryReuse;
      } else if (cfg.enable_retain_active &&
                 (adoption = retain_active(history, dets, current, target, provider, frame,
                                           cfg))) {
        entry.step = CascadeStep::kRetainActive;
      } else if (cfg.enable_reacquire &&
                 (adoption = reacquire(
                      dets, cfg.reacquire_against_anchor ? anchor.bbox : current, cfg))) {
        entry.step = CascadeStep::kReacquire;
        history.push(dets[static_cast<std::size_t>(adoption->detection_index)].track_id);
      }

      if (adoption) {
        current = adoption->bbox;
        entry.score = adoption->score;
        entry.cos = adoption->cos;
        if (auto e = provider.crop_embedding(frame, current)) target = std::move(e);
      } else if (cfg.enable_local_search && target && provider.frame_image(frame)) {
        double best_cos = std::numeric_limits<double>::quiet_NaN();
        const auto found = local_search(*provider.frame_image(frame), current, *target, cfg,
                                        embedder, &best_cos);
        entry.cos = best_cos;
        if (found) {
          entry.step = CascadeStep::kLocalSearch;
          current = found->bbox;
          target = found->embedding;
        } else {
          entry.step = CascadeStep::kCarryForward;
        }
      } else {
        entry.step = CascadeStep::kCarryForward;
      }
    }

    result.boxes.push_back(current);
    result.audit.push_back(entry);
  }
  return result;
}

std::vector<BBox> primary_only_trajectory(
    const std::vector<std::vector<Detection>>& tracks_per_frame, const BBox& anchor,
    const ScoreWeights& weights) {
  std::vector<BBox> out;
  out.reserve(tracks_per_frame.size());
  int locked_id = -1;
  BBox current = anchor;
  for (const auto& dets : tracks_per_frame) {
    if (locked_id < 0) {
      if (const auto best = select_by_composite(dets, anchor, weights))
        locked_id = dets[static_cast<std::size_t>(best->first)].track_id;
    }
    for (const Detection& d : dets) {
      if (d.track_id == locked_id) {
        current = d.bbox;
        break;
      }
    }
    out.push_back(current);
  }
  return out;
}

}  // namespace manta
