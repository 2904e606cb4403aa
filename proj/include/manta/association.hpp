#pragma once

#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "manta/bbox.hpp"
#include "manta/embedder.hpp"
#include "manta/image.hpp"
#include "manta/motion.hpp"

namespace manta {

// Ground-truth box of the target in frame 1, optionally with its pixels.
struct AnchorSpec {
  BBox bbox;
  std::optional<Image> crop;
};

// Bounded most-recently-used record of track ids identified with the target.
// The empty state stands for the -1 sentinel of an untouched history.
class HistoryStack {
 public:
  static constexpr int kSentinel = -1;

  explicit HistoryStack(int capacity = 30);

  bool is_sentinel() const { return ids_.empty(); }
  int peek() const { return ids_.empty() ? kSentinel : ids_.front(); }
  std::size_t size() const { return ids_.size(); }
  int capacity() const { return capacity_; }
  const std::deque<int>& ids() const { return ids_; }

  // Moves an already-known id to the front; evicts the least recent entry
  // when full.
  void push(int id);

 private:
  int capacity_;
  std::deque<int> ids_;
};

struct SearchConfig {
  double stride_factor = 0.5;
  double expansion_factor = 1.5;
  double theta_cos = 0.9;
  ScoreWeights weights{1.0, 1.0};
  double max_size_ratio = 2.0;
  double reacquire_floor = 0.5;
  bool reacquire_against_anchor = false;  // default: score against the previous box
  int history_capacity = 30;
  // Per-step switches, for ablations.
  bool enable_history_reuse = true;
  bool enable_retain_active = true;
  bool enable_reacquire = true;
  bool enable_local_search = true;

  SimilarityThresholds similarity() const { return {theta_cos, max_size_ratio}; }
  void validate() const;
};

enum class CascadeStep {
  kInitialize,
  kHistoryReuse,
  kRetainActive,
  kReacquire,
  kLocalSearch,
  kCarryForward,
};

const char* to_string(CascadeStep step);

struct AuditEntry {
  int frame = 0;
  CascadeStep step = CascadeStep::kCarryForward;
  double score = std::numeric_limits<double>::quiet_NaN();
  double cos = std::numeric_limits<double>::quiet_NaN();
};

// Supplies appearance descriptors and (optionally) frame pixels to the
// cascade. Absent embeddings make the appearance clause fail closed; an
// absent frame image skips local search.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::optional<Embedding> detection_embedding(int frame, int det_index,
                                                       const BBox& box) = 0;
  virtual std::optional<Embedding> crop_embedding(int frame, const BBox& box) = 0;
  virtual const Image* frame_image(int frame) = 0;
};

// Provider over an in-memory frame stack; detection embeddings can be
// precomputed in bulk or served from a file-backed store.
class SequenceEmbeddingProvider : public EmbeddingProvider {
 public:
  SequenceEmbeddingProvider(const Embedder* embedder, const std::vector<Image>* frames);

  void set_store(const EmbeddingStore* store, std::uint32_t seq_hash);
  void precompute_detections(const std::vector<std::vector<Detection>>& per_frame);

  std::optional<Embedding> detection_embedding(int frame, int det_index,
                                               const BBox& box) override;
  std::optional<Embedding> crop_embedding(int frame, const BBox& box) override;
  const Image* frame_image(int frame) override;

 private:
  const Embedder* embedder_;
  const std::vector<Image>* frames_;
  const EmbeddingStore* store_ = nullptr;
  std::uint32_t seq_hash_ = 0;
  std::map<std::pair<int, int>, Embedding> cache_;
};

// Step 1: pick the detection maximizing the composite score against the
// anchor. Ties break on lower track id, then lower detection index. Returns
// (winning index, score); the current box stays at the anchor regardless.
std::optional<std::pair<int, double>> select_by_composite(
    const std::vector<Detection>& detections, const BBox& reference, const ScoreWeights& w);

struct StepAdoption {
  BBox bbox;
  int detection_index = -1;
  double score = std::numeric_limits<double>::quiet_NaN();
  double cos = std::numeric_limits<double>::quiet_NaN();
};

// Step 2: most-recent history id that reappears with geometric and
// appearance consistency.
std::optional<StepAdoption> history_reuse(HistoryStack& history,
                                          const std::vector<Detection>& detections,
                                          const BBox& current,
                                          const std::optional<Embedding>& target,
                                          EmbeddingProvider& provider, int frame,
                                          const SearchConfig& cfg);

// Step 3: the history-front id, if still present and consistent.
std::optional<StepAdoption> retain_active(const HistoryStack& history,
                                          const std::vector<Detection>& detections,
                                          const BBox& current,
                                          const std::optional<Embedding>& target,
                                          EmbeddingProvider& provider, int frame,
                                          const SearchConfig& cfg);

// Step 4: composite-score re-acquisition against the reference box, gated by
// the acceptance floor.
std::optional<StepAdoption> reacquire(const std::vector<Detection>& detections,
                                      const BBox& reference, const SearchConfig& cfg);

// Step 5: sliding-window search around the previous box, scored by embedding
// cosine against the target representation.
struct LocalSearchResult {
  BBox bbox;
  Embedding embedding;
  double cos = 0.0;
};

std::vector<BBox> local_search_windows(const BBox& previous, const SearchConfig& cfg,
                                       Eigen::Index image_height, Eigen::Index image_width);

std::optional<LocalSearchResult> local_search(const Image& frame_image, const BBox& previous,
                                              const Embedding& target,
                                              const SearchConfig& cfg,
                                              const Embedder& embedder,
                                              double* best_cos = nullptr);

struct TrajectoryResult {
  std::vector<BBox> boxes;  // one per frame
  std::vector<AuditEntry> audit;
};

// Full cascade over a sequence of ID-labeled detections. Exactly one box per
// frame; when every step declines, the previous box is carried forward.
TrajectoryResult associate_sequence(const std::vector<std::vector<Detection>>& tracks_per_frame,
                                    const AnchorSpec& anchor, const SearchConfig& cfg,
                                    EmbeddingProvider& provider, const Embedder& embedder);

// Motion-only baseline: lock onto the id closest to the anchor and follow its
// boxes, carrying the last box through absences.
std::vector<BBox> primary_only_trajectory(
    const std::vector<std::vector<Detection>>& tracks_per_frame, const BBox& anchor,
    const ScoreWeights& weights = {});

}  // namespace manta
