#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "manta/embedder.hpp"
#include "manta/image.hpp"
#include "manta/rng.hpp"

namespace manta {

// Temporally ordered crops of one tracked object. Depth crops are optional;
// when absent a synthetic gradient stands in for the physics augmentation.
struct CropSequence {
  std::string id;
  std::vector<int> frames;
  std::vector<Image> crops;
  std::vector<DepthMap> depths;  // empty, or one per crop
};

struct CropCorpus {
  std::vector<CropSequence> sequences;
};

// Corpus directory: one subdirectory per sequence holding ordered crop
// images, optionally with a depth/ subdirectory of matching maps.
CropCorpus load_crop_corpus(const std::filesystem::path& dir, double depth_scale = 10.0);

// Indices into ContrastiveBatch::slots for one anchor.
struct SampleIndex {
  int anchor = -1;
  int temporal = -1;
  int physics = -1;
  std::vector<int> negatives;
};

// A batch stores each distinct embedding once; samples reference slots, so
// shared vectors (anchors reused as negatives) receive accumulated gradients.
struct ContrastiveBatch {
  std::vector<Eigen::VectorXd> slots;
  std::vector<SampleIndex> samples;
  double tau = 0.1;
  bool include_positives_in_denominator = false;

  void validate() const;
};

// Mean per-sample loss
//   L_i = -log[(exp(s_t/tau) + exp(s_b/tau)) / sum_k exp(s_nk/tau)]
// with s the dot products of the referenced slots. Positives appear only in
// the numerator unless include_positives_in_denominator is set. Exponential
// sums are accumulated in sorted order, so permuting negatives or samples
// leaves the value bit-identical.
double loss(const ContrastiveBatch& batch);

// dL/dslot for every slot, accumulated across all samples that reference it.
std::vector<Eigen::VectorXd> loss_grad(const ContrastiveBatch& batch);

struct PairSpec {
  int temporal_window = 4;
  double beta_low = 0.1;
  double beta_high = 0.5;
  double tau = 0.1;
  std::uint64_t seed = 1;
  bool negatives_include_positives = false;  // also use other anchors' positives as negatives
  bool include_positives_in_denominator = false;

  void validate() const;
};

// One anchor per sequence; the temporal positive comes from within
// temporal_window frames, the physics positive is the Beer-Lambert augmented
// anchor crop with a fresh beta, and negatives are the other anchors.
ContrastiveBatch build_batch(const CropCorpus& corpus, const PairSpec& spec,
                             const Embedder& embedder);

// Feature-level batch used by the training loop (features are fixed;
// embeddings are recomputed from the head each step).
struct FeatureBatch {
  std::vector<Eigen::VectorXd> features;
  std::vector<SampleIndex> samples;
  double tau = 0.1;
  bool include_positives_in_denominator = false;
};

FeatureBatch build_feature_batch(const CropCorpus& corpus, const PairSpec& spec,
                                 const Embedder& embedder, Rng& rng);

struct TrainResult {
  ProjectionParams params;
  std::vector<double> epoch_loss;
};

// Plain SGD over the two-layer head; one batch per epoch with fresh
// beta/temporal draws, deterministic under the spec seed. epoch_loss[i] is
// the batch loss before the i-th update.
TrainResult train(const CropCorpus& corpus, const PairSpec& spec,
                  const EmbedderConfig& config, int epochs, double learning_rate);

// mean cos(anchor, physics positive) - mean cos(anchor, negative) on a batch
// built from the spec seed; the training target of the separation check.
double physics_separation(const CropCorpus& corpus, const PairSpec& spec,
                          const Embedder& embedder);

// Largest relative difference between analytic and central finite-difference
// gradients over `batches` random batches that sweep tau and K.
struct GradCheckResult {
  double max_rel_error = 0.0;
  int batches = 0;
  long evaluations = 0;
};

GradCheckResult gradient_check(std::uint64_t seed, int batches = 120, int dim = 16,
                               double step = 1e-5);

}  // namespace manta
