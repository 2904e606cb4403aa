#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "manta/image.hpp"

namespace manta {

inline constexpr int kEmbeddingDim = 128;

// Unit-norm appearance descriptor (L2 norm 1 within 1e-6).
using Embedding = Eigen::VectorXd;

enum class EmbedderKind { kHandcrafted, kTrainable };

struct EmbedderConfig {
  EmbedderKind kind = EmbedderKind::kHandcrafted;
  int patch_size = 16;      // gray-patch side length
  int histogram_bins = 8;   // per color channel
  int canonical_size = 32;  // crops are resized here before features
  int hidden_dim = 64;      // trainable head only
  std::uint64_t seed = 17;  // head initialization

  int feature_dim() const { return 3 * histogram_bins + patch_size * patch_size; }

  void validate() const;
};

// Two-layer head parameters: z = normalize(w2 * tanh(w1 * f + b1) + b2).
struct ProjectionParams {
  Eigen::MatrixXd w1, w2;
  Eigen::VectorXd b1, b2;

  void save(const std::filesystem::path& path) const;
  static ProjectionParams load(const std::filesystem::path& path);
};

// Single affine map followed by L2 normalization. Throws if the affine output
// has zero norm.
Embedding project(const Eigen::VectorXd& features, const Eigen::MatrixXd& w,
                  const Eigen::VectorXd& b);

// Cached intermediates of the trainable head, for backprop.
struct HeadActivation {
  Eigen::VectorXd h1, a, u;
  Embedding z;
};

// Gradient accumulator matching ProjectionParams.
struct ProjectionGrads {
  Eigen::MatrixXd w1, w2;
  Eigen::VectorXd b1, b2;

  explicit ProjectionGrads(const ProjectionParams& p);
  void setZero();
};

HeadActivation head_forward(const ProjectionParams& p, const Eigen::VectorXd& f);

// Backpropagates dL/dz through the normalization and both affine layers,
// accumulating into `grads`.
void head_backward(const ProjectionParams& p, const Eigen::VectorXd& f,
                   const HeadActivation& act, const Eigen::VectorXd& dz,
                   ProjectionGrads& grads);

// Crop -> unit-norm descriptor. Features are per-channel color histograms
// plus a mean-centered grayscale patch; the head is either a fixed seeded
// orthonormal projection (handcrafted) or the trainable two-layer map.
class Embedder {
 public:
  explicit Embedder(EmbedderConfig cfg = {});
  Embedder(EmbedderConfig cfg, ProjectionParams params);

  const EmbedderConfig& config() const { return cfg_; }
  const ProjectionParams& params() const { return params_; }

  Eigen::VectorXd features(const Image& crop) const;
  Embedding embed(const Image& crop) const;
  Embedding project(const Eigen::VectorXd& features) const;

  // Seeded initialization for the trainable head.
  static ProjectionParams init_trainable(const EmbedderConfig& cfg);

 private:
  EmbedderConfig cfg_;
  Eigen::MatrixXd fixed_projection_;  // handcrafted kind
  ProjectionParams params_;           // trainable kind
};

std::uint32_t fnv1a32(std::string_view s);

struct EmbeddingKey {
  std::uint32_t seq_hash = 0, frame = 0, box = 0;
  auto operator<=>(const EmbeddingKey&) const = default;
};

// File-backed map (sequence, frame, box) -> embedding. Values are kept as the
// float32 records of the on-disk format so a save/load round trip is
// bit-exact.
class EmbeddingStore {
 public:
  explicit EmbeddingStore(int dim = kEmbeddingDim);

  int dim() const { return dim_; }
  std::size_t size() const { return records_.size(); }

  void put(const EmbeddingKey& key, const Embedding& e);
  std::optional<Embedding> find(const EmbeddingKey& key) const;

  void save(const std::filesystem::path& path) const;
  // expected_dim < 0 accepts any dimension.
  static EmbeddingStore load(const std::filesystem::path& path, int expected_dim = kEmbeddingDim);

  bool operator==(const EmbeddingStore&) const = default;

 private:
  int dim_;
  std::map<EmbeddingKey, Eigen::VectorXf> records_;
};

}  // namespace manta
