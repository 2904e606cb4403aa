#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "manta/association.hpp"
#include "manta/contrastive.hpp"
#include "manta/embedder.hpp"
#include "manta/metrics.hpp"
#include "manta/motion.hpp"
#include "manta/physics.hpp"

namespace manta {

// Flat `key = value` configuration with # comments. CLI flags override file
// keys; the resolved module configs are echoed next to each run's outputs.
class Config {
 public:
  Config() = default;

  static Config load(const std::filesystem::path& path);
  static Config parse(const std::string& text, const std::string& origin = "<string>");

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

struct PipelineConfig {
  TrackerConfig tracker;
  SearchConfig search;
  MetricConfig metrics;
  EmbedderConfig embedder;
  std::string embedder_params_file;  // trainable head weights, optional
  Eigen::Vector3d background{0.6, 0.8, 0.9};
  double beta_low = 0.1, beta_high = 0.5;
  double depth_scale = 10.0;
  PairSpec pair;
  bool secondary_enabled = true;
  std::uint64_t seed = 1;
};

PipelineConfig pipeline_config_from(const Config& cfg);

// Canonical dump of every resolved key, for the config.echo artifact.
std::string echo_config(const PipelineConfig& cfg);

// MANTA_SEED when set, otherwise fallback.
std::uint64_t default_seed(std::uint64_t fallback = 1);

}  // namespace manta
