#include "manta/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "manta/errors.hpp"
#include "manta/formats.hpp"

namespace manta {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

Config Config::parse(const std::string& text, const std::string& origin) {
  Config cfg;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw FormatError(origin, lineno, "expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw FormatError(origin, lineno, "empty key");
    cfg.entries_[key] = value;
  }
  return cfg;
}

void Config::set(const std::string& key, const std::string& value) { entries_[key] = value; }

bool Config::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  double v = 0;
  const auto& s = it->second;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw DataError("config key '" + key + "': invalid number '" + s + "'");
  return v;
}

int Config::get_int(const std::string& key, int fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  int v = 0;
  const auto& s = it->second;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw DataError("config key '" + key + "': invalid integer '" + s + "'");
  return v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  const std::string& s = it->second;
  if (s == "true" || s == "on" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "off" || s == "0" || s == "no") return false;
  throw DataError("config key '" + key + "': invalid boolean '" + s + "'");
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::uint64_t v = 0;
  const auto& s = it->second;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw DataError("config key '" + key + "': invalid seed '" + s + "'");
  return v;
}

namespace {

Eigen::Vector3d parse_rgb(const std::string& s, const std::string& key) {
  std::stringstream ss(s);
  std::string field;
  Eigen::Vector3d rgb;
  int i = 0;
  while (std::getline(ss, field, ',')) {
    if (i >= 3) throw DataError("config key '" + key + "': expected r,g,b");
    double v = 0;
    const std::string t = trim(field);
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size())
      throw DataError("config key '" + key + "': invalid number '" + t + "'");
    rgb[i++] = v;
  }
  if (i != 3) throw DataError("config key '" + key + "': expected r,g,b");
  return rgb;
}

}  // namespace

PipelineConfig pipeline_config_from(const Config& cfg) {
  PipelineConfig pc;

  pc.tracker.iou_threshold = cfg.get_double("tracker.iou_threshold", pc.tracker.iou_threshold);
  pc.tracker.max_age = cfg.get_int("tracker.max_age", pc.tracker.max_age);
  pc.tracker.min_hits = cfg.get_int("tracker.min_hits", pc.tracker.min_hits);
  pc.tracker.min_score = cfg.get_double("tracker.min_score", pc.tracker.min_score);
  pc.tracker.process_noise_scale =
      cfg.get_double("tracker.process_noise_scale", pc.tracker.process_noise_scale);
  pc.tracker.measurement_noise_scale =
      cfg.get_double("tracker.measurement_noise_scale", pc.tracker.measurement_noise_scale);

  pc.search.stride_factor = cfg.get_double("assoc.stride_factor", pc.search.stride_factor);
  pc.search.expansion_factor =
      cfg.get_double("assoc.expansion_factor", pc.search.expansion_factor);
  pc.search.theta_cos = cfg.get_double("assoc.theta_cos", pc.search.theta_cos);
  pc.search.weights.w_dist = cfg.get_double("assoc.w_dist", pc.search.weights.w_dist);
  pc.search.weights.w_scale = cfg.get_double("assoc.w_scale", pc.search.weights.w_scale);
  pc.search.max_size_ratio = cfg.get_double("assoc.max_size_ratio", pc.search.max_size_ratio);
  pc.search.reacquire_floor = cfg.get_double("assoc.reacquire_floor", pc.search.reacquire_floor);
  const std::string ref = cfg.get_string("assoc.reacquire_ref", "previous");
  if (ref == "anchor") pc.search.reacquire_against_anchor = true;
  else if (ref == "previous") pc.search.reacquire_against_anchor = false;
  else throw DataError("config key 'assoc.reacquire_ref': expected previous|anchor");
  pc.search.history_capacity = cfg.get_int("assoc.history_capacity", pc.search.history_capacity);
  pc.search.enable_history_reuse =
      cfg.get_bool("assoc.enable_history_reuse", pc.search.enable_history_reuse);
  pc.search.enable_retain_active =
      cfg.get_bool("assoc.enable_retain_active", pc.search.enable_retain_active);
  pc.search.enable_reacquire = cfg.get_bool("assoc.enable_reacquire", pc.search.enable_reacquire);
  pc.search.enable_local_search =
      cfg.get_bool("assoc.enable_local_search", pc.search.enable_local_search);

  pc.metrics.tau_c = cfg.get_double("metrics.tau_c", pc.metrics.tau_c);
  pc.metrics.tau_s = cfg.get_double("metrics.tau_s", pc.metrics.tau_s);
  pc.metrics.sigma_c = cfg.get_double("metrics.sigma_c", pc.metrics.sigma_c);
  pc.metrics.sigma_s = cfg.get_double("metrics.sigma_s", pc.metrics.sigma_s);

  const std::string kind = cfg.get_string("embedder.kind", "handcrafted");
  if (kind == "handcrafted") pc.embedder.kind = EmbedderKind::kHandcrafted;
  else if (kind == "trainable") pc.embedder.kind = EmbedderKind::kTrainable;
  else throw DataError("config key 'embedder.kind': expected handcrafted|trainable");
  pc.embedder.patch_size = cfg.get_int("embedder.patch_size", pc.embedder.patch_size);
  pc.embedder.histogram_bins = cfg.get_int("embedder.histogram_bins", pc.embedder.histogram_bins);
  pc.embedder.canonical_size = cfg.get_int("embedder.canonical_size", pc.embedder.canonical_size);
  pc.embedder.hidden_dim = cfg.get_int("embedder.hidden_dim", pc.embedder.hidden_dim);
  pc.embedder.seed = cfg.get_u64("embedder.seed", pc.embedder.seed);
  pc.embedder_params_file = cfg.get_string("embedder.params_file", "");

  if (cfg.has("physics.background"))
    pc.background = parse_rgb(cfg.get_string("physics.background", ""), "physics.background");
  pc.beta_low = cfg.get_double("physics.beta_low", pc.beta_low);
  pc.beta_high = cfg.get_double("physics.beta_high", pc.beta_high);
  pc.depth_scale = cfg.get_double("physics.depth_scale", pc.depth_scale);

  pc.pair.temporal_window = cfg.get_int("contrastive.temporal_window", pc.pair.temporal_window);
  pc.pair.tau = cfg.get_double("contrastive.tau", pc.pair.tau);
  pc.pair.beta_low = pc.beta_low;
  pc.pair.beta_high = pc.beta_high;
  pc.pair.negatives_include_positives = cfg.get_bool("contrastive.negatives_include_positives",
                                                     pc.pair.negatives_include_positives);
  const std::string denom = cfg.get_string("contrastive.denominator", "positives-excluded");
  if (denom == "include-positives") pc.pair.include_positives_in_denominator = true;
  else if (denom == "positives-excluded") pc.pair.include_positives_in_denominator = false;
  else
    throw DataError(
        "config key 'contrastive.denominator': expected positives-excluded|include-positives");

  pc.secondary_enabled = cfg.get_bool("pipeline.secondary", pc.secondary_enabled);
  pc.seed = cfg.get_u64("pipeline.seed", default_seed(pc.seed));
  pc.pair.seed = pc.seed;

  pc.tracker.validate();
  pc.search.validate();
  pc.metrics.validate();
  pc.embedder.validate();
  pc.pair.validate();
  if (pc.beta_low < 0 || pc.beta_low > pc.beta_high)
    throw DataError("physics.beta_low/beta_high: need 0 <= low <= high");
  if (pc.depth_scale <= 0) throw DataError("physics.depth_scale must be > 0");
  return pc;
}

std::string echo_config(const PipelineConfig& pc) {
  std::ostringstream out;
  auto d = [](double v) { return format_double(v); };
  out << "assoc.enable_history_reuse = " << (pc.search.enable_history_reuse ? "true" : "false")
      << "\n";
  out << "assoc.enable_local_search = " << (pc.search.enable_local_search ? "true" : "false")
      << "\n";
  out << "assoc.enable_reacquire = " << (pc.search.enable_reacquire ? "true" : "false") << "\n";
  out << "assoc.enable_retain_active = " << (pc.search.enable_retain_active ? "true" : "false")
      << "\n";
  out << "assoc.expansion_factor = " << d(pc.search.expansion_factor) << "\n";
  out << "assoc.history_capacity = " << pc.search.history_capacity << "\n";
  out << "assoc.max_size_ratio = " << d(pc.search.max_size_ratio) << "\n";
  out << "assoc.reacquire_floor = " << d(pc.search.reacquire_floor) << "\n";
  out << "assoc.reacquire_ref = " << (pc.search.reacquire_against_anchor ? "anchor" : "previous")
      << "\n";
  out << "assoc.stride_factor = " << d(pc.search.stride_factor) << "\n";
  out << "assoc.theta_cos = " << d(pc.search.theta_cos) << "\n";
  out << "assoc.w_dist = " << d(pc.search.weights.w_dist) << "\n";
  out << "assoc.w_scale = " << d(pc.search.weights.w_scale) << "\n";
  out << "contrastive.denominator = "
      << (pc.pair.include_positives_in_denominator ? "include-positives" : "positives-excluded")
      << "\n";
  out << "contrastive.negatives_include_positives = "
      << (pc.pair.negatives_include_positives ? "true" : "false") << "\n";
  out << "contrastive.tau = " << d(pc.pair.tau) << "\n";
  out << "contrastive.temporal_window = " << pc.pair.temporal_window << "\n";
  out << "embedder.canonical_size = " << pc.embedder.canonical_size << "\n";
  out << "embedder.hidden_dim = " << pc.embedder.hidden_dim << "\n";
  out << "embedder.histogram_bins = " << pc.embedder.histogram_bins << "\n";
  out << "embedder.kind = "
      << (pc.embedder.kind == EmbedderKind::kHandcrafted ? "handcrafted" : "trainable") << "\n";
  out << "embedder.params_file = " << pc.embedder_params_file << "\n";
  out << "embedder.patch_size = " << pc.embedder.patch_size << "\n";
  out << "embedder.seed = " << pc.embedder.seed << "\n";
  out << "metrics.sigma_c = " << d(pc.metrics.sigma_c) << "\n";
  out << "metrics.sigma_s = " << d(pc.metrics.sigma_s) << "\n";
  out << "metrics.tau_c = " << d(pc.metrics.tau_c) << "\n";
  out << "metrics.tau_s = " << d(pc.metrics.tau_s) << "\n";
  out << "physics.background = " << d(pc.background[0]) << "," << d(pc.background[1]) << ","
      << d(pc.background[2]) << "\n";
  out << "physics.beta_high = " << d(pc.beta_high) << "\n";
  out << "physics.beta_low = " << d(pc.beta_low) << "\n";
  out << "physics.depth_scale = " << d(pc.depth_scale) << "\n";
  out << "pipeline.secondary = " << (pc.secondary_enabled ? "true" : "false") << "\n";
  out << "pipeline.seed = " << pc.seed << "\n";
  out << "tracker.iou_threshold = " << d(pc.tracker.iou_threshold) << "\n";
  out << "tracker.max_age = " << pc.tracker.max_age << "\n";
  out << "tracker.measurement_noise_scale = " << d(pc.tracker.measurement_noise_scale) << "\n";
  out << "tracker.min_hits = " << pc.tracker.min_hits << "\n";
  out << "tracker.min_score = " << d(pc.tracker.min_score) << "\n";
  out << "tracker.process_noise_scale = " << d(pc.tracker.process_noise_scale) << "\n";
  return out.str();
}

std::uint64_t default_seed(std::uint64_t fallback) {
  const char* env = std::getenv("MANTA_SEED");
  if (!env || !*env) return fallback;
  std::uint64_t v = 0;
  const std::string s(env);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw DataError("MANTA_SEED: invalid value '" + s + "'");
  return v;
}

}  // namespace manta
