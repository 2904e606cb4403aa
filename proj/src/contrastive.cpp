#include "manta/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "manta/errors.hpp"
#include "manta/image_io.hpp"
#include "manta/physics.hpp"

namespace manta {

namespace {

// Sum in descending order: permutation-invariant to the last bit.
double sorted_sum(std::vector<double> values) {
  std::sort(values.begin(), values.end(), std::greater<>());
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

struct SampleTerms {
  double t_temporal = 0, t_physics = 0;  // s/tau for the two positives
  std::vector<double> t_negatives;
  double lse_num = 0, lse_den = 0;
  double m_num = 0, m_den = 0;
  double sum_num = 0, sum_den = 0;
};

SampleTerms sample_terms(const ContrastiveBatch& b, const SampleIndex& s) {
  SampleTerms t;
  const Eigen::VectorXd& anchor = b.slots[static_cast<std::size_t>(s.anchor)];
  t.t_temporal = anchor.dot(b.slots[static_cast<std::size_t>(s.temporal)]) / b.tau;
  t.t_physics = anchor.dot(b.slots[static_cast<std::size_t>(s.physics)]) / b.tau;
  t.t_negatives.reserve(s.negatives.size());
  for (int n : s.negatives)
    t.t_negatives.push_back(anchor.dot(b.slots[static_cast<std::size_t>(n)]) / b.tau);

  t.m_num = std::max(t.t_temporal, t.t_physics);
  std::vector<double> num_exps = {std::exp(t.t_temporal - t.m_num),
                                  std::exp(t.t_physics - t.m_num)};

  std::vector<double> den_terms = t.t_negatives;
  if (b.include_positives_in_denominator) {
    den_terms.push_back(t.t_temporal);
    den_terms.push_back(t.t_physics);
  }
  t.m_den = *std::max_element(den_terms.begin(), den_terms.end());
  std::vector<double> den_exps;
  den_exps.reserve(den_terms.size());
  for (double d : den_terms) den_exps.push_back(std::exp(d - t.m_den));

  t.sum_num = sorted_sum(std::move(num_exps));
  t.sum_den = sorted_sum(std::move(den_exps));
  t.lse_num = t.m_num + std::log(t.sum_num);
  t.lse_den = t.m_den + std::log(t.sum_den);
  return t;
}

}  // namespace

void ContrastiveBatch::validate() const {
  if (!(tau > 0)) throw std::invalid_argument("ContrastiveBatch: tau must be > 0");
  if (samples.empty()) throw std::invalid_argument("ContrastiveBatch: no samples");
  const int n = static_cast<int>(slots.size());
  auto check = [&](int idx) {
    if (idx < 0 || idx >= n)
      throw std::invalid_argument("ContrastiveBatch: slot index out of range");
  };
  for (const SampleIndex& s : samples) {
    check(s.anchor);
    check(s.temporal);
    check(s.physics);
    if (s.negatives.empty())
      throw std::invalid_argument("ContrastiveBatch: each sample needs K >= 1 negatives");
    for (int k : s.negatives) check(k);
  }
}

double loss(const ContrastiveBatch& batch) {
  batch.validate();
  std::vector<double> per_sample;
  per_sample.reserve(batch.samples.size());
  for (const SampleIndex& s : batch.samples) {
    const SampleTerms t = sample_terms(batch, s);
    per_sample.push_back(t.lse_den - t.lse_num);
  }
  return sorted_sum(std::move(per_sample)) / static_cast<double>(batch.samples.size());
}

std::vector<Eigen::VectorXd> loss_grad(const ContrastiveBatch& batch) {
  batch.validate();
  const double inv_n = 1.0 / static_cast<double>(batch.samples.size());
  std::vector<Eigen::VectorXd> grads(batch.slots.size());
  for (std::size_t i = 0; i < batch.slots.size(); ++i)
    grads[i] = Eigen::VectorXd::Zero(batch.slots[i].size());

  for (const SampleIndex& s : batch.samples) {
    const SampleTerms t = sample_terms(batch, s);
    const Eigen::VectorXd& anchor = batch.slots[static_cast<std::size_t>(s.anchor)];

    // dL_i/ds for each similarity; the chain rule through s = z_a . z_x
    // spreads each one onto both participating slots.
    auto add_pair = [&](int other, double ds) {
      const double g = ds * inv_n;
      grads[static_cast<std::size_t>(s.anchor)] +=
          g * batch.slots[static_cast<std::size_t>(other)];
      grads[static_cast<std::size_t>(other)] += g * anchor;
    };

    const double wt = std::exp(t.t_temporal - t.m_num) / t.sum_num;
    const double wb = std::exp(t.t_physics - t.m_num) / t.sum_num;
    double ds_temporal = -wt / batch.tau;
    double ds_physics = -wb / batch.tau;
    if (batch.include_positives_in_denominator) {
      ds_temporal += std::exp(t.t_temporal - t.m_den) / t.sum_den / batch.tau;
      ds_physics += std::exp(t.t_physics - t.m_den) / t.sum_den / batch.tau;
    }
    add_pair(s.temporal, ds_temporal);
    add_pair(s.physics, ds_physics);
    for (std::size_t k = 0; k < s.negatives.size(); ++k) {
      const double dk = std::exp(t.t_negatives[k] - t.m_den) / t.sum_den / batch.tau;
      add_pair(s.negatives[k], dk);
    }
  }
  return grads;
}

void PairSpec::validate() const {
  if (temporal_window < 1) throw std::invalid_argument("PairSpec: temporal_window must be >= 1");
  if (beta_low < 0 || beta_low > beta_high)
    throw std::invalid_argument("PairSpec: need 0 <= beta_low <= beta_high");
  if (!(tau > 0)) throw std::invalid_argument("PairSpec: tau must be > 0");
}

namespace {

// Stand-in depth when a corpus carries none: a top-to-bottom gradient in
// [0, 2] relative units.
DepthMap default_crop_depth(Eigen::Index h, Eigen::Index w) {
  DepthMap d(h, w);
  for (Eigen::Index y = 0; y < h; ++y)
    d.row(y).setConstant(h > 1 ? 2.0 * static_cast<double>(y) / static_cast<double>(h - 1) : 1.0);
  return d;
}

}  // namespace

FeatureBatch build_feature_batch(const CropCorpus& corpus, const PairSpec& spec,
                                 const Embedder& embedder, Rng& rng) {
  spec.validate();
  const int n_seq = static_cast<int>(corpus.sequences.size());
  if (n_seq < 2)
    throw DataError("contrastive batch needs at least 2 sequences, got " +
                    std::to_string(n_seq));

  FeatureBatch fb;
  fb.tau = spec.tau;
  fb.include_positives_in_denominator = spec.include_positives_in_denominator;
  fb.samples.resize(static_cast<std::size_t>(n_seq));

  for (int i = 0; i < n_seq; ++i) {
    const CropSequence& seq = corpus.sequences[static_cast<std::size_t>(i)];
    const int n = static_cast<int>(seq.crops.size());
    if (n < 2)
      throw DataError("sequence '" + seq.id + "' has no temporal positive (single crop)");

    // Anchor among crops that have a neighbor within the window; prefer a
    // later frame for the positive, falling back to an earlier one.
    std::vector<int> eligible;
    for (int a = 0; a < n; ++a) {
      for (int j = 0; j < n; ++j) {
        const int dt = std::abs(seq.frames[static_cast<std::size_t>(j)] -
                                seq.frames[static_cast<std::size_t>(a)]);
        if (j != a && dt >= 1 && dt <= spec.temporal_window) {
          eligible.push_back(a);
          break;
        }
      }
    }
    if (eligible.empty())
      throw DataError("sequence '" + seq.id + "' has no temporal positive within window");

    const int a_idx = eligible[static_cast<std::size_t>(rng.uniform_int(eligible.size()))];
    const int anchor_frame = seq.frames[static_cast<std::size_t>(a_idx)];

    std::vector<int> later, earlier;
    for (int j = 0; j < n; ++j) {
      if (j == a_idx) continue;
      const int dt = seq.frames[static_cast<std::size_t>(j)] - anchor_frame;
      if (dt >= 1 && dt <= spec.temporal_window) later.push_back(j);
      if (dt <= -1 && dt >= -spec.temporal_window) earlier.push_back(j);
    }
    const std::vector<int>& pool = later.empty() ? earlier : later;
    const int t_idx = pool[static_cast<std::size_t>(rng.uniform_int(pool.size()))];

    const Image& anchor_crop = seq.crops[static_cast<std::size_t>(a_idx)];
    AttenuationParams params;
    params.beta = sample_beta(spec.beta_low, spec.beta_high, rng);
    const DepthMap depth = seq.depths.empty()
                               ? default_crop_depth(anchor_crop.height(), anchor_crop.width())
                               : seq.depths[static_cast<std::size_t>(a_idx)];
    const Image physics_crop = beer_lambert(anchor_crop, depth, params);

    SampleIndex& sample = fb.samples[static_cast<std::size_t>(i)];
    sample.anchor = static_cast<int>(fb.features.size());
    fb.features.push_back(embedder.features(anchor_crop));
    sample.temporal = static_cast<int>(fb.features.size());
    fb.features.push_back(embedder.features(seq.crops[static_cast<std::size_t>(t_idx)]));
    sample.physics = static_cast<int>(fb.features.size());
    fb.features.push_back(embedder.features(physics_crop));
  }

  // Negatives reference the other sequences' slots, so every anchor has
  // K = N_b - 1 (or 3(N_b - 1) with positives included).
  for (int i = 0; i < n_seq; ++i) {
    SampleIndex& sample = fb.samples[static_cast<std::size_t>(i)];
    for (int j = 0; j < n_seq; ++j) {
      if (j == i) continue;
      const SampleIndex& other = fb.samples[static_cast<std::size_t>(j)];
      sample.negatives.push_back(other.anchor);
      if (spec.negatives_include_positives) {
        sample.negatives.push_back(other.temporal);
        sample.negatives.push_back(other.physics);
      }
    }
  }
  return fb;
}

namespace {

ContrastiveBatch project_batch(const FeatureBatch& fb, const Embedder& embedder) {
  ContrastiveBatch batch;
  batch.tau = fb.tau;
  batch.include_positives_in_denominator = fb.include_positives_in_denominator;
  batch.samples = fb.samples;
  batch.slots.reserve(fb.features.size());
  for (const Eigen::VectorXd& f : fb.features) batch.slots.push_back(embedder.project(f));
  return batch;
}

}  // namespace

ContrastiveBatch build_batch(const CropCorpus& corpus, const PairSpec& spec,
                             const Embedder& embedder) {
  Rng rng(spec.seed);
  return project_batch(build_feature_batch(corpus, spec, embedder, rng), embedder);
}

TrainResult train(const CropCorpus& corpus, const PairSpec& spec,
                  const EmbedderConfig& config, int epochs, double learning_rate) {
  if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  EmbedderConfig cfg = config;
  cfg.kind = EmbedderKind::kTrainable;
  cfg.validate();

  TrainResult result;
  result.params = Embedder::init_trainable(cfg);
  ProjectionGrads grads(result.params);
  Rng rng(spec.seed);

  for (int epoch = 0; epoch < epochs; ++epoch) {
    Embedder feat_extractor(cfg, result.params);
    const FeatureBatch fb = build_feature_batch(corpus, spec, feat_extractor, rng);

    std::vector<HeadActivation> acts;
    acts.reserve(fb.features.size());
    ContrastiveBatch batch;
    batch.tau = fb.tau;
    batch.include_positives_in_denominator = fb.include_positives_in_denominator;
    batch.samples = fb.samples;
    for (const Eigen::VectorXd& f : fb.features) {
      acts.push_back(head_forward(result.params, f));
      batch.slots.push_back(acts.back().z);
    }

    result.epoch_loss.push_back(loss(batch));
    const std::vector<Eigen::VectorXd> dz = loss_grad(batch);

    grads.setZero();
    for (std::size_t i = 0; i < fb.features.size(); ++i)
      head_backward(result.params, fb.features[i], acts[i], dz[i], grads);

    result.params.w1 -= learning_rate * grads.w1;
    result.params.b1 -= learning_rate * grads.b1;
    result.params.w2 -= learning_rate * grads.w2;
    result.params.b2 -= learning_rate * grads.b2;
  }
  return result;
}

double physics_separation(const CropCorpus& corpus, const PairSpec& spec,
                          const Embedder& embedder) {
  const ContrastiveBatch batch = build_batch(corpus, spec, embedder);
  double pos = 0, neg = 0;
  long n_neg = 0;
  for (const SampleIndex& s : batch.samples) {
    const Eigen::VectorXd& anchor = batch.slots[static_cast<std::size_t>(s.anchor)];
    pos += anchor.dot(batch.slots[static_cast<std::size_t>(s.physics)]);
    for (int k : s.negatives) {
      neg += anchor.dot(batch.slots[static_cast<std::size_t>(k)]);
      ++n_neg;
    }
  }
  return pos / static_cast<double>(batch.samples.size()) - neg / static_cast<double>(n_neg);
}

GradCheckResult gradient_check(std::uint64_t seed, int batches, int dim, double step) {
  Rng rng(seed);
  const double taus[] = {0.05, 0.1, 0.5, 1.0};
  const int ks[] = {1, 4, 16};
  GradCheckResult result;

  for (int b = 0; b < batches; ++b) {
    ContrastiveBatch batch;
    batch.tau = taus[b % 4];
    const int k = ks[(b / 4) % 3];
    const int n_samples = 2 + static_cast<int>(rng.uniform_int(3));

    auto random_unit = [&]() {
      Eigen::VectorXd v(dim);
      for (int i = 0; i < dim; ++i) v[i] = rng.normal();
      return Eigen::VectorXd(v / v.norm());
    };
    for (int i = 0; i < n_samples; ++i) {
      SampleIndex s;
      s.anchor = static_cast<int>(batch.slots.size());
      batch.slots.push_back(random_unit());
      s.temporal = static_cast<int>(batch.slots.size());
      batch.slots.push_back(random_unit());
      s.physics = static_cast<int>(batch.slots.size());
      batch.slots.push_back(random_unit());
      for (int j = 0; j < k; ++j) {
        s.negatives.push_back(static_cast<int>(batch.slots.size()));
        batch.slots.push_back(random_unit());
      }
      batch.samples.push_back(std::move(s));
    }
    // Occasionally tie negatives to other anchors so shared-slot
    // accumulation is exercised too.
    if (b % 5 == 0 && n_samples >= 2) {
      for (std::size_t i = 0; i < batch.samples.size(); ++i)
        batch.samples[i].negatives[0] =
            batch.samples[(i + 1) % batch.samples.size()].anchor;
    }

    const std::vector<Eigen::VectorXd> analytic = loss_grad(batch);
    for (std::size_t slot = 0; slot < batch.slots.size(); ++slot) {
      for (int d = 0; d < dim; ++d) {
        const double orig = batch.slots[slot][d];
        batch.slots[slot][d] = orig + step;
        const double up = loss(batch);
        batch.slots[slot][d] = orig - step;
        const double down = loss(batch);
        batch.slots[slot][d] = orig;
        const double fd = (up - down) / (2.0 * step);
        const double a = analytic[slot][d];
        const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-6});
        result.max_rel_error = std::max(result.max_rel_error, rel);
        result.evaluations += 2;
      }
    }
    ++result.batches;
  }
  return result;
}

CropCorpus load_crop_corpus(const std::filesystem::path& dir, double depth_scale) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DataError("corpus directory not found: " + dir.string());
  CropCorpus corpus;
  std::vector<fs::path> seq_dirs;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_directory()) seq_dirs.push_back(entry.path());
  std::sort(seq_dirs.begin(), seq_dirs.end());

  for (const fs::path& sd : seq_dirs) {
    CropSequence seq;
    seq.id = sd.filename().string();
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(sd)) {
      if (!entry.is_regular_file()) continue;
      const std::string ext = entry.path().extension().string();
      if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    const fs::path depth_dir = sd / "depth";
    const bool has_depth = fs::is_directory(depth_dir);
    int frame = 1;
    for (const fs::path& f : files) {
      seq.crops.push_back(read_image(f));
      seq.frames.push_back(frame++);
      if (has_depth) {
        const fs::path dp = depth_dir / (f.stem().string() + ".png");
        if (!fs::exists(dp)) throw DataError("missing depth map: " + dp.string());
        seq.depths.push_back(read_depth(dp, depth_scale));
      }
    }
    if (!seq.crops.empty()) corpus.sequences.push_back(std::move(seq));
  }
  return corpus;
}

}  // namespace manta
