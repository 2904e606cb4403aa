#include "manta/embedder.hpp"

#include <Eigen/Dense>

#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "manta/errors.hpp"
#include "manta/rng.hpp"

namespace manta {

void EmbedderConfig::validate() const {
  if (patch_size < 4) throw std::invalid_argument("EmbedderConfig: patch_size must be >= 4");
  if (histogram_bins < 2) throw std::invalid_argument("EmbedderConfig: histogram_bins must be >= 2");
  if (canonical_size < patch_size)
    throw std::invalid_argument("EmbedderConfig: canonical_size must be >= patch_size");
  if (hidden_dim < 1) throw std::invalid_argument("EmbedderConfig: hidden_dim must be >= 1");
}

Embedding project(const Eigen::VectorXd& features, const Eigen::MatrixXd& w,
                  const Eigen::VectorXd& b) {
  if (features.size() != w.cols())
    throw std::invalid_argument("project: feature dimension mismatch");
  if (b.size() != w.rows())
    throw std::invalid_argument("project: bias dimension mismatch");
  Eigen::VectorXd u = w * features + b;
  const double n = u.norm();
  if (!(n > 0)) throw std::invalid_argument("project: zero-norm output cannot be normalized");
  return u / n;
}

ProjectionGrads::ProjectionGrads(const ProjectionParams& p)
    : w1(Eigen::MatrixXd::Zero(p.w1.rows(), p.w1.cols())),
      w2(Eigen::MatrixXd::Zero(p.w2.rows(), p.w2.cols())),
      b1(Eigen::VectorXd::Zero(p.b1.size())),
      b2(Eigen::VectorXd::Zero(p.b2.size())) {}

void ProjectionGrads::setZero() {
  w1.setZero();
  w2.setZero();
  b1.setZero();
  b2.setZero();
}

HeadActivation head_forward(const ProjectionParams& p, const Eigen::VectorXd& f) {
  if (f.size() != p.w1.cols())
    throw std::invalid_argument("head_forward: feature dimension mismatch");
  HeadActivation act;
  act.h1 = p.w1 * f + p.b1;
  act.a = act.h1.array().tanh();
  act.u = p.w2 * act.a + p.b2;
  const double n = act.u.norm();
  if (!(n > 0)) throw std::invalid_argument("head_forward: zero-norm output");
  act.z = act.u / n;
  return act;
}

void head_backward(const ProjectionParams& p, const Eigen::VectorXd& f,
                   const HeadActivation& act, const Eigen::VectorXd& dz,
                   ProjectionGrads& grads) {
  const double n = act.u.norm();
  // d/du of u/||u|| applied to dz.
  Eigen::VectorXd du = (dz - act.z * act.z.dot(dz)) / n;
  grads.w2.noalias() += du * act.a.transpose();
  grads.b2 += du;
  Eigen::VectorXd da = p.w2.transpose() * du;
  Eigen::VectorXd dh1 = da.array() * (1.0 - act.a.array().square());
  grads.w1.noalias() += dh1 * f.transpose();
  grads.b1 += dh1;
}

namespace {

Eigen::MatrixXd seeded_orthonormal_projection(int out_dim, int in_dim, std::uint64_t seed) {
  if (in_dim < out_dim)
    throw std::invalid_argument("embedder: feature dim must be >= embedding dim");
  Rng rng(seed);
  Eigen::MatrixXd g(in_dim, out_dim);
  for (Eigen::Index j = 0; j < g.cols(); ++j)
    for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = rng.normal();
  // Thin QR: columns of Q are orthonormal, so Q^T has orthonormal rows.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(in_dim, out_dim);
  return q.transpose();
}

}  // namespace

ProjectionParams Embedder::init_trainable(const EmbedderConfig& cfg) {
  Rng rng(cfg.seed);
  const int in = cfg.feature_dim();
  ProjectionParams p;
  p.w1.resize(cfg.hidden_dim, in);
  p.w2.resize(kEmbeddingDim, cfg.hidden_dim);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(in));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(cfg.hidden_dim));
  for (Eigen::Index i = 0; i < p.w1.rows(); ++i)
    for (Eigen::Index j = 0; j < p.w1.cols(); ++j) p.w1(i, j) = s1 * rng.normal();
  for (Eigen::Index i = 0; i < p.w2.rows(); ++i)
    for (Eigen::Index j = 0; j < p.w2.cols(); ++j) p.w2(i, j) = s2 * rng.normal();
  p.b1 = Eigen::VectorXd::Zero(cfg.hidden_dim);
  p.b2 = Eigen::VectorXd::Zero(kEmbeddingDim);
  return p;
}

Embedder::Embedder(EmbedderConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  if (cfg_.kind == EmbedderKind::kHandcrafted) {
    fixed_projection_ = seeded_orthonormal_projection(kEmbeddingDim, cfg_.feature_dim(), cfg_.seed);
  } else {
    params_ = init_trainable(cfg_);
  }
}

Embedder::Embedder(EmbedderConfig cfg, ProjectionParams params)
    : cfg_(cfg), params_(std::move(params)) {
  cfg_.validate();
  cfg_.kind = EmbedderKind::kTrainable;
  if (params_.w1.cols() != cfg_.feature_dim())
    throw std::invalid_argument("Embedder: projection params do not match feature dim");
}

Eigen::VectorXd Embedder::features(const Image& crop) const {
  if (crop.empty()) throw std::invalid_argument("Embedder::features: empty crop");
  const int cs = cfg_.canonical_size;
  const Image canon = resize_bilinear(crop, cs, cs);

  const int bins = cfg_.histogram_bins;
  Eigen::VectorXd hist = Eigen::VectorXd::Zero(3 * bins);
  const double npix = static_cast<double>(cs) * cs;
  for (int k = 0; k < 3; ++k)
    for (Eigen::Index y = 0; y < cs; ++y)
      for (Eigen::Index x = 0; x < cs; ++x) {
        const double v = std::clamp(canon.ch[k](y, x), 0.0, 1.0);
        int bin = std::min(static_cast<int>(v * bins), bins - 1);
        hist[k * bins + bin] += 1.0 / npix;
      }

  Channel patch = resize_bilinear(to_gray(canon), cfg_.patch_size, cfg_.patch_size);
  Eigen::VectorXd flat = Eigen::Map<Eigen::VectorXd>(patch.data(), patch.size());
  flat.array() -= flat.mean();  // drop the DC component so texture, not mean
                                // brightness, carries the patch block

  // Balance the two blocks before concatenation; a zero block stays zero.
  const double hn = hist.norm();
  if (hn > 0) hist /= hn;
  const double fn = flat.norm();
  if (fn > 1e-12) flat /= fn;
  else flat.setZero();

  Eigen::VectorXd f(hist.size() + flat.size());
  f << hist, flat;
  return f;
}

Embedding Embedder::project(const Eigen::VectorXd& features) const {
  if (cfg_.kind == EmbedderKind::kHandcrafted)
    return manta::project(features, fixed_projection_,
                          Eigen::VectorXd::Zero(fixed_projection_.rows()));
  return head_forward(params_, features).z;
}

Embedding Embedder::embed(const Image& crop) const { return project(features(crop)); }

void ProjectionParams::save(const std::filesystem::path& path) const {
  nlohmann::json j;
  auto dump_mat = [](const Eigen::MatrixXd& m) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index jj = 0; jj < m.cols(); ++jj) row.push_back(m(i, jj));
      arr.push_back(std::move(row));
    }
    return arr;
  };
  j["w1"] = dump_mat(w1);
  j["w2"] = dump_mat(w2);
  j["b1"] = std::vector<double>(b1.data(), b1.data() + b1.size());
  j["b2"] = std::vector<double>(b2.data(), b2.data() + b2.size());
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << j.dump(1) << "\n";
}

ProjectionParams ProjectionParams::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": invalid params JSON: " + e.what());
  }
  auto read_mat = [&](const char* key) {
    const auto& arr = j.at(key);
    Eigen::MatrixXd m(arr.size(), arr.empty() ? 0 : arr[0].size());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index jj = 0; jj < m.cols(); ++jj)
        m(i, jj) = arr[static_cast<std::size_t>(i)][static_cast<std::size_t>(jj)].get<double>();
    return m;
  };
  ProjectionParams p;
  try {
    p.w1 = read_mat("w1");
    p.w2 = read_mat("w2");
    const auto& b1 = j.at("b1");
    const auto& b2 = j.at("b2");
    p.b1 = Eigen::Map<const Eigen::VectorXd>(b1.get<std::vector<double>>().data(),
                                             static_cast<Eigen::Index>(b1.size()));
    p.b2 = Eigen::Map<const Eigen::VectorXd>(b2.get<std::vector<double>>().data(),
                                             static_cast<Eigen::Index>(b2.size()));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": invalid params JSON: " + e.what());
  }
  return p;
}

std::uint32_t fnv1a32(std::string_view s) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : s) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

EmbeddingStore::EmbeddingStore(int dim) : dim_(dim) {
  if (dim_ < 1) throw std::invalid_argument("EmbeddingStore: dim must be >= 1");
}

void EmbeddingStore::put(const EmbeddingKey& key, const Embedding& e) {
  if (e.size() != dim_) throw std::invalid_argument("EmbeddingStore::put: dimension mismatch");
  records_[key] = e.cast<float>();
}

std::optional<Embedding> EmbeddingStore::find(const EmbeddingKey& key) const {
  auto it = records_.find(key);
  if (it == records_.end()) return std::nullopt;
  return it->second.cast<double>();
}

namespace {

constexpr char kMagic[8] = {'M', 'N', 'T', 'A', 'E', 'M', 'B', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void EmbeddingStore::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.write(kMagic, sizeof(kMagic));
  put_u32(out, static_cast<std::uint32_t>(records_.size()));
  put_u32(out, static_cast<std::uint32_t>(dim_));
  for (const auto& [key, vec] : records_) {
    put_u32(out, key.seq_hash);
    put_u32(out, key.frame);
    put_u32(out, key.box);
    for (Eigen::Index i = 0; i < vec.size(); ++i) {
      std::uint32_t bits;
      const float f = vec[i];
      std::memcpy(&bits, &f, 4);
      put_u32(out, bits);
    }
  }
  if (!out) throw DataError("write failed: " + path.string());
}

EmbeddingStore EmbeddingStore::load(const std::filesystem::path& path, int expected_dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw DataError(path.string() + ": not an embedding store (bad magic)");
  const std::uint32_t count = get_u32(in);
  const std::uint32_t dim = get_u32(in);
  if (!in) throw DataError(path.string() + ": truncated header");
  if (expected_dim >= 0 && static_cast<int>(dim) != expected_dim)
    throw DataError(path.string() + ": store dimension " + std::to_string(dim) +
                    " does not match expected " + std::to_string(expected_dim));
  EmbeddingStore store(static_cast<int>(dim));
  for (std::uint32_t r = 0; r < count; ++r) {
    EmbeddingKey key{get_u32(in), get_u32(in), get_u32(in)};
    Eigen::VectorXf vec(dim);
    for (std::uint32_t i = 0; i < dim; ++i) {
      const std::uint32_t bits = get_u32(in);
      float f;
      std::memcpy(&f, &bits, 4);
      vec[static_cast<Eigen::Index>(i)] = f;
    }
    if (!in) throw DataError(path.string() + ": truncated record");
    store.records_[key] = std::move(vec);
  }
  return store;
}

}  // namespace manta
