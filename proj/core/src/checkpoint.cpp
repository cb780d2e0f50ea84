// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#include "glossplat/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

namespace glossplat {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'G', 'L', 'S', 'P', 'C', 'K', 'P', 'T'};

enum class DType : std::uint8_t { kF64 = 1, kBytes = 2 };

struct Record {
  std::string name;
  DType dtype = DType::kF64;
  std::vector<std::uint64_t> shape;
  std::string payload;

  std::size_t elements() const {
    std::size_t n = 1;
    for (auto s : shape) n *= s;
    return n;
  }
};

class Writer {
 public:
  template <typename T>
  void pod(const T& v) {
    out_.append(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void bytes(const std::string& s) { out_ += s; }
  std::string& str() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& s) : s_(s) {}
  template <typename T>
  T pod() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, s_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string out = s_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  bool done() const { return pos_ == s_.size(); }

 private:
  void need(std::size_t n) const {
    if (n > s_.size() - pos_) throw CheckpointError("checkpoint is truncated");
  }
  const std::string& s_;
  std::size_t pos_ = 0;
};

Record f64(std::string name, std::vector<std::uint64_t> shape, const double* data) {
  Record r{std::move(name), DType::kF64, std::move(shape), {}};
  r.payload.assign(reinterpret_cast<const char*>(data), r.elements() * sizeof(double));
  return r;
}

Record f64(std::string name, std::vector<std::uint64_t> shape, const std::vector<double>& data) {
  return f64(std::move(name), std::move(shape), data.data());
}

Record text(std::string name, const std::string& s) {
  return {std::move(name), DType::kBytes, {s.size()}, s};
}

template <typename Get>
Record surfel_field(const std::string& name, const std::vector<Surfel>& surfels, int dim, Get get) {
  std::vector<double> v;
  v.reserve(surfels.size() * dim);
  for (const auto& s : surfels) {
    const double* p = get(s);
    v.insert(v.end(), p, p + dim);
  }
  std::vector<std::uint64_t> shape{surfels.size()};
  if (dim > 1) shape.push_back(static_cast<std::uint64_t>(dim));
  return f64(name, shape, v);
}

using SurfelSetter = std::function<double*(Surfel&)>;

struct SurfelField {
  int dim;
  std::function<const double*(const Surfel&)> get;
  SurfelSetter set;
};

const std::map<std::string, SurfelField>& surfel_fields() {
  static const std::map<std::string, SurfelField> f = {
      {"surfels/center", {3, [](const Surfel& s) { return s.center.data(); }, [](Surfel& s) { return s.center.data(); }}},
      {"surfels/rotation",
       {4, [](const Surfel& s) { return s.rotation.data(); }, [](Surfel& s) { return s.rotation.data(); }}},
      {"surfels/log_scales",
       {2, [](const Surfel& s) { return s.log_scales.data(); }, [](Surfel& s) { return s.log_scales.data(); }}},
      {"surfels/opacity", {1, [](const Surfel& s) { return &s.raw_opacity; }, [](Surfel& s) { return &s.raw_opacity; }}},
      {"surfels/diffuse",
       {3, [](const Surfel& s) { return s.raw_diffuse.data(); }, [](Surfel& s) { return s.raw_diffuse.data(); }}},
      {"surfels/roughness",
       {1, [](const Surfel& s) { return &s.raw_roughness; }, [](Surfel& s) { return &s.raw_roughness; }}},
      {"surfels/tint", {3, [](const Surfel& s) { return s.raw_tint.data(); }, [](Surfel& s) { return s.raw_tint.data(); }}},
      {"surfels/feature",
       {4, [](const Surfel& s) { return s.feature.data(); }, [](Surfel& s) { return s.feature.data(); }}},
  };
  return f;
}

nlohmann::json options_json(const Model& m, std::uint64_t seed) {
  const auto& p = m.options.prefilter;
  return {{"prefilter",
           {{"level_count", p.level_count},
            {"samples_per_texel", p.samples_per_texel},
            {"seed", p.seed},
            {"lod_bias", p.lod_bias}}},
          {"single_level_env", m.options.single_level_env},
          {"residual_kind", m.options.residual_kind == ResidualKind::kSh ? "sh" : "mlp"},
          {"mlp_activation", m.mlp.activation() == Activation::kIdentity ? "identity" : "relu"},
          {"mlp_features", m.mlp.features()},
          {"mlp_pixel_features", m.mlp.pixel_features()},
          {"seed", seed}};
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ck) {
  const Model& m = ck.model;
  std::vector<Record> recs;
  recs.push_back(text("meta/options", options_json(m, ck.seed).dump()));
  recs.push_back(text("meta/config", ck.config_json));
  for (const auto& [name, f] : surfel_fields()) recs.push_back(surfel_field(name, m.surfels, f.dim, f.get));
  if (!m.sh.empty()) {
    std::vector<double> v;
    for (const auto& c : m.sh) v.insert(v.end(), c.begin(), c.end());
    recs.push_back(f64("sh", {m.sh.size(), kShBasisCount, 3}, v));
  }
  const auto R = static_cast<std::uint64_t>(m.env.size());
  recs.push_back(f64("env/base", {6, R, R, 3}, m.env.data()));
  if (m.mip.levels() > 0)
    recs.push_back(f64("mipmap",
                       {static_cast<std::uint64_t>(m.mip.levels()), static_cast<std::uint64_t>(m.mip.height()),
                        static_cast<std::uint64_t>(m.mip.width()), static_cast<std::uint64_t>(m.mip.features())},
                       m.mip.data()));
  for (std::size_t i = 0; i < m.mlp.layers().size(); ++i) {
    const auto& l = m.mlp.layers()[i];
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w = l.weight;
    const std::string base = "mlp/" + std::to_string(i);
    recs.push_back(f64(base + "/weight",
                       {static_cast<std::uint64_t>(w.rows()), static_cast<std::uint64_t>(w.cols())}, w.data()));
    recs.push_back(f64(base + "/bias", {static_cast<std::uint64_t>(l.bias.size())}, l.bias.data()));
  }

  Writer w;
  w.bytes(std::string(kMagic, sizeof(kMagic)));
  w.pod(kCheckpointVersion);
  w.pod(static_cast<std::uint32_t>(recs.size()));
  for (const auto& r : recs) {
    w.pod(static_cast<std::uint32_t>(r.name.size()));
    w.bytes(r.name);
    w.pod(static_cast<std::uint8_t>(r.dtype));
    w.pod(static_cast<std::uint32_t>(r.shape.size()));
    for (auto s : r.shape) w.pod(s);
    w.pod(static_cast<std::uint64_t>(r.payload.size()));
    w.bytes(r.payload);
  }
  return std::move(w.str());
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  Reader rd(bytes);
  if (bytes.size() < sizeof(kMagic)) throw CheckpointError("checkpoint is truncated");
  if (rd.bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) throw CheckpointError("not a checkpoint file");
  const auto version = rd.pod<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  const auto count = rd.pod<std::uint32_t>();
  std::map<std::string, Record> recs;
  for (std::uint32_t k = 0; k < count; ++k) {
    Record r;
    r.name = rd.bytes(rd.pod<std::uint32_t>());
    const auto dt = rd.pod<std::uint8_t>();
    if (dt != static_cast<std::uint8_t>(DType::kF64) && dt != static_cast<std::uint8_t>(DType::kBytes))
      throw CheckpointError("unknown dtype in tensor " + r.name);
    r.dtype = static_cast<DType>(dt);
    const auto ndim = rd.pod<std::uint32_t>();
    if (ndim > 8) throw CheckpointError("bad rank in tensor " + r.name);
    for (std::uint32_t d = 0; d < ndim; ++d) r.shape.push_back(rd.pod<std::uint64_t>());
    const auto size = rd.pod<std::uint64_t>();
    const std::size_t elem = r.dtype == DType::kF64 ? sizeof(double) : 1;
    if (size != r.elements() * elem) throw CheckpointError("payload size does not match shape in tensor " + r.name);
    r.payload = rd.bytes(size);
    recs[r.name] = std::move(r);
  }
  if (!rd.done()) throw CheckpointError("trailing bytes after the last tensor");

  auto take = [&](const std::string& name) -> Record {
    auto it = recs.find(name);
    if (it == recs.end()) throw CheckpointError("missing tensor " + name);
    Record r = std::move(it->second);
    recs.erase(it);
    return r;
  };
  auto doubles = [](const Record& r) {
    if (r.dtype != DType::kF64) throw CheckpointError("tensor " + r.name + " is not f64");
    std::vector<double> v(r.elements());
    std::memcpy(v.data(), r.payload.data(), r.payload.size());
    return v;
  };

  Checkpoint ck;
  Model& m = ck.model;
  nlohmann::json opts;
  try {
    opts = nlohmann::json::parse(take("meta/options").payload);
    ck.config_json = take("meta/config").payload;
    const auto& p = opts.at("prefilter");
    m.options.prefilter.level_count = p.at("level_count").get<int>();
    m.options.prefilter.samples_per_texel = p.at("samples_per_texel").get<int>();
    m.options.prefilter.seed = p.at("seed").get<std::uint64_t>();
    m.options.prefilter.lod_bias = p.at("lod_bias").get<double>();
    m.options.single_level_env = opts.at("single_level_env").get<bool>();
    m.options.residual_kind = opts.at("residual_kind").get<std::string>() == "sh" ? ResidualKind::kSh : ResidualKind::kMlp;
    ck.seed = opts.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint metadata: ") + e.what());
  }

  const Record center = take("surfels/center");
  const std::size_t N = center.shape.empty() ? 0 : center.shape[0];
  m.surfels.assign(N, Surfel{});
  recs["surfels/center"] = center;
  for (const auto& [name, f] : surfel_fields()) {
    const Record r = take(name);
    if (r.shape.empty() || r.shape[0] != N || r.elements() != N * static_cast<std::size_t>(f.dim))
      throw CheckpointError("shape mismatch in tensor " + name);
    const auto v = doubles(r);
    for (std::size_t i = 0; i < N; ++i) std::copy_n(v.data() + i * f.dim, f.dim, f.set(m.surfels[i]));
  }
  if (recs.count("sh")) {
    const Record r = take("sh");
    if (r.elements() != N * kShBasisCount * 3) throw CheckpointError("shape mismatch in tensor sh");
    const auto v = doubles(r);
    m.sh.resize(N);
    for (std::size_t i = 0; i < N; ++i) std::copy_n(v.data() + i * kShBasisCount * 3, kShBasisCount * 3, m.sh[i].data());
  }
  {
    const Record r = take("env/base");
    if (r.shape.size() != 4 || r.shape[0] != 6 || r.shape[1] != r.shape[2] || r.shape[3] != 3)
      throw CheckpointError("shape mismatch in tensor env/base");
    m.env = CubeImage(static_cast<int>(r.shape[1]));
    m.env.data() = doubles(r);
  }
  if (recs.count("mipmap")) {
    const Record r = take("mipmap");
    if (r.shape.size() != 4) throw CheckpointError("shape mismatch in tensor mipmap");
    m.mip = SphericalFeatureMipmap(static_cast<int>(r.shape[0]), static_cast<int>(r.shape[1]),
                                   static_cast<int>(r.shape[2]), static_cast<int>(r.shape[3]));
    m.mip.data() = doubles(r);
  }
  std::vector<ResidualMlp::Layer> layers;
  for (int i = 0;; ++i) {
    const std::string base = "mlp/" + std::to_string(i);
    if (!recs.count(base + "/weight")) break;
    const Record w = take(base + "/weight");
    const Record b = take(base + "/bias");
    if (w.shape.size() != 2 || b.shape.size() != 1 || b.shape[0] != w.shape[0])
      throw CheckpointError("shape mismatch in tensor " + base);
    const auto wv = doubles(w);
    ResidualMlp::Layer l;
    l.weight = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        wv.data(), static_cast<Eigen::Index>(w.shape[0]), static_cast<Eigen::Index>(w.shape[1]));
    const auto bv = doubles(b);
    l.bias = Eigen::Map<const Eigen::VectorXd>(bv.data(), static_cast<Eigen::Index>(bv.size()));
    layers.push_back(std::move(l));
  }
  if (!recs.empty()) throw CheckpointError("unknown tensor " + recs.begin()->first);
  if (!layers.empty()) {
    try {
      m.mlp = ResidualMlp(opts.at("mlp_features").get<int>(), opts.at("mlp_pixel_features").get<int>(),
                          std::move(layers),
                          opts.at("mlp_activation").get<std::string>() == "identity" ? Activation::kIdentity
                                                                                     : Activation::kRelu);
    } catch (const std::invalid_argument& e) {
      throw CheckpointError(std::string("inconsistent mlp tensors: ") + e.what());
    }
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::string bytes = serialize_checkpoint(ck);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace glossplat
