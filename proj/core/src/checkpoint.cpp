#include "codcl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace codcl {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace {

constexpr char kMagic[6] = {'C', 'O', 'D', 'C', 'L', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw Error("checkpoint truncated");
  return value;
}

void write_tensor(std::ostream& out, const Tensor& t) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
  out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape.size()));
  for (std::size_t d : t.shape) write_pod<std::uint64_t>(out, d);
  out.write(reinterpret_cast<const char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(double)));
}

Tensor read_tensor(std::istream& in) {
  Tensor t;
  const auto name_len = read_pod<std::uint32_t>(in);
  t.name.resize(name_len);
  in.read(t.name.data(), name_len);
  const auto ndim = read_pod<std::uint32_t>(in);
  std::size_t numel = 1;
  for (std::uint32_t d = 0; d < ndim; ++d) {
    t.shape.push_back(read_pod<std::uint64_t>(in));
    numel *= t.shape.back();
  }
  t.data.resize(numel);
  in.read(reinterpret_cast<char*>(t.data.data()),
          static_cast<std::streamsize>(numel * sizeof(double)));
  if (!in) throw Error("checkpoint truncated");
  return t;
}

nlohmann::json tensor_to_json(const Tensor& t) {
  nlohmann::json j;
  j["shape"] = t.shape;
  if (t.shape.size() == 2) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < t.shape[0]; ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t c = 0; c < t.shape[1]; ++c) row.push_back(t.data[r * t.shape[1] + c]);
      rows.push_back(std::move(row));
    }
    j["data"] = std::move(rows);
  } else {
    j["data"] = t.data;
  }
  return j;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParameters& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open checkpoint for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_pod<std::uint32_t>(out, kVersion);
  const ModelConfig& cfg = params.config();
  write_pod<std::uint64_t>(out, cfg.feature_dim);
  write_pod<std::uint64_t>(out, cfg.time_dim);
  write_pod<std::uint64_t>(out, cfg.hidden_dim);
  write_pod<std::uint64_t>(out, cfg.embed_dim);
  write_pod<std::uint64_t>(out, cfg.recent_neighbors);
  write_pod<double>(out, cfg.bn_momentum);
  write_pod<double>(out, cfg.bn_epsilon);
  write_pod<std::uint8_t>(out, cfg.disable_time_encoding ? 1 : 0);
  write_pod<std::uint32_t>(out,
                           static_cast<std::uint32_t>(static_cast<int>(kTensorCount) + static_cast<int>(kBufferCount)));
  for (const Tensor& t : params.tensors()) write_tensor(out, t);
  for (const Tensor& t : params.buffers()) write_tensor(out, t);
  if (!out) throw Error("failed writing checkpoint: " + path);
}

ModelParameters load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint: " + path);
  char magic[6];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw Error("not a codcl checkpoint: " + path);
  }
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kVersion) {
    throw Error("unsupported checkpoint version " + std::to_string(version));
  }
  ModelConfig cfg;
  cfg.feature_dim = read_pod<std::uint64_t>(in);
  cfg.time_dim = read_pod<std::uint64_t>(in);
  cfg.hidden_dim = read_pod<std::uint64_t>(in);
  cfg.embed_dim = read_pod<std::uint64_t>(in);
  cfg.recent_neighbors = read_pod<std::uint64_t>(in);
  cfg.bn_momentum = read_pod<double>(in);
  cfg.bn_epsilon = read_pod<double>(in);
  cfg.disable_time_encoding = read_pod<std::uint8_t>(in) != 0;

  ModelParameters params = make_empty_parameters(cfg);
  const auto count = read_pod<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    Tensor t = read_tensor(in);
    Tensor* target = nullptr;
    for (Tensor& cand : params.tensors()) {
      if (cand.name == t.name) target = &cand;
    }
    for (Tensor& cand : params.buffers()) {
      if (cand.name == t.name) target = &cand;
    }
    if (target == nullptr) throw Error("unknown tensor in checkpoint: " + t.name);
    if (target->shape != t.shape) throw Error("shape mismatch for tensor " + t.name);
    target->data = std::move(t.data);
  }
  return params;
}

void export_parameters_json(const std::string& path, const ModelParameters& params) {
  nlohmann::json j;
  j["format"] = "codcl-parameters";
  j["version"] = kVersion;
  const ModelConfig& cfg = params.config();
  j["config"] = {
      {"feature_dim", cfg.feature_dim},
      {"time_dim", cfg.time_dim},
      {"hidden_dim", cfg.hidden_dim},
      {"embed_dim", cfg.embed_dim},
      {"recent_neighbors", cfg.recent_neighbors},
      {"bn_momentum", cfg.bn_momentum},
      {"bn_epsilon", cfg.bn_epsilon},
      {"disable_time_encoding", cfg.disable_time_encoding},
  };
  nlohmann::json tensors;
  for (const Tensor& t : params.tensors()) tensors[t.name] = tensor_to_json(t);
  for (const Tensor& t : params.buffers()) tensors[t.name] = tensor_to_json(t);
  j["tensors"] = std::move(tensors);
  std::ofstream out(path);
  if (!out) throw Error("cannot open json export for writing: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace codcl
