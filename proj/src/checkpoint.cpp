#include "iadfp/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include <json.hpp>

namespace iadfp {

namespace {

constexpr std::array<char, 8> kMagic = {'I', 'A', 'D', 'F', 'P', 'C', 'K', 'P'};

template <typename T>
void put_le(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in, const std::filesystem::path& path) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw CheckpointError(path.string() + ": truncated checkpoint");
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

nlohmann::json header_json(const Checkpoint& ckpt) {
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t i = 0; i < ckpt.spec.layers.size(); ++i) {
    const auto& l = ckpt.spec.layers[i];
    nlohmann::json j{{"kind", std::string(to_string(l.kind))}, {"trainable", l.trainable}};
    if (l.kind == LayerKind::dense || l.kind == LayerKind::conv2d) {
      j["in"] = l.in;
      j["out"] = l.out;
      j["weight_shape"] = ckpt.params.layers[i].weight.shape;
      j["bias_shape"] = ckpt.params.layers[i].bias.shape;
    }
    if (l.kind == LayerKind::conv2d) j["kernel"] = l.kernel;
    j["name"] = "layer" + std::to_string(i) + "_" + std::string(to_string(l.kind));
    layers.push_back(std::move(j));
  }
  return {{"format", "iadfp-checkpoint"},
          {"input_shape", ckpt.spec.input_shape},
          {"num_classes", ckpt.num_classes},
          {"frozen_prefix", ckpt.frozen_prefix},
          {"layers", std::move(layers)}};
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  ckpt.spec.validate();
  if (ckpt.params.layers.size() != ckpt.spec.layers.size()) {
    throw CheckpointError("save_checkpoint: parameters do not match the network");
  }
  const std::string header = header_json(ckpt).dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, header.size());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (std::size_t i = 0; i < ckpt.spec.layers.size(); ++i) {
    if (!ckpt.spec.layers[i].has_parameters()) continue;
    for (double v : ckpt.params.layers[i].weight.values) put_le<double>(out, v);
    for (double v : ckpt.params.layers[i].bias.values) put_le<double>(out, v);
  }
  if (!out) throw CheckpointError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw CheckpointError(path.string() + ": not an iadfp checkpoint");
  }
  const auto version = get_le<std::uint32_t>(in, path);
  if (version != kCheckpointVersion) {
    throw CheckpointError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_size = get_le<std::uint64_t>(in, path);
  if (header_size > (1u << 26)) throw CheckpointError(path.string() + ": implausible header size");
  std::string header(header_size, '\0');
  if (!in.read(header.data(), static_cast<std::streamsize>(header_size))) {
    throw CheckpointError(path.string() + ": truncated header");
  }

  Checkpoint ckpt;
  try {
    const auto j = nlohmann::json::parse(header);
    ckpt.spec.input_shape = j.at("input_shape").get<Shape>();
    ckpt.num_classes = j.at("num_classes").get<int>();
    ckpt.frozen_prefix = j.at("frozen_prefix").get<std::size_t>();
    for (const auto& lj : j.at("layers")) {
      LayerSpec l = LayerSpec::of(parse_layer_kind(lj.at("kind").get<std::string>()));
      l.trainable = lj.at("trainable").get<bool>();
      LayerParams p;
      if (l.kind == LayerKind::dense || l.kind == LayerKind::conv2d) {
        l.in = lj.at("in").get<std::size_t>();
        l.out = lj.at("out").get<std::size_t>();
        if (l.kind == LayerKind::conv2d) l.kernel = lj.at("kernel").get<std::size_t>();
        p.weight = Tensor(lj.at("weight_shape").get<Shape>());
        p.bias = Tensor(lj.at("bias_shape").get<Shape>());
      }
      ckpt.spec.layers.push_back(l);
      ckpt.params.layers.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(path.string() + ": malformed header: " + e.what());
  }
  ckpt.spec.validate();

  for (auto& p : ckpt.params.layers) {
    for (double& v : p.weight.values) v = get_le<double>(in, path);
    for (double& v : p.bias.values) v = get_le<double>(in, path);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw CheckpointError(path.string() + ": trailing bytes after tensor data");
  }
  return ckpt;
}

}  // namespace iadfp
