#include "treetx/numerics/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "treetx/core/errors.hpp"

namespace treetx::num {

namespace {

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t out = 0;
  for (int i = 0; i < 8; ++i) out = (out << 8) | ((v >> (8 * i)) & 0xff);
  return out;
}

void write_tensor(std::ofstream& blob, const Tensor& t) {
  for (double v : t.data()) {
    std::uint64_t bits = to_little(std::bit_cast<std::uint64_t>(v));
    blob.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
  }
}

}  // namespace

std::filesystem::path save_checkpoint(const ParamStore& params, const std::filesystem::path& manifest,
                                      const nlohmann::json& metadata) {
  auto blob_path = manifest;
  blob_path.replace_extension(".bin");
  std::ofstream blob(blob_path, std::ios::binary);
  if (!blob) throw Error("cannot write " + blob_path.string());

  nlohmann::ordered_json tensors = nlohmann::ordered_json::array();
  std::uint64_t offset = 0;
  auto emit = [&](const std::string& name, const Tensor& t, bool learnable) {
    tensors.push_back({{"name", name},
                       {"shape", t.shape()},
                       {"dtype", "f64"},
                       {"offset", offset},
                       {"learnable", learnable}});
    write_tensor(blob, t);
    offset += t.size() * sizeof(double);
  };
  for (const auto& [name, t] : params.learnable()) emit(name, t, true);
  for (const auto& [name, t] : params.fixed()) emit(name, t, false);
  blob.close();
  if (!blob) throw Error("failed writing " + blob_path.string());

  nlohmann::ordered_json j;
  j["format"] = "treetx-checkpoint";
  j["version"] = kCheckpointVersion;
  j["blob"] = blob_path.filename().string();
  j["blob_bytes"] = offset;
  j["tensors"] = std::move(tensors);
  j["metadata"] = nlohmann::ordered_json::parse(metadata.dump());
  std::ofstream out(manifest);
  if (!out) throw Error("cannot write " + manifest.string());
  out << j.dump(2) << '\n';
  return manifest;
}

Checkpoint load_checkpoint(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw Error("cannot open checkpoint " + manifest.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint manifest: " + std::string(e.what()), 0);
  }
  if (j.value("format", "") != "treetx-checkpoint") throw Error("not a treetx checkpoint manifest");
  if (j.value("version", -1) != kCheckpointVersion) {
    throw Error("checkpoint version " + std::to_string(j.value("version", -1)) +
                " does not match supported version " + std::to_string(kCheckpointVersion));
  }
  auto blob_path = manifest.parent_path() / j.at("blob").get<std::string>();
  std::ifstream blob(blob_path, std::ios::binary);
  if (!blob) throw Error("cannot open checkpoint blob " + blob_path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(blob)), std::istreambuf_iterator<char>());
  if (bytes.size() != j.at("blob_bytes").get<std::uint64_t>()) {
    throw Error("checkpoint blob has " + std::to_string(bytes.size()) + " bytes, manifest says " +
                std::to_string(j.at("blob_bytes").get<std::uint64_t>()));
  }

  Checkpoint ckpt;
  for (const auto& t : j.at("tensors")) {
    if (t.at("dtype") != "f64") throw Error("unsupported dtype " + t.at("dtype").dump());
    auto shape = t.at("shape").get<std::vector<std::size_t>>();
    const auto offset = t.at("offset").get<std::uint64_t>();
    Tensor tensor(shape);
    if (offset + tensor.size() * sizeof(double) > bytes.size()) throw Error("checkpoint tensor past end of blob");
    for (std::size_t i = 0; i < tensor.size(); ++i) {
      std::uint64_t bits;
      std::memcpy(&bits, bytes.data() + offset + i * sizeof(double), sizeof(bits));
      tensor[i] = std::bit_cast<double>(to_little(bits));
    }
    const auto name = t.at("name").get<std::string>();
    if (t.at("learnable").get<bool>()) {
      ckpt.params.add_learnable(name, std::move(tensor));
    } else {
      ckpt.params.add_fixed(name, std::move(tensor));
    }
  }
  ckpt.metadata = j.value("metadata", nlohmann::json::object());
  return ckpt;
}

}  // namespace treetx::num
