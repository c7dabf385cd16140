#include "voxelval/pipeline/provenance.hpp"

#include <array>
#include <fstream>
#include <memory>

#include <openssl/evp.h>

#include "voxelval/error.hpp"

#ifndef VOXELVAL_VERSION
#define VOXELVAL_VERSION "0.0.0"
#endif

namespace voxelval::pipeline {

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) throw Error("SHA-256 init failed");
  }
  void update(const void* data, std::size_t size) {
    if (EVP_DigestUpdate(ctx_.get(), data, size) != 1) throw Error("SHA-256 update failed");
  }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int length = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), digest.data(), &length) != 1) throw Error("SHA-256 final failed");
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * length);
    for (unsigned int i = 0; i < length; ++i) {
      out.push_back(kHex[digest[i] >> 4]);
      out.push_back(kHex[digest[i] & 0xf]);
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for hashing");
  Sha256 h;
  std::array<char, 1 << 16> buffer{};
  while (in) {
    in.read(buffer.data(), buffer.size());
    if (in.gcount() > 0) h.update(buffer.data(), static_cast<std::size_t>(in.gcount()));
  }
  if (in.bad()) throw IoError("failed reading " + path.string());
  return h.hex();
}

std::string tool_version() { return VOXELVAL_VERSION; }

void Provenance::add_input(const std::filesystem::path& path) { inputs.emplace_back(path, sha256_file(path)); }

void Provenance::add_output(const std::filesystem::path& path) { outputs.emplace_back(path, sha256_file(path)); }

std::string Provenance::hash() const {
  nlohmann::json hashed;
  hashed["tool"] = "voxelval";
  hashed["version"] = tool_version();
  hashed["command"] = command;
  hashed["case_id"] = case_id;
  hashed["parameters"] = parameters;
  auto list = nlohmann::json::array();
  for (const auto& [path, digest] : inputs) list.push_back({{"name", path.filename().string()}, {"sha256", digest}});
  hashed["inputs"] = list;
  // nlohmann::json orders object keys, so dump() is canonical.
  return sha256_hex(hashed.dump());
}

nlohmann::json Provenance::to_json() const {
  auto describe = [](const auto& entries) {
    auto list = nlohmann::json::array();
    for (const auto& [path, digest] : entries) list.push_back({{"path", path.string()}, {"sha256", digest}});
    return list;
  };
  return {
      {"tool", "voxelval"},
      {"version", tool_version()},
      {"command", command},
      {"case_id", case_id},
      {"parameters", parameters},
      {"inputs", describe(inputs)},
      {"outputs", describe(outputs)},
      {"provenance_sha256", hash()},
  };
}

}  // namespace voxelval::pipeline
