#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace voxelval::pipeline {

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Record of one command run on one case. The provenance hash covers the
/// tool version, command, parameters and the (file name, content hash) of
/// every input, so it is independent of where the inputs live on disk.
struct Provenance {
  std::string command;
  std::string case_id;
  nlohmann::json parameters;
  std::vector<std::pair<std::filesystem::path, std::string>> inputs;
  std::vector<std::pair<std::filesystem::path, std::string>> outputs;

  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);
  std::string hash() const;
  nlohmann::json to_json() const;
};

std::string tool_version();

}  // namespace voxelval::pipeline
