#ifndef ARTLENS_TOOLS_MANIFEST_HPP
#define ARTLENS_TOOLS_MANIFEST_HPP

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace artlens::cli {

/// Hex SHA-256 of a file's exact bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Reproducibility record written next to every command's outputs.
class RunManifest {
public:
  explicit RunManifest(std::string command);

  void set_config(nlohmann::json config) { config_ = std::move(config); }
  void set_seed(std::uint64_t seed) { seed_ = seed; }
  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);

  nlohmann::json finish() const;
  void write(const std::filesystem::path& dir) const;

private:
  std::string command_;
  nlohmann::json config_ = nlohmann::json::object();
  std::uint64_t seed_ = 0;
  std::vector<std::pair<std::string, std::string>> inputs_;
  std::vector<std::string> outputs_;
  std::chrono::steady_clock::time_point start_;
};

} // namespace artlens::cli

#endif // ARTLENS_TOOLS_MANIFEST_HPP
