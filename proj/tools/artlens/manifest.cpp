#include "manifest.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <memory>

#include <artlens.hpp>

namespace artlens::cli {

std::string sha256_file(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw IoError("sha256 failed for " + path.string());
  std::string hex;
  hex.reserve(2 * len);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

RunManifest::RunManifest(std::string command)
    : command_(std::move(command)), start_(std::chrono::steady_clock::now()) {}

void RunManifest::add_input(const std::filesystem::path& path) {
  inputs_.emplace_back(path.string(), sha256_file(path));
}

void RunManifest::add_output(const std::filesystem::path& path) {
  outputs_.push_back(path.string());
}

nlohmann::json RunManifest::finish() const {
  nlohmann::json inputs = nlohmann::json::array();
  for (const auto& [path, digest] : inputs_) inputs.push_back({{"path", path}, {"sha256", digest}});
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start_;
  return {{"command", command_},   {"config", config_},
          {"inputs", inputs},      {"outputs", outputs_},
          {"seed", seed_},         {"version", kVersion},
          {"wall_clock_seconds", elapsed.count()}};
}

void RunManifest::write(const std::filesystem::path& dir) const {
  detail::write_file(dir / (command_ + ".manifest.json"), finish().dump(2) + "\n");
}

} // namespace artlens::cli
