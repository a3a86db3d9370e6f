#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Record of one CLI invocation. Holds no timestamps or host details, so
/// equal inputs give byte-identical manifests.
class RunManifest {
 public:
  explicit RunManifest(std::string command);

  void set_config(const std::string& key, nlohmann::ordered_json value);
  void set_seed(const std::string& key, std::uint64_t seed);
  void add_input(const std::string& role, const std::filesystem::path& path);
  void add_generated_input(const std::string& role, nlohmann::ordered_json recipe);
  /// Writes `bytes` to dir/name and records its hash.
  void write_output(const std::filesystem::path& dir, const std::string& name,
                    std::string_view bytes);
  /// Writes dir/manifest.json.
  void save(const std::filesystem::path& dir) const;

  const nlohmann::ordered_json& json() const { return j_; }

 private:
  nlohmann::ordered_json j_;
};
