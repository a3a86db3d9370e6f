#include "manifest.hpp"

#include <array>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include <openssl/evp.h>

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 15];
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return sha256_hex(bytes);
}

RunManifest::RunManifest(std::string command) {
  j_["command"] = std::move(command);
  j_["config"] = nlohmann::ordered_json::object();
  j_["seeds"] = nlohmann::ordered_json::object();
  j_["inputs"] = nlohmann::ordered_json::object();
  j_["outputs"] = nlohmann::ordered_json::object();
}

void RunManifest::set_config(const std::string& key, nlohmann::ordered_json value) {
  j_["config"][key] = std::move(value);
}

void RunManifest::set_seed(const std::string& key, std::uint64_t seed) { j_["seeds"][key] = seed; }

void RunManifest::add_input(const std::string& role, const std::filesystem::path& path) {
  j_["inputs"][role] = {{"path", path.string()}, {"sha256", sha256_file(path)}};
}

void RunManifest::add_generated_input(const std::string& role, nlohmann::ordered_json recipe) {
  j_["inputs"][role] = {{"generated", std::move(recipe)}};
}

void RunManifest::write_output(const std::filesystem::path& dir, const std::string& name,
                               std::string_view bytes) {
  const auto path = dir / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("cannot write " + path.string());
  j_["outputs"][name] = sha256_hex(bytes);
}

void RunManifest::save(const std::filesystem::path& dir) const {
  const auto path = dir / "manifest.json";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j_.dump(2) << '\n';
}
