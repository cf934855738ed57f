#include "dkd/io/manifest.hpp"

#include <array>
#include <ctime>
#include <fstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "dkd/error.hpp"

namespace dkd::io {

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(fmt::format("cannot open '{}' for hashing", path.string()));
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw RunError("SHA-256 initialisation failed");
  }
  std::array<char, 1 << 16> buffer{};
  while (in) {
    in.read(buffer.data(), buffer.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buffer.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &length);
  std::string hex;
  for (unsigned int i = 0; i < length; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

void RunManifest::add_input(const std::filesystem::path& path) {
  input_digests[path.string()] = sha256_file(path);
}

nlohmann::ordered_json RunManifest::provenance() const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["tool_version"] = tool_version;
  j["config"] = config;
  j["input_digests"] = input_digests;
  return j;
}

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& value) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RunError(fmt::format("cannot open '{}' for writing", path.string()));
  out << value.dump(2) << '\n';
}

void write_manifest(const std::filesystem::path& dir, const RunManifest& manifest) {
  const auto finished = std::chrono::system_clock::now();
  const std::time_t started = std::chrono::system_clock::to_time_t(manifest.started);
  std::tm utc{};
  gmtime_r(&started, &utc);
  std::array<char, 32> stamp{};
  std::strftime(stamp.data(), stamp.size(), "%Y-%m-%dT%H:%M:%SZ", &utc);

  auto j = manifest.provenance();
  j["started_at"] = stamp.data();
  j["wall_clock_seconds"] =
      std::chrono::duration<double>(finished - manifest.started).count();
  write_json(dir / "manifest.json", j);
}

}  // namespace dkd::io
