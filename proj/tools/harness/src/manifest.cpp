#include "harness/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <ctime>
#include <fstream>
#include <memory>

#include "heatest/error.hpp"

#ifndef HEATEST_VERSION
#define HEATEST_VERSION "unknown"
#endif

namespace heatest::harness {

namespace {

struct Hasher {
  Hasher() : ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
      throw IoError("sha256: digest init failed");
    }
  }
  void update(const void* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx.get(), data, n) != 1) throw IoError("sha256: update failed");
  }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) throw IoError("sha256: final failed");
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out += digits[md[i] >> 4];
      out += digits[md[i] & 15];
    }
    return out;
  }
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx;
};

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  Hasher h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for hashing");
  Hasher h;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

void RunManifest::record(const std::filesystem::path& dir, const std::string& file) {
  outputs.emplace_back(file, sha256_file(dir / file));
}

Json RunManifest::to_json() const {
  Json out = Json::object();
  for (const auto& [name, digest] : outputs) out[name] = digest;
  return Json{{"command", command}, {"version", version}, {"seed", seed},
              {"started", started}, {"finished", finished}, {"outputs", out},
              {"config", config}};
}

RunManifest RunManifest::from_json(const Json& j) {
  RunManifest m;
  m.command = j.value("command", "");
  m.version = j.value("version", "");
  m.seed = j.value("seed", std::uint64_t{0});
  m.started = j.value("started", "");
  m.finished = j.value("finished", "");
  if (j.contains("config")) m.config = j["config"];
  if (j.contains("outputs")) {
    for (const auto& [k, v] : j["outputs"].items()) m.outputs.emplace_back(k, v.get<std::string>());
  }
  return m;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string version_tag() { return HEATEST_VERSION; }

void write_manifest(const std::filesystem::path& dir, const RunManifest& m) {
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write manifest in '" + dir.string() + "'");
  out << m.to_json().dump(2) << '\n';
}

}  // namespace heatest::harness
