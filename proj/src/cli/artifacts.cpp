#include "cli/artifacts.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>

#include <openssl/evp.h>

namespace dgpe::cli {

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

void atomic_write(const std::string& path, std::string_view bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp + ": " + ec.message());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ArtifactWriter::ArtifactWriter(std::string dir, std::vector<std::string> formats)
    : dir_(std::move(dir)), formats_(std::move(formats)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create output directory " + dir_ + ": " + ec.message());
}

bool ArtifactWriter::wants(std::string_view kind) const {
  return std::find(formats_.begin(), formats_.end(), kind) != formats_.end();
}

bool ArtifactWriter::write(const std::string& name, std::string_view bytes, const std::string& kind) {
  if (!wants(kind)) return false;
  atomic_write((std::filesystem::path(dir_) / name).string(), bytes);
  files_.push_back({name, kind, sha256_hex(bytes), bytes.size()});
  return true;
}

bool ArtifactWriter::write_json(const std::string& name, const nlohmann::json& j) {
  return write(name, j.dump(2) + "\n", "json");
}

void to_json(nlohmann::json& j, const FileEntry& f) {
  j = nlohmann::json{{"path", f.path}, {"kind", f.kind}, {"sha256", f.sha256}, {"bytes", f.bytes}};
}

}  // namespace dgpe::cli
