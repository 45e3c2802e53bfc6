#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace dgpe::cli {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string sha256_hex(std::string_view bytes);

/// Writes to path + ".tmp" and renames over path. Throws IoError.
void atomic_write(const std::string& path, std::string_view bytes);

/// Reads a whole file. Throws IoError.
std::string read_file(const std::string& path);

struct FileEntry {
  std::string path;  // relative to the output directory
  std::string kind;  // json, csv or bin
  std::string sha256;
  std::size_t bytes = 0;
};

/// Collects the artifacts of one run inside an output directory.
class ArtifactWriter {
 public:
  ArtifactWriter(std::string dir, std::vector<std::string> formats);

  bool wants(std::string_view kind) const;
  /// Writes only when the kind was requested; returns whether it wrote.
  bool write(const std::string& name, std::string_view bytes, const std::string& kind);
  bool write_json(const std::string& name, const nlohmann::json& j);
  const std::vector<FileEntry>& files() const { return files_; }
  const std::string& dir() const { return dir_; }

 private:
  std::string dir_;
  std::vector<std::string> formats_;
  std::vector<FileEntry> files_;
};

void to_json(nlohmann::json& j, const FileEntry& f);

}  // namespace dgpe::cli
