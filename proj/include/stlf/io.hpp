#ifndef STLF_IO_HPP
#define STLF_IO_HPP

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace stlf {

/// Writes `content` to `path` via a temporary sibling and rename, creating parent directories.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

/// Collects a command's outputs in memory and publishes them together on commit(), so a
/// failing command leaves nothing behind.
class StagedOutputs {
 public:
  void add(std::filesystem::path path, std::string content) {
    files_.emplace_back(std::move(path), std::move(content));
  }
  void commit();

 private:
  std::vector<std::pair<std::filesystem::path, std::string>> files_;
};

}  // namespace stlf

#endif  // STLF_IO_HPP
