#include "stlf/io.hpp"

#include <fstream>
#include <iterator>

#include "stlf/errors.hpp"

namespace stlf {

namespace fs = std::filesystem;

namespace {

fs::path temp_sibling(const fs::path& path) {
  fs::path tmp = path;
  tmp += ".tmp";
  return tmp;
}

void write_raw(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw DataError("cannot write '" + path.string() + "'");
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = temp_sibling(path);
  write_raw(tmp, content);
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path.string() + "'");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void StagedOutputs::commit() {
  std::vector<fs::path> written;
  try {
    for (const auto& [path, content] : files_) {
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      write_raw(temp_sibling(path), content);
      written.push_back(temp_sibling(path));
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& tmp : written) fs::remove(tmp, ec);
    throw;
  }
  for (const auto& [path, content] : files_) fs::rename(temp_sibling(path), path);
  files_.clear();
}

}  // namespace stlf
