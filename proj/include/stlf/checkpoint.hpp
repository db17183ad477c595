#ifndef STLF_CHECKPOINT_HPP
#define STLF_CHECKPOINT_HPP

#include <cstdint>
#include <filesystem>
#include <string>

#include "stlf/errors.hpp"
#include "stlf/model.hpp"

namespace stlf {

// File layout:
//   "DFC1"                     4-byte magic
//   <json header> "\n"         architecture, window, scaler, layer manifest, format_version
//   <parameters>               every tensor in manifest order, little-endian IEEE-754 binary64
//   <crc32>                    little-endian CRC-32 of the header line and parameter bytes

inline constexpr char kCheckpointMagic[4] = {'D', 'F', 'C', '1'};
inline constexpr int kCheckpointVersion = 1;

class CheckpointError : public DataError {
 public:
  using DataError::DataError;
};

class BadMagicError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

class VersionError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

class TruncatedError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

class ChecksumError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

std::string serialize_model(const Model& model);
Model deserialize_model(const std::string& bytes);

/// Writes to a temporary sibling and renames it into place.
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

/// CRC-32 over the little-endian bytes of every parameter, in manifest order.
std::uint32_t parameter_checksum(const Model& model);

}  // namespace stlf

#endif  // STLF_CHECKPOINT_HPP
