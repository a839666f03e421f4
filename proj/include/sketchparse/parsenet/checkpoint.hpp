#pragma once

#include <array>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "sketchparse/parsenet/model.hpp"

namespace sketchparse::parsenet {

/// Unreadable or inconsistent checkpoint. The message names the byte offset
/// where decoding failed, when there is one.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Magic = std::array<char, 4>;
inline constexpr Magic kParserMagic{'S', 'K', 'P', 'C'};
inline constexpr Magic kRouterMagic{'S', 'K', 'R', 'C'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  TensorF value;
};

struct CheckpointData {
  taxonomy::Digest digest{};
  std::vector<NamedTensor> tensors;
};

/// Layout (little endian): magic[4], u32 version, digest[32], u32 count, then
/// per tensor u16 name length, name bytes, u8 rank, u32 dims[rank], f32 data.
std::string encode_checkpoint(const Magic& magic, const CheckpointData& data);
CheckpointData decode_checkpoint(std::string_view bytes, const Magic& magic);

void write_checkpoint(const std::filesystem::path& path, const Magic& magic, const CheckpointData& data);
CheckpointData read_checkpoint(const std::filesystem::path& path, const Magic& magic);

/// Throws CheckpointError when `got` differs from `expected`.
void check_digest(const taxonomy::Digest& got, const taxonomy::Digest& expected, const std::string& what);

void save_checkpoint(const Model<float>& m, const std::filesystem::path& path);
/// Rebuilds the model from the stored architecture; refuses a checkpoint
/// trained against a different taxonomy.
Model<float> load_checkpoint(const std::filesystem::path& path, const taxonomy::Taxonomy& expected);

}  // namespace sketchparse::parsenet
