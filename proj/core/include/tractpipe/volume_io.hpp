#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <variant>

#include "tractpipe/volume.hpp"

namespace tractpipe {

// On-disk volume format: `<base>.vol.json` holds
//   {"dims":[X,Y,Z],"channels":C,"dtype":"f32"|"u8","order":"c-fastest-xyz"}
// (plus an optional "kind" tag) and `<base>.vol.bin` holds the raw
// little-endian payload in canonical layout.
enum class DType { F32, U8 };

struct VolumeHeader {
  Dims dims;
  int channels = 0;
  DType dtype = DType::F32;
  std::string kind;  // empty when absent
};

// Strips a trailing ".vol.json" / ".vol.bin" if present.
std::filesystem::path volume_base(const std::filesystem::path& path);
std::filesystem::path volume_header_path(const std::filesystem::path& base);
std::filesystem::path volume_payload_path(const std::filesystem::path& base);

void save_volume(const RealVolume& vol, const std::filesystem::path& base,
                 const std::string& kind = {});
void save_volume(const LabelVolume& vol, const std::filesystem::path& base,
                 const std::string& kind = {});

VolumeHeader read_volume_header(const std::filesystem::path& base);

using AnyVolume = std::variant<RealVolume, LabelVolume>;

// Dispatches on the header dtype.
AnyVolume load_volume(const std::filesystem::path& base);
RealVolume load_real_volume(const std::filesystem::path& base);
LabelVolume load_label_volume(const std::filesystem::path& base);

bool volume_exists(const std::filesystem::path& base);

}  // namespace tractpipe
