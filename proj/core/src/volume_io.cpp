#include "tractpipe/volume_io.hpp"

#include <cmath>

#include <json.hpp>

#include "binary_io.hpp"

namespace tractpipe {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kOrder = "c-fastest-xyz";

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void write_header(const fs::path& base, const Dims& dims, int channels, const char* dtype,
                  const std::string& kind) {
  json h;
  h["dims"] = {dims.x, dims.y, dims.z};
  h["channels"] = channels;
  h["dtype"] = dtype;
  h["order"] = kOrder;
  if (!kind.empty()) h["kind"] = kind;
  detail::write_text(volume_header_path(base), h.dump(2) + "\n");
}

std::size_t element_count(const VolumeHeader& h) {
  return h.dims.voxels() * static_cast<std::size_t>(h.channels);
}

}  // namespace

fs::path volume_base(const fs::path& path) {
  std::string s = path.string();
  for (const char* suffix : {".vol.json", ".vol.bin"}) {
    if (ends_with(s, suffix)) {
      s.resize(s.size() - std::char_traits<char>::length(suffix));
      break;
    }
  }
  return s;
}

fs::path volume_header_path(const fs::path& base) {
  return volume_base(base).string() + ".vol.json";
}

fs::path volume_payload_path(const fs::path& base) {
  return volume_base(base).string() + ".vol.bin";
}

bool volume_exists(const fs::path& base) {
  return fs::exists(volume_header_path(base)) && fs::exists(volume_payload_path(base));
}

void save_volume(const RealVolume& vol, const fs::path& base, const std::string& kind) {
  write_header(base, vol.dims(), vol.channels(), "f32", kind);
  detail::write_le<float>(volume_payload_path(base), vol.data());
}

void save_volume(const LabelVolume& vol, const fs::path& base, const std::string& kind) {
  write_header(base, vol.dims(), vol.channels(), "u8", kind);
  detail::write_le<std::uint8_t>(volume_payload_path(base), vol.data());
}

VolumeHeader read_volume_header(const fs::path& base) {
  const auto path = volume_header_path(base);
  if (!fs::exists(path)) throw IoError("volume header not found: " + path.string());
  json h;
  try {
    h = json::parse(detail::read_text(path));
  } catch (const json::exception& e) {
    throw FormatError("malformed volume header " + path.string() + ": " + e.what());
  }
  VolumeHeader out;
  try {
    const auto& dims = h.at("dims");
    if (!dims.is_array() || dims.size() != 3) throw FormatError("dims must have 3 entries");
    out.dims = Dims{dims[0].get<int>(), dims[1].get<int>(), dims[2].get<int>()};
    out.channels = h.at("channels").get<int>();
    const auto dtype = h.at("dtype").get<std::string>();
    if (dtype == "f32") {
      out.dtype = DType::F32;
    } else if (dtype == "u8") {
      out.dtype = DType::U8;
    } else {
      throw FormatError("unsupported dtype '" + dtype + "'");
    }
    if (h.at("order").get<std::string>() != kOrder) throw FormatError("unsupported order");
    if (h.contains("kind")) out.kind = h["kind"].get<std::string>();
  } catch (const json::exception& e) {
    throw FormatError("malformed volume header " + path.string() + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError("malformed volume header " + path.string() + ": " + e.what());
  }
  if (!out.dims.valid() || out.channels <= 0) {
    throw FormatError("malformed volume header " + path.string() + ": non-positive extents");
  }
  return out;
}

RealVolume load_real_volume(const fs::path& base) {
  const auto h = read_volume_header(base);
  if (h.dtype != DType::F32) throw FormatError("expected f32 volume: " + base.string());
  auto values = detail::read_le<float>(volume_payload_path(base), element_count(h));
  for (float v : values) {
    if (!std::isfinite(v)) throw FormatError("non-finite value in payload: " + base.string());
  }
  return RealVolume(h.dims, h.channels, std::move(values));
}

LabelVolume load_label_volume(const fs::path& base) {
  const auto h = read_volume_header(base);
  if (h.dtype != DType::U8) throw FormatError("expected u8 volume: " + base.string());
  auto values = detail::read_le<std::uint8_t>(volume_payload_path(base), element_count(h));
  LabelVolume vol(h.dims, h.channels, std::move(values));
  if (!is_binary(vol)) throw FormatError("label payload contains values other than 0/1: " + base.string());
  return vol;
}

AnyVolume load_volume(const fs::path& base) {
  const auto h = read_volume_header(base);
  if (h.dtype == DType::U8) return load_label_volume(base);
  return load_real_volume(base);
}

}  // namespace tractpipe
