#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "temp_dir.hpp"
#include "tractpipe/volume_io.hpp"

using namespace tractpipe;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void overwrite(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

}  // namespace

TEST_SUITE("volume_io") {
  TEST_CASE("real volume round-trip is bit exact") {
    TempDir dir("tp_io");
    std::mt19937_64 rng(11);
    const auto v = oracle::random_volume(rng, Dims{5, 3, 4}, 3, -1e3, 1e3);
    const auto base = dir.path() / "peaks";
    save_volume(v, base, "peaks");
    const auto header = read_volume_header(base);
    CHECK(header.dims == v.dims());
    CHECK(header.channels == 3);
    CHECK(header.dtype == DType::F32);
    CHECK(header.kind == "peaks");
    CHECK(load_real_volume(base) == v);
    CHECK(std::filesystem::file_size(volume_payload_path(base)) == v.size() * 4);
  }

  TEST_CASE("label volume round-trip and dtype dispatch") {
    TempDir dir("tp_io");
    std::mt19937_64 rng(12);
    const auto l = oracle::random_mask(rng, Dims{4, 4, 2}, 3, 0.3);
    const auto base = dir.path() / "labels";
    save_volume(l, base);
    CHECK(std::holds_alternative<LabelVolume>(load_volume(base)));
    CHECK(load_label_volume(base) == l);
    CHECK_THROWS_AS(load_real_volume(base), FormatError);
  }

  TEST_CASE("payload is little-endian in canonical order") {
    TempDir dir("tp_io");
    RealVolume v(Dims{2, 1, 1}, 1, std::vector<float>{1.0f, -2.0f});
    save_volume(v, dir.path() / "v");
    const auto bytes = slurp(volume_payload_path(dir.path() / "v"));
    REQUIRE(bytes.size() == 8);
    // 1.0f = 0x3f800000, -2.0f = 0xc0000000
    CHECK(static_cast<unsigned char>(bytes[3]) == 0x3f);
    CHECK(static_cast<unsigned char>(bytes[2]) == 0x80);
    CHECK(static_cast<unsigned char>(bytes[7]) == 0xc0);
  }

  TEST_CASE("header and payload paths accept either file name") {
    CHECK(volume_base("a/b.vol.json") == std::filesystem::path("a/b"));
    CHECK(volume_base("a/b.vol.bin") == std::filesystem::path("a/b"));
    CHECK(volume_base("a/b") == std::filesystem::path("a/b"));
  }

  TEST_CASE("truncated payload is rejected") {
    TempDir dir("tp_io");
    RealVolume v(Dims{3, 3, 3}, 2, 1.0f);
    const auto base = dir.path() / "v";
    save_volume(v, base);
    auto bytes = slurp(volume_payload_path(base));
    bytes.resize(bytes.size() - 4);
    overwrite(volume_payload_path(base), bytes);
    CHECK_THROWS_AS(load_real_volume(base), FormatError);
  }

  TEST_CASE("non-finite payload is rejected") {
    TempDir dir("tp_io");
    RealVolume v(Dims{2, 2, 2}, 1, 0.5f);
    v.at(1, 1, 0) = std::numeric_limits<float>::quiet_NaN();
    save_volume(v, dir.path() / "nan");
    CHECK_THROWS_AS(load_real_volume(dir.path() / "nan"), FormatError);
    v.at(1, 1, 0) = std::numeric_limits<float>::infinity();
    save_volume(v, dir.path() / "inf");
    CHECK_THROWS_AS(load_real_volume(dir.path() / "inf"), FormatError);
  }

  TEST_CASE("non-binary labels are rejected") {
    TempDir dir("tp_io");
    LabelVolume l(Dims{2, 2, 2}, 1);
    l.at(0, 0, 0) = 2;
    save_volume(l, dir.path() / "l");
    CHECK_THROWS_AS(load_label_volume(dir.path() / "l"), FormatError);
  }

  TEST_CASE("malformed headers") {
    TempDir dir("tp_io");
    const auto base = dir.path() / "h";
    RealVolume v(Dims{2, 2, 2}, 1);
    save_volume(v, base);
    const auto header = volume_header_path(base);
    overwrite(header, "{not json");
    CHECK_THROWS_AS(read_volume_header(base), FormatError);
    overwrite(header, R"({"dims":[2,2],"channels":1,"dtype":"f32","order":"c-fastest-xyz"})");
    CHECK_THROWS_AS(read_volume_header(base), FormatError);
    overwrite(header, R"({"dims":[2,2,2],"channels":1,"dtype":"f64","order":"c-fastest-xyz"})");
    CHECK_THROWS_AS(read_volume_header(base), FormatError);
    overwrite(header, R"({"dims":[2,2,2],"channels":1,"dtype":"f32","order":"z-fastest"})");
    CHECK_THROWS_AS(read_volume_header(base), FormatError);
    overwrite(header, R"({"dims":[2,0,2],"channels":1,"dtype":"f32","order":"c-fastest-xyz"})");
    CHECK_THROWS_AS(read_volume_header(base), FormatError);
    // Header claims more voxels than the payload holds.
    overwrite(header, R"({"dims":[2,2,3],"channels":1,"dtype":"f32","order":"c-fastest-xyz"})");
    CHECK_THROWS_AS(load_real_volume(base), FormatError);
  }

  TEST_CASE("missing files") {
    TempDir dir("tp_io");
    CHECK_FALSE(volume_exists(dir.path() / "nope"));
    CHECK_THROWS_AS(load_volume(dir.path() / "nope"), IoError);
  }
}
