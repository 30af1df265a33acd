#include <cstring>
#include <fstream>

#include "doctest.h"
#include "helpers.hpp"

#include "pvgen/nifti.hpp"
#include "pvgen/rng.hpp"

using namespace pvgen;

namespace {

std::vector<char> slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

template <typename T>
T field_at(const std::vector<char>& bytes, std::size_t offset) {
  T v;
  std::memcpy(&v, bytes.data() + offset, sizeof v);
  return v;
}

}  // namespace

TEST_SUITE("nifti") {

TEST_CASE("float32 intensity round trip is bit-exact") {
  testing::TempDir dir;
  const Grid g({7, 5, 3}, {0.5, 1.25, 3.0});
  RandomStream rng(1, 0, 0);
  const IntensityVolume v = testing::volume_from(g, [&](int, int, int) { return rng.normal(0, 100); }, 2);
  write_nifti(dir / "a.nii", v);
  const IntensityVolume r = read_nifti_intensity(dir / "a.nii");
  CHECK(r.grid() == g);
  CHECK(r.channels() == 2);
  CHECK(std::memcmp(r.data().data(), v.data().data(), v.data().size_bytes()) == 0);
}

TEST_CASE("label round trips for every integer type") {
  testing::TempDir dir;
  const Grid g({4, 3, 2}, {1, 1, 2});
  std::vector<std::int32_t> data(g.voxel_count());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<std::int32_t>(i * 7 % 200);
  const LabelVolume l(g, data);
  for (VoxelType t : {VoxelType::UInt8, VoxelType::Int16, VoxelType::UInt16, VoxelType::Int32, VoxelType::Float32,
                      VoxelType::Auto}) {
    CAPTURE(voxel_type_name(t));
    write_nifti(dir / "l.nii", l, t);
    CHECK(read_nifti_labels(dir / "l.nii") == l);
    write_raw(dir / "l.raw", l, t);
    CHECK(read_raw_labels(dir / "l.raw") == l);
  }
}

TEST_CASE("uint16 labels above the int16 range survive") {
  testing::TempDir dir;
  const Grid g({3, 1, 1}, {1, 1, 1});
  const LabelVolume l(g, {0, 40000, 65535});
  write_nifti(dir / "l.nii", l, VoxelType::UInt16);
  CHECK(read_nifti_labels(dir / "l.nii") == l);
  CHECK_THROWS_AS(write_nifti(dir / "x.nii", l, VoxelType::UInt8), std::invalid_argument);
}

TEST_CASE("header fields follow NIfTI-1") {
  testing::TempDir dir;
  const Grid g({6, 4, 2}, {1.5, 2.0, 2.5});
  write_nifti(dir / "h.nii", IntensityVolume(g, 1, 1.0f));
  const auto b = slurp(dir / "h.nii");
  REQUIRE(b.size() == 352 + 48 * 4);
  CHECK(field_at<std::int32_t>(b, 0) == 348);
  CHECK(std::memcmp(b.data() + 344, "n+1\0", 4) == 0);
  CHECK(field_at<std::int16_t>(b, 40) == 3);   // dim[0]
  CHECK(field_at<std::int16_t>(b, 42) == 6);   // dim[1]
  CHECK(field_at<std::int16_t>(b, 70) == 16);  // datatype
  CHECK(field_at<std::int16_t>(b, 72) == 32);  // bitpix
  CHECK(field_at<float>(b, 80) == 1.5f);       // pixdim[1]
  CHECK(field_at<float>(b, 108) == 352.0f);    // vox_offset
  CHECK(field_at<std::int16_t>(b, 252) == 1);  // qform_code
  CHECK(field_at<std::int16_t>(b, 254) == 1);  // sform_code
  CHECK(field_at<float>(b, 280) == 1.5f);      // srow_x[0]
  CHECK(field_at<float>(b, 296 + 4) == 2.0f);  // srow_y[1]
  CHECK(field_at<float>(b, 312 + 8) == 2.5f);  // srow_z[2]
}

TEST_CASE("big-endian files are read") {
  testing::TempDir dir;
  const Grid g({2, 2, 1}, {1, 1, 1});
  const IntensityVolume v(g, 1, std::vector<float>{1.5f, -2.0f, 3.25f, 100.0f});
  write_nifti(dir / "le.nii", v);
  auto b = slurp(dir / "le.nii");
  auto swap_at = [&](std::size_t off, std::size_t n) { std::reverse(b.begin() + off, b.begin() + off + n); };
  swap_at(0, 4);
  for (int i = 0; i < 8; ++i) swap_at(40 + 2 * i, 2);
  swap_at(70, 2);
  swap_at(72, 2);
  for (int i = 0; i < 8; ++i) swap_at(76 + 4 * i, 4);
  swap_at(108, 4);
  swap_at(112, 4);
  for (int i = 0; i < 4; ++i) swap_at(352 + 4 * i, 4);
  std::ofstream(dir / "be.nii", std::ios::binary).write(b.data(), static_cast<std::streamsize>(b.size()));
  CHECK(read_nifti_intensity(dir / "be.nii") == v);
}

TEST_CASE("scl_slope is applied") {
  testing::TempDir dir;
  const Grid g({2, 1, 1}, {1, 1, 1});
  write_nifti(dir / "s.nii", IntensityVolume(g, 1, std::vector<float>{1, 2}));
  auto b = slurp(dir / "s.nii");
  const float slope = 2.0f, inter = 0.5f;
  std::memcpy(b.data() + 112, &slope, 4);
  std::memcpy(b.data() + 116, &inter, 4);
  std::ofstream(dir / "s.nii", std::ios::binary).write(b.data(), static_cast<std::streamsize>(b.size()));
  const IntensityVolume r = read_nifti_intensity(dir / "s.nii");
  CHECK(r.at(0, 0, 0) == 2.5f);
  CHECK(r.at(1, 0, 0) == 4.5f);
}

TEST_CASE("raw fallback with sidecar") {
  testing::TempDir dir;
  const Grid g({3, 2, 2}, {1, 2, 3});
  const IntensityVolume v = testing::volume_from(g, [](int x, int y, int z) { return x - 2.5 * y + z * z; }, 3);
  write_raw(dir / "v.raw", v);
  CHECK(std::filesystem::exists(dir / "v.raw.json"));
  CHECK(read_intensity(dir / "v.raw") == v);
  CHECK(std::filesystem::file_size(dir / "v.raw") == v.data().size_bytes());
}

TEST_CASE("I/O errors") {
  testing::TempDir dir;
  CHECK_THROWS_AS(read_nifti_intensity(dir / "missing.nii"), IoError);
  std::ofstream(dir / "junk.nii") << "not a nifti file at all";
  CHECK_THROWS_AS(read_nifti_intensity(dir / "junk.nii"), IoError);
  write_nifti(dir / "t.nii", IntensityVolume(Grid({4, 4, 4}, {1, 1, 1}), 1));
  std::filesystem::resize_file(dir / "t.nii", 400);
  CHECK_THROWS_AS(read_nifti_intensity(dir / "t.nii"), IoError);
  write_nifti(dir / "f.nii", IntensityVolume(Grid({2, 1, 1}, {1, 1, 1}), 1, std::vector<float>{1.5f, 2}));
  CHECK_THROWS_AS(read_nifti_labels(dir / "f.nii"), IoError);
  CHECK_THROWS_AS(write_nifti(dir / "no" / "such" / "dir.nii", IntensityVolume(Grid(), 1)), IoError);
}

}
