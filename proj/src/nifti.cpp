#include "pvgen/nifti.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "json.hpp"

namespace pvgen {

namespace {

#pragma pack(push, 1)
struct Nifti1Header {
  std::int32_t sizeof_hdr;
  char data_type[10];
  char db_name[18];
  std::int32_t extents;
  std::int16_t session_error;
  char regular;
  char dim_info;
  std::int16_t dim[8];
  float intent_p1;
  float intent_p2;
  float intent_p3;
  std::int16_t intent_code;
  std::int16_t datatype;
  std::int16_t bitpix;
  std::int16_t slice_start;
  float pixdim[8];
  float vox_offset;
  float scl_slope;
  float scl_inter;
  std::int16_t slice_end;
  char slice_code;
  char xyzt_units;
  float cal_max;
  float cal_min;
  float slice_duration;
  float toffset;
  std::int32_t glmax;
  std::int32_t glmin;
  char descrip[80];
  char aux_file[24];
  std::int16_t qform_code;
  std::int16_t sform_code;
  float quatern_b;
  float quatern_c;
  float quatern_d;
  float qoffset_x;
  float qoffset_y;
  float qoffset_z;
  float srow_x[4];
  float srow_y[4];
  float srow_z[4];
  char intent_name[16];
  char magic[4];
};
#pragma pack(pop)
static_assert(sizeof(Nifti1Header) == 348);

constexpr std::size_t kVoxOffset = 352;
static_assert(std::endian::native == std::endian::little, "pvgen writes little-endian files");

template <typename T>
T byteswap_value(T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  std::memcpy(&v, b, sizeof(T));
  return v;
}

void swap_header(Nifti1Header& h) {
  auto sw = [](auto& v) { v = byteswap_value(v); };
  sw(h.sizeof_hdr);
  sw(h.extents);
  sw(h.session_error);
  for (auto& d : h.dim) sw(d);
  sw(h.intent_p1);
  sw(h.intent_p2);
  sw(h.intent_p3);
  sw(h.intent_code);
  sw(h.datatype);
  sw(h.bitpix);
  sw(h.slice_start);
  for (auto& p : h.pixdim) sw(p);
  sw(h.vox_offset);
  sw(h.scl_slope);
  sw(h.scl_inter);
  sw(h.slice_end);
  sw(h.cal_max);
  sw(h.cal_min);
  sw(h.slice_duration);
  sw(h.toffset);
  sw(h.glmax);
  sw(h.glmin);
  sw(h.qform_code);
  sw(h.sform_code);
  sw(h.quatern_b);
  sw(h.quatern_c);
  sw(h.quatern_d);
  sw(h.qoffset_x);
  sw(h.qoffset_y);
  sw(h.qoffset_z);
  for (auto& v : h.srow_x) sw(v);
  for (auto& v : h.srow_y) sw(v);
  for (auto& v : h.srow_z) sw(v);
}

std::size_t type_size(VoxelType t) {
  switch (t) {
    case VoxelType::UInt8: return 1;
    case VoxelType::Int16:
    case VoxelType::UInt16: return 2;
    case VoxelType::Int32:
    case VoxelType::Float32: return 4;
    default: throw IoError("unsupported voxel datatype code " + std::to_string(static_cast<int>(t)));
  }
}

// Decoded payload: everything as double, which is exact for all supported types.
struct Payload {
  Grid grid;
  int channels = 1;
  std::vector<double> values;
};

template <typename T>
void decode_as(const std::vector<char>& bytes, bool swap, std::vector<double>& out) {
  const std::size_t n = bytes.size() / sizeof(T);
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    T v;
    std::memcpy(&v, bytes.data() + i * sizeof(T), sizeof(T));
    if (swap) v = byteswap_value(v);
    out[i] = static_cast<double>(v);
  }
}

void decode(VoxelType t, const std::vector<char>& bytes, bool swap, std::vector<double>& out) {
  switch (t) {
    case VoxelType::UInt8: decode_as<std::uint8_t>(bytes, swap, out); break;
    case VoxelType::Int16: decode_as<std::int16_t>(bytes, swap, out); break;
    case VoxelType::UInt16: decode_as<std::uint16_t>(bytes, swap, out); break;
    case VoxelType::Int32: decode_as<std::int32_t>(bytes, swap, out); break;
    case VoxelType::Float32: decode_as<float>(bytes, swap, out); break;
    default: throw IoError("unsupported voxel datatype");
  }
}

template <typename T, typename Src>
void encode_as(std::span<const Src> src, std::vector<char>& out) {
  out.resize(src.size() * sizeof(T));
  for (std::size_t i = 0; i < src.size(); ++i) {
    const T v = static_cast<T>(src[i]);
    std::memcpy(out.data() + i * sizeof(T), &v, sizeof(T));
  }
}

std::vector<char> encode_labels(std::span<const std::int32_t> data, VoxelType t) {
  std::vector<char> out;
  switch (t) {
    case VoxelType::UInt8: encode_as<std::uint8_t>(data, out); break;
    case VoxelType::Int16: encode_as<std::int16_t>(data, out); break;
    case VoxelType::UInt16: encode_as<std::uint16_t>(data, out); break;
    case VoxelType::Int32: encode_as<std::int32_t>(data, out); break;
    case VoxelType::Float32: encode_as<float>(data, out); break;
    default: throw std::invalid_argument("unsupported label datatype");
  }
  return out;
}

VoxelType resolve_label_type(const LabelVolume& vol, VoxelType t) {
  const auto set = vol.label_set();
  const std::int64_t lo = set.empty() ? 0 : set.front();
  const std::int64_t hi = set.empty() ? 0 : set.back();
  auto fits = [&](std::int64_t min, std::int64_t max) { return lo >= min && hi <= max; };
  if (t == VoxelType::Auto) {
    if (fits(0, 255)) return VoxelType::UInt8;
    if (fits(-32768, 32767)) return VoxelType::Int16;
    if (fits(0, 65535)) return VoxelType::UInt16;
    return VoxelType::Int32;
  }
  bool ok = true;
  switch (t) {
    case VoxelType::UInt8: ok = fits(0, 255); break;
    case VoxelType::Int16: ok = fits(-32768, 32767); break;
    case VoxelType::UInt16: ok = fits(0, 65535); break;
    case VoxelType::Float32: ok = fits(-(1 << 24), 1 << 24); break;
    default: break;
  }
  if (!ok) throw std::invalid_argument("labels do not fit the requested datatype " + voxel_type_name(t));
  return t;
}

void write_file(const std::filesystem::path& path, const void* head, std::size_t head_len,
                const std::vector<char>& body) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  if (head_len) f.write(static_cast<const char*>(head), static_cast<std::streamsize>(head_len));
  f.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!f) throw IoError("failed writing " + path.string());
}

std::vector<char> read_bytes(std::ifstream& f, const std::filesystem::path& path, std::size_t n) {
  std::vector<char> bytes(n);
  f.read(bytes.data(), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(f.gcount()) != n) throw IoError(path.string() + ": truncated voxel data");
  return bytes;
}

void write_nifti_payload(const std::filesystem::path& path, const Grid& grid, int channels, VoxelType type,
                         const std::vector<char>& body) {
  Nifti1Header h{};
  h.sizeof_hdr = 348;
  h.regular = 'r';
  h.dim[0] = static_cast<std::int16_t>(channels > 1 ? 4 : 3);
  for (int a = 0; a < 3; ++a) {
    if (grid.dims[a] > std::numeric_limits<std::int16_t>::max())
      throw IoError("dimension too large for NIfTI-1: " + std::to_string(grid.dims[a]));
    h.dim[a + 1] = static_cast<std::int16_t>(grid.dims[a]);
    h.pixdim[a + 1] = static_cast<float>(grid.spacing[a]);
  }
  h.dim[4] = static_cast<std::int16_t>(channels);
  for (int i = 5; i < 8; ++i) h.dim[i] = 1;
  h.pixdim[0] = 1.0f;
  h.pixdim[4] = 1.0f;
  h.datatype = static_cast<std::int16_t>(type);
  h.bitpix = static_cast<std::int16_t>(8 * type_size(type));
  h.vox_offset = static_cast<float>(kVoxOffset);
  h.scl_slope = 1.0f;
  h.xyzt_units = 2;  // mm
  h.qform_code = 1;
  h.sform_code = 1;
  h.srow_x[0] = h.pixdim[1];
  h.srow_y[1] = h.pixdim[2];
  h.srow_z[2] = h.pixdim[3];
  std::memcpy(h.magic, "n+1\0", 4);

  char head[kVoxOffset] = {};
  std::memcpy(head, &h, sizeof h);
  write_file(path, head, sizeof head, body);
}

Payload read_nifti_payload(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  Nifti1Header h{};
  f.read(reinterpret_cast<char*>(&h), sizeof h);
  if (f.gcount() != static_cast<std::streamsize>(sizeof h)) throw IoError(path.string() + ": truncated NIfTI header");
  bool swap = false;
  if (h.sizeof_hdr != 348) {
    if (byteswap_value(h.sizeof_hdr) != 348) throw IoError(path.string() + ": not a NIfTI-1 file");
    swap = true;
    swap_header(h);
  }
  if (std::memcmp(h.magic, "n+1", 4) != 0) throw IoError(path.string() + ": only single-file NIfTI-1 is supported");
  if (h.dim[0] < 1 || h.dim[0] > 7) throw IoError(path.string() + ": invalid dim[0]");

  Dims dims{1, 1, 1};
  Vec3 spacing{1, 1, 1};
  for (int a = 0; a < 3 && a < h.dim[0]; ++a) {
    dims[a] = h.dim[a + 1];
    const float s = std::abs(h.pixdim[a + 1]);
    spacing[a] = s > 0.0f ? s : 1.0;
  }
  int channels = 1;
  for (int d = 4; d <= h.dim[0]; ++d) channels *= std::max<int>(1, h.dim[d]);
  Payload p;
  try {
    p.grid = Grid(dims, spacing);
  } catch (const std::invalid_argument& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  p.channels = channels;

  const VoxelType type = static_cast<VoxelType>(h.datatype);
  const std::size_t n = p.grid.voxel_count() * static_cast<std::size_t>(channels);
  const auto offset = static_cast<std::streamoff>(h.vox_offset);
  if (offset < 348) throw IoError(path.string() + ": invalid vox_offset");
  f.seekg(offset);
  decode(type, read_bytes(f, path, n * type_size(type)), swap, p.values);
  if (h.scl_slope != 0.0f && (h.scl_slope != 1.0f || h.scl_inter != 0.0f))
    for (double& v : p.values) v = v * h.scl_slope + h.scl_inter;
  return p;
}

nlohmann::json sidecar_json(const Grid& grid, int channels, VoxelType type) {
  return {{"dims", grid.dims}, {"spacing", grid.spacing}, {"channels", channels}, {"dtype", voxel_type_name(type)}};
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".json");
}

Payload read_raw_payload(const std::filesystem::path& path) {
  std::ifstream meta(sidecar_path(path));
  if (!meta) throw IoError("missing sidecar " + sidecar_path(path).string());
  Payload p;
  VoxelType type;
  try {
    const nlohmann::json j = nlohmann::json::parse(meta);
    p.grid = Grid(j.at("dims").get<Dims>(), j.at("spacing").get<Vec3>());
    p.channels = j.value("channels", 1);
    type = voxel_type_from_name(j.at("dtype").get<std::string>());
  } catch (const std::exception& e) {
    throw IoError(sidecar_path(path).string() + ": " + e.what());
  }
  if (p.channels < 1) throw IoError(sidecar_path(path).string() + ": channels must be >= 1");
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  const std::size_t n = p.grid.voxel_count() * static_cast<std::size_t>(p.channels);
  decode(type, read_bytes(f, path, n * type_size(type)), false, p.values);
  return p;
}

IntensityVolume to_intensity(const Payload& p, const std::filesystem::path& path) {
  std::vector<float> data(p.values.begin(), p.values.end());
  try {
    return IntensityVolume(p.grid, p.channels, std::move(data));
  } catch (const std::invalid_argument& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

LabelVolume to_labels(const Payload& p, const std::filesystem::path& path) {
  if (p.channels != 1) throw IoError(path.string() + ": label volumes must have one channel");
  std::vector<std::int32_t> data(p.values.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double v = p.values[i];
    if (v != std::floor(v) || std::abs(v) > std::numeric_limits<std::int32_t>::max())
      throw IoError(path.string() + ": non-integer label value " + std::to_string(v));
    data[i] = static_cast<std::int32_t>(v);
  }
  return LabelVolume(p.grid, std::move(data));
}

}  // namespace

std::string voxel_type_name(VoxelType t) {
  switch (t) {
    case VoxelType::UInt8: return "uint8";
    case VoxelType::Int16: return "int16";
    case VoxelType::UInt16: return "uint16";
    case VoxelType::Int32: return "int32";
    case VoxelType::Float32: return "float32";
    case VoxelType::Auto: return "auto";
  }
  return "unknown";
}

VoxelType voxel_type_from_name(const std::string& name) {
  for (VoxelType t : {VoxelType::UInt8, VoxelType::Int16, VoxelType::UInt16, VoxelType::Int32, VoxelType::Float32,
                      VoxelType::Auto})
    if (voxel_type_name(t) == name) return t;
  throw std::invalid_argument("unknown dtype '" + name + "'");
}

std::string volume_extension(VolumeFormat format) { return format == VolumeFormat::Nifti ? ".nii" : ".raw"; }

void write_nifti(const std::filesystem::path& path, const IntensityVolume& vol) {
  std::vector<char> body;
  encode_as<float>(vol.data(), body);
  write_nifti_payload(path, vol.grid(), vol.channels(), VoxelType::Float32, body);
}

void write_nifti(const std::filesystem::path& path, const LabelVolume& vol, VoxelType type) {
  type = resolve_label_type(vol, type);
  write_nifti_payload(path, vol.grid(), 1, type, encode_labels(vol.data(), type));
}

IntensityVolume read_nifti_intensity(const std::filesystem::path& path) {
  return to_intensity(read_nifti_payload(path), path);
}

LabelVolume read_nifti_labels(const std::filesystem::path& path) { return to_labels(read_nifti_payload(path), path); }

void write_raw(const std::filesystem::path& path, const IntensityVolume& vol) {
  std::vector<char> body;
  encode_as<float>(vol.data(), body);
  write_file(path, nullptr, 0, body);
  const std::string meta = sidecar_json(vol.grid(), vol.channels(), VoxelType::Float32).dump(2) + "\n";
  write_file(sidecar_path(path), nullptr, 0, std::vector<char>(meta.begin(), meta.end()));
}

void write_raw(const std::filesystem::path& path, const LabelVolume& vol, VoxelType type) {
  type = resolve_label_type(vol, type);
  write_file(path, nullptr, 0, encode_labels(vol.data(), type));
  const std::string meta = sidecar_json(vol.grid(), 1, type).dump(2) + "\n";
  write_file(sidecar_path(path), nullptr, 0, std::vector<char>(meta.begin(), meta.end()));
}

IntensityVolume read_raw_intensity(const std::filesystem::path& path) {
  return to_intensity(read_raw_payload(path), path);
}

LabelVolume read_raw_labels(const std::filesystem::path& path) { return to_labels(read_raw_payload(path), path); }

IntensityVolume read_intensity(const std::filesystem::path& path) {
  return path.extension() == ".nii" ? read_nifti_intensity(path) : read_raw_intensity(path);
}

LabelVolume read_labels(const std::filesystem::path& path) {
  return path.extension() == ".nii" ? read_nifti_labels(path) : read_raw_labels(path);
}

}  // namespace pvgen
