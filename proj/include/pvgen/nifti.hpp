#pragma once

#include <filesystem>
#include <string>

#include "pvgen/volume.hpp"

namespace pvgen {

enum class VolumeFormat { Nifti, Raw };

// Datatype codes shared by NIfTI-1 and the raw sidecar ("dtype").
enum class VoxelType : short {
  Auto = 0,  // labels only: smallest type that holds every label
  UInt8 = 2,
  Int16 = 4,
  Int32 = 8,
  Float32 = 16,
  UInt16 = 512,
};

std::string voxel_type_name(VoxelType t);
VoxelType voxel_type_from_name(const std::string& name);

// Uncompressed single-file NIfTI-1 (".nii"). Channels go in dim[4]; the
// qform and sform are diagonal spacing matrices with zero offset.
void write_nifti(const std::filesystem::path& path, const IntensityVolume& vol);
void write_nifti(const std::filesystem::path& path, const LabelVolume& vol, VoxelType type = VoxelType::Auto);
IntensityVolume read_nifti_intensity(const std::filesystem::path& path);
LabelVolume read_nifti_labels(const std::filesystem::path& path);

// Raw little-endian payload at `path` plus a JSON sidecar at path + ".json"
// holding {dims, spacing, channels, dtype}.
void write_raw(const std::filesystem::path& path, const IntensityVolume& vol);
void write_raw(const std::filesystem::path& path, const LabelVolume& vol, VoxelType type = VoxelType::Auto);
IntensityVolume read_raw_intensity(const std::filesystem::path& path);
LabelVolume read_raw_labels(const std::filesystem::path& path);

// Dispatch on extension: ".nii" is NIfTI, anything else raw + sidecar.
IntensityVolume read_intensity(const std::filesystem::path& path);
LabelVolume read_labels(const std::filesystem::path& path);

// File extension used for `format` (".nii" or ".raw").
std::string volume_extension(VolumeFormat format);

}  // namespace pvgen
