#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "msbin/image.hpp"

namespace msbin {

/// Raw grayscale raster as stored on disk (8- or 16-bit samples).
struct Raster {
  int width = 0;
  int height = 0;
  int bit_depth = 8;
  std::vector<std::uint16_t> pixels;
};

/// Reads a grayscale PNG or binary PGM (P5). Format chosen by extension.
Raster read_raster(const std::filesystem::path& path);
void write_raster(const std::filesystem::path& path, const Raster& raster);

/// Linear scaling by the maximum sample value (255 or 65535).
IntensityPlane raster_to_plane(const Raster& raster);
Raster plane_to_raster(const IntensityPlane& plane, int bit_depth);

struct BandEntry {
  std::string file;
  double wavelength_nm = 0.0;
  double fwhm_nm = 0.0;
};

/// Per-image manifest:
/// {"name":"z30","protocol":"BW01","bands":[{"file":"F1.png","wavelength_nm":340,"fwhm_nm":80}],"gt":"gt.png"}
struct ImageManifest {
  std::string name;
  std::string protocol = "BW01";
  std::vector<BandEntry> bands;
  std::optional<std::string> gt;
};

ImageManifest read_image_manifest(const std::filesystem::path& path);
void write_image_manifest(const std::filesystem::path& path, const ImageManifest& manifest);

/// Loads a multispectral image; `path` is a manifest file or a directory holding manifest.json.
MsImage load_ms(const std::filesystem::path& path);

struct DatasetItem {
  std::filesystem::path ms_dir;
  std::optional<std::filesystem::path> gt_path;
};

/// {"name":"synth","items":[{"ms_dir":"img_000","gt_path":"img_000/gt.png"}]}
/// Relative paths resolve against the manifest's directory.
struct DatasetManifest {
  std::string name;
  std::vector<DatasetItem> items;
};

DatasetManifest read_dataset_manifest(const std::filesystem::path& path);
void write_dataset_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

struct LabeledImage {
  MsImage image;
  std::optional<BinaryImage> gt;
};

/// Loads every item of a dataset manifest; GT comes from the item's gt_path
/// or else from the per-image manifest. GT dimensions must match.
std::vector<LabeledImage> load_dataset(const std::filesystem::path& manifest_path);

/// 8-bit raster, ink = 0, background = 255.
void save_binary(const BinaryImage& mask, const std::filesystem::path& path);
/// Samples below half scale are ink.
BinaryImage load_binary(const std::filesystem::path& path);

struct NamedMask {
  std::string name;
  std::optional<BinaryImage> gt;
};

/// Image names and GT masks of a dataset without loading the bands.
std::vector<NamedMask> load_dataset_gt(const std::filesystem::path& manifest_path);

inline constexpr const char* kImageManifestName = "manifest.json";
inline constexpr const char* kDatasetManifestName = "dataset.json";

/// `path` itself, or path/dataset.json when `path` is a directory.
std::filesystem::path dataset_manifest_path(const std::filesystem::path& path);

}  // namespace msbin
