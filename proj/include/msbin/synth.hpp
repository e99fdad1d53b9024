#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "msbin/image.hpp"
#include "msbin/io.hpp"

namespace msbin {

/// Per-band profiles may be left empty, in which case the 8-band defaults are
/// resampled to n_band.
struct SynthConfig {
  std::uint64_t seed = 1;
  int width = 256;
  int height = 256;
  int n_band = 8;
  double text_density = 0.05;
  std::vector<double> text_contrast_profile;   // ink absorption per band
  std::vector<double> bleedthrough_strength;   // hidden verso text per band
  std::vector<double> noise_sigma_profile;     // Gaussian noise per band
  double misregistration_px = 0.5;

  void validate() const;
  /// Copy with every profile filled in to n_band entries.
  SynthConfig resolved() const;
  friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

struct SynthImage {
  MsImage image;
  BinaryImage gt;
};

SynthImage generate(const SynthConfig& cfg, const std::string& name = "synth");

/// Writes img_000 ... with 16-bit band PNGs, manifest.json and gt.png, plus
/// dataset.json at the root. Image i is generated from derive_seed(base_seed, i).
DatasetManifest generate_dataset(std::size_t n, std::uint64_t base_seed, const SynthConfig& cfg,
                                 const std::filesystem::path& out_dir);

}  // namespace msbin
