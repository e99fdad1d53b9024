#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace msbin {

/// A single-channel plane of intensities in [0,1].
///
/// Values are stored as float and snapped onto the 2^-24 grid on
/// construction. On that grid 1 - v is exactly representable, so protocol
/// flips are exact involutions.
class IntensityPlane {
 public:
  IntensityPlane() = default;
  IntensityPlane(int width, int height, float fill = 0.0f);
  /// Clamps every value into [0,1] and snaps it to the storage grid.
  IntensityPlane(int width, int height, std::vector<float> values);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float operator()(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  float operator[](std::size_t i) const { return data_[i]; }
  std::span<const float> values() const { return data_; }

  float min_value() const;
  float max_value() const;

  /// Clamp to [0,1] and round to the nearest multiple of 2^-24.
  static float snap(float v);

  friend bool operator==(const IntensityPlane&, const IntensityPlane&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

struct BandMeta {
  double wavelength_nm = 0.0;
  double fwhm_nm = 0.0;

  friend bool operator==(const BandMeta&, const BandMeta&) = default;
};

/// Multispectral image in the BW01 protocol (0 = black, 1 = white).
/// Band indices in the public API are 1-based.
class MsImage {
 public:
  MsImage() = default;
  MsImage(std::string name, std::vector<IntensityPlane> bands, std::vector<BandMeta> meta = {});

  const std::string& name() const { return name_; }
  int width() const { return bands_.empty() ? 0 : bands_.front().width(); }
  int height() const { return bands_.empty() ? 0 : bands_.front().height(); }
  int band_count() const { return static_cast<int>(bands_.size()); }

  /// 1-based band access; throws std::out_of_range.
  const IntensityPlane& band(int index) const;
  std::span<const IntensityPlane> bands() const { return bands_; }
  std::span<const BandMeta> band_meta() const { return meta_; }

  friend bool operator==(const MsImage&, const MsImage&) = default;

 private:
  std::string name_;
  std::vector<IntensityPlane> bands_;
  std::vector<BandMeta> meta_;
};

/// Gray-level image in the BW10 protocol (1 = ink, 0 = background).
class GrayImage {
 public:
  GrayImage() = default;
  explicit GrayImage(IntensityPlane plane) : plane_(std::move(plane)) {}

  int width() const { return plane_.width(); }
  int height() const { return plane_.height(); }
  const IntensityPlane& plane() const { return plane_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  IntensityPlane plane_;
};

/// Per-pixel text mask: 1 = ink, 0 = background.
class BinaryImage {
 public:
  BinaryImage() = default;
  BinaryImage(int width, int height, bool fill = false);
  BinaryImage(int width, int height, std::vector<std::uint8_t> mask);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }

  bool operator()(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  bool operator[](std::size_t i) const { return data_[i] != 0; }
  void set(int x, int y, bool ink) { data_[static_cast<std::size_t>(y) * width_ + x] = ink ? 1 : 0; }
  std::span<const std::uint8_t> data() const { return data_; }

  std::size_t ink_count() const;
  bool same_shape(const BinaryImage& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const BinaryImage&, const BinaryImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// out = 1 - in. Exact involution on the storage grid.
IntensityPlane flip_protocol(const IntensityPlane& plane);
GrayImage flip_protocol(const GrayImage& gray);

}  // namespace msbin
