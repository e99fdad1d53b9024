#include "msbin/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "msbin/errors.hpp"

namespace msbin {

namespace {
constexpr float kGridScale = 16777216.0f;  // 2^24

void check_dims(int width, int height) {
  if (width < 0 || height < 0) throw Error("negative image dimensions");
}
}  // namespace

float IntensityPlane::snap(float v) {
  if (!(v > 0.0f)) return 0.0f;  // also maps NaN to 0
  if (v >= 1.0f) return 1.0f;
  return std::nearbyint(v * kGridScale) / kGridScale;
}

IntensityPlane::IntensityPlane(int width, int height, float fill)
    : width_(width), height_(height) {
  check_dims(width, height);
  data_.assign(static_cast<std::size_t>(width) * height, snap(fill));
}

IntensityPlane::IntensityPlane(int width, int height, std::vector<float> values)
    : width_(width), height_(height), data_(std::move(values)) {
  check_dims(width, height);
  if (data_.size() != static_cast<std::size_t>(width) * height)
    throw Error("plane value count does not match dimensions");
  for (float& v : data_) v = snap(v);
}

float IntensityPlane::min_value() const {
  return data_.empty() ? 0.0f : *std::min_element(data_.begin(), data_.end());
}

float IntensityPlane::max_value() const {
  return data_.empty() ? 0.0f : *std::max_element(data_.begin(), data_.end());
}

MsImage::MsImage(std::string name, std::vector<IntensityPlane> bands, std::vector<BandMeta> meta)
    : name_(std::move(name)), bands_(std::move(bands)), meta_(std::move(meta)) {
  if (bands_.empty()) throw Error("multispectral image needs at least one band");
  for (const auto& b : bands_) {
    if (b.width() != bands_.front().width() || b.height() != bands_.front().height())
      throw LoadError("band dimension mismatch in image '" + name_ + "'");
  }
  if (meta_.empty()) meta_.resize(bands_.size());
  if (meta_.size() != bands_.size()) throw Error("band metadata count does not match band count");
}

const IntensityPlane& MsImage::band(int index) const {
  if (index < 1 || index > band_count())
    throw std::out_of_range("band index " + std::to_string(index) + " outside [1, " +
                            std::to_string(band_count()) + "]");
  return bands_[static_cast<std::size_t>(index - 1)];
}

BinaryImage::BinaryImage(int width, int height, bool fill) : width_(width), height_(height) {
  check_dims(width, height);
  data_.assign(static_cast<std::size_t>(width) * height, fill ? 1 : 0);
}

BinaryImage::BinaryImage(int width, int height, std::vector<std::uint8_t> mask)
    : width_(width), height_(height), data_(std::move(mask)) {
  check_dims(width, height);
  if (data_.size() != static_cast<std::size_t>(width) * height)
    throw Error("mask size does not match dimensions");
  for (auto& v : data_) v = v ? 1 : 0;
}

std::size_t BinaryImage::ink_count() const {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

IntensityPlane flip_protocol(const IntensityPlane& plane) {
  std::vector<float> out(plane.values().begin(), plane.values().end());
  for (float& v : out) v = 1.0f - v;
  return IntensityPlane(plane.width(), plane.height(), std::move(out));
}

GrayImage flip_protocol(const GrayImage& gray) { return GrayImage(flip_protocol(gray.plane())); }

}  // namespace msbin
