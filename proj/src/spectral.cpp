#include "msbin/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "msbin/errors.hpp"

namespace msbin {

void PreprocessConfig::validate() const {
  if (p_low < 0.0 || p_high > 100.0 || !(p_low < p_high))
    throw ConfigError("preprocess: require 0 <= p_low < p_high <= 100");
  if (!(gamma > 0.0)) throw ConfigError("preprocess: gamma must be positive");
}

std::string_view to_string(ToGrayMethod method) {
  switch (method) {
    case ToGrayMethod::Luminance: return "luminance";
    case ToGrayMethod::Green: return "green";
    case ToGrayMethod::Average: return "average";
    case ToGrayMethod::MinAverage: return "min_average";
  }
  return "luminance";
}

ToGrayMethod parse_togray(std::string_view name) {
  if (name == "luminance") return ToGrayMethod::Luminance;
  if (name == "green") return ToGrayMethod::Green;
  if (name == "average") return ToGrayMethod::Average;
  if (name == "min_average" || name == "minaverage") return ToGrayMethod::MinAverage;
  throw ConfigError("unknown to-gray method '" + std::string(name) + "'");
}

double percentile(std::span<const float> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile of empty set");
  std::vector<float> v(values.begin(), values.end());
  const double pos = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
  const double a = v[lo];
  if (hi == lo) return a;
  // smallest element of the upper partition is the next order statistic
  const double b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(hi), v.end());
  return a + (pos - static_cast<double>(lo)) * (b - a);
}

IntensityPlane enhance_band(const IntensityPlane& band, const PreprocessConfig& cfg) {
  cfg.validate();
  const double lo = percentile(band.values(), cfg.p_low);
  const double hi = percentile(band.values(), cfg.p_high);
  std::vector<float> out(band.size());
  if (!(hi > lo)) {
    std::fill(out.begin(), out.end(), 0.5f);
    return IntensityPlane(band.width(), band.height(), std::move(out));
  }
  const double scale = 1.0 / (hi - lo);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double t = std::clamp((static_cast<double>(band[i]) - lo) * scale, 0.0, 1.0);
    if (cfg.gamma != 1.0) t = std::pow(t, cfg.gamma);
    out[i] = static_cast<float>(t);
  }
  return IntensityPlane(band.width(), band.height(), std::move(out));
}

MsImage enhance(const MsImage& image, const PreprocessConfig& cfg) {
  if (!cfg.enabled) return image;
  std::vector<IntensityPlane> bands;
  bands.reserve(static_cast<std::size_t>(image.band_count()));
  for (const auto& b : image.bands()) bands.push_back(enhance_band(b, cfg));
  return MsImage(image.name(), std::move(bands),
                 std::vector<BandMeta>(image.band_meta().begin(), image.band_meta().end()));
}

GrayImage to_gray(const IntensityPlane& red, const IntensityPlane& green, const IntensityPlane& blue,
                  ToGrayMethod method) {
  if (red.width() != green.width() || red.width() != blue.width() || red.height() != green.height() ||
      red.height() != blue.height())
    throw Error("to_gray: band dimensions differ");
  std::vector<float> out(red.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double r = red[i], g = green[i], b = blue[i];
    double white;
    switch (method) {
      case ToGrayMethod::Luminance: white = 0.27 * r + 0.67 * g + 0.06 * b; break;
      case ToGrayMethod::Green: white = g; break;
      case ToGrayMethod::Average: white = (r + g + b) / 3.0; break;
      case ToGrayMethod::MinAverage: white = 0.5 * ((r + g + b) / 3.0 + std::min({r, g, b})); break;
      default: white = g;
    }
    out[i] = static_cast<float>(1.0 - white);
  }
  return GrayImage(IntensityPlane(red.width(), red.height(), std::move(out)));
}

GrayImage to_gray(const MsImage& image, const BandTriple& triple, ToGrayMethod method) {
  return to_gray(image.band(triple.r), image.band(triple.g), image.band(triple.b), method);
}

}  // namespace msbin
