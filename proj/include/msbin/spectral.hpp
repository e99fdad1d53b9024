#pragma once

#include <span>
#include <string>
#include <string_view>

#include "msbin/image.hpp"
#include "msbin/triple.hpp"

namespace msbin {

/// Per-band contrast enhancement: percentile stretch followed by a gamma curve.
/// Stands in for the Gray-Expand transform, which is not reproduced here.
struct PreprocessConfig {
  double p_low = 1.0;
  double p_high = 99.0;
  double gamma = 1.0;
  bool enabled = true;

  void validate() const;
  friend bool operator==(const PreprocessConfig&, const PreprocessConfig&) = default;
};

enum class ToGrayMethod { Luminance, Green, Average, MinAverage };

std::string_view to_string(ToGrayMethod method);
ToGrayMethod parse_togray(std::string_view name);

/// Percentile with linear interpolation between closest ranks, p in [0,100].
double percentile(std::span<const float> values, double p);

/// Values at or below the p_low percentile map to 0, at or above p_high to 1,
/// linear in between, then raised to `gamma`. A plane whose two percentiles
/// coincide carries no contrast and maps to 0.5 everywhere.
IntensityPlane enhance_band(const IntensityPlane& band, const PreprocessConfig& cfg);

/// Applies enhance_band to every band; identity when cfg.enabled is false.
MsImage enhance(const MsImage& image, const PreprocessConfig& cfg);

/// Converts three BW01 planes in (R,G,B) roles into a BW10 gray image.
///   Luminance:  1 - (0.27 R + 0.67 G + 0.06 B)
///   Green:      1 - G
///   Average:    1 - (R + G + B) / 3
///   MinAverage: 1 - (avg + min(R,G,B)) / 2
GrayImage to_gray(const IntensityPlane& red, const IntensityPlane& green, const IntensityPlane& blue,
                  ToGrayMethod method);

/// Throws std::out_of_range when a triple index is outside [1, N_band].
GrayImage to_gray(const MsImage& image, const BandTriple& triple, ToGrayMethod method);

}  // namespace msbin
