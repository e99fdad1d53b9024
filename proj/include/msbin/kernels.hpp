#pragma once

#include <array>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "msbin/image.hpp"

namespace msbin {

enum class KernelKind { Otsu, Niblack, Sauvola, BgSuppressed };

std::string_view to_string(KernelKind kind);
KernelKind parse_kernel_kind(std::string_view name);

/// Gray-level binarization kernel and its parameters. BgSuppressed wraps an
/// inner kernel and subtracts a band-7/8 background estimate first.
struct KernelSpec {
  KernelKind kind = KernelKind::Sauvola;
  int window_radius = 15;
  double k = 0.34;
  double sauvola_r = 0.5;
  double bg_weight = 0.5;
  std::shared_ptr<const KernelSpec> inner;

  static KernelSpec otsu();
  static KernelSpec niblack(int window_radius = 15, double k = -0.2);
  static KernelSpec sauvola(int window_radius = 15, double k = 0.34, double r = 0.5);
  static KernelSpec bg_suppressed(KernelSpec inner, double bg_weight = 0.5);

  void validate() const;
  friend bool operator==(const KernelSpec& a, const KernelSpec& b);
};

/// Windowed mean and population standard deviation over a clamped
/// (2r+1)x(2r+1) window, from integral images of sum and sum of squares.
struct WindowStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};
WindowStats window_stats(const IntensityPlane& plane, int radius);

/// 256-bin histogram; bin = min(255, floor(v * 256)).
std::array<std::size_t, 256> histogram256(const IntensityPlane& plane);
inline int bin256(float v) { return v >= 1.0f ? 255 : static_cast<int>(v * 256.0f); }

/// Otsu between-class variance w0*w1*(mu0-mu1)^2 for the split
/// {bins <= t} | {bins > t}.
double between_class_variance(const std::array<std::size_t, 256>& hist, int t);

/// First bin t maximising the between-class variance. Pixels with
/// bin > t are ink. Returns -1 when the histogram occupies a single bin.
int otsu_threshold(const std::array<std::size_t, 256>& hist);

/// Binarizes a BW10 gray image (ink = larger values).
///   Otsu:    ink iff bin(g) > t*
///   Niblack: ink iff g > mu - k sigma
///   Sauvola: ink iff (1 - g) <= (1 - mu) (1 + k (sigma / R - 1))
/// Both local rules are the classic forms applied to the BW01 view 1 - g,
/// with mu and sigma the windowed statistics of g.
/// A constant image yields an all-background mask for every kernel.
/// BgSuppressed needs the source multispectral image; use the overload below.
BinaryImage binarize(const GrayImage& gray, const KernelSpec& spec);
BinaryImage binarize(const GrayImage& gray, const KernelSpec& spec, const MsImage& source);

/// Maps `source` values onto the histogram of `reference` by 256-bin CDF
/// inversion, keeping each value's offset inside its bin.
IntensityPlane histogram_match(const IntensityPlane& source, const IntensityPlane& reference);

/// I_BG = 1 - (u7 + u8) / 2, matched to the histogram of `gray`;
/// output = clamp(gray - bg_weight * I_BG, 0, 1). Needs at least 8 bands.
GrayImage suppress_background(const MsImage& source, const GrayImage& gray, double bg_weight);

}  // namespace msbin
