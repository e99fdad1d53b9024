#pragma once

#include <span>
#include <vector>

#include "msbin/image.hpp"
#include "msbin/kernels.hpp"
#include "msbin/spectral.hpp"
#include "msbin/triple.hpp"

namespace msbin {

struct WrapperConfig {
  bool blur = true;
  double blur_sigma = 0.5;
  int blur_radius = 5;
  double deblur_sigma = 5.0;
  int deblur_radius = 5;
  double deblur_amount = 1.0;
  ToGrayMethod togray = ToGrayMethod::Luminance;
  double ratio_min = 0.001;
  double ratio_max = 0.60;
  double bbox_min_fraction = 0.05;
  double inpaint_percentile = 0.5;
  int max_retries = 1;

  void validate() const;
  friend bool operator==(const WrapperConfig&, const WrapperConfig&) = default;
};

/// Separable normalized Gaussian with (2*radius+1) taps; borders replicate.
IntensityPlane gaussian_blur(const IntensityPlane& plane, double sigma, int radius);

/// Blur (when enabled), then unsharp deblur b + amount * (b - G * b), clamped.
IntensityPlane blur_deblur(const IntensityPlane& band, const WrapperConfig& cfg);

struct SingularityReport {
  bool pass = true;
  double ratio = 0.0;
  // inclusive ink bounding box; empty when there is no ink
  int bbox_x0 = 0, bbox_y0 = 0, bbox_x1 = -1, bbox_y1 = -1;
  double bbox_fraction = 0.0;
};

/// Fails when the ink ratio is outside [ratio_min, ratio_max] or when ink
/// exists but its bounding box covers less than bbox_min_fraction of the page.
SingularityReport singularity_test(const BinaryImage& mask, const WrapperConfig& cfg);

/// Pixels strictly darker than the (100 - percentile) percentile are replaced
/// by the Gaussian-weighted (sigma 5, radius 15) mean of non-outlier neighbours.
GrayImage inpaint_outliers(const GrayImage& gray, double percentile);

/// Bands of one image after optional enhancement and blur/deblur, ready for
/// repeated to-gray + kernel runs over many triples.
class PreparedImage {
 public:
  /// Processes every band.
  PreparedImage(const MsImage& source, const PreprocessConfig* preprocess, const WrapperConfig& cfg);
  /// Processes only `bands` (1-based); other bands are left unavailable.
  PreparedImage(const MsImage& source, const PreprocessConfig* preprocess, const WrapperConfig& cfg,
                std::span<const int> bands);

  const MsImage& source() const { return source_; }
  const IntensityPlane& band(int index) const;
  int band_count() const { return source_.band_count(); }
  int width() const { return source_.width(); }
  int height() const { return source_.height(); }

 private:
  MsImage source_;
  std::vector<IntensityPlane> processed_;
  std::vector<bool> available_;
};

struct WrapResult {
  BinaryImage mask;
  int kernel_calls = 0;
  SingularityReport test;
  GrayImage gray;  // gray image handed to the final kernel call
};

WrapResult wrap_binarize_detailed(const PreparedImage& prepared, const BandTriple& triple, const KernelSpec& spec,
                                  const WrapperConfig& cfg);

/// Blur/deblur -> to-gray -> kernel -> singularity test, with inpaint + retry
/// up to max_retries. The last mask is returned whether or not it passed.
BinaryImage wrap_binarize(const MsImage& image, const BandTriple& triple, const KernelSpec& spec,
                          const WrapperConfig& cfg);

}  // namespace msbin
