#include "msbin/wrapper.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "msbin/errors.hpp"

namespace msbin {

void WrapperConfig::validate() const {
  if (!(blur_sigma > 0.0) || !(deblur_sigma > 0.0)) throw ConfigError("wrapper: sigmas must be positive");
  if (blur_radius < 0 || deblur_radius < 0) throw ConfigError("wrapper: radii must be non-negative");
  if (!(ratio_min >= 0.0 && ratio_min < ratio_max && ratio_max <= 1.0))
    throw ConfigError("wrapper: require 0 <= ratio_min < ratio_max <= 1");
  if (bbox_min_fraction < 0.0 || bbox_min_fraction > 1.0)
    throw ConfigError("wrapper: bbox_min_fraction must lie in [0,1]");
  if (!(inpaint_percentile > 0.0 && inpaint_percentile < 100.0))
    throw ConfigError("wrapper: inpaint_percentile must lie in (0,100)");
  if (max_retries < 0) throw ConfigError("wrapper: max_retries must be >= 0");
  if (deblur_amount < 0.0) throw ConfigError("wrapper: deblur_amount must be >= 0");
}

namespace {

std::vector<double> gaussian_taps(double sigma, int radius) {
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * i * i / (sigma * sigma));
    taps[static_cast<std::size_t>(i + radius)] = w;
    total += w;
  }
  for (double& w : taps) w /= total;
  return taps;
}

// Separable convolution in double precision; result not yet snapped.
std::vector<double> convolve(const IntensityPlane& plane, double sigma, int radius) {
  const int w = plane.width(), h = plane.height();
  const auto taps = gaussian_taps(sigma, radius);
  std::vector<double> tmp(plane.size()), out(plane.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const int xx = std::clamp(x + i, 0, w - 1);
        acc += taps[static_cast<std::size_t>(i + radius)] * plane(xx, y);
      }
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const int yy = std::clamp(y + i, 0, h - 1);
        acc += taps[static_cast<std::size_t>(i + radius)] * tmp[static_cast<std::size_t>(yy) * w + x];
      }
      out[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  return out;
}

IntensityPlane to_plane(int w, int h, const std::vector<double>& v) {
  std::vector<float> f(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) f[i] = static_cast<float>(v[i]);
  return IntensityPlane(w, h, std::move(f));
}

}  // namespace

IntensityPlane gaussian_blur(const IntensityPlane& plane, double sigma, int radius) {
  if (!(sigma > 0.0) || radius < 0) throw ConfigError("gaussian_blur: bad sigma or radius");
  return to_plane(plane.width(), plane.height(), convolve(plane, sigma, radius));
}

IntensityPlane blur_deblur(const IntensityPlane& band, const WrapperConfig& cfg) {
  IntensityPlane b = cfg.blur ? gaussian_blur(band, cfg.blur_sigma, cfg.blur_radius) : band;
  if (cfg.deblur_amount == 0.0) return b;
  const auto smooth = convolve(b, cfg.deblur_sigma, cfg.deblur_radius);
  std::vector<double> out(b.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = b[i] + cfg.deblur_amount * (b[i] - smooth[i]);
  return to_plane(b.width(), b.height(), out);
}

SingularityReport singularity_test(const BinaryImage& mask, const WrapperConfig& cfg) {
  SingularityReport r;
  const std::size_t area = mask.size();
  std::size_t ink = 0;
  int x0 = mask.width(), y0 = mask.height(), x1 = -1, y1 = -1;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask(x, y)) continue;
      ++ink;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  r.ratio = area ? static_cast<double>(ink) / static_cast<double>(area) : 0.0;
  if (ink > 0) {
    r.bbox_x0 = x0;
    r.bbox_y0 = y0;
    r.bbox_x1 = x1;
    r.bbox_y1 = y1;
    r.bbox_fraction = static_cast<double>(x1 - x0 + 1) * static_cast<double>(y1 - y0 + 1) / static_cast<double>(area);
  }
  r.pass = !(r.ratio < cfg.ratio_min || r.ratio > cfg.ratio_max ||
             (ink > 0 && r.bbox_fraction < cfg.bbox_min_fraction));
  return r;
}

GrayImage inpaint_outliers(const GrayImage& gray, double pct) {
  if (!(pct > 0.0 && pct < 100.0)) throw ConfigError("inpaint percentile must lie in (0,100)");
  const auto& p = gray.plane();
  if (p.empty()) return gray;
  const double cutoff = percentile(p.values(), 100.0 - pct);
  const int w = p.width(), h = p.height();
  std::vector<std::uint8_t> outlier(p.size());
  bool any = false;
  for (std::size_t i = 0; i < p.size(); ++i) {
    outlier[i] = p[i] > cutoff ? 1 : 0;
    any = any || outlier[i];
  }
  if (!any) return gray;

  constexpr double kSigma = 5.0;
  constexpr int kRadius = 15;
  std::vector<float> out(p.values().begin(), p.values().end());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (!outlier[i]) continue;
      double acc = 0.0, weight = 0.0;
      for (int dy = -kRadius; dy <= kRadius; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= h) continue;
        for (int dx = -kRadius; dx <= kRadius; ++dx) {
          const int xx = x + dx;
          if (xx < 0 || xx >= w) continue;
          const std::size_t j = static_cast<std::size_t>(yy) * w + xx;
          if (outlier[j]) continue;
          const double wgt = std::exp(-0.5 * (dx * dx + dy * dy) / (kSigma * kSigma));
          acc += wgt * p[j];
          weight += wgt;
        }
      }
      out[i] = weight > 0.0 ? static_cast<float>(acc / weight) : static_cast<float>(cutoff);
    }
  }
  return GrayImage(IntensityPlane(w, h, std::move(out)));
}

PreparedImage::PreparedImage(const MsImage& source, const PreprocessConfig* preprocess, const WrapperConfig& cfg)
    : PreparedImage(source, preprocess, cfg, [&] {
        std::vector<int> all(static_cast<std::size_t>(source.band_count()));
        for (int i = 0; i < source.band_count(); ++i) all[static_cast<std::size_t>(i)] = i + 1;
        return all;
      }()) {}

PreparedImage::PreparedImage(const MsImage& source, const PreprocessConfig* preprocess, const WrapperConfig& cfg,
                             std::span<const int> bands)
    : source_(source),
      processed_(static_cast<std::size_t>(source.band_count())),
      available_(static_cast<std::size_t>(source.band_count()), false) {
  cfg.validate();
  if (preprocess) preprocess->validate();
  for (int b : bands) {
    const auto idx = static_cast<std::size_t>(b - 1);
    if (b < 1 || b > source.band_count()) throw std::out_of_range("band index " + std::to_string(b) + " out of range");
    if (available_[idx]) continue;
    const IntensityPlane& raw = source.band(b);
    processed_[idx] = blur_deblur(preprocess && preprocess->enabled ? enhance_band(raw, *preprocess) : raw, cfg);
    available_[idx] = true;
  }
}

const IntensityPlane& PreparedImage::band(int index) const {
  if (index < 1 || index > band_count())
    throw std::out_of_range("band index " + std::to_string(index) + " outside [1, " + std::to_string(band_count()) +
                            "]");
  const auto idx = static_cast<std::size_t>(index - 1);
  if (!available_[idx]) throw std::logic_error("band " + std::to_string(index) + " was not prepared");
  return processed_[idx];
}

WrapResult wrap_binarize_detailed(const PreparedImage& prepared, const BandTriple& triple, const KernelSpec& spec,
                                  const WrapperConfig& cfg) {
  if (!triple.valid_for(prepared.band_count()))
    throw std::out_of_range("triple " + triple.str() + " invalid for " + std::to_string(prepared.band_count()) +
                            " bands");
  WrapResult r;
  r.gray = to_gray(prepared.band(triple.r), prepared.band(triple.g), prepared.band(triple.b), cfg.togray);
  r.mask = binarize(r.gray, spec, prepared.source());
  r.kernel_calls = 1;
  r.test = singularity_test(r.mask, cfg);
  for (int attempt = 0; attempt < cfg.max_retries && !r.test.pass; ++attempt) {
    r.gray = inpaint_outliers(r.gray, cfg.inpaint_percentile);
    r.mask = binarize(r.gray, spec, prepared.source());
    ++r.kernel_calls;
    r.test = singularity_test(r.mask, cfg);
  }
  return r;
}

BinaryImage wrap_binarize(const MsImage& image, const BandTriple& triple, const KernelSpec& spec,
                          const WrapperConfig& cfg) {
  const auto bands = triple.bands();
  const PreparedImage prepared(image, nullptr, cfg, bands);
  return wrap_binarize_detailed(prepared, triple, spec, cfg).mask;
}

}  // namespace msbin
