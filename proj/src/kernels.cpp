#include "msbin/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "msbin/errors.hpp"

namespace msbin {

std::string_view to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::Otsu: return "otsu";
    case KernelKind::Niblack: return "niblack";
    case KernelKind::Sauvola: return "sauvola";
    case KernelKind::BgSuppressed: return "bg_suppressed";
  }
  return "sauvola";
}

KernelKind parse_kernel_kind(std::string_view name) {
  if (name == "otsu") return KernelKind::Otsu;
  if (name == "niblack") return KernelKind::Niblack;
  if (name == "sauvola") return KernelKind::Sauvola;
  if (name == "bg_suppressed") return KernelKind::BgSuppressed;
  throw ConfigError("unknown kernel '" + std::string(name) + "'");
}

KernelSpec KernelSpec::otsu() {
  KernelSpec s;
  s.kind = KernelKind::Otsu;
  s.k = 0.0;
  return s;
}

KernelSpec KernelSpec::niblack(int window_radius, double k) {
  KernelSpec s;
  s.kind = KernelKind::Niblack;
  s.window_radius = window_radius;
  s.k = k;
  return s;
}

KernelSpec KernelSpec::sauvola(int window_radius, double k, double r) {
  KernelSpec s;
  s.kind = KernelKind::Sauvola;
  s.window_radius = window_radius;
  s.k = k;
  s.sauvola_r = r;
  return s;
}

KernelSpec KernelSpec::bg_suppressed(KernelSpec inner, double bg_weight) {
  KernelSpec s;
  s.kind = KernelKind::BgSuppressed;
  s.bg_weight = bg_weight;
  s.inner = std::make_shared<const KernelSpec>(std::move(inner));
  return s;
}

void KernelSpec::validate() const {
  if (window_radius < 1) throw ConfigError("kernel: window_radius must be >= 1");
  if (kind == KernelKind::Sauvola && !(sauvola_r > 0.0)) throw ConfigError("kernel: sauvola R must be positive");
  if (kind == KernelKind::BgSuppressed) {
    if (bg_weight < 0.0 || bg_weight > 1.0) throw ConfigError("kernel: bg_weight must lie in [0,1]");
    if (!inner) throw ConfigError("kernel: bg_suppressed needs an inner kernel");
    if (inner->kind == KernelKind::BgSuppressed) throw ConfigError("kernel: bg_suppressed cannot nest");
    inner->validate();
  }
}

bool operator==(const KernelSpec& a, const KernelSpec& b) {
  if (a.kind != b.kind || a.window_radius != b.window_radius || a.k != b.k || a.sauvola_r != b.sauvola_r ||
      a.bg_weight != b.bg_weight)
    return false;
  if (!a.inner || !b.inner) return !a.inner && !b.inner;
  return *a.inner == *b.inner;
}

WindowStats window_stats(const IntensityPlane& plane, int radius) {
  const int w = plane.width(), h = plane.height();
  const std::size_t stride = static_cast<std::size_t>(w) + 1;
  std::vector<double> sum(stride * (static_cast<std::size_t>(h) + 1), 0.0);
  std::vector<double> sq(sum.size(), 0.0);
  for (int y = 0; y < h; ++y) {
    double row = 0.0, row_sq = 0.0;
    for (int x = 0; x < w; ++x) {
      const double v = plane(x, y);
      row += v;
      row_sq += v * v;
      const std::size_t i = (static_cast<std::size_t>(y) + 1) * stride + static_cast<std::size_t>(x) + 1;
      sum[i] = sum[i - stride] + row;
      sq[i] = sq[i - stride] + row_sq;
    }
  }
  WindowStats out;
  out.mean.resize(plane.size());
  out.stddev.resize(plane.size());
  for (int y = 0; y < h; ++y) {
    const auto y0 = static_cast<std::size_t>(std::max(0, y - radius));
    const auto y1 = static_cast<std::size_t>(std::min(h - 1, y + radius)) + 1;
    for (int x = 0; x < w; ++x) {
      const auto x0 = static_cast<std::size_t>(std::max(0, x - radius));
      const auto x1 = static_cast<std::size_t>(std::min(w - 1, x + radius)) + 1;
      const double n = static_cast<double>((y1 - y0) * (x1 - x0));
      const double s = sum[y1 * stride + x1] - sum[y0 * stride + x1] - sum[y1 * stride + x0] + sum[y0 * stride + x0];
      const double s2 = sq[y1 * stride + x1] - sq[y0 * stride + x1] - sq[y1 * stride + x0] + sq[y0 * stride + x0];
      const double mean = s / n;
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      out.mean[i] = mean;
      out.stddev[i] = std::sqrt(std::max(0.0, s2 / n - mean * mean));
    }
  }
  return out;
}

std::array<std::size_t, 256> histogram256(const IntensityPlane& plane) {
  std::array<std::size_t, 256> hist{};
  for (float v : plane.values()) ++hist[static_cast<std::size_t>(bin256(v))];
  return hist;
}

double between_class_variance(const std::array<std::size_t, 256>& hist, int t) {
  double n0 = 0, n1 = 0, s0 = 0, s1 = 0;
  for (int i = 0; i < 256; ++i) {
    const double c = static_cast<double>(hist[static_cast<std::size_t>(i)]);
    if (i <= t) {
      n0 += c;
      s0 += c * i;
    } else {
      n1 += c;
      s1 += c * i;
    }
  }
  if (n0 == 0 || n1 == 0) return 0.0;
  const double n = n0 + n1;
  const double d = s0 / n0 - s1 / n1;
  return (n0 / n) * (n1 / n) * d * d;
}

int otsu_threshold(const std::array<std::size_t, 256>& hist) {
  double total = 0, total_sum = 0;
  for (int i = 0; i < 256; ++i) {
    total += static_cast<double>(hist[static_cast<std::size_t>(i)]);
    total_sum += static_cast<double>(hist[static_cast<std::size_t>(i)]) * i;
  }
  int best = -1;
  double best_var = 0.0;
  double n0 = 0, s0 = 0;
  for (int t = 0; t < 255; ++t) {
    n0 += static_cast<double>(hist[static_cast<std::size_t>(t)]);
    s0 += static_cast<double>(hist[static_cast<std::size_t>(t)]) * t;
    const double n1 = total - n0;
    if (n0 == 0 || n1 == 0) continue;
    const double d = s0 / n0 - (total_sum - s0) / n1;
    const double var = (n0 / total) * (n1 / total) * d * d;
    if (var > best_var) {
      best_var = var;
      best = t;
    }
  }
  return best;
}

namespace {

bool is_constant(const IntensityPlane& p) { return p.empty() || p.min_value() == p.max_value(); }

BinaryImage binarize_otsu(const GrayImage& gray) {
  const auto& p = gray.plane();
  const int t = otsu_threshold(histogram256(p));
  BinaryImage out(p.width(), p.height());
  if (t < 0) return out;
  std::vector<std::uint8_t> m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m[i] = bin256(p[i]) > t ? 1 : 0;
  return BinaryImage(p.width(), p.height(), std::move(m));
}

BinaryImage binarize_local(const GrayImage& gray, const KernelSpec& spec) {
  const auto& p = gray.plane();
  const WindowStats st = window_stats(p, spec.window_radius);
  std::vector<std::uint8_t> m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double g = p[i];
    if (spec.kind == KernelKind::Niblack) {
      m[i] = g > st.mean[i] - spec.k * st.stddev[i] ? 1 : 0;
    } else {
      const double white = 1.0 - g;
      const double threshold = (1.0 - st.mean[i]) * (1.0 + spec.k * (st.stddev[i] / spec.sauvola_r - 1.0));
      m[i] = white <= threshold ? 1 : 0;
    }
  }
  return BinaryImage(p.width(), p.height(), std::move(m));
}

}  // namespace

BinaryImage binarize(const GrayImage& gray, const KernelSpec& spec) {
  spec.validate();
  if (spec.kind == KernelKind::BgSuppressed)
    throw KernelError("bg_suppressed kernel needs the source multispectral image");
  if (is_constant(gray.plane())) return BinaryImage(gray.width(), gray.height());
  switch (spec.kind) {
    case KernelKind::Otsu: return binarize_otsu(gray);
    case KernelKind::Niblack:
    case KernelKind::Sauvola: return binarize_local(gray, spec);
    default: break;
  }
  throw KernelError("unsupported kernel");
}

BinaryImage binarize(const GrayImage& gray, const KernelSpec& spec, const MsImage& source) {
  if (spec.kind != KernelKind::BgSuppressed) return binarize(gray, spec);
  spec.validate();
  return binarize(suppress_background(source, gray, spec.bg_weight), *spec.inner);
}

IntensityPlane histogram_match(const IntensityPlane& source, const IntensityPlane& reference) {
  const auto hs = histogram256(source);
  const auto hr = histogram256(reference);
  const double ns = static_cast<double>(source.size());
  const double nr = static_cast<double>(reference.size());
  std::array<double, 256> cdf_s{}, cdf_r{};
  double acc_s = 0, acc_r = 0;
  for (std::size_t i = 0; i < 256; ++i) {
    acc_s += static_cast<double>(hs[i]);
    acc_r += static_cast<double>(hr[i]);
    cdf_s[i] = acc_s / ns;
    cdf_r[i] = acc_r / nr;
  }
  // bin mapping: smallest reference bin whose CDF reaches the source CDF
  std::array<int, 256> map{};
  for (std::size_t i = 0; i < 256; ++i) {
    int j = 0;
    while (j < 255 && cdf_r[static_cast<std::size_t>(j)] < cdf_s[i] - 1e-12) ++j;
    map[i] = j;
  }
  std::vector<float> out(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) {
    const float v = source[i];
    const int b = bin256(v);
    const float frac = v * 256.0f - static_cast<float>(b);
    out[i] = (static_cast<float>(map[static_cast<std::size_t>(b)]) + frac) / 256.0f;
  }
  return IntensityPlane(source.width(), source.height(), std::move(out));
}

GrayImage suppress_background(const MsImage& source, const GrayImage& gray, double bg_weight) {
  if (source.band_count() < 8)
    throw KernelError("bg_suppressed kernel needs at least 8 bands, image '" + source.name() + "' has " +
                      std::to_string(source.band_count()));
  if (bg_weight < 0.0 || bg_weight > 1.0) throw ConfigError("bg_weight must lie in [0,1]");
  const auto& b7 = source.band(7);
  const auto& b8 = source.band(8);
  if (b7.width() != gray.width() || b7.height() != gray.height())
    throw Error("suppress_background: gray and source dimensions differ");
  std::vector<float> bg(b7.size());
  for (std::size_t i = 0; i < bg.size(); ++i) bg[i] = 1.0f - 0.5f * (b7[i] + b8[i]);
  const IntensityPlane matched = histogram_match(IntensityPlane(b7.width(), b7.height(), std::move(bg)), gray.plane());
  std::vector<float> out(matched.size());
  const auto w = static_cast<float>(bg_weight);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = gray.plane()[i] - w * matched[i];
  return GrayImage(IntensityPlane(gray.width(), gray.height(), std::move(out)));
}

}  // namespace msbin
