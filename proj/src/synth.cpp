#include "msbin/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <random>

#include "msbin/errors.hpp"
#include "msbin/parallel.hpp"
#include "msbin/random.hpp"

namespace msbin {

namespace {

constexpr std::array<double, 8> kAbsorption{0.60, 0.60, 0.55, 0.50, 0.35, 0.25, 0.15, 0.08};
constexpr std::array<double, 8> kBleed{0.0, 0.15, 0.15, 0.15, 0.15, 0.0, 0.0, 0.0};
constexpr std::array<double, 8> kNoise{0.02, 0.02, 0.02, 0.02, 0.04, 0.06, 0.08, 0.10};

// Linear resampling of an 8-entry profile onto n bands.
std::vector<double> resample(const std::array<double, 8>& p, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int b = 0; b < n; ++b) {
    const double s = n == 1 ? 0.0 : 7.0 * b / (n - 1);
    const int i = std::min(6, static_cast<int>(s));
    const double f = s - i;
    out[static_cast<std::size_t>(b)] = p[static_cast<std::size_t>(i)] * (1 - f) + p[static_cast<std::size_t>(i) + 1] * f;
  }
  if (n == 8) out.assign(p.begin(), p.end());
  return out;
}

void check_profile(const std::vector<double>& p, int n, const char* what) {
  if (!p.empty() && static_cast<int>(p.size()) != n)
    throw ConfigError(std::string("synth: ") + what + " needs one entry per band");
  for (double v : p)
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string("synth: ") + what + " entries must lie in [0,1]");
}

class Canvas {
 public:
  Canvas(int w, int h) : w_(w), h_(h), ink_(static_cast<std::size_t>(w) * h, 0) {}

  void stroke(double x0, double y0, double x1, double y1, double r) {
    const double len = std::hypot(x1 - x0, y1 - y0);
    const int steps = std::max(1, static_cast<int>(std::ceil(len / 0.5)));
    for (int s = 0; s <= steps; ++s) {
      const double t = static_cast<double>(s) / steps;
      disk(x0 + t * (x1 - x0), y0 + t * (y1 - y0), r);
    }
  }

  std::size_t count() const { return count_; }
  std::vector<std::uint8_t> take() { return std::move(ink_); }

 private:
  void disk(double cx, double cy, double r) {
    const int xa = std::max(0, static_cast<int>(std::floor(cx - r)));
    const int xb = std::min(w_ - 1, static_cast<int>(std::ceil(cx + r)));
    const int ya = std::max(0, static_cast<int>(std::floor(cy - r)));
    const int yb = std::min(h_ - 1, static_cast<int>(std::ceil(cy + r)));
    for (int y = ya; y <= yb; ++y)
      for (int x = xa; x <= xb; ++x) {
        const double dx = x - cx, dy = y - cy;
        if (dx * dx + dy * dy > r * r) continue;
        auto& p = ink_[static_cast<std::size_t>(y) * w_ + x];
        if (!p) {
          p = 1;
          ++count_;
        }
      }
  }

  int w_, h_;
  std::vector<std::uint8_t> ink_;
  std::size_t count_ = 0;
};

// Glyph-like strokes dropped onto text lines until the ink fraction reaches density.
std::vector<std::uint8_t> text_mask(int w, int h, double density, std::uint64_t seed) {
  Canvas canvas(w, h);
  const auto target = static_cast<std::size_t>(std::llround(density * w * h));
  if (target == 0) return canvas.take();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int line_h = std::max(6, h / 12);
  const double gh = 0.6 * line_h;
  const double gw = std::max(3.0, 0.7 * gh);
  const double radius = std::max(0.8, gh / 12.0);
  const int rows = std::max(1, (h - line_h / 2) / line_h);
  std::uniform_int_distribution<int> row(0, rows - 1);
  std::uniform_int_distribution<int> nstrokes(1, 3);
  const std::size_t max_glyphs = 64 * static_cast<std::size_t>(w) * h;
  for (std::size_t g = 0; g < max_glyphs && canvas.count() < target; ++g) {
    const double x0 = unit(rng) * std::max(1.0, w - gw);
    const double y0 = (line_h - gh) / 2 + row(rng) * line_h;
    const int n = nstrokes(rng);
    for (int s = 0; s < n && canvas.count() < target; ++s) {
      const double ax = x0 + unit(rng) * gw, ay = y0 + unit(rng) * gh;
      const double bx = x0 + unit(rng) * gw, by = y0 + unit(rng) * gh;
      canvas.stroke(ax, ay, bx, by, radius);
    }
  }
  return canvas.take();
}

struct Stain {
  double cx, cy, sigma, depth;
};

}  // namespace

void SynthConfig::validate() const {
  if (width < 1 || height < 1) throw ConfigError("synth: width and height must be positive");
  if (n_band < 3) throw ConfigError("synth: n_band must be >= 3");
  if (!(text_density >= 0.0 && text_density <= 1.0)) throw ConfigError("synth: text_density must lie in [0,1]");
  if (!(misregistration_px >= 0.0 && misregistration_px <= 1.0))
    throw ConfigError("synth: misregistration_px must lie in [0,1]");
  check_profile(text_contrast_profile, n_band, "text_contrast_profile");
  check_profile(bleedthrough_strength, n_band, "bleedthrough_strength");
  check_profile(noise_sigma_profile, n_band, "noise_sigma_profile");
}

SynthConfig SynthConfig::resolved() const {
  SynthConfig c = *this;
  if (c.text_contrast_profile.empty()) c.text_contrast_profile = resample(kAbsorption, n_band);
  if (c.bleedthrough_strength.empty()) c.bleedthrough_strength = resample(kBleed, n_band);
  if (c.noise_sigma_profile.empty()) c.noise_sigma_profile = resample(kNoise, n_band);
  return c;
}

SynthImage generate(const SynthConfig& config, const std::string& name) {
  config.validate();
  const SynthConfig cfg = config.resolved();
  const int w = cfg.width, h = cfg.height;
  const std::size_t area = static_cast<std::size_t>(w) * h;

  const auto text = text_mask(w, h, cfg.text_density, derive_seed(cfg.seed, 0, 0));
  auto verso = text_mask(w, h, cfg.text_density, derive_seed(cfg.seed, 0, 1));
  for (int y = 0; y < h; ++y) std::reverse(verso.begin() + y * w, verso.begin() + (y + 1) * w);

  std::mt19937_64 bg_rng(derive_seed(cfg.seed, 1, 0));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double base = 0.78 + 0.08 * unit(bg_rng);
  const double amp = 0.05 + 0.07 * unit(bg_rng);
  const double theta = 2.0 * std::acos(-1.0) * unit(bg_rng);
  std::vector<Stain> stains(static_cast<std::size_t>(std::uniform_int_distribution<int>(0, 3)(bg_rng)));
  for (auto& s : stains) {
    s.cx = unit(bg_rng) * w;
    s.cy = unit(bg_rng) * h;
    s.sigma = std::max(w, h) * (1.0 / 16 + unit(bg_rng) * (1.0 / 6 - 1.0 / 16));
    s.depth = 0.05 + 0.10 * unit(bg_rng);
  }

  std::vector<IntensityPlane> bands(static_cast<std::size_t>(cfg.n_band));
  std::vector<BandMeta> meta(static_cast<std::size_t>(cfg.n_band));
  parallel_for(bands.size(), [&](std::size_t b) {
    const double pos = cfg.n_band == 1 ? 0.0 : static_cast<double>(b) / (cfg.n_band - 1);
    const double absorb = cfg.text_contrast_profile[b];
    const double bleed = cfg.bleedthrough_strength[b];
    const double stain_scale = 1.0 - 0.6 * pos;  // stains fade toward IR

    std::vector<double> clean(area);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double v = base + amp * (std::cos(theta) * (x / double(w) - 0.5) + std::sin(theta) * (y / double(h) - 0.5));
        for (const auto& s : stains) {
          const double dx = x - s.cx, dy = y - s.cy;
          v -= stain_scale * s.depth * std::exp(-(dx * dx + dy * dy) / (2 * s.sigma * s.sigma));
        }
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        v -= absorb * text[i] + bleed * verso[i];
        clean[i] = v;
      }

    std::mt19937_64 shift_rng(derive_seed(cfg.seed, 2, b));
    std::uniform_real_distribution<double> shift(-cfg.misregistration_px, cfg.misregistration_px);
    const double sx = shift(shift_rng), sy = shift(shift_rng);
    std::mt19937_64 noise_rng(derive_seed(cfg.seed, 3, b));
    std::normal_distribution<double> noise(0.0, 1.0);
    const double sigma = cfg.noise_sigma_profile[b];

    auto at = [&](int x, int y) {
      x = std::clamp(x, 0, w - 1);
      y = std::clamp(y, 0, h - 1);
      return clean[static_cast<std::size_t>(y) * w + x];
    };
    std::vector<float> out(area);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double fx = x - sx, fy = y - sy;
        const int x0 = static_cast<int>(std::floor(fx)), y0 = static_cast<int>(std::floor(fy));
        const double ax = fx - x0, ay = fy - y0;
        const double v = (1 - ay) * ((1 - ax) * at(x0, y0) + ax * at(x0 + 1, y0)) +
                         ay * ((1 - ax) * at(x0, y0 + 1) + ax * at(x0 + 1, y0 + 1));
        out[static_cast<std::size_t>(y) * w + x] = static_cast<float>(std::clamp(v + sigma * noise(noise_rng), 0.0, 1.0));
      }
    bands[b] = IntensityPlane(w, h, std::move(out));
    meta[b] = BandMeta{340.0 + pos * 660.0, b == 0 ? 80.0 : 40.0};
  });

  return {MsImage(name, std::move(bands), std::move(meta)), BinaryImage(w, h, std::vector<std::uint8_t>(text))};
}

DatasetManifest generate_dataset(std::size_t n, std::uint64_t base_seed, const SynthConfig& cfg,
                                 const std::filesystem::path& out_dir) {
  cfg.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error("cannot create directory '" + out_dir.string() + "': " + ec.message());

  DatasetManifest manifest;
  manifest.name = out_dir.filename().string();
  if (manifest.name.empty()) manifest.name = "synth";
  manifest.items.resize(n);
  parallel_for(n, [&](std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "img_%03zu", i);
    const std::string name = buf;
    SynthConfig c = cfg;
    c.seed = derive_seed(base_seed, i);
    const SynthImage s = generate(c, name);

    const auto dir = out_dir / name;
    std::filesystem::create_directories(dir);
    ImageManifest im;
    im.name = name;
    im.protocol = "BW01";
    for (int b = 1; b <= s.image.band_count(); ++b) {
      const std::string file = "F" + std::to_string(b) + ".png";
      write_raster(dir / file, plane_to_raster(s.image.band(b), 16));
      const auto& m = s.image.band_meta()[static_cast<std::size_t>(b - 1)];
      im.bands.push_back({file, m.wavelength_nm, m.fwhm_nm});
    }
    save_binary(s.gt, dir / "gt.png");
    im.gt = "gt.png";
    write_image_manifest(dir / kImageManifestName, im);
    manifest.items[i] = {name, std::filesystem::path(name) / "gt.png"};
  });
  write_dataset_manifest(out_dir / kDatasetManifestName, manifest);
  return manifest;
}

}  // namespace msbin
