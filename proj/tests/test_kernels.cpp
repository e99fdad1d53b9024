#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "msbin/errors.hpp"
#include "msbin/kernels.hpp"

using namespace msbin;

namespace {

// Independent Otsu: scan every split t (classes bins <= t and > t) and keep
// the first maximum of w0 w1 (mu0 - mu1)^2.
int otsu_oracle(const IntensityPlane& p) {
  std::array<double, 256> h{};
  for (float v : p.values()) h[static_cast<std::size_t>(std::min(255, static_cast<int>(std::floor(v * 256.0))))] += 1;
  int best_t = -1;
  double best = -1;
  for (int t = 0; t < 255; ++t) {
    double w0 = 0, s0 = 0, w1 = 0, s1 = 0;
    for (int i = 0; i < 256; ++i) (i <= t ? w0 : w1) += h[i], (i <= t ? s0 : s1) += h[i] * i;
    if (w0 == 0 || w1 == 0) continue;
    const double d = s0 / w0 - s1 / w1;
    const double v = w0 * w1 * d * d;
    if (v > best * (1 + 1e-12) + 1e-300) {
      best = v;
      best_t = t;
    }
  }
  return best_t;
}

void naive_window(const IntensityPlane& p, int r, int x, int y, double& mean, double& sd) {
  double s = 0, s2 = 0, n = 0;
  for (int j = std::max(0, y - r); j <= std::min(p.height() - 1, y + r); ++j)
    for (int i = std::max(0, x - r); i <= std::min(p.width() - 1, x + r); ++i) {
      s += p(i, j);
      s2 += static_cast<double>(p(i, j)) * p(i, j);
      ++n;
    }
  mean = s / n;
  sd = std::sqrt(std::max(0.0, s2 / n - mean * mean));
}

GrayImage gray_of(std::vector<float> v, int w) {
  const int h = static_cast<int>(v.size()) / w;
  return GrayImage(IntensityPlane(w, h, std::move(v)));
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("two-level image: Otsu marks exactly the dark-ink level") {
    std::vector<float> v(100, 0.2f);
    for (std::size_t i = 0; i < 40; ++i) v[i * 2 + 10] = 0.8f;
    const GrayImage g = gray_of(v, 10);
    const BinaryImage m = binarize(g, KernelSpec::otsu());
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(m[i] == (v[i] == 0.8f));
    const int t = otsu_threshold(histogram256(g.plane()));
    CHECK(t == otsu_oracle(g.plane()));
  }

  TEST_CASE("constant image is all background for every kernel") {
    const GrayImage g(IntensityPlane(9, 7, 0.5f));
    for (const auto& spec : {KernelSpec::otsu(), KernelSpec::niblack(), KernelSpec::sauvola()})
      CHECK(binarize(g, spec).ink_count() == 0);
  }

  TEST_CASE("checkerboard: Otsu marks exactly the 1-valued pixels") {
    std::vector<float> v(64);
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) v[static_cast<std::size_t>(y * 8 + x)] = (x + y) % 2 ? 1.0f : 0.0f;
    const BinaryImage m = binarize(gray_of(v, 8), KernelSpec::otsu());
    for (std::size_t i = 0; i < 64; ++i) CHECK(m[i] == (v[i] == 1.0f));
  }

  TEST_CASE("Otsu threshold matches a brute-force scan on random images") {
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<int> dim(2, 64);
    for (int t = 0; t < 60; ++t) {
      IntensityPlane p = testutil::random_plane(dim(rng), dim(rng), rng);
      if (t % 3 == 0) {
        // bimodal with a few levels
        std::vector<float> v(p.values().begin(), p.values().end());
        for (auto& x : v) x = x < 0.6f ? 0.1f + 0.05f * x : 0.9f - 0.05f * x;
        p = IntensityPlane(p.width(), p.height(), std::move(v));
      }
      const int ours = otsu_threshold(histogram256(p));
      CHECK(ours == otsu_oracle(p));
      const BinaryImage m = binarize(GrayImage(p), KernelSpec::otsu());
      for (std::size_t i = 0; i < p.size(); ++i) CHECK(m[i] == (bin256(p[i]) > ours));
    }
  }

  TEST_CASE("window statistics match a naive clamped window") {
    std::mt19937_64 rng(22);
    const IntensityPlane p = testutil::random_plane(21, 17, rng);
    for (int r : {1, 3, 15}) {
      const WindowStats st = window_stats(p, r);
      for (int y = 0; y < p.height(); ++y)
        for (int x = 0; x < p.width(); ++x) {
          double mean, sd;
          naive_window(p, r, x, y, mean, sd);
          const std::size_t i = static_cast<std::size_t>(y) * p.width() + x;
          CHECK(st.mean[i] == doctest::Approx(mean).epsilon(1e-9));
          CHECK(st.stddev[i] == doctest::Approx(sd).epsilon(1e-6));
        }
    }
  }

  TEST_CASE("Niblack and Sauvola decisions follow the window rule") {
    std::mt19937_64 rng(23);
    const IntensityPlane p = testutil::random_plane(25, 25, rng);
    const GrayImage g(p);
    const auto nib = KernelSpec::niblack(4, -0.2);
    const auto sau = KernelSpec::sauvola(4, 0.34, 0.5);
    const BinaryImage mn = binarize(g, nib);
    const BinaryImage ms = binarize(g, sau);
    const WindowStats st = window_stats(p, 4);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double v = p[i];
      CHECK(mn[i] == (v > st.mean[i] + 0.2 * st.stddev[i]));
      CHECK(ms[i] == (1 - v <= (1 - st.mean[i]) * (1 + 0.34 * (st.stddev[i] / 0.5 - 1))));
    }
  }

  TEST_CASE("Sauvola with sigma equal to R thresholds at the window mean") {
    std::mt19937_64 rng(24);
    const IntensityPlane p = testutil::random_plane(15, 15, rng);
    const WindowStats st = window_stats(p, 2);
    for (std::size_t i = 0; i < p.size(); i += 7) {
      const BinaryImage m = binarize(GrayImage(p), KernelSpec::sauvola(2, 0.34, st.stddev[i]));
      CHECK(m[i] == (p[i] >= st.mean[i]));
    }
  }

  TEST_CASE("binarize is unchanged by a double protocol flip") {
    std::mt19937_64 rng(25);
    for (const auto& spec : {KernelSpec::otsu(), KernelSpec::niblack(3), KernelSpec::sauvola(3)}) {
      const GrayImage g(testutil::random_plane(20, 20, rng));
      CHECK(binarize(flip_protocol(flip_protocol(g)), spec) == binarize(g, spec));
    }
  }

  TEST_CASE("kernel spec validation") {
    KernelSpec s = KernelSpec::sauvola(0);
    CHECK_THROWS_AS(s.validate(), ConfigError);
    CHECK_THROWS_AS(KernelSpec::bg_suppressed(KernelSpec::otsu(), 1.5).validate(), ConfigError);
    CHECK_THROWS_AS(binarize(GrayImage(IntensityPlane(3, 3, 0.2f)), KernelSpec::bg_suppressed(KernelSpec::otsu())),
                    KernelError);
    CHECK(parse_kernel_kind("sauvola") == KernelKind::Sauvola);
    CHECK_THROWS(parse_kernel_kind("howe"));
  }

  TEST_CASE("histogram matching an image onto itself is exact") {
    std::mt19937_64 rng(26);
    const IntensityPlane p = testutil::random_plane(30, 30, rng);
    CHECK(histogram_match(p, p) == p);
  }

  TEST_CASE("background suppression") {
    std::mt19937_64 rng(27);
    const int w = 8, h = 8;
    const IntensityPlane g = testutil::random_plane(w, h, rng);

    SUBCASE("pure background removed when g equals the estimate") {
      const IntensityPlane ink = flip_protocol(g);
      std::vector<IntensityPlane> bands(8, IntensityPlane(w, h, 0.5f));
      bands[6] = ink;
      bands[7] = ink;
      const MsImage src("s", bands);
      for (float v : testutil::values_of(suppress_background(src, GrayImage(g), 1.0).plane())) CHECK(v == 0.0f);
    }
    SUBCASE("zero weight is the identity") {
      std::vector<IntensityPlane> bands;
      for (int b = 0; b < 8; ++b) bands.push_back(testutil::random_plane(w, h, rng));
      const MsImage src("s", bands);
      CHECK(suppress_background(src, GrayImage(g), 0.0) == GrayImage(g));
    }
    SUBCASE("text/background ordering survives a flat estimate") {
      std::vector<float> v(64, 0.2f);
      for (int y = 2; y < 5; ++y)
        for (int x = 1; x < 7; ++x) v[static_cast<std::size_t>(y * 8 + x)] = 0.9f;
      const GrayImage text = gray_of(v, 8);
      const MsImage src("s", std::vector<IntensityPlane>(8, IntensityPlane(w, h, 0.6f)));
      const GrayImage out = suppress_background(src, text, 0.5);
      double t = 0, b = 0;
      int nt = 0, nb = 0;
      for (std::size_t i = 0; i < 64; ++i) (v[i] > 0.5f ? (t += out.plane()[i], ++nt) : (b += out.plane()[i], ++nb));
      CHECK(t / nt > b / nb);
    }
    SUBCASE("fewer than 8 bands is a kernel error") {
      const MsImage src("s", std::vector<IntensityPlane>(7, IntensityPlane(w, h, 0.6f)));
      CHECK_THROWS_AS(suppress_background(src, GrayImage(g), 0.5), KernelError);
      CHECK_THROWS_AS(binarize(GrayImage(g), KernelSpec::bg_suppressed(KernelSpec::otsu()), src), KernelError);
    }
  }
}
