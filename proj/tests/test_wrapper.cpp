#include "doctest.h"
#include "helpers.hpp"
#include "msbin/parallel.hpp"
#include "msbin/synth.hpp"
#include "msbin/wrapper.hpp"

using namespace msbin;

namespace {

SynthImage clean_page(std::uint64_t seed, int size = 96) {
  SynthConfig c;
  c.seed = seed;
  c.width = size;
  c.height = size;
  c.bleedthrough_strength.assign(8, 0.0);
  c.noise_sigma_profile.assign(8, 0.005);
  c.text_contrast_profile.assign(8, 0.7);
  return generate(c, "page");
}

BinaryImage blob(int w, int h, int x0, int y0, int bw, int bh) {
  BinaryImage m(w, h);
  for (int y = y0; y < y0 + bh; ++y)
    for (int x = x0; x < x0 + bw; ++x) m.set(x, y, true);
  return m;
}

}  // namespace

TEST_SUITE("wrapper") {
  TEST_CASE("clean dark text on white passes without a retry") {
    const SynthImage s = clean_page(3);
    const WrapperConfig cfg;
    const PreparedImage prep(s.image, nullptr, cfg);
    const WrapResult r = wrap_binarize_detailed(prep, kRgbTriple, KernelSpec::sauvola(), cfg);
    CHECK(r.kernel_calls == 1);
    CHECK(r.test.pass);
    CHECK(r.test.ratio >= cfg.ratio_min);
    CHECK(r.test.ratio <= cfg.ratio_max);
    const double gt_ratio = static_cast<double>(s.gt.ink_count()) / s.gt.size();
    CHECK(r.test.ratio == doctest::Approx(gt_ratio).epsilon(0.5));
  }

  TEST_CASE("all-white image goes through the retry path and stays empty") {
    const MsImage white("white", std::vector<IntensityPlane>(8, IntensityPlane(40, 40, 1.0f)));
    const WrapperConfig cfg;
    const PreparedImage prep(white, nullptr, cfg);
    for (const auto& spec : {KernelSpec::otsu(), KernelSpec::sauvola(), KernelSpec::niblack()}) {
      const WrapResult r = wrap_binarize_detailed(prep, kRgbTriple, spec, cfg);
      CHECK(r.kernel_calls == 2);
      CHECK_FALSE(r.test.pass);
      CHECK(r.mask.ink_count() == 0);
    }
  }

  TEST_CASE("no blur and zero deblur collapses to the bare kernel") {
    const SynthImage s = clean_page(4);
    WrapperConfig cfg;
    cfg.blur = false;
    cfg.deblur_amount = 0.0;
    for (const auto& spec : {KernelSpec::sauvola(), KernelSpec::otsu()}) {
      const BinaryImage direct = binarize(to_gray(s.image, {1, 3, 5}, cfg.togray), spec);
      CHECK(wrap_binarize(s.image, {1, 3, 5}, spec, cfg) == direct);
    }
  }

  TEST_CASE("max_retries 0 calls the kernel exactly once") {
    const MsImage white("white", std::vector<IntensityPlane>(3, IntensityPlane(20, 20, 1.0f)));
    WrapperConfig cfg;
    cfg.max_retries = 0;
    const PreparedImage prep(white, nullptr, cfg);
    CHECK(wrap_binarize_detailed(prep, {1, 2, 3}, KernelSpec::otsu(), cfg).kernel_calls == 1);
    cfg.max_retries = 3;
    CHECK(wrap_binarize_detailed(prep, {1, 2, 3}, KernelSpec::otsu(), cfg).kernel_calls == 4);
  }

  TEST_CASE("blur/deblur keeps values in range and is deterministic") {
    std::mt19937_64 rng(31);
    const IntensityPlane p = testutil::random_plane(33, 29, rng);
    const WrapperConfig cfg;
    const IntensityPlane a = blur_deblur(p, cfg);
    CHECK(a.min_value() >= 0.0f);
    CHECK(a.max_value() <= 1.0f);
    CHECK(blur_deblur(p, cfg) == a);
    // a normalized blur leaves a constant plane untouched
    const IntensityPlane flat(10, 10, 0.4f);
    for (float v : testutil::values_of(gaussian_blur(flat, 5.0, 5))) CHECK(v == doctest::Approx(0.4f).epsilon(1e-6));
  }

  TEST_CASE("wrap_binarize is identical across thread counts") {
    const SynthImage s = clean_page(5);
    const WrapperConfig cfg;
    set_thread_count(1);
    const BinaryImage one = wrap_binarize(s.image, {2, 5, 7}, KernelSpec::sauvola(), cfg);
    set_thread_count(4);
    const BinaryImage four = wrap_binarize(s.image, {2, 5, 7}, KernelSpec::sauvola(), cfg);
    set_thread_count(1);
    CHECK(one == four);
  }

  TEST_CASE("singularity test examples") {
    const WrapperConfig cfg;
    SUBCASE("1% ink spread across the page passes") {
      BinaryImage m(100, 100);
      for (int i = 0; i < 100; ++i) m.set((i * 37) % 100, i, true);
      const auto r = singularity_test(m, cfg);
      CHECK(r.ratio == doctest::Approx(0.01));
      CHECK(r.pass);
    }
    SUBCASE("single 3x3 blob on a 1000x1000 page fails") {
      const auto r = singularity_test(blob(1000, 1000, 500, 500, 3, 3), cfg);
      CHECK(r.ratio == doctest::Approx(9e-6));
      CHECK_FALSE(r.pass);
      CHECK(r.bbox_x0 == 500);
      CHECK(r.bbox_x1 == 502);
    }
    SUBCASE("80% ink fails") {
      const auto r = singularity_test(blob(10, 10, 0, 0, 10, 8), cfg);
      CHECK(r.ratio == doctest::Approx(0.8));
      CHECK_FALSE(r.pass);
    }
    SUBCASE("enough ink trapped in a small region fails on the bounding box") {
      const auto r = singularity_test(blob(100, 100, 10, 10, 20, 20), cfg);
      CHECK(r.ratio == doctest::Approx(0.04));
      CHECK(r.bbox_fraction == doctest::Approx(0.04));
      CHECK_FALSE(r.pass);
    }
    SUBCASE("the verdict is translation invariant") {
      for (int dx : {0, 13, 40}) {
        BinaryImage m(100, 100);
        for (int y = 20; y < 50; ++y)
          for (int x = 0; x < 50; x += 3) m.set(x + dx, y, true);
        const auto r = singularity_test(m, cfg);
        CHECK(r.pass);
        CHECK(r.ratio == doctest::Approx(0.051));
      }
    }
  }

  TEST_CASE("inpainting examples") {
    SUBCASE("nothing above the cutoff is the identity") {
      const GrayImage flat(IntensityPlane(30, 30, 0.3f));
      CHECK(inpaint_outliers(flat, 0.5) == flat);
    }
    SUBCASE("one saturated pixel in a flat field becomes the field value") {
      std::vector<float> v(900, 0.3f);
      v[15 * 30 + 15] = 1.0f;
      const GrayImage out = inpaint_outliers(GrayImage(IntensityPlane(30, 30, v)), 0.5);
      CHECK(out.plane()(15, 15) == doctest::Approx(0.3f).epsilon(1e-6));
    }
    SUBCASE("four isolated saturated pixels are exactly the ones that change") {
      std::vector<float> v(1024, 0.3f);
      const std::vector<std::size_t> spots{3 * 32 + 4, 10 * 32 + 20, 25 * 32 + 7, 30 * 32 + 30};
      for (auto i : spots) v[i] = 1.0f;
      const IntensityPlane in(32, 32, v);
      const GrayImage out = inpaint_outliers(GrayImage(in), 0.5);
      std::vector<std::size_t> changed;
      for (std::size_t i = 0; i < in.size(); ++i)
        if (out.plane()[i] != in[i]) changed.push_back(i);
      CHECK(changed == spots);
    }
  }

  TEST_CASE("wrapper config validation") {
    WrapperConfig cfg;
    cfg.ratio_min = 0.7;
    CHECK_THROWS(cfg.validate());
    cfg = {};
    cfg.blur_sigma = 0;
    CHECK_THROWS(cfg.validate());
    cfg = {};
    CHECK_NOTHROW(cfg.validate());
  }
}
