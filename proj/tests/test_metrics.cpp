#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "msbin/errors.hpp"
#include "msbin/metrics.hpp"
#include "oracles.hpp"

using namespace msbin;

namespace {

BinaryImage row(std::vector<std::uint8_t> v) {
  const int w = static_cast<int>(v.size());
  return BinaryImage(w, 1, std::move(v));
}

BinaryImage complement(const BinaryImage& m) {
  BinaryImage c(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) c.set(x, y, !m(x, y));
  return c;
}

ImageScores scores(std::string name, double fm, double nrm_v, double drd_v, double k) {
  ImageScores s;
  s.name = std::move(name);
  s.fm = fm;
  s.nrm = nrm_v;
  s.drd = drd_v;
  s.kappa = k;
  return s;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("confusion examples") {
    BinaryImage gt(10, 10);
    for (int i = 0; i < 10; ++i) gt.set(i, i, true);
    const auto same = confusion(gt, gt);
    CHECK(same == ConfusionCounts{10, 0, 90, 0});

    const auto c = confusion(row({1, 0, 0, 0}), row({1, 1, 0, 0}));
    CHECK(c == ConfusionCounts{1, 0, 2, 1});

    const auto inv = confusion(complement(gt), gt);
    CHECK(inv.tp == 0);
    CHECK(inv.tn == 0);
    CHECK(inv.total() == 100);
    CHECK_THROWS(confusion(BinaryImage(2, 2), BinaryImage(2, 3)));
  }

  TEST_CASE("worked 2x2 example: FM 66.67, NRM 25, kappa 50") {
    const auto c = confusion(BinaryImage(2, 2, {1, 0, 0, 0}), BinaryImage(2, 2, {1, 1, 0, 0}));
    CHECK(f_measure(c) == doctest::Approx(200.0 / 3.0));
    CHECK(nrm(c) == doctest::Approx(25.0));
    CHECK(kappa(c) == doctest::Approx(50.0));
  }

  TEST_CASE("F-measure edge rules") {
    CHECK(f_measure({5, 0, 5, 0}) == doctest::Approx(100.0));
    CHECK(f_measure({0, 5, 0, 5}) == 0.0);
    CHECK_THROWS_AS(f_measure({0, 3, 7, 0}), MetricUndefined);
  }

  TEST_CASE("NRM edge rules") {
    CHECK(nrm({4, 0, 6, 0}) == 0.0);
    CHECK(nrm({0, 6, 0, 4}) == doctest::Approx(100.0));
    CHECK_THROWS_AS(nrm({0, 0, 5, 0}), MetricUndefined);
    CHECK_THROWS_AS(nrm({5, 0, 0, 0}), MetricUndefined);
  }

  TEST_CASE("kappa: perfect, degenerate and chance agreement") {
    CHECK(kappa({4, 0, 6, 0}) == doctest::Approx(100.0));
    CHECK_THROWS_AS(kappa({10, 0, 0, 0}), MetricUndefined);
    std::mt19937_64 rng(41);
    const BinaryImage gt = testutil::random_mask(256, 256, 0.3, rng);
    const BinaryImage b = testutil::random_mask(256, 256, 0.3, rng);
    CHECK(std::abs(kappa(confusion(b, gt))) < 2.0);
  }

  TEST_CASE("FM, NRM and kappa depend only on the counts") {
    std::mt19937_64 rng(42);
    for (int t = 0; t < 20; ++t) {
      const BinaryImage gt = testutil::random_mask(12, 12, 0.4, rng);
      const BinaryImage b = testutil::random_mask(12, 12, 0.4, rng);
      // permute pixels jointly: counts unchanged, images different
      std::vector<std::size_t> perm(gt.size());
      for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
      std::shuffle(perm.begin(), perm.end(), rng);
      std::vector<std::uint8_t> g2(gt.size()), b2(gt.size());
      for (std::size_t i = 0; i < perm.size(); ++i) {
        g2[i] = gt[perm[i]];
        b2[i] = b[perm[i]];
      }
      const auto c1 = confusion(b, gt);
      const auto c2 = confusion(BinaryImage(12, 12, b2), BinaryImage(12, 12, g2));
      REQUIRE(c1 == c2);
      CHECK(f_measure(c1) == f_measure(c2));
      CHECK(nrm(c1) == nrm(c2));
      CHECK(kappa(c1) == kappa(c2));
    }
  }

  TEST_CASE("FM=100, NRM=0, kappa=100 exactly when b equals gt") {
    std::mt19937_64 rng(43);
    for (int t = 0; t < 30; ++t) {
      const BinaryImage gt = testutil::random_mask(9, 9, 0.5, rng);
      BinaryImage b = gt;
      if (t % 2) b.set(t % 9, (t * 5) % 9, !gt(t % 9, (t * 5) % 9));
      const auto c = confusion(b, gt);
      const bool equal = b == gt;
      CHECK((f_measure(c) == 100.0) == equal);
      CHECK((nrm(c) == 0.0) == equal);
      CHECK((kappa(c) == 100.0) == equal);
    }
  }

  TEST_CASE("DRD weights are normalised inverse distances") {
    const auto& w = drd_weights();
    double total = 0;
    for (const auto& r : w)
      for (double v : r) total += v;
    CHECK(total == doctest::Approx(1.0));
    CHECK(w[2][2] == 0.0);
    CHECK(w[2][3] / w[3][3] == doctest::Approx(std::sqrt(2.0)));
  }

  TEST_CASE("DRD examples") {
    BinaryImage gt(16, 16);
    for (int y = 0; y < 7; ++y)
      for (int x = 0; x < 7; ++x) gt.set(x, y, true);
    CHECK(nubn(gt) == 1);
    CHECK(drd(gt, gt) == 0.0);

    BinaryImage b = gt;
    b.set(3, 3, false);
    CHECK(drd_pixel(b, gt, 3, 3) == 1.0);
    CHECK(drd(b, gt) == 1.0);

    BinaryImage speck(16, 16);
    speck.set(12, 12, true);
    speck.set(2, 2, true);
    BinaryImage removed = speck;
    removed.set(12, 12, false);
    CHECK(drd_pixel(removed, speck, 12, 12) == 0.0);

    CHECK_THROWS_AS(drd(BinaryImage(16, 16), BinaryImage(16, 16)), MetricUndefined);
  }

  TEST_CASE("NUBN counts partial border blocks") {
    BinaryImage gt(10, 10);
    gt.set(9, 9, true);
    gt.set(8, 9, false);
    CHECK(nubn(gt) == 1);
    gt.set(0, 0, true);
    CHECK(nubn(gt) == 2);
  }

  TEST_CASE("DRD matches the double-loop oracle exactly") {
    std::mt19937_64 rng(44);
    std::uniform_real_distribution<double> p(0.05, 0.6);
    int checked = 0;
    for (int t = 0; t < 200; ++t) {
      const BinaryImage gt = testutil::random_mask(32, 32, p(rng), rng);
      const BinaryImage b = testutil::random_mask(32, 32, p(rng), rng);
      if (nubn(gt) == 0) continue;
      CHECK(drd(b, gt) == oracle::drd(b, gt));
      ++checked;
    }
    CHECK(checked == 200);
  }

  TEST_CASE("evaluate annotates undefined metrics") {
    const ImageScores s = evaluate(BinaryImage(8, 8), BinaryImage(8, 8), "blank");
    CHECK_FALSE(s.fm.has_value());
    CHECK_FALSE(s.drd.has_value());
    CHECK(s.notes.size() >= 2);
  }

  TEST_CASE("aggregate examples") {
    std::vector<ImageScores> v{scores("a", 80, 1, 2, 70), scores("b", 60, 3, 4, 50)};
    const auto a = aggregate(v);
    CHECK(a.fm.avg == doctest::Approx(70));
    CHECK(a.fm.std == doctest::Approx(10));
    CHECK(*a.fm.avg_1 == doctest::Approx(80));
    // the _1 drop is the lowest-FM image for every metric
    CHECK(*a.nrm.avg_1 == doctest::Approx(1));
    CHECK(*a.drd.avg_1 == doctest::Approx(2));
    CHECK(*a.kappa.avg_1 == doctest::Approx(70));

    std::vector<ImageScores> eq{scores("a", 75, 1, 1, 1), scores("b", 75, 1, 1, 1), scores("c", 75, 1, 1, 1)};
    const auto e = aggregate(eq);
    CHECK(e.fm.std == 0.0);
    CHECK(*e.fm.avg_1 == e.fm.avg);

    std::mt19937_64 rng(45);
    std::uniform_real_distribution<double> u(40, 95);
    for (int t = 0; t < 50; ++t) {
      std::vector<double> fm(5);
      for (auto& x : fm) x = u(rng);
      const auto st = metric_stats(fm);
      CHECK(*st.avg_1 >= st.avg - 1e-12);
    }
    CHECK_THROWS(aggregate(std::vector<ImageScores>{}));
  }

  TEST_CASE("ranking score examples") {
    const auto dirs = std::vector<MetricDirection>{MetricDirection::HigherBetter, MetricDirection::LowerBetter};
    const auto r = ranking_scores({{{80, 2}}, {{40, 4}}}, dirs);
    CHECK(r.scores[0] == doctest::Approx(2.0));
    CHECK(r.scores[1] == doctest::Approx(1.0));
    const auto swapped = ranking_scores({{{40, 4}}, {{80, 2}}}, dirs);
    CHECK(swapped.scores[0] == doctest::Approx(1.0));
    CHECK(swapped.scores[1] == doctest::Approx(2.0));

    const auto single = ranking_scores({{{70, 1, 2, 60}, {80, 2, 1, 75}, {90, 3, 3, 85}}}, standard_directions());
    CHECK(single.scores[0] == doctest::Approx(12.0));
  }

  TEST_CASE("ranking contributions are at most 1 and zero divisors are flagged") {
    std::mt19937_64 rng(46);
    std::uniform_real_distribution<double> u(0.5, 100);
    const auto dirs = standard_directions();
    std::vector<std::vector<std::vector<double>>> v(3, std::vector<std::vector<double>>(4, std::vector<double>(4)));
    for (auto& m : v)
      for (auto& im : m)
        for (auto& x : im) x = u(rng);
    v[1][2] = v[0][2];
    const auto r = ranking_scores(v, dirs);
    for (double s : r.scores) CHECK(s <= 16.0 + 1e-12);

    const auto z = ranking_scores({{{0, 0}}, {{-5, 1}}}, std::vector<MetricDirection>{MetricDirection::HigherBetter,
                                                                                  MetricDirection::LowerBetter});
    CHECK_FALSE(z.flagged.empty());
  }

  TEST_CASE("report CSV and JSON") {
    testutil::TempDir tmp("report");
    ScoreReport rep;
    rep.method = "m1";
    rep.per_image = {scores("a", 80, 1, 2, 70), scores("b", 60, 3, 4, 50)};
    rep.per_image[1].drd.reset();
    rep.per_image[1].notes.push_back("DRD undefined");
    rep.aggregates = aggregate(rep.per_image);
    write_report_csv(tmp / "r.csv", rep);
    write_report_json(tmp / "r.json", rep);
    std::ifstream in(tmp / "r.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "image,fm,nrm,drd,kappa");
    std::string line;
    std::getline(in, line);
    CHECK(line == "a,80.000000,1.000000,2.000000,70.000000");
    std::getline(in, line);
    CHECK(line == "b,60.000000,3.000000,,50.000000");

    const ScoreReport back = read_report_json(tmp / "r.json");
    CHECK(back.method == "m1");
    REQUIRE(back.per_image.size() == 2);
    CHECK(*back.per_image[0].fm == 80.0);
    CHECK_FALSE(back.per_image[1].drd.has_value());
  }
}
