#include "msbin/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <tuple>

#include "json.hpp"

#include "msbin/errors.hpp"

namespace msbin {

using nlohmann::json;

ConfusionCounts confusion(const BinaryImage& result, const BinaryImage& gt) {
  if (!result.same_shape(gt))
    throw Error("confusion: result is " + std::to_string(result.width()) + "x" + std::to_string(result.height()) +
                " but GT is " + std::to_string(gt.width()) + "x" + std::to_string(gt.height()));
  ConfusionCounts c;
  const auto b = result.data();
  const auto g = gt.data();
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (g[i]) {
      b[i] ? ++c.tp : ++c.fn;
    } else {
      b[i] ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

double f_measure(const ConfusionCounts& c) {
  if (c.tp + c.fn == 0) throw MetricUndefined("F-measure undefined: ground truth has no ink");
  if (c.tp == 0) return 0.0;
  const double r = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  const double p = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  return 200.0 * r * p / (r + p);
}

double nrm(const ConfusionCounts& c) {
  if (c.tp + c.fn == 0 || c.fp + c.tn == 0) throw MetricUndefined("NRM undefined: ground truth has a single class");
  const double rfn = static_cast<double>(c.fn) / static_cast<double>(c.tp + c.fn);
  const double rfp = static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn);
  return 50.0 * (rfn + rfp);
}

double kappa(const ConfusionCounts& c) {
  const std::uint64_t n = c.total();
  const unsigned __int128 chance_n = static_cast<unsigned __int128>(c.tp + c.fn) * (c.tp + c.fp) +
                                     static_cast<unsigned __int128>(c.tn + c.fp) * (c.tn + c.fn);
  if (n == 0 || chance_n == static_cast<unsigned __int128>(n) * n)
    throw MetricUndefined("kappa undefined: chance agreement equals total");
  const double nd = static_cast<double>(n);
  const double ne = static_cast<double>(chance_n) / nd;
  const double no = static_cast<double>(c.tp + c.tn);
  return 100.0 * (no - ne) / (nd - ne);
}

namespace {

// Unnormalized inverse distances; DRD_l divides by their total so that a pixel
// disagreeing with all 24 neighbours scores exactly 1.
struct RawWeights {
  std::array<std::array<double, 5>, 5> w{};
  double total = 0.0;
};

const RawWeights& raw_weights() {
  static const RawWeights raw = [] {
    RawWeights r;
    for (int i = -2; i <= 2; ++i)
      for (int j = -2; j <= 2; ++j) {
        if (i == 0 && j == 0) continue;
        r.w[static_cast<std::size_t>(i + 2)][static_cast<std::size_t>(j + 2)] = 1.0 / std::sqrt(double(i * i + j * j));
        r.total += r.w[static_cast<std::size_t>(i + 2)][static_cast<std::size_t>(j + 2)];
      }
    return r;
  }();
  return raw;
}

}  // namespace

const std::array<std::array<double, 5>, 5>& drd_weights() {
  static const auto weights = [] {
    const RawWeights& r = raw_weights();
    auto w = r.w;
    for (auto& row : w)
      for (double& v : row) v /= r.total;
    return w;
  }();
  return weights;
}

std::size_t nubn(const BinaryImage& gt) {
  std::size_t count = 0;
  for (int by = 0; by < gt.height(); by += 8) {
    for (int bx = 0; bx < gt.width(); bx += 8) {
      bool ink = false, bg = false;
      for (int y = by; y < std::min(by + 8, gt.height()); ++y)
        for (int x = bx; x < std::min(bx + 8, gt.width()); ++x) (gt(x, y) ? ink : bg) = true;
      if (ink && bg) ++count;
    }
  }
  return count;
}

double drd_pixel(const BinaryImage& result, const BinaryImage& gt, int x, int y) {
  const RawWeights& w = raw_weights();
  const int b = result(x, y) ? 1 : 0;
  double sum = 0.0;
  for (int i = -2; i <= 2; ++i) {
    const int yy = y + i;
    if (yy < 0 || yy >= gt.height()) continue;
    for (int j = -2; j <= 2; ++j) {
      const int xx = x + j;
      if (xx < 0 || xx >= gt.width()) continue;
      const int g = gt(xx, yy) ? 1 : 0;
      if (g != b) sum += w.w[static_cast<std::size_t>(i + 2)][static_cast<std::size_t>(j + 2)];
    }
  }
  return sum / w.total;
}

double drd(const BinaryImage& result, const BinaryImage& gt) {
  if (!result.same_shape(gt)) throw Error("drd: dimension mismatch");
  const std::size_t blocks = nubn(gt);
  if (blocks == 0) throw MetricUndefined("DRD undefined: ground truth has no non-uniform 8x8 block");
  double total = 0.0;
  for (int y = 0; y < gt.height(); ++y)
    for (int x = 0; x < gt.width(); ++x)
      if (result(x, y) != gt(x, y)) total += drd_pixel(result, gt, x, y);
  return total / static_cast<double>(blocks);
}

ImageScores evaluate(const BinaryImage& result, const BinaryImage& gt, std::string name) {
  ImageScores s;
  s.name = std::move(name);
  const ConfusionCounts c = confusion(result, gt);
  auto attempt = [&](std::optional<double>& slot, auto&& fn) {
    try {
      slot = fn();
    } catch (const MetricUndefined& e) {
      s.notes.emplace_back(e.what());
    }
  };
  attempt(s.fm, [&] { return f_measure(c); });
  attempt(s.nrm, [&] { return nrm(c); });
  attempt(s.drd, [&] { return drd(result, gt); });
  attempt(s.kappa, [&] { return kappa(c); });
  return s;
}

namespace {

std::pair<double, double> mean_std(std::span<const double> v, std::optional<std::size_t> skip) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (skip && *skip == i) continue;
    sum += v[i];
    ++n;
  }
  const double mean = sum / static_cast<double>(n);
  double sq = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (skip && *skip == i) continue;
    sq += (v[i] - mean) * (v[i] - mean);
  }
  return {mean, std::sqrt(sq / static_cast<double>(n))};
}

}  // namespace

MetricStats metric_stats(std::span<const double> values, std::optional<std::size_t> drop_index) {
  if (values.empty()) throw Error("aggregate of an empty score list");
  MetricStats m;
  m.count = values.size();
  std::tie(m.avg, m.std) = mean_std(values, std::nullopt);
  if (values.size() >= 2 && drop_index && *drop_index < values.size()) {
    const auto [a, s] = mean_std(values, drop_index);
    m.avg_1 = a;
    m.std_1 = s;
  }
  return m;
}

MetricStats metric_stats(std::span<const double> values) {
  if (values.empty()) throw Error("aggregate of an empty score list");
  const auto worst = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
  return metric_stats(values, worst);
}

ReportAggregates aggregate(std::span<const ImageScores> scores) {
  if (scores.empty()) throw Error("aggregate of an empty score list");
  // worst image = lowest defined FM; ties resolve to the first
  std::optional<std::size_t> worst;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (scores[i].fm && (!worst || *scores[i].fm < *scores[*worst].fm)) worst = i;

  auto stats_for = [&](auto member) {
    std::vector<double> values;
    std::optional<std::size_t> drop;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const auto& v = scores[i].*member;
      if (!v) continue;
      if (worst && *worst == i) drop = values.size();
      values.push_back(*v);
    }
    if (values.empty()) return MetricStats{};
    return metric_stats(values, drop);
  };
  ReportAggregates a;
  a.fm = stats_for(&ImageScores::fm);
  a.nrm = stats_for(&ImageScores::nrm);
  a.drd = stats_for(&ImageScores::drd);
  a.kappa = stats_for(&ImageScores::kappa);
  return a;
}

namespace {

std::string fmt(std::optional<double> v) {
  if (!v) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

json opt_json(std::optional<double> v) { return v ? json(*v) : json(nullptr); }

std::optional<double> json_opt(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

json stats_json(const MetricStats& m) {
  return {{"avg", m.avg}, {"std", m.std}, {"avg_1", opt_json(m.avg_1)}, {"std_1", opt_json(m.std_1)},
          {"count", m.count}};
}

MetricStats stats_from_json(const json& j) {
  MetricStats m;
  m.avg = j.value("avg", 0.0);
  m.std = j.value("std", 0.0);
  m.avg_1 = json_opt(j, "avg_1");
  m.std_1 = json_opt(j, "std_1");
  m.count = j.value("count", std::size_t{0});
  return m;
}

}  // namespace

void write_report_csv(const std::filesystem::path& path, const ScoreReport& report) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << "image,fm,nrm,drd,kappa\n";
  for (const auto& s : report.per_image)
    out << s.name << ',' << fmt(s.fm) << ',' << fmt(s.nrm) << ',' << fmt(s.drd) << ',' << fmt(s.kappa) << '\n';
  const auto& a = report.aggregates;
  out << "\nstatistic,fm,nrm,drd,kappa\n";
  out << "avg," << fmt(a.fm.avg) << ',' << fmt(a.nrm.avg) << ',' << fmt(a.drd.avg) << ',' << fmt(a.kappa.avg) << '\n';
  out << "std," << fmt(a.fm.std) << ',' << fmt(a.nrm.std) << ',' << fmt(a.drd.std) << ',' << fmt(a.kappa.std) << '\n';
  out << "avg_1," << fmt(a.fm.avg_1) << ',' << fmt(a.nrm.avg_1) << ',' << fmt(a.drd.avg_1) << ','
      << fmt(a.kappa.avg_1) << '\n';
  out << "std_1," << fmt(a.fm.std_1) << ',' << fmt(a.nrm.std_1) << ',' << fmt(a.drd.std_1) << ','
      << fmt(a.kappa.std_1) << '\n';
}

void write_report_json(const std::filesystem::path& path, const ScoreReport& report) {
  json images = json::array();
  for (const auto& s : report.per_image) {
    images.push_back({{"image", s.name},
                      {"fm", opt_json(s.fm)},
                      {"nrm", opt_json(s.nrm)},
                      {"drd", opt_json(s.drd)},
                      {"kappa", opt_json(s.kappa)},
                      {"notes", s.notes}});
  }
  const auto& a = report.aggregates;
  json j = {{"method", report.method},
            {"images", images},
            {"aggregates",
             {{"fm", stats_json(a.fm)},
              {"nrm", stats_json(a.nrm)},
              {"drd", stats_json(a.drd)},
              {"kappa", stats_json(a.kappa)}}}};
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

ScoreReport read_report_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
    ScoreReport r;
    r.method = j.value("method", path.stem().string());
    for (const auto& e : j.at("images")) {
      ImageScores s;
      s.name = e.at("image").get<std::string>();
      s.fm = json_opt(e, "fm");
      s.nrm = json_opt(e, "nrm");
      s.drd = json_opt(e, "drd");
      s.kappa = json_opt(e, "kappa");
      if (e.contains("notes")) s.notes = e["notes"].get<std::vector<std::string>>();
      r.per_image.push_back(std::move(s));
    }
    if (j.contains("aggregates")) {
      const auto& a = j["aggregates"];
      r.aggregates.fm = stats_from_json(a.at("fm"));
      r.aggregates.nrm = stats_from_json(a.at("nrm"));
      r.aggregates.drd = stats_from_json(a.at("drd"));
      r.aggregates.kappa = stats_from_json(a.at("kappa"));
    }
    return r;
  } catch (const json::exception& e) {
    throw LoadError("malformed report '" + path.string() + "': " + e.what());
  }
}

std::vector<MetricDirection> standard_directions() {
  return {MetricDirection::HigherBetter, MetricDirection::LowerBetter, MetricDirection::LowerBetter,
          MetricDirection::HigherBetter};
}

RankingResult ranking_scores(const std::vector<std::vector<std::vector<double>>>& values,
                             std::span<const MetricDirection> directions) {
  RankingResult r;
  const std::size_t methods = values.size();
  r.scores.assign(methods, 0.0);
  if (methods == 0) return r;
  const std::size_t images = values.front().size();
  for (const auto& m : values) {
    if (m.size() != images) throw Error("ranking: methods disagree on the image count");
    for (const auto& img : m)
      if (img.size() != directions.size()) throw Error("ranking: metric count does not match directions");
  }
  for (std::size_t i = 0; i < images; ++i) {
    for (std::size_t j = 0; j < directions.size(); ++j) {
      const bool higher = directions[j] == MetricDirection::HigherBetter;
      double best = values[0][i][j];
      for (std::size_t k = 1; k < methods; ++k)
        best = higher ? std::max(best, values[k][i][j]) : std::min(best, values[k][i][j]);
      for (std::size_t k = 0; k < methods; ++k) {
        const double v = values[k][i][j];
        double contribution;
        if (v == best) {
          contribution = 1.0;
        } else {
          const double divisor = higher ? best : v;
          if (divisor == 0.0) {
            contribution = 0.0;
            r.flagged.push_back({k, i, j});
          } else {
            contribution = higher ? v / best : best / v;
          }
        }
        r.scores[k] += contribution;
      }
    }
  }
  return r;
}

}  // namespace msbin
