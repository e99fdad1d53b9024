#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msbin/image.hpp"

namespace msbin {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

ConfusionCounts confusion(const BinaryImage& result, const BinaryImage& gt);

// All percent-scale. Undefined inputs throw MetricUndefined.
double f_measure(const ConfusionCounts& c);
double nrm(const ConfusionCounts& c);
double kappa(const ConfusionCounts& c);

/// Normalised 5x5 inverse-distance weight matrix, W(0,0) = 0, sum = 1.
/// Indexed [i + 2][j + 2] for offsets i, j in [-2, 2].
const std::array<std::array<double, 5>, 5>& drd_weights();

/// Number of 8x8 GT blocks (partial blocks at the right/bottom border
/// included) containing both ink and background.
std::size_t nubn(const BinaryImage& gt);

/// Distortion of one mismatching pixel; out-of-image neighbours contribute 0.
double drd_pixel(const BinaryImage& result, const BinaryImage& gt, int x, int y);

/// Sum of drd_pixel over mismatches divided by NUBN.
double drd(const BinaryImage& result, const BinaryImage& gt);

struct ImageScores {
  std::string name;
  std::optional<double> fm;
  std::optional<double> nrm;
  std::optional<double> drd;
  std::optional<double> kappa;
  std::vector<std::string> notes;  // one entry per undefined metric
};

/// Computes all four metrics; undefined ones are left empty and annotated.
ImageScores evaluate(const BinaryImage& result, const BinaryImage& gt, std::string name);

struct MetricStats {
  double avg = 0.0;
  double std = 0.0;  // population
  std::optional<double> avg_1;
  std::optional<double> std_1;
  std::size_t count = 0;
};

/// avg/std over all values; _1 variants drop the value at `drop_index`.
MetricStats metric_stats(std::span<const double> values, std::optional<std::size_t> drop_index);

/// avg/std, with _1 variants dropping the single lowest value.
MetricStats metric_stats(std::span<const double> values);

struct ReportAggregates {
  MetricStats fm, nrm, drd, kappa;
};

/// The _1 aggregates of every metric drop the same image: the one with the
/// lowest FM. Images with an undefined metric are skipped for that metric.
ReportAggregates aggregate(std::span<const ImageScores> scores);

struct ScoreReport {
  std::string method;
  std::vector<ImageScores> per_image;
  ReportAggregates aggregates;
};

/// CSV `image,fm,nrm,drd,kappa`, then a blank line and an aggregates block
/// `statistic,fm,nrm,drd,kappa` with rows avg, std, avg_1, std_1.
void write_report_csv(const std::filesystem::path& path, const ScoreReport& report);
void write_report_json(const std::filesystem::path& path, const ScoreReport& report);
ScoreReport read_report_json(const std::filesystem::path& path);

enum class MetricDirection { HigherBetter, LowerBetter };

/// Standard direction for the (fm, nrm, drd, kappa) metric order.
std::vector<MetricDirection> standard_directions();

struct RankingFlag {
  std::size_t method = 0;
  std::size_t image = 0;
  std::size_t metric = 0;
};

struct RankingResult {
  std::vector<double> scores;  // one S per method
  std::vector<RankingFlag> flagged;
};

/// values[method][image][metric]. Each contribution is Best/value for
/// lower-better metrics and value/Best for higher-better ones; a method that
/// attains Best scores exactly 1. A ratio whose divisor is zero contributes 0
/// and is flagged.
RankingResult ranking_scores(const std::vector<std::vector<std::vector<double>>>& values,
                             std::span<const MetricDirection> directions);

}  // namespace msbin
