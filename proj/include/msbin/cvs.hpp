#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "msbin/bandopt.hpp"
#include "msbin/ensemble.hpp"
#include "msbin/metrics.hpp"

namespace msbin {

/// Training/validation split as sorted dataset indices.
struct Partition {
  std::vector<std::size_t> training;
  std::vector<std::size_t> validation;

  friend bool operator==(const Partition&, const Partition&) = default;
};

/// train = ceil((1 - p) N) clamped to [1, N]; validation gets the rest.
std::pair<std::size_t, std::size_t> holdout_sizes(std::size_t n, double p);

/// 2 fm_mul - fm_typ - fm_bes: gain over the typical expert minus the gap to
/// the individual-best experts.
double cvs_measure(double fm_typ, double fm_bes, double fm_mul);

struct CvsRecord {
  std::size_t k = 0;
  double fm_typ = 0.0;
  double fm_bes = 0.0;
  double fm_mul = 0.0;
  double cvs = 0.0;
  double fm_mul_std = 0.0;  // population std of the ensemble FM over validation images
  std::vector<double> validation_fm;
  std::vector<std::string> training_ids;
  std::vector<std::string> validation_ids;
};

enum class SelectionCriterion { MaxCvs, MinStd };

/// Dataset, per-image rankings and pipeline shared by every partition
/// evaluation. Expert masks are computed once per (image, triple) and cached;
/// the object is safe to use from several threads.
class CvsContext {
 public:
  CvsContext(std::vector<LabeledImage> dataset, std::vector<RankedTriples> rankings, Pipeline pipeline,
             std::size_t max_frequent = 5);
  ~CvsContext();

  std::size_t size() const { return dataset_.size(); }
  const std::string& name(std::size_t i) const { return dataset_[i].image.name(); }
  const Pipeline& pipeline() const { return pipeline_; }
  const RankedTriples& ranking(std::size_t i) const { return rankings_[i]; }

  std::vector<BandTriple> experts_for(std::span<const std::size_t> training) const;
  ExpertEnsemble build_ensemble(std::span<const std::size_t> training) const;

  BinaryImage expert_mask(std::size_t image, const BandTriple& triple) const;
  double expert_fm(std::size_t image, const BandTriple& triple) const;
  double ensemble_fm(std::size_t image, std::span<const BandTriple> experts) const;

  /// fm_typ uses the RGB triple (4,3,2); fm_bes is each validation image's own
  /// best FM from its ranking; fm_mul is the training-set ensemble's FM.
  CvsRecord evaluate(const Partition& partition, std::size_t k = 0) const;

 private:
  struct MaskCache;
  std::vector<LabeledImage> dataset_;
  std::vector<RankedTriples> rankings_;
  Pipeline pipeline_;
  std::size_t max_frequent_;
  std::vector<std::unique_ptr<PreparedImage>> prepared_;
  std::unique_ptr<MaskCache> cache_;
};

struct CvIterateResult {
  std::vector<CvsRecord> records;
  /// Means over iterations of the per-iteration validation FM statistics.
  double fm_avg = 0.0, fm_std = 0.0, fm_avg_1 = 0.0, fm_std_1 = 0.0;
  double cvs_mean = 0.0;
};

/// Plain p-holdout cross-validation with uniformly random partitions; the
/// partition of iteration k is drawn from a stream seeded by (seed, k).
CvIterateResult cv_iterate(const CvsContext& ctx, double p, std::size_t n_cv, std::uint64_t seed);

/// Same statistics over every partition of the given sizes, in lexicographic
/// order of the training set. Only feasible for small datasets.
CvIterateResult cv_all_partitions(const CvsContext& ctx, double p);

struct CvsSearchResult {
  Partition partition;
  CvsRecord record;
  ExpertEnsemble ensemble;
  std::size_t evaluations = 0;
  std::vector<double> restart_objectives;  // objective of each random restart point
  double objective = 0.0;
};

/// Random-restart single-swap hill climbing over partitions. `budget` counts
/// distinct partition evaluations. MaxCvs maximises the CVS value, MinStd
/// minimises the validation FM standard deviation.
CvsSearchResult cvs_search(const CvsContext& ctx, double p, std::size_t budget, std::uint64_t seed,
                           SelectionCriterion criterion = SelectionCriterion::MaxCvs);

/// All images as training data; no validation, so no CVS value.
ExpertEnsemble all_images_ensemble(const CvsContext& ctx);

/// `k,fm_typ,fm_bes,fm_mul,cvs,training_ids` with ids joined by ';'.
void write_cvs_records_csv(const std::filesystem::path& path, std::span<const CvsRecord> records);

}  // namespace msbin
