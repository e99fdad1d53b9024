#include "msbin/cvs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "msbin/errors.hpp"
#include "msbin/parallel.hpp"
#include "msbin/random.hpp"

namespace msbin {

std::pair<std::size_t, std::size_t> holdout_sizes(std::size_t n, double p) {
  if (n == 0) throw Error("holdout_sizes: empty dataset");
  if (!(p >= 0.0 && p < 1.0)) throw ConfigError("holdout fraction p must lie in [0,1)");
  // (1-p)N is computed with a small tolerance so that e.g. 0.8*21 = 16.8000...01
  // and 0.9*10 = 9.000...02 round the way exact arithmetic would.
  const double raw = (1.0 - p) * static_cast<double>(n);
  auto train = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  train = std::clamp<std::size_t>(train, 1, n);
  return {train, n - train};
}

double cvs_measure(double fm_typ, double fm_bes, double fm_mul) { return 2.0 * fm_mul - fm_typ - fm_bes; }

struct CvsContext::MaskCache {
  std::mutex mutex;
  std::map<std::pair<std::size_t, BandTriple>, std::shared_ptr<const BinaryImage>> masks;
};

CvsContext::CvsContext(std::vector<LabeledImage> dataset, std::vector<RankedTriples> rankings, Pipeline pipeline,
                       std::size_t max_frequent)
    : dataset_(std::move(dataset)),
      rankings_(std::move(rankings)),
      pipeline_(std::move(pipeline)),
      max_frequent_(max_frequent),
      cache_(std::make_unique<MaskCache>()) {
  pipeline_.validate();
  if (dataset_.empty()) throw Error("CVS needs a non-empty dataset");
  if (rankings_.size() != dataset_.size()) throw Error("CVS: one ranking per image is required");
  for (std::size_t i = 0; i < dataset_.size(); ++i) {
    if (!dataset_[i].gt) throw Error("CVS: image '" + name(i) + "' has no ground truth");
    if (rankings_[i].entries.empty()) throw Error("CVS: image '" + name(i) + "' has an empty ranking");
  }
  prepared_.resize(dataset_.size());
  parallel_for(dataset_.size(), [&](std::size_t i) {
    prepared_[i] = std::make_unique<PreparedImage>(dataset_[i].image, &pipeline_.preprocess, pipeline_.wrapper);
  });
}

CvsContext::~CvsContext() = default;

std::vector<BandTriple> CvsContext::experts_for(std::span<const std::size_t> training) const {
  std::vector<RankedTriples> lists;
  lists.reserve(training.size());
  for (std::size_t i : training) lists.push_back(rankings_.at(i));
  return select_experts(lists, max_frequent_);
}

ExpertEnsemble CvsContext::build_ensemble(std::span<const std::size_t> training) const {
  ExpertEnsemble e;
  e.experts = experts_for(training);
  e.pipeline = pipeline_;
  for (std::size_t i : training) e.provenance.training_images.push_back(name(i));
  return e;
}

BinaryImage CvsContext::expert_mask(std::size_t image, const BandTriple& triple) const {
  const auto key = std::make_pair(image, triple);
  {
    std::lock_guard lock(cache_->mutex);
    if (auto it = cache_->masks.find(key); it != cache_->masks.end()) return *it->second;
  }
  auto mask = std::make_shared<const BinaryImage>(
      wrap_binarize_detailed(*prepared_.at(image), triple, pipeline_.kernel, pipeline_.wrapper).mask);
  std::lock_guard lock(cache_->mutex);
  return *cache_->masks.emplace(key, std::move(mask)).first->second;
}

double CvsContext::expert_fm(std::size_t image, const BandTriple& triple) const {
  return f_measure(confusion(expert_mask(image, triple), *dataset_[image].gt));
}

double CvsContext::ensemble_fm(std::size_t image, std::span<const BandTriple> experts) const {
  std::vector<BinaryImage> masks;
  masks.reserve(experts.size());
  for (const auto& t : experts) masks.push_back(expert_mask(image, t));
  return f_measure(confusion(majority_vote(masks), *dataset_[image].gt));
}

namespace {

double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

CvsRecord CvsContext::evaluate(const Partition& partition, std::size_t k) const {
  if (partition.training.empty()) throw Error("CVS: empty training subset");
  if (partition.validation.empty()) throw Error("CVS: empty validation subset; the CVS value is undefined");
  const auto experts = experts_for(partition.training);
  CvsRecord r;
  r.k = k;
  std::vector<double> typ, bes;
  for (std::size_t v : partition.validation) {
    typ.push_back(expert_fm(v, kRgbTriple));
    bes.push_back(rankings_[v].best().fm);
    r.validation_fm.push_back(ensemble_fm(v, experts));
    r.validation_ids.push_back(name(v));
  }
  for (std::size_t t : partition.training) r.training_ids.push_back(name(t));
  r.fm_typ = mean(typ);
  r.fm_bes = mean(bes);
  r.fm_mul = mean(r.validation_fm);
  r.cvs = cvs_measure(r.fm_typ, r.fm_bes, r.fm_mul);
  r.fm_mul_std = metric_stats(r.validation_fm, std::nullopt).std;
  return r;
}

namespace {

Partition random_partition(std::size_t n, std::size_t train, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  Partition p;
  p.training.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(train));
  p.validation.assign(idx.begin() + static_cast<std::ptrdiff_t>(train), idx.end());
  std::sort(p.training.begin(), p.training.end());
  std::sort(p.validation.begin(), p.validation.end());
  return p;
}

Partition from_training(std::size_t n, std::vector<std::size_t> training) {
  std::sort(training.begin(), training.end());
  Partition p;
  p.training = training;
  for (std::size_t i = 0; i < n; ++i)
    if (!std::binary_search(training.begin(), training.end(), i)) p.validation.push_back(i);
  return p;
}

std::size_t checked_validation(const CvsContext& ctx, double p, std::size_t& train) {
  const auto [t, v] = holdout_sizes(ctx.size(), p);
  if (v == 0) throw Error("p = " + std::to_string(p) + " leaves no validation image; the CVS value is undefined");
  train = t;
  return v;
}

double binomial(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

}  // namespace

namespace {

void summarize(CvIterateResult& out) {
  if (out.records.empty()) return;
  for (const auto& r : out.records) {
    const MetricStats s = metric_stats(r.validation_fm);
    out.fm_avg += s.avg;
    out.fm_std += s.std;
    out.fm_avg_1 += s.avg_1.value_or(s.avg);
    out.fm_std_1 += s.std_1.value_or(s.std);
    out.cvs_mean += r.cvs;
  }
  const auto n = static_cast<double>(out.records.size());
  out.fm_avg /= n;
  out.fm_std /= n;
  out.fm_avg_1 /= n;
  out.fm_std_1 /= n;
  out.cvs_mean /= n;
}

std::vector<std::vector<std::size_t>> all_training_sets(std::size_t n, std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> comb(k);
  std::iota(comb.begin(), comb.end(), std::size_t{0});
  while (true) {
    out.push_back(comb);
    std::size_t i = k;
    while (i > 0 && comb[i - 1] == n - k + i - 1) --i;
    if (i == 0) return out;
    ++comb[i - 1];
    for (std::size_t j = i; j < k; ++j) comb[j] = comb[j - 1] + 1;
  }
}

}  // namespace

CvIterateResult cv_iterate(const CvsContext& ctx, double p, std::size_t n_cv, std::uint64_t seed) {
  std::size_t train = 0;
  checked_validation(ctx, p, train);
  CvIterateResult out;
  out.records.resize(n_cv);
  parallel_for(n_cv, [&](std::size_t k) {
    std::mt19937_64 rng(derive_seed(seed, k));
    out.records[k] = ctx.evaluate(random_partition(ctx.size(), train, rng), k);
  });
  summarize(out);
  return out;
}

CvIterateResult cv_all_partitions(const CvsContext& ctx, double p) {
  std::size_t train = 0;
  checked_validation(ctx, p, train);
  if (binomial(ctx.size(), train) > 1e5) throw Error("cv_all_partitions: too many partitions to enumerate");
  const auto sets = all_training_sets(ctx.size(), train);
  CvIterateResult out;
  out.records.resize(sets.size());
  parallel_for(sets.size(), [&](std::size_t k) { out.records[k] = ctx.evaluate(from_training(ctx.size(), sets[k]), k); });
  summarize(out);
  return out;
}

namespace {

class PartitionSearch {
 public:
  PartitionSearch(const CvsContext& ctx, std::size_t train, std::size_t budget, std::uint64_t seed,
                  SelectionCriterion criterion)
      : ctx_(ctx), n_(ctx.size()), train_(train), budget_(budget), rng_(seed), criterion_(criterion) {}

  CvsSearchResult run() {
    const double space = binomial(n_, train_);
    while (visited_.size() < budget_) {
      auto start = fresh_partition(space);
      if (!start) break;
      const double start_obj = score(*start);
      result_.restart_objectives.push_back(start_obj);
      climb(*start, start_obj);
    }
    if (!best_) throw Error("CVS search evaluated no partition (budget 0?)");
    result_.partition = *best_;
    result_.record = ctx_.evaluate(*best_, 0);
    result_.objective = best_objective_;
    result_.evaluations = visited_.size();
    result_.ensemble = ctx_.build_ensemble(best_->training);
    result_.ensemble.provenance.cvs_value = result_.record.cvs;
    return result_;
  }

 private:
  double objective(const CvsRecord& r) const {
    return criterion_ == SelectionCriterion::MaxCvs ? r.cvs : -r.fm_mul_std;
  }

  double score(const Partition& p) {
    auto it = visited_.find(p.training);
    if (it != visited_.end()) return it->second;
    const double obj = objective(ctx_.evaluate(p, visited_.size()));
    visited_.emplace(p.training, obj);
    if (!best_ || obj > best_objective_ || (obj == best_objective_ && p.training < best_->training)) {
      best_ = p;
      best_objective_ = obj;
    }
    return obj;
  }

  std::optional<Partition> fresh_partition(double space) {
    for (int attempt = 0; attempt < 256; ++attempt) {
      Partition p = random_partition(n_, train_, rng_);
      if (!visited_.contains(p.training)) return p;
    }
    if (space > 1e6) return std::nullopt;
    // small space: first unvisited combination in lexicographic order
    std::vector<std::size_t> comb(train_);
    std::iota(comb.begin(), comb.end(), std::size_t{0});
    while (true) {
      if (!visited_.contains(comb)) return from_training(n_, comb);
      std::size_t i = train_;
      while (i > 0 && comb[i - 1] == n_ - train_ + i - 1) --i;
      if (i == 0) return std::nullopt;
      ++comb[i - 1];
      for (std::size_t j = i; j < train_; ++j) comb[j] = comb[j - 1] + 1;
    }
  }

  void climb(Partition current, double current_obj) {
    bool improved = true;
    while (improved && visited_.size() < budget_) {
      improved = false;
      std::vector<std::pair<std::size_t, std::size_t>> moves;
      for (std::size_t a = 0; a < current.training.size(); ++a)
        for (std::size_t b = 0; b < current.validation.size(); ++b) moves.emplace_back(a, b);
      std::shuffle(moves.begin(), moves.end(), rng_);
      for (const auto& [a, b] : moves) {
        if (visited_.size() >= budget_) break;
        auto training = current.training;
        training[a] = current.validation[b];
        Partition next = from_training(n_, std::move(training));
        const double obj = score(next);
        if (obj > current_obj) {
          current = std::move(next);
          current_obj = obj;
          improved = true;
          break;
        }
      }
    }
  }

  const CvsContext& ctx_;
  std::size_t n_;
  std::size_t train_;
  std::size_t budget_;
  std::mt19937_64 rng_;
  SelectionCriterion criterion_;
  std::map<std::vector<std::size_t>, double> visited_;
  std::optional<Partition> best_;
  double best_objective_ = 0.0;
  CvsSearchResult result_;
};

}  // namespace

CvsSearchResult cvs_search(const CvsContext& ctx, double p, std::size_t budget, std::uint64_t seed,
                           SelectionCriterion criterion) {
  std::size_t train = 0;
  checked_validation(ctx, p, train);
  return PartitionSearch(ctx, train, budget, seed, criterion).run();
}

ExpertEnsemble all_images_ensemble(const CvsContext& ctx) {
  std::vector<std::size_t> all(ctx.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return ctx.build_ensemble(all);
}

void write_cvs_records_csv(const std::filesystem::path& path, std::span<const CvsRecord> records) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << "k,fm_typ,fm_bes,fm_mul,cvs,training_ids\n";
  char buf[256];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f,%.6f,", r.k, r.fm_typ, r.fm_bes, r.fm_mul, r.cvs);
    out << buf;
    for (std::size_t i = 0; i < r.training_ids.size(); ++i) out << (i ? ";" : "") << r.training_ids[i];
    out << '\n';
  }
}

}  // namespace msbin
