#include "msbin/bandopt.hpp"

#include <algorithm>
#include <random>
#include <unordered_set>

#include "msbin/errors.hpp"
#include "msbin/metrics.hpp"
#include "msbin/parallel.hpp"

namespace msbin {

std::vector<BandTriple> RankedTriples::triples() const {
  std::vector<BandTriple> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.triple);
  return out;
}

RankedTriples rank_candidates(std::vector<ScoredTriple> candidates, std::size_t tail_count) {
  std::sort(candidates.begin(), candidates.end(), [](const ScoredTriple& a, const ScoredTriple& b) {
    if (a.fm != b.fm) return a.fm > b.fm;
    return a.triple < b.triple;
  });
  RankedTriples r;
  for (const auto& c : candidates) {
    if (r.entries.size() == tail_count + 1) break;
    if (!r.entries.empty() && r.entries.back().fm == c.fm) continue;
    if (!r.entries.empty() && r.entries.back().triple == c.triple) continue;
    r.entries.push_back(c);
  }
  return r;
}

void OptimizerConfig::validate() const {
  if (population < 2) throw ConfigError("optimizer: population must be >= 2");
  if (generations < 1) throw ConfigError("optimizer: generations must be >= 1");
  if (tail_count < 0) throw ConfigError("optimizer: tail_count must be >= 0");
  if (mutation_rate < 0.0 || mutation_rate > 1.0) throw ConfigError("optimizer: mutation_rate must lie in [0,1]");
}

FitnessEvaluator::FitnessEvaluator(const MsImage& image, const BinaryImage& gt, const Pipeline& pipeline)
    : prepared_(image, &pipeline.preprocess, pipeline.wrapper), gt_(gt), pipeline_(pipeline) {
  pipeline.validate();
  if (gt.width() != image.width() || gt.height() != image.height())
    throw Error("fitness: GT dimensions do not match image '" + image.name() + "'");
}

BinaryImage FitnessEvaluator::mask(const BandTriple& triple) const {
  return wrap_binarize_detailed(prepared_, triple, pipeline_.kernel, pipeline_.wrapper).mask;
}

double FitnessEvaluator::operator()(const BandTriple& triple) const {
  evaluations_.fetch_add(1);
  return f_measure(confusion(mask(triple), gt_));
}

double fitness(const MsImage& image, const BinaryImage& gt, const BandTriple& triple, const Pipeline& pipeline) {
  return FitnessEvaluator(image, gt, pipeline)(triple);
}

std::vector<double> exhaustive_table(const FitnessEvaluator& evaluator) {
  const int n = evaluator.band_count();
  const std::size_t total = static_cast<std::size_t>(n) * n * n;
  std::vector<double> table(total);
  parallel_for(total, [&](std::size_t i) { table[i] = evaluator(triple_from_index(i, n)); });
  return table;
}

RankedTriples exhaustive_best(const FitnessEvaluator& evaluator, std::size_t tail_count) {
  const auto table = exhaustive_table(evaluator);
  std::vector<ScoredTriple> all(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) all[i] = {triple_from_index(i, evaluator.band_count()), table[i]};
  return rank_candidates(std::move(all), tail_count);
}

namespace {

class TripleSearch {
 public:
  TripleSearch(const FitnessEvaluator& evaluator, const OptimizerConfig& cfg)
      : eval_(evaluator),
        cfg_(cfg),
        n_(evaluator.band_count()),
        space_(static_cast<std::size_t>(n_) * n_ * n_),
        seen_(space_, false),
        rng_(cfg.seed),
        band_(1, n_),
        unit_(0.0, 1.0) {}

  EvolveResult run() {
    const std::size_t budget = std::min(cfg_.budget(), space_);
    const auto pop_size = static_cast<std::size_t>(cfg_.population);

    std::vector<BandTriple> batch;
    while (batch.size() < std::min(pop_size, budget)) {
      auto t = novel(random_triple());
      if (!t) break;
      batch.push_back(*t);
    }
    std::vector<ScoredTriple> population = evaluate(batch);

    while (archive_.size() < budget) {
      batch.clear();
      const std::size_t want = std::min(pop_size, budget - archive_.size());
      while (batch.size() < want) {
        const BandTriple& a = tournament(population);
        const BandTriple& b = tournament(population);
        auto child = novel(mutate(crossover(a, b)));
        if (!child) break;
        batch.push_back(*child);
      }
      if (batch.empty()) break;
      auto children = evaluate(batch);
      population.insert(population.end(), children.begin(), children.end());
      std::sort(population.begin(), population.end(), better);
      population.resize(std::min(population.size(), pop_size));
    }

    EvolveResult result;
    result.archive = archive_;
    result.ranked = rank_candidates(archive_, static_cast<std::size_t>(cfg_.tail_count));
    return result;
  }

 private:
  static bool better(const ScoredTriple& a, const ScoredTriple& b) {
    if (a.fm != b.fm) return a.fm > b.fm;
    return a.triple < b.triple;
  }

  BandTriple random_triple() { return {band_(rng_), band_(rng_), band_(rng_)}; }

  const BandTriple& tournament(const std::vector<ScoredTriple>& pop) {
    std::uniform_int_distribution<std::size_t> pick(0, pop.size() - 1);
    const auto& a = pop[pick(rng_)];
    const auto& b = pop[pick(rng_)];
    return better(a, b) ? a.triple : b.triple;
  }

  BandTriple crossover(const BandTriple& a, const BandTriple& b) {
    std::uniform_int_distribution<int> cut(1, 2);
    auto x = a.bands();
    const auto y = b.bands();
    for (int i = cut(rng_); i < 3; ++i) x[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(i)];
    return {x[0], x[1], x[2]};
  }

  BandTriple mutate(BandTriple t) {
    auto x = t.bands();
    for (int& v : x)
      if (unit_(rng_) < cfg_.mutation_rate) v = band_(rng_);
    return {x[0], x[1], x[2]};
  }

  // Returns t if unseen; otherwise re-mutates one slot at a time, and as a last
  // resort scans the space from a random start. Empty once the space is exhausted.
  std::optional<BandTriple> novel(BandTriple t) {
    std::uniform_int_distribution<int> slot(0, 2);
    for (int attempt = 0; attempt < 32; ++attempt) {
      if (!seen_[triple_index(t, n_)]) return claim(t);
      auto x = t.bands();
      x[static_cast<std::size_t>(slot(rng_))] = band_(rng_);
      t = {x[0], x[1], x[2]};
    }
    if (claimed_ >= space_) return std::nullopt;
    std::uniform_int_distribution<std::size_t> start(0, space_ - 1);
    const std::size_t s = start(rng_);
    for (std::size_t k = 0; k < space_; ++k) {
      const std::size_t i = (s + k) % space_;
      if (!seen_[i]) return claim(triple_from_index(i, n_));
    }
    return std::nullopt;
  }

  BandTriple claim(const BandTriple& t) {
    seen_[triple_index(t, n_)] = true;
    ++claimed_;
    return t;
  }

  std::vector<ScoredTriple> evaluate(const std::vector<BandTriple>& batch) {
    std::vector<ScoredTriple> scored(batch.size());
    parallel_for(batch.size(), [&](std::size_t i) { scored[i] = {batch[i], eval_(batch[i])}; });
    archive_.insert(archive_.end(), scored.begin(), scored.end());
    return scored;
  }

  const FitnessEvaluator& eval_;
  const OptimizerConfig& cfg_;
  int n_;
  std::size_t space_;
  std::vector<bool> seen_;
  std::size_t claimed_ = 0;
  std::mt19937_64 rng_;
  std::uniform_int_distribution<int> band_;
  std::uniform_real_distribution<double> unit_;
  std::vector<ScoredTriple> archive_;
};

}  // namespace

EvolveResult evolve_best(const FitnessEvaluator& evaluator, const OptimizerConfig& cfg) {
  cfg.validate();
  return TripleSearch(evaluator, cfg).run();
}

std::vector<ImageRanking> dataset_best(const std::vector<LabeledImage>& dataset, const Pipeline& pipeline,
                                       const OptimizerConfig& cfg) {
  cfg.validate();
  pipeline.validate();
  std::vector<ImageRanking> out(dataset.size());
  auto run_one = [&](std::size_t i) {
    const auto& item = dataset[i];
    out[i].name = item.image.name();
    if (!item.gt) {
      out[i].error = "image '" + item.image.name() + "' has no ground truth";
      return;
    }
    try {
      const FitnessEvaluator evaluator(item.image, *item.gt, pipeline);
      out[i].ranked = cfg.mode == OptimizerMode::Exhaustive
                          ? exhaustive_best(evaluator, static_cast<std::size_t>(cfg.tail_count))
                          : evolve_best(evaluator, cfg).ranked;
    } catch (const Error& e) {
      out[i].error = e.what();
    }
  };
  // one image: parallelise inside the search instead
  if (dataset.size() == 1) {
    run_one(0);
  } else {
    parallel_for(dataset.size(), run_one);
  }
  return out;
}

}  // namespace msbin
