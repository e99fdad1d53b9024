#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "msbin/io.hpp"
#include "msbin/kernels.hpp"
#include "msbin/spectral.hpp"
#include "msbin/triple.hpp"
#include "msbin/wrapper.hpp"

namespace msbin {

/// Everything that turns (image, triple) into a mask.
struct Pipeline {
  PreprocessConfig preprocess;
  KernelSpec kernel;
  WrapperConfig wrapper;

  void validate() const {
    preprocess.validate();
    kernel.validate();
    wrapper.validate();
  }
  friend bool operator==(const Pipeline&, const Pipeline&) = default;
};

struct ScoredTriple {
  BandTriple triple;
  double fm = 0.0;

  friend bool operator==(const ScoredTriple&, const ScoredTriple&) = default;
};

/// Best triple first, then the tailing suboptimal ones. Fitness values are
/// strictly descending: each entry represents one distinct FM, carried by the
/// lexicographically smallest triple that reached it.
struct RankedTriples {
  std::vector<ScoredTriple> entries;

  const ScoredTriple& best() const { return entries.front(); }
  std::vector<BandTriple> triples() const;
  friend bool operator==(const RankedTriples&, const RankedTriples&) = default;
};

/// Sorts by (fm desc, triple asc), keeps one entry per distinct fm and
/// returns the first 1 + tail_count.
RankedTriples rank_candidates(std::vector<ScoredTriple> candidates, std::size_t tail_count);

enum class OptimizerMode { Exhaustive, Evolutionary };

struct OptimizerConfig {
  OptimizerMode mode = OptimizerMode::Exhaustive;
  int population = 24;
  int generations = 30;
  double mutation_rate = 0.3;
  int tail_count = 3;
  std::uint64_t seed = 1;

  void validate() const;
  /// Distinct fitness evaluations the evolutionary search may spend.
  std::size_t budget() const { return static_cast<std::size_t>(population) * static_cast<std::size_t>(generations); }
  friend bool operator==(const OptimizerConfig&, const OptimizerConfig&) = default;
};

/// FM of the wrapped kernel for one triple on one ground-truth image. Bands are
/// prepared once, so repeated calls only redo to-gray and the kernel.
class FitnessEvaluator {
 public:
  FitnessEvaluator(const MsImage& image, const BinaryImage& gt, const Pipeline& pipeline);

  double operator()(const BandTriple& triple) const;
  BinaryImage mask(const BandTriple& triple) const;

  int band_count() const { return prepared_.band_count(); }
  const BinaryImage& gt() const { return gt_; }
  /// Number of fitness calls made so far.
  std::size_t evaluations() const { return evaluations_.load(); }

 private:
  PreparedImage prepared_;
  BinaryImage gt_;
  Pipeline pipeline_;
  mutable std::atomic<std::size_t> evaluations_{0};
};

double fitness(const MsImage& image, const BinaryImage& gt, const BandTriple& triple, const Pipeline& pipeline);

/// FM of every ordered triple, indexed by triple_index().
std::vector<double> exhaustive_table(const FitnessEvaluator& evaluator);

/// Evaluates all N_band^3 triples.
RankedTriples exhaustive_best(const FitnessEvaluator& evaluator, std::size_t tail_count);

struct EvolveResult {
  RankedTriples ranked;
  std::vector<ScoredTriple> archive;  // every evaluated triple, in evaluation order
};

/// Generational GA: binary tournament, single-point crossover, per-slot
/// mutation and elitist survival. Offspring already in the archive are
/// re-mutated until novel, so a budget of N_band^3 covers the whole space.
EvolveResult evolve_best(const FitnessEvaluator& evaluator, const OptimizerConfig& cfg);

struct ImageRanking {
  std::string name;
  std::optional<RankedTriples> ranked;
  std::string error;  // set when ranked is empty
};

/// Per-image search (mode from cfg), in dataset order.
std::vector<ImageRanking> dataset_best(const std::vector<LabeledImage>& dataset, const Pipeline& pipeline,
                                       const OptimizerConfig& cfg);

}  // namespace msbin
