#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msbin/bandopt.hpp"

namespace msbin {

struct Provenance {
  std::vector<std::string> training_images;
  std::optional<double> cvs_value;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// The deployable binarizer: an odd number of distinct triples sharing one
/// pipeline, combined by majority vote.
struct ExpertEnsemble {
  std::vector<BandTriple> experts;
  Pipeline pipeline;
  Provenance provenance;

  void validate() const;
  friend bool operator==(const ExpertEnsemble&, const ExpertEnsemble&) = default;
};

/// Sum of rank weights 0, -1, -2, ... over every image's ranked list.
using WeightedTally = std::map<BandTriple, int>;

WeightedTally tally(std::span<const RankedTriples> ranked);

struct ExpertSelection {
  std::vector<BandTriple> rare;      // tally exactly 0, lexicographic order
  std::vector<BandTriple> frequent;  // most negative tallies first, at most max_frequent
  std::vector<BandTriple> experts;   // odd-sized union, lexicographic order
  WeightedTally tally;
};

/// Rare-or-frequent selection. Rare triples have a total weight of 0;
/// frequent ones are the up to `max_frequent` triples with the most negative
/// totals (ties broken lexicographically). An even union drops the weakest
/// frequent member, or the lexicographically last rare one if no frequent
/// member is left.
ExpertSelection select_experts_detailed(std::span<const RankedTriples> ranked, std::size_t max_frequent = 5);
std::vector<BandTriple> select_experts(std::span<const RankedTriples> ranked, std::size_t max_frequent = 5);
std::vector<BandTriple> select_experts(const std::map<std::string, RankedTriples>& ranked,
                                       std::size_t max_frequent = 5);

/// Per-pixel mean of the expert masks; ink iff the mean exceeds 0.5.
BinaryImage majority_vote(std::span<const BinaryImage> masks);

/// Runs every expert through the wrapper on the preprocessed image and votes.
BinaryImage combine(const MsImage& image, const ExpertEnsemble& ensemble);

}  // namespace msbin
