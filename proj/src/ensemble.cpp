#include "msbin/ensemble.hpp"

#include <algorithm>
#include <set>

#include "msbin/errors.hpp"
#include "msbin/parallel.hpp"

namespace msbin {

void ExpertEnsemble::validate() const {
  if (experts.empty() || experts.size() % 2 == 0)
    throw ConfigError("ensemble must hold an odd number of experts, got " + std::to_string(experts.size()));
  const std::set<BandTriple> unique(experts.begin(), experts.end());
  if (unique.size() != experts.size()) throw ConfigError("ensemble experts must be distinct");
  pipeline.validate();
}

WeightedTally tally(std::span<const RankedTriples> ranked) {
  WeightedTally t;
  for (const auto& r : ranked) {
    int weight = 0;
    for (const auto& e : r.entries) t[e.triple] += weight--;
  }
  return t;
}

ExpertSelection select_experts_detailed(std::span<const RankedTriples> ranked, std::size_t max_frequent) {
  if (ranked.empty()) throw Error("select_experts: no ranked lists");
  for (const auto& r : ranked)
    if (r.entries.empty()) throw Error("select_experts: empty ranked list");

  ExpertSelection s;
  s.tally = tally(ranked);
  std::vector<std::pair<int, BandTriple>> negative;
  for (const auto& [triple, total] : s.tally) {
    if (total == 0) {
      s.rare.push_back(triple);
    } else {
      negative.emplace_back(total, triple);
    }
  }
  std::sort(negative.begin(), negative.end());
  for (std::size_t i = 0; i < negative.size() && i < max_frequent; ++i) s.frequent.push_back(negative[i].second);

  std::vector<BandTriple> frequent = s.frequent;
  std::vector<BandTriple> rare = s.rare;
  if ((rare.size() + frequent.size()) % 2 == 0 && !(rare.empty() && frequent.empty())) {
    if (!frequent.empty()) {
      frequent.pop_back();
    } else {
      rare.pop_back();
    }
  }
  std::set<BandTriple> merged(rare.begin(), rare.end());
  merged.insert(frequent.begin(), frequent.end());
  if (merged.empty()) throw Error("select_experts: no expert survived selection");
  s.experts.assign(merged.begin(), merged.end());
  return s;
}

std::vector<BandTriple> select_experts(std::span<const RankedTriples> ranked, std::size_t max_frequent) {
  return select_experts_detailed(ranked, max_frequent).experts;
}

std::vector<BandTriple> select_experts(const std::map<std::string, RankedTriples>& ranked, std::size_t max_frequent) {
  std::vector<RankedTriples> lists;
  lists.reserve(ranked.size());
  for (const auto& [name, r] : ranked) lists.push_back(r);
  return select_experts(lists, max_frequent);
}

BinaryImage majority_vote(std::span<const BinaryImage> masks) {
  if (masks.empty()) throw Error("majority_vote: no masks");
  const int w = masks.front().width(), h = masks.front().height();
  for (const auto& m : masks)
    if (m.width() != w || m.height() != h) throw Error("majority_vote: mask dimensions differ");
  std::vector<std::uint8_t> out(masks.front().size());
  const std::size_t n = masks.size();
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::size_t votes = 0;
    for (const auto& m : masks) votes += m[i] ? 1 : 0;
    out[i] = 2 * votes > n ? 1 : 0;
  }
  return BinaryImage(w, h, std::move(out));
}

BinaryImage combine(const MsImage& image, const ExpertEnsemble& ensemble) {
  ensemble.validate();
  std::set<int> needed;
  for (const auto& t : ensemble.experts)
    for (int b : t.bands()) needed.insert(b);
  for (const auto& t : ensemble.experts)
    if (!t.valid_for(image.band_count()))
      throw Error("expert " + t.str() + " needs more bands than image '" + image.name() + "' has");
  const std::vector<int> bands(needed.begin(), needed.end());
  const PreparedImage prepared(image, &ensemble.pipeline.preprocess, ensemble.pipeline.wrapper, bands);
  std::vector<BinaryImage> masks(ensemble.experts.size());
  parallel_for(masks.size(), [&](std::size_t i) {
    masks[i] =
        wrap_binarize_detailed(prepared, ensemble.experts[i], ensemble.pipeline.kernel, ensemble.pipeline.wrapper).mask;
  });
  return majority_vote(masks);
}

}  // namespace msbin
