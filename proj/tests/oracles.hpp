#pragma once

// Independent reference implementations used by unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "msbin/bandopt.hpp"
#include "msbin/image.hpp"

namespace oracle {

// Plain double loop over every pixel and every 5x5 neighbour.
inline double drd(const msbin::BinaryImage& b, const msbin::BinaryImage& gt) {
  double wsum = 0.0;
  double raw[5][5] = {};
  for (int i = -2; i <= 2; ++i)
    for (int j = -2; j <= 2; ++j)
      if (i || j) {
        raw[i + 2][j + 2] = 1.0 / std::sqrt(double(i * i + j * j));
        wsum += raw[i + 2][j + 2];
      }
  int blocks = 0;
  for (int by = 0; by < gt.height(); by += 8)
    for (int bx = 0; bx < gt.width(); bx += 8) {
      int ink = 0, cells = 0;
      for (int y = by; y < by + 8 && y < gt.height(); ++y)
        for (int x = bx; x < bx + 8 && x < gt.width(); ++x) {
          ink += gt(x, y);
          ++cells;
        }
      if (ink > 0 && ink < cells) ++blocks;
    }
  double total = 0.0;
  for (int y = 0; y < gt.height(); ++y)
    for (int x = 0; x < gt.width(); ++x) {
      if (b(x, y) == gt(x, y)) continue;
      double d = 0.0;
      for (int i = -2; i <= 2; ++i)
        for (int j = -2; j <= 2; ++j) {
          const int yy = y + i, xx = x + j;
          if (yy < 0 || xx < 0 || yy >= gt.height() || xx >= gt.width()) continue;
          if (gt(xx, yy) != b(x, y)) d += raw[i + 2][j + 2];
        }
      total += d / wsum;
    }
  return total / blocks;
}

// Rare-or-frequent selection written from the definitions: tally rank
// weights, rare = tally 0, frequent = up to `cap` most negative (ties
// lexicographic), drop one member when the union is even.
inline std::vector<msbin::BandTriple> select(const std::vector<std::vector<msbin::BandTriple>>& lists,
                                             std::size_t cap = 5) {
  std::map<msbin::BandTriple, long> t;
  for (const auto& l : lists)
    for (std::size_t r = 0; r < l.size(); ++r) t[l[r]] -= static_cast<long>(r);
  std::vector<msbin::BandTriple> rare, neg;
  for (const auto& [k, v] : t)
    if (v == 0) rare.push_back(k);
  for (const auto& [k, v] : t)
    if (v < 0) neg.push_back(k);
  std::stable_sort(neg.begin(), neg.end(), [&](const auto& a, const auto& b) { return t[a] < t[b]; });
  if (neg.size() > cap) neg.resize(cap);
  if ((rare.size() + neg.size()) % 2 == 0) {
    if (!neg.empty()) {
      neg.pop_back();
    } else if (!rare.empty()) {
      rare.pop_back();
    }
  }
  std::set<msbin::BandTriple> u(rare.begin(), rare.end());
  u.insert(neg.begin(), neg.end());
  return {u.begin(), u.end()};
}

// All k-subsets of {0..n-1} in lexicographic order.
inline std::vector<std::vector<std::size_t>> combinations(std::size_t n, std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(k), true);
  do {
    std::vector<std::size_t> c;
    for (std::size_t i = 0; i < n; ++i)
      if (pick[i]) c.push_back(i);
    out.push_back(c);
  } while (std::prev_permutation(pick.begin(), pick.end()));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace oracle
