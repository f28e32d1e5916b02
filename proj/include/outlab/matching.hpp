#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "outlab/matrix.hpp"

namespace outlab {

inline constexpr std::size_t unmatched = static_cast<std::size_t>(-1);

// Pairing of two point multisets minimizing the largest matched distance
// (bottleneck assignment).  When the sizes differ, min(|left|,|right|) points
// are matched and the surplus is left unassigned.
struct BottleneckMatch {
  std::vector<std::size_t> assignment;  // left index -> right index or `unmatched`
  double bottleneck = 0.0;
  std::size_t matched = 0;
};

namespace detail {

inline bool kuhn_augment(std::size_t i, const std::vector<std::vector<char>>& allow,
                         std::vector<char>& visited, std::vector<std::size_t>& match_right) {
  for (std::size_t j = 0; j < allow[i].size(); ++j) {
    if (!allow[i][j] || visited[j]) continue;
    visited[j] = 1;
    if (match_right[j] == unmatched || kuhn_augment(match_right[j], allow, visited, match_right)) {
      match_right[j] = i;
      return true;
    }
  }
  return false;
}

inline std::size_t max_matching_size(const std::vector<std::vector<double>>& dist, double t,
                                     std::vector<std::size_t>& match_right) {
  const std::size_t nl = dist.size();
  const std::size_t nr = nl ? dist[0].size() : 0;
  std::vector<std::vector<char>> allow(nl, std::vector<char>(nr, 0));
  for (std::size_t i = 0; i < nl; ++i)
    for (std::size_t j = 0; j < nr; ++j) allow[i][j] = dist[i][j] <= t;
  match_right.assign(nr, unmatched);
  std::size_t size = 0;
  std::vector<char> visited(nr);
  for (std::size_t i = 0; i < nl; ++i) {
    std::fill(visited.begin(), visited.end(), 0);
    if (kuhn_augment(i, allow, visited, match_right)) ++size;
  }
  return size;
}

}

inline BottleneckMatch bottleneck_match(const std::vector<Complex>& left,
                                        const std::vector<Complex>& right) {
  BottleneckMatch result;
  const std::size_t nl = left.size(), nr = right.size();
  result.assignment.assign(nl, unmatched);
  result.matched = std::min(nl, nr);
  if (result.matched == 0) return result;

  std::vector<std::vector<double>> dist(nl, std::vector<double>(nr));
  std::vector<double> thresholds;
  thresholds.reserve(nl * nr);
  for (std::size_t i = 0; i < nl; ++i)
    for (std::size_t j = 0; j < nr; ++j) {
      dist[i][j] = std::abs(left[i] - right[j]);
      thresholds.push_back(dist[i][j]);
    }
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  // smallest threshold whose distance graph admits a matching of full size
  std::vector<std::size_t> match_right;
  std::size_t lo = 0, hi = thresholds.size() - 1;
  while (lo < hi) {
    std::size_t mid = lo + (hi - lo) / 2;
    if (detail::max_matching_size(dist, thresholds[mid], match_right) >= result.matched)
      hi = mid;
    else
      lo = mid + 1;
  }
  result.bottleneck = thresholds[lo];
  detail::max_matching_size(dist, result.bottleneck, match_right);
  for (std::size_t j = 0; j < nr; ++j)
    if (match_right[j] != unmatched) result.assignment[match_right[j]] = j;
  return result;
}

}
