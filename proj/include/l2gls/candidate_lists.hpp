#pragma once

// k-nearest-neighbor candidate lists. Operators only consider moves whose
// defining pair of nodes are candidate neighbors, which bounds neighborhood
// size by O(N * k) instead of O(N^2).

#include <algorithm>
#include <numeric>
#include <vector>

#include "l2gls/instance.hpp"

namespace l2gls {

struct CandidateLists {
  int k = 0;
  std::vector<std::vector<NodeId>> neighbors;  // neighbors[i]: k nearest, ascending distance
};

// Ties are broken by node id so the lists are identical across platforms.
inline CandidateLists build_candidate_lists(const RoutingInstance& inst, int k) {
  const int n = inst.size();
  if (k < 1 || k >= n)
    throw std::invalid_argument("build_candidate_lists: k must satisfy 1 <= k < N");
  CandidateLists cl;
  cl.k = k;
  cl.neighbors.resize(n);
  std::vector<NodeId> others(n - 1);
  for (NodeId i = 0; i < n; ++i) {
    int idx = 0;
    for (NodeId j = 0; j < n; ++j) {
      if (j != i) others[idx++] = j;
    }
    std::partial_sort(others.begin(), others.begin() + k, others.end(),
                      [&](NodeId a, NodeId b) {
                        const double da = inst.dist(i, a), db = inst.dist(i, b);
                        if (da != db) return da < db;
                        return a < b;
                      });
    cl.neighbors[i].assign(others.begin(), others.begin() + k);
  }
  return cl;
}

}  // namespace l2gls
