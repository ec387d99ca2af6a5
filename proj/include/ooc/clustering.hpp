#pragma once

// Average-linkage agglomerative clustering under cosine distance, and the
// assignment of evidence into supporting / representative / complementary
// clusters relative to a claim.

#include <cstddef>
#include <vector>

namespace ooc {

using Vec = std::vector<double>;

// Partition of evidence indices. supporting and representative may overlap;
// complementary is disjoint from both. Index sets are sorted ascending.
struct ClusterAssignment {
  std::vector<std::size_t> supporting;
  std::vector<std::size_t> representative;
  std::vector<std::size_t> complementary;
};

// 1 - cos(u, v), in [0, 2]. Throws std::invalid_argument on zero vectors or
// mismatched lengths.
double cosine_distance(const Vec& u, const Vec& v);

// Average-linkage agglomeration: repeatedly merges the pair of clusters with
// the minimum mean pairwise cosine distance while that minimum is <= the
// threshold. Ties break on the smallest (min member index of A, min member
// index of B). Each cluster in the result is sorted; clusters are ordered by
// their smallest member.
std::vector<std::vector<std::size_t>> agglomerate(const std::vector<Vec>& points,
                                                  double threshold);

// Clusters [claim] + evidence at tau_s for the supporting set and at tau_r
// for the representative set. The representative cluster is the one with the
// most evidence members (the claim does not count); ties go to the cluster
// whose centroid is cosine-closest to the claim. Complementary = the rest.
ClusterAssignment assign_clusters(const Vec& claim, const std::vector<Vec>& evidence,
                                  double tau_s, double tau_r);

}  // namespace ooc
