#include "ooc/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ooc {

double cosine_distance(const Vec& u, const Vec& v) {
  if (u.size() != v.size()) throw std::invalid_argument("cosine_distance: length mismatch");
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) {
    throw std::invalid_argument("cosine_distance: zero vector has no direction");
  }
  return 1.0 - dot / (std::sqrt(nu) * std::sqrt(nv));
}

std::vector<std::vector<std::size_t>> agglomerate(const std::vector<Vec>& points,
                                                  double threshold) {
  const std::size_t n = points.size();
  if (n == 0) return {};

  std::vector<std::vector<std::size_t>> clusters(n);
  for (std::size_t i = 0; i < n; ++i) clusters[i] = {i};

  // Pairwise cluster distances, maintained with the Lance-Williams update for
  // average linkage: d(A+B, C) = (|A| d(A,C) + |B| d(B,C)) / (|A|+|B|).
  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      dist[i][j] = dist[j][i] = cosine_distance(points[i], points[j]);
    }
  }
  std::vector<bool> active(n, true);
  std::vector<std::size_t> sizes(n, 1);

  std::size_t remaining = n;
  while (remaining > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = n, bj = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!active[j]) continue;
        const std::size_t lo = std::min(clusters[i].front(), clusters[j].front());
        const std::size_t hi = std::max(clusters[i].front(), clusters[j].front());
        const bool better =
            dist[i][j] < best ||
            (dist[i][j] == best &&
             (bi == n || lo < clusters[bi].front() ||
              (lo == clusters[bi].front() && hi < clusters[bj].front())));
        if (better) {
          best = dist[i][j];
          bi = i;
          bj = j;
        }
      }
    }
    if (best > threshold) break;

    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      dist[bi][k] = dist[k][bi] =
          (static_cast<double>(sizes[bi]) * dist[bi][k] +
           static_cast<double>(sizes[bj]) * dist[bj][k]) /
          static_cast<double>(sizes[bi] + sizes[bj]);
    }
    clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
    std::sort(clusters[bi].begin(), clusters[bi].end());
    sizes[bi] += sizes[bj];
    active[bj] = false;
    clusters[bj].clear();
    --remaining;
  }

  std::vector<std::vector<std::size_t>> result;
  result.reserve(remaining);
  for (std::size_t i = 0; i < n; ++i) {
    if (active[i]) result.push_back(std::move(clusters[i]));
  }
  std::sort(result.begin(), result.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return result;
}

namespace {

// Point 0 is the claim; evidence indices are shifted down by one.
std::vector<std::size_t> evidence_members(const std::vector<std::size_t>& cluster) {
  std::vector<std::size_t> out;
  for (std::size_t m : cluster) {
    if (m > 0) out.push_back(m - 1);
  }
  return out;
}

}  // namespace

ClusterAssignment assign_clusters(const Vec& claim, const std::vector<Vec>& evidence,
                                  double tau_s, double tau_r) {
  ClusterAssignment assignment;
  if (evidence.empty()) return assignment;

  std::vector<Vec> points;
  points.reserve(evidence.size() + 1);
  points.push_back(claim);
  for (const auto& e : evidence) points.push_back(e);

  const auto supporting_partition = agglomerate(points, tau_s);
  const auto representative_partition =
      tau_s == tau_r ? supporting_partition : agglomerate(points, tau_r);

  for (const auto& cluster : supporting_partition) {
    if (std::find(cluster.begin(), cluster.end(), std::size_t{0}) != cluster.end()) {
      assignment.supporting = evidence_members(cluster);
      break;
    }
  }

  // Largest evidence cluster; ties resolved by centroid distance to the claim.
  std::size_t best_count = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  const std::vector<std::size_t>* best_cluster = nullptr;
  for (const auto& cluster : representative_partition) {
    const auto members = evidence_members(cluster);
    if (members.empty()) continue;
    Vec centroid(claim.size(), 0.0);
    for (std::size_t m : cluster) {
      for (std::size_t k = 0; k < centroid.size(); ++k) centroid[k] += points[m][k];
    }
    for (double& x : centroid) x /= static_cast<double>(cluster.size());
    // A centroid that cancels to zero has no direction; rank it last.
    const bool zero = std::all_of(centroid.begin(), centroid.end(),
                                  [](double x) { return x == 0.0; });
    const double d = zero ? 3.0 : cosine_distance(centroid, claim);
    if (members.size() > best_count || (members.size() == best_count && d < best_dist)) {
      best_count = members.size();
      best_dist = d;
      best_cluster = &cluster;
    }
  }
  if (best_cluster != nullptr) assignment.representative = evidence_members(*best_cluster);

  for (std::size_t i = 0; i < evidence.size(); ++i) {
    const bool in_s = std::binary_search(assignment.supporting.begin(),
                                         assignment.supporting.end(), i);
    const bool in_r = std::binary_search(assignment.representative.begin(),
                                         assignment.representative.end(), i);
    if (!in_s && !in_r) assignment.complementary.push_back(i);
  }
  return assignment;
}

}  // namespace ooc
