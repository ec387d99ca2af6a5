#pragma once

// Support-refutation scoring of evidence documents against a caption from
// named-entity co-occurrence.

#include <cstddef>
#include <string>
#include <vector>

#include "ooc/entities.hpp"

namespace ooc {

enum class ZetaMode { kProportion, kBinarization };

// Score variants used in validity analysis. kFull is the production score.
enum class SrsVariant {
  kFull,
  kPositiveOnly,      // drop the conflict term entirely
  kNegativeFixedOne,  // conflict sum replaced by 1 whenever conflicts exist
  kGFixedHalf,        // rank weight fixed at 0.5
  kZetaFixedTwo,      // scaling factor fixed at 2
  kBinaryNei,         // 0/1 shared-entity indicator
};

struct SrsConfig {
  // Conflict-frequency threshold: tau = max(1, min(tau_cap, index size)).
  std::size_t tau_cap = 2;

  ZetaMode zeta_mode = ZetaMode::kBinarization;
  double alpha = 1.0;  // proportion mode scale, > 0
  double beta = 1.0;   // binarization mode scale, > 0

  // g(x) = 1 / (a + e^(x^(1/b))); defaults give g(x) = e^(-sqrt(x)).
  double g_a = 0.0;
  int g_b = 2;

  SrsVariant variant = SrsVariant::kFull;

  bool operator==(const SrsConfig&) const = default;
};

struct ConflictTerm {
  std::string entity;
  std::size_t rank;
  double weight;
};

struct SrsScore {
  double value = 0.0;
  std::size_t shared_count = 0;
  std::vector<ConflictTerm> conflict_terms;
};

// Rank weight for a conflicting entity; strictly decreasing in rank.
double g_weight(std::size_t rank, const SrsConfig& config);

// Scaling factor as a function of the shared-entity count.
double zeta(std::size_t shared_count, const SrsConfig& config);

// Effective frequency threshold for an index of the given size.
std::size_t srs_tau(std::size_t index_size, const SrsConfig& config);

// Score one evidence document against the caption. The index must come from
// the evidence collection that contains `evidence`.
SrsScore srs_score(const EntitySet& evidence, const EntitySet& caption,
                   const RankedEntityIndex& index, const SrsConfig& config);

// Builds the index over all documents once and scores each; order-preserving.
std::vector<double> srs_vector(const std::vector<EntitySet>& evidence_docs,
                               const EntitySet& caption, const SrsConfig& config);

}  // namespace ooc
