#include "ooc/srs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ooc {

double g_weight(std::size_t rank, const SrsConfig& config) {
  if (rank == 0) throw std::invalid_argument("g_weight: rank must be >= 1");
  if (config.variant == SrsVariant::kGFixedHalf) return 0.5;
  const double root = std::pow(static_cast<double>(rank), 1.0 / static_cast<double>(config.g_b));
  return 1.0 / (config.g_a + std::exp(root));
}

double zeta(std::size_t shared_count, const SrsConfig& config) {
  if (config.variant == SrsVariant::kZetaFixedTwo) return 2.0;
  switch (config.zeta_mode) {
    case ZetaMode::kProportion:
      return config.alpha * static_cast<double>(shared_count + 1);
    case ZetaMode::kBinarization:
      return shared_count >= 1 ? 2.0 * config.beta : config.beta;
  }
  return config.beta;
}

std::size_t srs_tau(std::size_t index_size, const SrsConfig& config) {
  return std::max<std::size_t>(1, std::min(config.tau_cap, index_size));
}

SrsScore srs_score(const EntitySet& evidence, const EntitySet& caption,
                   const RankedEntityIndex& index, const SrsConfig& config) {
  SrsScore score;
  const EntitySet shared = fuzzy_intersection(evidence, caption);
  score.shared_count = shared.size();

  if (config.variant == SrsVariant::kBinaryNei) {
    score.value = score.shared_count >= 1 ? 1.0 : 0.0;
    return score;
  }

  if (config.variant == SrsVariant::kPositiveOnly) {
    score.value = static_cast<double>(score.shared_count);
    return score;
  }

  const EntitySet conflicting = fuzzy_difference(evidence, caption);
  const std::size_t tau = srs_tau(index.size(), config);

  double conflict_sum = 0.0;
  if (config.variant == SrsVariant::kNegativeFixedOne) {
    if (!conflicting.empty()) {
      conflict_sum = 1.0;
      score.conflict_terms.push_back(ConflictTerm{"", 0, 1.0});
    }
  } else {
    for (const auto& entity : conflicting.entities) {
      const IndexEntry* entry = index.find(entity);
      if (entry == nullptr || entry->count < tau) continue;
      const double w = g_weight(entry->rank, config);
      conflict_sum += w;
      score.conflict_terms.push_back(ConflictTerm{entity, entry->rank, w});
    }
  }

  score.value = static_cast<double>(score.shared_count) -
                conflict_sum / zeta(score.shared_count, config);
  return score;
}

std::vector<double> srs_vector(const std::vector<EntitySet>& evidence_docs,
                               const EntitySet& caption, const SrsConfig& config) {
  const RankedEntityIndex index = build_frequency_index(evidence_docs);
  std::vector<double> values;
  values.reserve(evidence_docs.size());
  for (const auto& doc : evidence_docs) {
    values.push_back(srs_score(doc, caption, index, config).value);
  }
  return values;
}

}  // namespace ooc
