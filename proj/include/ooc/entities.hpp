#pragma once

// Named-entity normalization, fuzzy equality, and the frequency-ranked
// entity index over an evidence collection.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ooc {

// Normalized entity strings of one document, deduplicated under
// entities_match, first-occurrence order preserved.
struct EntitySet {
  std::vector<std::string> entities;

  // Normalizes, drops empties, and fuzzily deduplicates.
  static EntitySet from_raw(const std::vector<std::string>& raw);

  bool contains_match(std::string_view normalized) const;
  bool empty() const { return entities.empty(); }
  std::size_t size() const { return entities.size(); }
  bool operator==(const EntitySet&) const = default;
};

struct IndexEntry {
  std::string entity;  // canonical form: first-seen variant
  std::size_t count;   // number of documents containing a fuzzy-equal entity
  std::size_t rank;    // 1-based, descending count, stable ties
};

// Frequency-ranked union of entities over an evidence collection.
struct RankedEntityIndex {
  std::vector<IndexEntry> entries;

  bool empty() const { return entries.empty(); }
  std::size_t size() const { return entries.size(); }
  // First entry (in rank order) fuzzy-equal to the given normalized entity,
  // or nullptr when none matches.
  const IndexEntry* find(std::string_view normalized) const;
};

// Case-folds, strips surrounding whitespace/punctuation, removes trailing
// possessive markers ("'s", UTF-8 right-quote variant), and collapses
// internal whitespace. Returns "" for all-punctuation input. Idempotent.
std::string normalize_entity(std::string_view raw);

std::size_t levenshtein(std::string_view a, std::string_view b);

// Fuzzy equality on normalized strings: exact match, whitespace-token
// containment with a shared token of length >= 3, or normalized Levenshtein
// similarity >= 0.8. Symmetric; the empty string matches nothing.
bool entities_match(std::string_view a, std::string_view b);

RankedEntityIndex build_frequency_index(const std::vector<EntitySet>& evidence_sets);

// Members of `evidence` fuzzy-matching some member of `caption`.
EntitySet fuzzy_intersection(const EntitySet& evidence, const EntitySet& caption);

// Complement of fuzzy_intersection within `evidence`.
EntitySet fuzzy_difference(const EntitySet& evidence, const EntitySet& caption);

}  // namespace ooc
