#include "ooc/entities.hpp"

#include <algorithm>
#include <cctype>

namespace ooc {

namespace {

bool is_ascii_punct_or_space(unsigned char c) {
  return std::isspace(c) || std::ispunct(c);
}

void lowercase_ascii(std::string& s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

void trim_ends(std::string& s) {
  std::size_t begin = 0;
  while (begin < s.size() && is_ascii_punct_or_space(static_cast<unsigned char>(s[begin]))) ++begin;
  std::size_t end = s.size();
  while (end > begin && is_ascii_punct_or_space(static_cast<unsigned char>(s[end - 1]))) --end;
  s = s.substr(begin, end - begin);
}

// Drops one trailing possessive marker: "'s" or the UTF-8 right single
// quotation mark variant. Returns true if something was removed.
bool strip_possessive(std::string& s) {
  if (s.size() >= 2 && s.compare(s.size() - 2, 2, "'s") == 0) {
    s.erase(s.size() - 2);
    return true;
  }
  static const std::string kCurly = "\xe2\x80\x99s";  // U+2019 followed by 's'
  if (s.size() >= kCurly.size() &&
      s.compare(s.size() - kCurly.size(), kCurly.size(), kCurly) == 0) {
    s.erase(s.size() - kCurly.size());
    return true;
  }
  return false;
}

std::vector<std::string_view> split_tokens(std::string_view s) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ') ++j;
    if (j > i) tokens.push_back(s.substr(i, j - i));
    i = j;
  }
  return tokens;
}

// True when every token of `small` appears among the tokens of `big` and at
// least one shared token has length >= 3.
bool token_subset(const std::vector<std::string_view>& small,
                  const std::vector<std::string_view>& big) {
  bool long_shared = false;
  for (const auto& tok : small) {
    if (std::find(big.begin(), big.end(), tok) == big.end()) return false;
    if (tok.size() >= 3) long_shared = true;
  }
  return long_shared && !small.empty();
}

}  // namespace

std::string normalize_entity(std::string_view raw) {
  std::string s(raw);
  lowercase_ascii(s);
  // Trim and strip possessives to a fixed point so the result is idempotent.
  for (;;) {
    const std::string before = s;
    trim_ends(s);
    strip_possessive(s);
    if (s == before) break;
  }
  // Collapse internal whitespace runs to single spaces.
  std::string out;
  out.reserve(s.size());
  bool in_space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      in_space = true;
    } else {
      if (in_space && !out.empty()) out.push_back(' ');
      in_space = false;
      out.push_back(c);
    }
  }
  return out;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

bool entities_match(std::string_view a, std::string_view b) {
  if (a.empty() || b.empty()) return false;
  if (a == b) return true;
  const auto ta = split_tokens(a);
  const auto tb = split_tokens(b);
  if (token_subset(ta, tb) || token_subset(tb, ta)) return true;
  const std::size_t dist = levenshtein(a, b);
  const std::size_t longest = std::max(a.size(), b.size());
  const double similarity = 1.0 - static_cast<double>(dist) / static_cast<double>(longest);
  return similarity >= 0.8;
}

EntitySet EntitySet::from_raw(const std::vector<std::string>& raw) {
  EntitySet set;
  for (const auto& r : raw) {
    std::string norm = normalize_entity(r);
    if (norm.empty()) continue;
    if (!set.contains_match(norm)) set.entities.push_back(std::move(norm));
  }
  return set;
}

bool EntitySet::contains_match(std::string_view normalized) const {
  for (const auto& e : entities) {
    if (entities_match(e, normalized)) return true;
  }
  return false;
}

const IndexEntry* RankedEntityIndex::find(std::string_view normalized) const {
  for (const auto& entry : entries) {
    if (entities_match(entry.entity, normalized)) return &entry;
  }
  return nullptr;
}

RankedEntityIndex build_frequency_index(const std::vector<EntitySet>& evidence_sets) {
  RankedEntityIndex index;
  for (const auto& doc : evidence_sets) {
    // Each document contributes at most once per canonical entry.
    std::vector<std::size_t> seen;
    for (const auto& entity : doc.entities) {
      std::size_t slot = index.entries.size();
      for (std::size_t k = 0; k < index.entries.size(); ++k) {
        if (entities_match(index.entries[k].entity, entity)) {
          slot = k;
          break;
        }
      }
      if (slot == index.entries.size()) {
        index.entries.push_back(IndexEntry{entity, 0, 0});
      }
      if (std::find(seen.begin(), seen.end(), slot) == seen.end()) {
        seen.push_back(slot);
        ++index.entries[slot].count;
      }
    }
  }
  // Descending count; stable ties keep first-appearance order.
  std::stable_sort(index.entries.begin(), index.entries.end(),
                   [](const IndexEntry& a, const IndexEntry& b) { return a.count > b.count; });
  for (std::size_t i = 0; i < index.entries.size(); ++i) index.entries[i].rank = i + 1;
  return index;
}

EntitySet fuzzy_intersection(const EntitySet& evidence, const EntitySet& caption) {
  EntitySet out;
  for (const auto& e : evidence.entities) {
    if (caption.contains_match(e)) out.entities.push_back(e);
  }
  return out;
}

EntitySet fuzzy_difference(const EntitySet& evidence, const EntitySet& caption) {
  EntitySet out;
  for (const auto& e : evidence.entities) {
    if (!caption.contains_match(e)) out.entities.push_back(e);
  }
  return out;
}

}  // namespace ooc
