#include <doctest.h>

#include <string>
#include <vector>

#include "ooc/entities.hpp"
#include "ooc/rng.hpp"
#include "oracles.hpp"

using namespace ooc;

namespace {

// Draws entity-like strings that collide often enough to exercise the fuzzy
// paths: base names, possessive forms, token extensions, and small typos.
std::string random_entity(Rng& rng) {
  static const std::vector<std::string> base = {
      "barack obama", "obama",   "angela merkel", "merkel", "new york city",
      "new york",     "london",  "jakarta",       "united nations", "un",
      "donald trump", "trump",   "emmanuel macron"};
  std::string s = base[rng.below(base.size())];
  switch (rng.below(4)) {
    case 0:
      break;
    case 1:
      s += "'s";
      break;
    case 2:
      s = "  " + s + ".";
      break;
    default: {
      // One random character substitution.
      const std::size_t i = rng.below(s.size());
      s[i] = static_cast<char>('a' + rng.below(26));
      break;
    }
  }
  return s;
}

}  // namespace

TEST_CASE("normalize lowercases, trims, and strips possessives") {
  CHECK_EQ(normalize_entity("Obama's"), "obama");
  CHECK_EQ(normalize_entity("  Barack   Obama "), "barack obama");
  CHECK_EQ(normalize_entity("New York, N.Y."), "new york, n.y");
  CHECK_EQ(normalize_entity("MERKEL\xe2\x80\x99s"), "merkel");  // curly apostrophe
  CHECK_EQ(normalize_entity("..."), "");
  CHECK_EQ(normalize_entity(""), "");
  CHECK_EQ(normalize_entity("US's'"), "us");
}

TEST_CASE("normalize is idempotent on random input") {
  Rng rng(101);
  for (int i = 0; i < 500; ++i) {
    std::string raw;
    const std::size_t len = rng.below(12);
    for (std::size_t k = 0; k < len; ++k) {
      static const std::string alphabet = "aAbZ '.\xe2\x80\x99s  -";
      raw += alphabet[rng.below(alphabet.size())];
    }
    const std::string once = normalize_entity(raw);
    CHECK_EQ(normalize_entity(once), once);
  }
}

TEST_CASE("levenshtein matches a full-matrix reference") {
  CHECK_EQ(levenshtein("kitten", "sitting"), 3);
  CHECK_EQ(levenshtein("", "abc"), 3);
  CHECK_EQ(levenshtein("same", "same"), 0);
  Rng rng(102);
  for (int i = 0; i < 300; ++i) {
    const std::string a = random_entity(rng);
    const std::string b = random_entity(rng);
    CHECK_EQ(levenshtein(a, b), oracles::oracle_levenshtein(a, b));
  }
}

TEST_CASE("entities_match handles exact, subset, and edit-distance cases") {
  // "Barack Obama" vs "Obama's" after normalization.
  CHECK(entities_match("barack obama", "obama"));
  CHECK(entities_match("obama", "obama"));
  CHECK(entities_match("angela merkel", "angela merkle"));  // 2 edits over 13 chars
  CHECK_FALSE(entities_match("london", "jakarta"));
  CHECK_FALSE(entities_match("", "obama"));
  CHECK_FALSE(entities_match("un", "u n"));  // shared tokens too short
  // Similarity exactly at the 0.8 boundary counts as a match.
  CHECK(entities_match("abcde", "abcdx"));       // 1 edit / 5 = 0.8
  CHECK_FALSE(entities_match("abcd", "abcx"));   // 1 edit / 4 = 0.75
}

TEST_CASE("entities_match is symmetric and agrees with the reference rule") {
  Rng rng(103);
  for (int i = 0; i < 400; ++i) {
    const std::string a = normalize_entity(random_entity(rng));
    const std::string b = normalize_entity(random_entity(rng));
    if (a.empty() || b.empty()) continue;
    const bool forward = entities_match(a, b);
    CHECK_EQ(forward, entities_match(b, a));
    CHECK_EQ(forward, oracles::oracle_match(a, b));
  }
}

TEST_CASE("from_raw normalizes, drops empties, and deduplicates fuzzily") {
  const auto set = EntitySet::from_raw({"Barack Obama", "obama's", "...", "London"});
  REQUIRE_EQ(set.size(), 2);
  CHECK_EQ(set.entities[0], "barack obama");
  CHECK_EQ(set.entities[1], "london");
  CHECK(set.contains_match("obama"));
  CHECK_FALSE(set.contains_match("jakarta"));
}

TEST_CASE("frequency index counts documents and ranks by descending count") {
  const std::vector<EntitySet> docs = {
      EntitySet::from_raw({"alpha west", "bolt nine"}),
      EntitySet::from_raw({"bolt nine"}),
      EntitySet::from_raw({"bolt nine", "crane four"}),
  };
  const auto index = build_frequency_index(docs);
  REQUIRE_EQ(index.size(), 3);
  CHECK_EQ(index.entries[0].entity, "bolt nine");
  CHECK_EQ(index.entries[0].count, 3);
  CHECK_EQ(index.entries[0].rank, 1);
  // Ties on count keep first-appearance order.
  CHECK_EQ(index.entries[1].entity, "alpha west");
  CHECK_EQ(index.entries[1].count, 1);
  CHECK_EQ(index.entries[2].entity, "crane four");
  CHECK_EQ(index.entries[2].rank, 3);
}

TEST_CASE("frequency index merges fuzzy variants into one entry") {
  const std::vector<EntitySet> docs = {
      EntitySet::from_raw({"Barack Obama"}),
      EntitySet::from_raw({"obama"}),
      EntitySet::from_raw({"obama", "Obama"}),  // still one document hit
  };
  const auto index = build_frequency_index(docs);
  REQUIRE_EQ(index.size(), 1);
  CHECK_EQ(index.entries[0].entity, "barack obama");  // first-seen canonical
  CHECK_EQ(index.entries[0].count, 3);
  CHECK(index.find("obama") != nullptr);
  CHECK(index.find("jakarta") == nullptr);
}

TEST_CASE("fuzzy intersection and difference partition the evidence set") {
  const auto evidence = EntitySet::from_raw({"barack obama", "london", "jakarta"});
  const auto caption = EntitySet::from_raw({"Obama's", "Jakarta"});
  const auto both = fuzzy_intersection(evidence, caption);
  const auto only = fuzzy_difference(evidence, caption);
  REQUIRE_EQ(both.size(), 2);
  CHECK_EQ(both.entities[0], "barack obama");
  CHECK_EQ(both.entities[1], "jakarta");
  REQUIRE_EQ(only.size(), 1);
  CHECK_EQ(only.entities[0], "london");

  // Randomized: the two halves always rebuild the original set.
  Rng rng(104);
  for (int i = 0; i < 200; ++i) {
    std::vector<std::string> raw_e, raw_c;
    for (std::size_t k = 0; k < 1 + rng.below(5); ++k) raw_e.push_back(random_entity(rng));
    for (std::size_t k = 0; k < 1 + rng.below(3); ++k) raw_c.push_back(random_entity(rng));
    const auto e = EntitySet::from_raw(raw_e);
    const auto c = EntitySet::from_raw(raw_c);
    const auto inter = fuzzy_intersection(e, c);
    const auto diff = fuzzy_difference(e, c);
    CHECK_EQ(inter.size() + diff.size(), e.size());
    for (const auto& x : inter.entities) CHECK(c.contains_match(x));
    for (const auto& x : diff.entities) CHECK_FALSE(c.contains_match(x));
  }
}

TEST_CASE("index counts never exceed the document count and ranks are dense") {
  Rng rng(105);
  for (int i = 0; i < 100; ++i) {
    std::vector<EntitySet> docs;
    const std::size_t n_docs = 1 + rng.below(6);
    for (std::size_t d = 0; d < n_docs; ++d) {
      std::vector<std::string> raw;
      for (std::size_t k = 0; k < 1 + rng.below(4); ++k) raw.push_back(random_entity(rng));
      docs.push_back(EntitySet::from_raw(raw));
    }
    const auto index = build_frequency_index(docs);
    for (std::size_t k = 0; k < index.size(); ++k) {
      CHECK(index.entries[k].count >= 1);
      CHECK(index.entries[k].count <= n_docs);
      CHECK_EQ(index.entries[k].rank, k + 1);
      if (k > 0) CHECK(index.entries[k - 1].count >= index.entries[k].count);
    }
  }
}
