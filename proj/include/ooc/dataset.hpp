#pragma once

// Claim-instance records: line-delimited JSON ingestion with validation,
// re-emission, and a synthetic generator that plants a recoverable
// label signal in both the embeddings and the entity structure.

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ooc/clustering.hpp"
#include "ooc/entities.hpp"

namespace ooc {

enum class Label { kPristine, kFalsified };
enum class Scenario { kA, kB, kC, kD, kNone };

const char* to_string(Label label);
const char* to_string(Scenario scenario);
Label label_from_string(const std::string& s);        // throws on unknown
Scenario scenario_from_string(const std::string& s);  // throws on unknown

struct TextualEvidence {
  Vec embedding;
  EntitySet entities;
  bool operator==(const TextualEvidence&) const = default;
};

struct EntityEvidence {
  Vec embedding;
  std::string text;
  bool operator==(const EntityEvidence&) const = default;
};

struct ClaimInstance {
  std::string id;
  Label label = Label::kPristine;
  Scenario scenario = Scenario::kNone;
  EntitySet caption_entities;
  Vec caption_embedding;
  std::array<Vec, 2> image_embeddings;            // one per visual space
  std::vector<std::array<Vec, 2>> visual_evidence;  // per item: one vector per space
  std::vector<TextualEvidence> textual_evidence;
  std::vector<EntityEvidence> entity_evidence;
  Vec aux_features;  // optional, empty when absent

  bool operator==(const ClaimInstance&) const = default;
};

// Embedding widths shared by every record in a dataset.
struct DatasetDims {
  std::size_t text_dim = 0;      // caption, textual evidence, entity evidence
  std::size_t visual_a_dim = 0;  // first visual space
  std::size_t visual_b_dim = 0;  // second visual space
  std::size_t aux_dim = 0;       // 0 when the dataset carries no aux features

  bool operator==(const DatasetDims&) const = default;
};

DatasetDims dataset_dims(const std::vector<ClaimInstance>& instances);

// Parses one instance per line, validating field presence, label/scenario
// values, finiteness, per-space evidence pairing, and the evidence cap.
// Errors name the line and field of the first violation. Dimensions must be
// consistent across the whole file.
std::vector<ClaimInstance> ingest(const std::string& path,
                                  std::size_t max_visual_evidence = 10);
std::vector<ClaimInstance> ingest_stream(std::istream& in, const std::string& origin,
                                         std::size_t max_visual_evidence = 10);

// One JSON object per line, stable field order; ingest(emit(x)) == x.
void emit(const std::vector<ClaimInstance>& instances, const std::string& path);
std::string emit_record(const ClaimInstance& instance);

struct SynthProfile {
  std::size_t text_dim = 12;
  std::size_t visual_dim = 8;           // both visual spaces
  std::size_t topics = 4;               // latent topics, >= 2
  std::size_t entities_per_topic = 8;   // disjoint non-matching name pools
  double ambiguous_fraction = 0.3;      // instances whose embeddings carry no label
  double noise = 0.15;                  // radius around each topic direction
};

// Balanced pristine/falsified instances with scenario tags cycling a-d.
// Pristine evidence sits near the caption's topic and repeats caption
// entities; falsified evidence sits near a different topic and repeats
// frequent conflicting entities, so the support-refutation means of the two
// labels are separated by construction. An ambiguous slice of instances gets
// label-independent embeddings in every space, leaving the entity structure
// as the only signal there.
std::vector<ClaimInstance> synth_generate(std::size_t n, std::uint64_t seed,
                                          const SynthProfile& profile = {});

}  // namespace ooc
