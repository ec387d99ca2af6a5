#include <doctest.h>

#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ooc/dataset.hpp"
#include "ooc/stats.hpp"
#include "support.hpp"

using namespace ooc;
using testsupport::TempDir;
using testsupport::write_file;

namespace {

std::vector<ClaimInstance> ingest_text(const std::string& text, std::size_t cap = 10) {
  std::istringstream in(text);
  return ingest_stream(in, "test", cap);
}

// Minimal well-formed record; tests below mutate pieces of it.
const char* kRecord =
    R"({"id":"r1","label":"pristine","scenario":"none","caption_entities":["alpha west"],)"
    R"("caption_embedding":[1,0],"image_embeddings":[[1,0],[0,1]],"visual_evidence":[],)"
    R"("textual_evidence":[{"embedding":[0.5,0.5],"entities":["alpha west"]}],)"
    R"("entity_evidence":[{"embedding":[0,1],"text":"alpha west"}]})";

}  // namespace

TEST_CASE("label and scenario names round trip and reject junk") {
  CHECK_EQ(label_from_string("pristine"), Label::kPristine);
  CHECK_EQ(label_from_string("falsified"), Label::kFalsified);
  CHECK_EQ(std::string(to_string(Label::kFalsified)), "falsified");
  CHECK_THROWS_WITH_AS(label_from_string("Pristine"),
                       "unknown label 'Pristine' (want pristine|falsified)",
                       std::invalid_argument);
  for (const char* name : {"a", "b", "c", "d", "none"})
    CHECK_EQ(std::string(to_string(scenario_from_string(name))), name);
  CHECK_THROWS_AS(scenario_from_string("e"), std::invalid_argument);
}

TEST_CASE("a dataset survives the emit/ingest round trip unchanged") {
  const auto instances = synth_generate(24, 99);
  TempDir dir;
  const std::string path = dir.file("roundtrip.jsonl");
  emit(instances, path);
  const auto back = ingest(path);
  REQUIRE_EQ(back.size(), instances.size());
  CHECK(back == instances);
}

TEST_CASE("records keep a stable field order") {
  const auto instances = synth_generate(2, 5);
  const std::string line = emit_record(instances[0]);
  std::size_t at = 0;
  for (const char* key : {"\"id\"", "\"label\"", "\"scenario\"", "\"caption_entities\"",
                          "\"caption_embedding\"", "\"image_embeddings\"", "\"visual_evidence\"",
                          "\"textual_evidence\"", "\"entity_evidence\""}) {
    const std::size_t next = line.find(key, at);
    REQUIRE_MESSAGE(next != std::string::npos, key);
    at = next;
  }
}

TEST_CASE("ingest reports the line and field of the first problem") {
  // Missing field.
  CHECK_THROWS_WITH_AS(
      ingest_text(R"({"id":"r1","label":"pristine"})"),
      "test:1: field 'scenario': missing", std::runtime_error);

  // Unknown label value.
  std::string bad_label = kRecord;
  bad_label.replace(bad_label.find("pristine"), 8, "verified");
  CHECK_THROWS_WITH_AS(ingest_text(bad_label),
                       "test:1: field 'label': unknown label 'verified' (want "
                       "pristine|falsified)",
                       std::runtime_error);

  // Malformed JSON names the line; valid lines before it parse fine.
  try {
    ingest_text(std::string(kRecord) + "\n{oops\n");
    FAIL("expected malformed-record error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("test:2: malformed record") == 0);
  }

  // One image embedding instead of two.
  std::string one_image = kRecord;
  const std::string images = R"("image_embeddings":[[1,0],[0,1]])";
  one_image.replace(one_image.find(images), images.size(), R"("image_embeddings":[[1,0]])");
  CHECK_THROWS_WITH_AS(ingest_text(one_image),
                       "test:1: field 'image_embeddings': expected exactly 2 visual-space vectors",
                       std::runtime_error);

  // Non-numeric embedding entry.
  std::string bad_vec = kRecord;
  const std::string cap = R"("caption_embedding":[1,0])";
  bad_vec.replace(bad_vec.find(cap), cap.size(), R"("caption_embedding":[1,"x"])");
  CHECK_THROWS_WITH_AS(ingest_text(bad_vec),
                       "test:1: field 'caption_embedding': expected a number array",
                       std::runtime_error);
}

TEST_CASE("dimension drift across records is rejected") {
  // Second record's caption embedding is one dimension short.
  std::string second = kRecord;
  const std::string cap = R"("caption_embedding":[1,0])";
  second.replace(second.find(cap), cap.size(), R"("caption_embedding":[1])");
  second.replace(second.find("\"r1\""), 4, "\"r2\"");
  try {
    ingest_text(std::string(kRecord) + "\n" + second + "\n");
    FAIL("expected dimension error");
  } catch (const std::runtime_error& e) {
    CHECK_EQ(std::string(e.what()),
             "test:2: field 'caption_embedding': expected 2 dims, got 1");
  }

  // The same rule applies within one record across evidence items.
  std::string ragged = kRecord;
  const std::string emb = R"("embedding":[0.5,0.5])";
  ragged.replace(ragged.find(emb), emb.size(), R"("embedding":[0.5,0.5,0.5])");
  CHECK_THROWS_WITH_AS(ingest_text(ragged),
                       "test:1: field 'textual_evidence[0].embedding': expected 2 dims, got 3",
                       std::runtime_error);
}

TEST_CASE("the visual evidence cap is enforced at ingest") {
  std::string crowded = kRecord;
  const std::string visual = R"("visual_evidence":[])";
  crowded.replace(crowded.find(visual), visual.size(),
                  R"("visual_evidence":[[[1,0],[0,1]],[[1,0],[0,1]],[[1,0],[0,1]]])");
  CHECK_NOTHROW(ingest_text(crowded, 3));
  CHECK_THROWS_WITH_AS(ingest_text(crowded, 2),
                       "test:1: field 'visual_evidence': instance carries 3 items, cap is 2",
                       std::runtime_error);
}

TEST_CASE("auxiliary features are all-or-none across the file") {
  std::string with_aux = kRecord;
  with_aux.insert(with_aux.size() - 1, R"(,"aux_features":[0.5,0.25])");
  const auto one = ingest_text(with_aux);
  REQUIRE_EQ(one.size(), 1);
  CHECK_EQ(one[0].aux_features, Vec{0.5, 0.25});
  CHECK_EQ(dataset_dims(one).aux_dim, 2);

  std::string plain = kRecord;
  plain.replace(plain.find("\"r1\""), 4, "\"r2\"");
  CHECK_THROWS_WITH_AS(ingest_text(with_aux + "\n" + plain + "\n"),
                       "test:2: field 'aux_features': missing (file carries 2-dim aux features)",
                       std::runtime_error);

  // Round trip keeps the aux block.
  auto parsed = ingest_text(with_aux);
  CHECK_EQ(ingest_text(emit_record(parsed[0])), parsed);
}

TEST_CASE("empty and blank input produce an empty dataset") {
  CHECK(ingest_text("").empty());
  CHECK(ingest_text("\n   \n\t\n").empty());
  TempDir dir;
  CHECK_THROWS_AS(ingest(dir.file("missing.jsonl")), std::runtime_error);
}

TEST_CASE("generated datasets are deterministic per seed") {
  const auto a = synth_generate(30, 7);
  const auto b = synth_generate(30, 7);
  CHECK(a == b);
  const auto c = synth_generate(30, 8);
  CHECK(a != c);
}

TEST_CASE("generated datasets balance labels and cycle scenarios") {
  const auto instances = synth_generate(40, 3);
  REQUIRE_EQ(instances.size(), 40);
  std::size_t pristine = 0;
  std::array<std::size_t, 4> per_scenario{};
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    if (inst.label == Label::kPristine) ++pristine;
    REQUIRE(inst.scenario != Scenario::kNone);
    ++per_scenario[static_cast<std::size_t>(inst.scenario)];
    CHECK_EQ(inst.label, i % 2 == 0 ? Label::kPristine : Label::kFalsified);
  }
  CHECK_EQ(pristine, 20);
  for (const std::size_t count : per_scenario) CHECK_EQ(count, 10);
  CHECK_EQ(instances[0].id, "synth-000000");
  CHECK_EQ(instances[39].id, "synth-000039");
}

TEST_CASE("generated instances respect the profile's shape promises") {
  SynthProfile profile;
  profile.text_dim = 6;
  profile.visual_dim = 5;
  const auto instances = synth_generate(50, 21, profile);
  const auto dims = dataset_dims(instances);
  CHECK_EQ(dims.text_dim, 6);
  CHECK_EQ(dims.visual_a_dim, 5);
  CHECK_EQ(dims.visual_b_dim, 5);
  CHECK_EQ(dims.aux_dim, 0);
  for (const auto& inst : instances) {
    CHECK(inst.caption_entities.size() >= 2);
    CHECK(inst.caption_entities.size() <= 3);
    CHECK(inst.textual_evidence.size() >= 3);
    CHECK(inst.textual_evidence.size() <= 5);
    CHECK(inst.visual_evidence.size() >= 2);
    CHECK(inst.visual_evidence.size() <= 4);
    CHECK(inst.entity_evidence.size() >= 2);
    CHECK(inst.entity_evidence.size() <= 3);
    for (const auto& t : inst.textual_evidence) CHECK_FALSE(t.entities.empty());
    for (const auto& e : inst.entity_evidence) CHECK_FALSE(e.text.empty());
  }
}

TEST_CASE("generated evidence separates the label score distributions") {
  const auto instances = synth_generate(200, 11);
  const auto summary = summarize_srs(instances, SrsConfig{});
  const auto& pristine = summary.cell(SrsSummary::kMergedRow, Label::kPristine);
  const auto& falsified = summary.cell(SrsSummary::kMergedRow, Label::kFalsified);
  REQUIRE_EQ(pristine.count, 100);
  REQUIRE_EQ(falsified.count, 100);
  CHECK(pristine.mean > 0.0);
  CHECK(falsified.mean < 0.0);
  CHECK(pristine.mean - falsified.mean >= 1.0);
  CHECK_EQ(summary.skipped_no_textual, 0);
}

TEST_CASE("the generator rejects impossible profiles") {
  CHECK_THROWS_AS(synth_generate(1, 0), std::invalid_argument);
  SynthProfile narrow;
  narrow.topics = 1;
  CHECK_THROWS_AS(synth_generate(10, 0, narrow), std::invalid_argument);
  SynthProfile skewed;
  skewed.ambiguous_fraction = 1.0;
  CHECK_THROWS_AS(synth_generate(10, 0, skewed), std::invalid_argument);
  SynthProfile flat;
  flat.text_dim = 1;
  CHECK_THROWS_AS(synth_generate(10, 0, flat), std::invalid_argument);
}
