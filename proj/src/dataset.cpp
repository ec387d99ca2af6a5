#include "ooc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "ooc/rng.hpp"

namespace ooc {

using nlohmann::json;
using nlohmann::ordered_json;

const char* to_string(Label label) {
  return label == Label::kPristine ? "pristine" : "falsified";
}

const char* to_string(Scenario scenario) {
  switch (scenario) {
    case Scenario::kA: return "a";
    case Scenario::kB: return "b";
    case Scenario::kC: return "c";
    case Scenario::kD: return "d";
    case Scenario::kNone: return "none";
  }
  return "?";
}

Label label_from_string(const std::string& s) {
  if (s == "pristine") return Label::kPristine;
  if (s == "falsified") return Label::kFalsified;
  throw std::invalid_argument("unknown label '" + s + "' (want pristine|falsified)");
}

Scenario scenario_from_string(const std::string& s) {
  if (s == "a") return Scenario::kA;
  if (s == "b") return Scenario::kB;
  if (s == "c") return Scenario::kC;
  if (s == "d") return Scenario::kD;
  if (s == "none") return Scenario::kNone;
  throw std::invalid_argument("unknown scenario '" + s + "' (want a|b|c|d|none)");
}

DatasetDims dataset_dims(const std::vector<ClaimInstance>& instances) {
  DatasetDims dims;
  if (instances.empty()) return dims;
  const ClaimInstance& first = instances.front();
  dims.text_dim = first.caption_embedding.size();
  dims.visual_a_dim = first.image_embeddings[0].size();
  dims.visual_b_dim = first.image_embeddings[1].size();
  dims.aux_dim = first.aux_features.size();
  return dims;
}

namespace {

// Violation inside one record; ingest_stream stamps the line number on it.
struct FieldError {
  std::string field;
  std::string message;
};

[[noreturn]] void fail(const std::string& field, const std::string& message) {
  throw FieldError{field, message};
}

// 0 means "not seen yet": the first occurrence pins the width.
void check_dim(std::size_t& expected, const Vec& v, const std::string& field) {
  if (expected == 0) expected = v.size();
  if (v.size() != expected)
    fail(field, "expected " + std::to_string(expected) + " dims, got " +
                    std::to_string(v.size()));
}

Vec parse_vec(const json& j, const std::string& field, bool allow_empty) {
  if (!j.is_array()) fail(field, "expected a number array");
  Vec out;
  out.reserve(j.size());
  for (const auto& x : j) {
    if (!x.is_number()) fail(field, "expected a number array");
    const double v = x.get<double>();
    if (!std::isfinite(v)) fail(field, "non-finite value");
    out.push_back(v);
  }
  if (out.empty() && !allow_empty) fail(field, "empty vector");
  return out;
}

std::vector<std::string> parse_strings(const json& j, const std::string& field) {
  if (!j.is_array()) fail(field, "expected a string array");
  std::vector<std::string> out;
  out.reserve(j.size());
  for (const auto& x : j) {
    if (!x.is_string()) fail(field, "expected a string array");
    out.push_back(x.get<std::string>());
  }
  return out;
}

const json& require(const json& record, const std::string& field) {
  const auto it = record.find(field);
  if (it == record.end()) fail(field, "missing");
  return *it;
}

ClaimInstance parse_record(const json& record, DatasetDims& dims,
                           std::size_t max_visual_evidence) {
  if (!record.is_object()) fail("record", "expected a JSON object");
  ClaimInstance out;

  const json& id = require(record, "id");
  if (!id.is_string()) fail("id", "expected a string");
  out.id = id.get<std::string>();

  const json& label = require(record, "label");
  if (!label.is_string()) fail("label", "expected a string");
  try {
    out.label = label_from_string(label.get<std::string>());
  } catch (const std::invalid_argument& e) {
    fail("label", e.what());
  }

  const json& scenario = require(record, "scenario");
  if (!scenario.is_string()) fail("scenario", "expected a string");
  try {
    out.scenario = scenario_from_string(scenario.get<std::string>());
  } catch (const std::invalid_argument& e) {
    fail("scenario", e.what());
  }

  out.caption_entities = EntitySet::from_raw(parse_strings(require(record, "caption_entities"),
                                                           "caption_entities"));
  out.caption_embedding = parse_vec(require(record, "caption_embedding"), "caption_embedding",
                                    /*allow_empty=*/false);
  check_dim(dims.text_dim, out.caption_embedding, "caption_embedding");

  const json& images = require(record, "image_embeddings");
  if (!images.is_array() || images.size() != 2)
    fail("image_embeddings", "expected exactly 2 visual-space vectors");
  out.image_embeddings[0] = parse_vec(images[0], "image_embeddings[0]", false);
  out.image_embeddings[1] = parse_vec(images[1], "image_embeddings[1]", false);
  check_dim(dims.visual_a_dim, out.image_embeddings[0], "image_embeddings[0]");
  check_dim(dims.visual_b_dim, out.image_embeddings[1], "image_embeddings[1]");

  const json& visual = require(record, "visual_evidence");
  if (!visual.is_array()) fail("visual_evidence", "expected an array");
  if (visual.size() > max_visual_evidence)
    fail("visual_evidence", "instance carries " + std::to_string(visual.size()) +
                                " items, cap is " + std::to_string(max_visual_evidence));
  for (std::size_t i = 0; i < visual.size(); ++i) {
    const std::string field = "visual_evidence[" + std::to_string(i) + "]";
    if (!visual[i].is_array() || visual[i].size() != 2)
      fail(field, "expected exactly 2 visual-space vectors");
    std::array<Vec, 2> item;
    item[0] = parse_vec(visual[i][0], field + "[0]", false);
    item[1] = parse_vec(visual[i][1], field + "[1]", false);
    check_dim(dims.visual_a_dim, item[0], field + "[0]");
    check_dim(dims.visual_b_dim, item[1], field + "[1]");
    out.visual_evidence.push_back(std::move(item));
  }

  const json& textual = require(record, "textual_evidence");
  if (!textual.is_array()) fail("textual_evidence", "expected an array");
  for (std::size_t i = 0; i < textual.size(); ++i) {
    const std::string field = "textual_evidence[" + std::to_string(i) + "]";
    if (!textual[i].is_object()) fail(field, "expected an object");
    TextualEvidence item;
    item.embedding = parse_vec(require(textual[i], "embedding"), field + ".embedding", false);
    check_dim(dims.text_dim, item.embedding, field + ".embedding");
    item.entities =
        EntitySet::from_raw(parse_strings(require(textual[i], "entities"), field + ".entities"));
    out.textual_evidence.push_back(std::move(item));
  }

  const json& entity = require(record, "entity_evidence");
  if (!entity.is_array()) fail("entity_evidence", "expected an array");
  for (std::size_t i = 0; i < entity.size(); ++i) {
    const std::string field = "entity_evidence[" + std::to_string(i) + "]";
    if (!entity[i].is_object()) fail(field, "expected an object");
    EntityEvidence item;
    item.embedding = parse_vec(require(entity[i], "embedding"), field + ".embedding", false);
    check_dim(dims.text_dim, item.embedding, field + ".embedding");
    const json& text = require(entity[i], "text");
    if (!text.is_string()) fail(field + ".text", "expected a string");
    item.text = text.get<std::string>();
    out.entity_evidence.push_back(std::move(item));
  }

  const auto aux = record.find("aux_features");
  if (aux != record.end())
    out.aux_features = parse_vec(*aux, "aux_features", /*allow_empty=*/true);
  // Auxiliary features are all-or-none across the file.
  if (out.aux_features.empty()) {
    if (dims.aux_dim != 0)
      fail("aux_features",
           "missing (file carries " + std::to_string(dims.aux_dim) + "-dim aux features)");
  } else {
    check_dim(dims.aux_dim, out.aux_features, "aux_features");
  }
  return out;
}

}  // namespace

std::vector<ClaimInstance> ingest_stream(std::istream& in, const std::string& origin,
                                         std::size_t max_visual_evidence) {
  std::vector<ClaimInstance> out;
  DatasetDims dims;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                               ": malformed record: " + e.what());
    }
    try {
      out.push_back(parse_record(record, dims, max_visual_evidence));
    } catch (const FieldError& e) {
      throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": field '" + e.field +
                               "': " + e.message);
    }
    // The first record pins every width, including "no aux features".
    if (first) {
      first = false;
      if (dims.aux_dim == 0) dims.aux_dim = out.back().aux_features.size();
    }
  }
  return out;
}

std::vector<ClaimInstance> ingest(const std::string& path, std::size_t max_visual_evidence) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  return ingest_stream(in, path, max_visual_evidence);
}

std::string emit_record(const ClaimInstance& instance) {
  ordered_json record;
  record["id"] = instance.id;
  record["label"] = to_string(instance.label);
  record["scenario"] = to_string(instance.scenario);
  record["caption_entities"] = instance.caption_entities.entities;
  record["caption_embedding"] = instance.caption_embedding;
  record["image_embeddings"] = {instance.image_embeddings[0], instance.image_embeddings[1]};
  ordered_json visual = ordered_json::array();
  for (const auto& item : instance.visual_evidence) visual.push_back({item[0], item[1]});
  record["visual_evidence"] = std::move(visual);
  ordered_json textual = ordered_json::array();
  for (const auto& item : instance.textual_evidence) {
    ordered_json t;
    t["embedding"] = item.embedding;
    t["entities"] = item.entities.entities;
    textual.push_back(std::move(t));
  }
  record["textual_evidence"] = std::move(textual);
  ordered_json entity = ordered_json::array();
  for (const auto& item : instance.entity_evidence) {
    ordered_json e;
    e["embedding"] = item.embedding;
    e["text"] = item.text;
    entity.push_back(std::move(e));
  }
  record["entity_evidence"] = std::move(entity);
  if (!instance.aux_features.empty()) record["aux_features"] = instance.aux_features;
  return record.dump();
}

void emit(const std::vector<ClaimInstance>& instances, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset file: " + path);
  for (const ClaimInstance& instance : instances) out << emit_record(instance) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

// Random lowercase token that fuzzy-matches none of the existing names, so
// entity pools of different topics never collide under entities_match.
std::string fresh_name(Rng& rng, const std::vector<std::string>& taken) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::string name(7, 'a');
    for (char& c : name) c = static_cast<char>('a' + rng.below(26));
    bool clash = false;
    for (const std::string& t : taken)
      if (entities_match(name, t)) {
        clash = true;
        break;
      }
    if (!clash) return name;
  }
  throw std::runtime_error("synth_generate: could not draw a distinct entity name");
}

Vec unit_direction(Rng& rng, std::size_t dim, const std::vector<Vec>& existing) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Vec v(dim);
    double norm = 0.0;
    for (double& x : v) {
      x = rng.gaussian();
      norm += x * x;
    }
    norm = std::sqrt(norm);
    if (norm < 1e-9) continue;
    for (double& x : v) x /= norm;
    // Keep topics well separated: reject near-parallel draws.
    bool close = false;
    for (const Vec& e : existing) {
      double dot = 0.0;
      for (std::size_t i = 0; i < dim; ++i) dot += v[i] * e[i];
      if (std::abs(dot) > 0.4) {
        close = true;
        break;
      }
    }
    if (!close) return v;
  }
  throw std::runtime_error("synth_generate: could not draw separated topic directions");
}

Vec jitter(Rng& rng, const Vec& center, double noise) {
  Vec v = center;
  for (double& x : v) x += noise * rng.gaussian();
  return v;
}

Vec midpoint(const Vec& a, const Vec& b) {
  Vec v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[i] = 0.5 * (a[i] + b[i]);
  return v;
}

}  // namespace

std::vector<ClaimInstance> synth_generate(std::size_t n, std::uint64_t seed,
                                          const SynthProfile& profile) {
  if (n < 2) throw std::invalid_argument("synth_generate: need at least 2 instances");
  if (profile.topics < 2) throw std::invalid_argument("synth_generate: need at least 2 topics");
  if (profile.text_dim < 2 || profile.visual_dim < 2)
    throw std::invalid_argument("synth_generate: embedding dims must be at least 2");
  if (profile.entities_per_topic < 4)
    throw std::invalid_argument("synth_generate: need at least 4 entities per topic");
  if (profile.ambiguous_fraction < 0.0 || profile.ambiguous_fraction >= 1.0)
    throw std::invalid_argument("synth_generate: ambiguous_fraction must be in [0,1)");

  Rng rng(seed);

  // Disjoint per-topic entity pools.
  std::vector<std::vector<std::string>> pools(profile.topics);
  std::vector<std::string> taken;
  for (auto& pool : pools)
    for (std::size_t i = 0; i < profile.entities_per_topic; ++i) {
      pool.push_back(fresh_name(rng, taken));
      taken.push_back(pool.back());
    }

  // One direction per topic in the text space and in each visual space.
  std::vector<Vec> text_dir, vis_a_dir, vis_b_dir;
  for (std::size_t t = 0; t < profile.topics; ++t) {
    text_dir.push_back(unit_direction(rng, profile.text_dim, text_dir));
    vis_a_dir.push_back(unit_direction(rng, profile.visual_dim, vis_a_dir));
    vis_b_dir.push_back(unit_direction(rng, profile.visual_dim, vis_b_dir));
  }

  const double text_noise = profile.noise;
  const double vis_noise = 0.6 * profile.noise;  // tighter: visual thresholds are tighter

  std::vector<ClaimInstance> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ClaimInstance inst;
    {
      std::ostringstream id;
      id << "synth-" << std::setw(6) << std::setfill('0') << i;
      inst.id = id.str();
    }
    inst.label = (i % 2 == 0) ? Label::kPristine : Label::kFalsified;
    inst.scenario = static_cast<Scenario>((i / 2) % 4);
    const bool falsified = inst.label == Label::kFalsified;

    const std::size_t topic = rng.below(profile.topics);
    std::size_t other = rng.below(profile.topics - 1);
    if (other >= topic) ++other;
    const bool ambiguous = rng.uniform01() < profile.ambiguous_fraction;

    // The caption is always about its own topic; the image (and the
    // retrieved evidence) agree with it only on pristine instances.
    // Ambiguous instances blend the two topics identically for both labels in
    // the image and in every evidence space, so only their entity texts carry
    // the label.
    inst.caption_embedding = jitter(rng, text_dir[topic], text_noise);
    const std::size_t image_topic = falsified ? other : topic;
    const Vec ev_text =
        ambiguous ? midpoint(text_dir[topic], text_dir[other]) : text_dir[image_topic];
    const Vec ev_vis_a =
        ambiguous ? midpoint(vis_a_dir[topic], vis_a_dir[other]) : vis_a_dir[image_topic];
    const Vec ev_vis_b =
        ambiguous ? midpoint(vis_b_dir[topic], vis_b_dir[other]) : vis_b_dir[image_topic];
    inst.image_embeddings[0] = jitter(rng, ev_vis_a, vis_noise);
    inst.image_embeddings[1] = jitter(rng, ev_vis_b, vis_noise);

    // Caption entities come from the caption's topic pool.
    std::vector<std::size_t> order(profile.entities_per_topic);
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    rng.shuffle(order);
    const std::size_t caption_count = 2 + rng.below(2);  // 2..3
    std::vector<std::string> caption_names;
    for (std::size_t k = 0; k < caption_count; ++k)
      caption_names.push_back(pools[topic][order[k]]);
    inst.caption_entities = EntitySet::from_raw(caption_names);

    // Conflicting names for falsified evidence: a small reused subset of the
    // other topic's pool, so their document counts clear the frequency bar.
    std::vector<std::size_t> conflict_order(profile.entities_per_topic);
    for (std::size_t k = 0; k < conflict_order.size(); ++k) conflict_order[k] = k;
    rng.shuffle(conflict_order);
    std::vector<std::string> conflict_names;
    for (std::size_t k = 0; k < 3; ++k)
      conflict_names.push_back(pools[other][conflict_order[k]]);

    const std::size_t textual_count = 3 + rng.below(3);  // 3..5
    std::size_t extras_used = 0;
    for (std::size_t e = 0; e < textual_count; ++e) {
      TextualEvidence ev;
      ev.embedding = jitter(rng, ev_text, text_noise);
      std::vector<std::string> names;
      if (!falsified) {
        // Repeat caption entities; an occasional one-off extra stays below
        // the frequency bar and never counts against the score.
        for (const std::string& name : caption_names)
          if (rng.uniform01() < 0.7) names.push_back(name);
        if (names.empty()) names.push_back(caption_names[rng.below(caption_names.size())]);
        if (rng.uniform01() < 0.25 && caption_count + extras_used < order.size()) {
          names.push_back(pools[topic][order[caption_count + extras_used]]);
          ++extras_used;
        }
      } else {
        const std::size_t take = 2 + rng.below(2);  // 2..3 of the 3 conflict names
        std::vector<std::size_t> pick = {0, 1, 2};
        rng.shuffle(pick);
        for (std::size_t k = 0; k < take; ++k) names.push_back(conflict_names[pick[k]]);
      }
      ev.entities = EntitySet::from_raw(names);
      inst.textual_evidence.push_back(std::move(ev));
    }

    const std::size_t visual_count = 2 + rng.below(3);  // 2..4
    for (std::size_t e = 0; e < visual_count; ++e) {
      std::array<Vec, 2> item;
      item[0] = jitter(rng, ev_vis_a, vis_noise);
      item[1] = jitter(rng, ev_vis_b, vis_noise);
      inst.visual_evidence.push_back(std::move(item));
    }

    // Same count distribution for both labels; only the names differ.
    const std::vector<std::string>& entity_source = falsified ? conflict_names : caption_names;
    const std::size_t entity_count = 2 + rng.below(2);  // 2..3
    for (std::size_t e = 0; e < entity_count; ++e) {
      EntityEvidence ev;
      ev.embedding = jitter(rng, ev_text, text_noise);
      ev.text = entity_source[e % entity_source.size()];
      inst.entity_evidence.push_back(std::move(ev));
    }

    out.push_back(std::move(inst));
  }
  return out;
}

}  // namespace ooc
