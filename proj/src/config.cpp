#include "ooc/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace ooc {

using nlohmann::json;
using nlohmann::ordered_json;

const char* to_string(ClusterRole role) {
  switch (role) {
    case ClusterRole::kSupporting: return "supporting";
    case ClusterRole::kRepresentative: return "representative";
    case ClusterRole::kComplementary: return "complementary";
  }
  return "?";
}

const char* to_string(ZetaMode mode) {
  return mode == ZetaMode::kProportion ? "proportion" : "binarization";
}

const char* to_string(SrsVariant variant) {
  switch (variant) {
    case SrsVariant::kFull: return "full";
    case SrsVariant::kPositiveOnly: return "positive_only";
    case SrsVariant::kNegativeFixedOne: return "negative_fixed_one";
    case SrsVariant::kGFixedHalf: return "g_fixed_half";
    case SrsVariant::kZetaFixedTwo: return "zeta_fixed_two";
    case SrsVariant::kBinaryNei: return "binary_nei";
  }
  return "?";
}

ClusterRole cluster_role_from_string(const std::string& s) {
  if (s == "supporting" || s == "suc") return ClusterRole::kSupporting;
  if (s == "representative" || s == "rec") return ClusterRole::kRepresentative;
  if (s == "complementary" || s == "coc") return ClusterRole::kComplementary;
  throw std::invalid_argument("unknown cluster role '" + s + "'");
}

ZetaMode zeta_mode_from_string(const std::string& s) {
  if (s == "proportion") return ZetaMode::kProportion;
  if (s == "binarization") return ZetaMode::kBinarization;
  throw std::invalid_argument("unknown zeta mode '" + s + "' (want proportion|binarization)");
}

SrsVariant srs_variant_from_string(const std::string& s) {
  if (s == "full") return SrsVariant::kFull;
  if (s == "positive_only") return SrsVariant::kPositiveOnly;
  if (s == "negative_fixed_one") return SrsVariant::kNegativeFixedOne;
  if (s == "g_fixed_half") return SrsVariant::kGFixedHalf;
  if (s == "zeta_fixed_two") return SrsVariant::kZetaFixedTwo;
  if (s == "binary_nei") return SrsVariant::kBinaryNei;
  throw std::invalid_argument("unknown score variant '" + s + "'");
}

stance::HeadKind head_kind_from_string(const std::string& s) {
  if (s == "sen" || s == "clustered") return stance::HeadKind::kClustered;
  if (s == "memory") return stance::HeadKind::kMemory;
  if (s == "signed") return stance::HeadKind::kSigned;
  if (s == "arith") return stance::HeadKind::kArith;
  throw std::invalid_argument("unknown stance head '" + s + "' (want sen|memory|signed|arith)");
}

stance::FusionStrategy fusion_from_string(const std::string& s) {
  if (s == "concat") return stance::FusionStrategy::kConcat;
  if (s == "max_pool") return stance::FusionStrategy::kMaxPool;
  if (s == "avg_pool") return stance::FusionStrategy::kAvgPool;
  if (s == "elementwise_mul" || s == "mul") return stance::FusionStrategy::kElementwiseMul;
  if (s == "all_with_fc") return stance::FusionStrategy::kAllWithFc;
  throw std::invalid_argument("unknown fusion strategy '" + s + "'");
}

void validate(const RunConfig& c) {
  auto bad = [](const std::string& field, const std::string& why) {
    throw std::invalid_argument("config." + field + ": " + why);
  };
  if (c.text_tau_s <= 0 || c.text_tau_r <= 0 || c.image_tau_s <= 0 || c.image_tau_r <= 0)
    bad("thresholds", "clustering thresholds must be positive");
  if (c.visual_width == 0 || c.textual_width == 0 || c.classifier_hidden == 0)
    bad("widths", "projection/hidden widths must be positive");
  if (c.batch_size < 2) bad("batch_size", "batch normalization needs batches of at least 2");
  if (c.epochs == 0) bad("epochs", "must train at least one epoch");
  if (c.lr_min <= 0 || c.lr_max <= 0) bad("lr", "learning rates must be positive");
  if (c.lr_min > c.lr_max) bad("lr", "lr_min exceeds lr_max");
  if (c.lr_cycle_epochs == 0) bad("lr_cycle_epochs", "cycle must span at least one epoch");
  if (c.val_fraction < 0.0 || c.val_fraction >= 1.0)
    bad("val_fraction", "must lie in [0,1)");
  if (c.train_fraction <= 0.0 || c.train_fraction > 1.0)
    bad("train_fraction", "must lie in (0,1]");
  if (c.max_visual_evidence == 0) bad("max_visual_evidence", "must allow at least one item");
  if (c.srs.tau_cap == 0) bad("srs.tau_cap", "must be at least 1");
  if (c.srs.alpha <= 0) bad("srs.alpha", "must be positive");
  if (c.srs.beta <= 0) bad("srs.beta", "must be positive");
  if (c.srs.g_a < 0) bad("srs.g_a", "must be non-negative");
  if (c.srs.g_b < 1) bad("srs.g_b", "must be at least 1");
  if (c.ablation.visual_head != stance::HeadKind::kClustered &&
      c.ablation.visual_head != stance::HeadKind::kMemory)
    bad("ablation.visual_head", "visual heads support sen|memory only");
}

namespace {

[[noreturn]] void key_error(const std::string& origin, const std::string& key,
                            const std::string& why) {
  throw std::runtime_error(origin + ": config key '" + key + "': " + why);
}

double want_number(const json& v, const std::string& origin, const std::string& key) {
  if (!v.is_number()) key_error(origin, key, "expected a number");
  return v.get<double>();
}

std::size_t want_count(const json& v, const std::string& origin, const std::string& key) {
  if (!v.is_number_unsigned()) key_error(origin, key, "expected a non-negative integer");
  return v.get<std::size_t>();
}

bool want_bool(const json& v, const std::string& origin, const std::string& key) {
  if (!v.is_boolean()) key_error(origin, key, "expected true or false");
  return v.get<bool>();
}

std::string want_string(const json& v, const std::string& origin, const std::string& key) {
  if (!v.is_string()) key_error(origin, key, "expected a string");
  return v.get<std::string>();
}

void apply_srs(const json& node, SrsConfig& srs, const std::string& origin) {
  if (!node.is_object()) key_error(origin, "srs", "expected an object");
  for (const auto& [key, value] : node.items()) {
    const std::string path = "srs." + key;
    try {
      if (key == "tau_cap")
        srs.tau_cap = want_count(value, origin, path);
      else if (key == "zeta_mode")
        srs.zeta_mode = zeta_mode_from_string(want_string(value, origin, path));
      else if (key == "alpha")
        srs.alpha = want_number(value, origin, path);
      else if (key == "beta")
        srs.beta = want_number(value, origin, path);
      else if (key == "g_a")
        srs.g_a = want_number(value, origin, path);
      else if (key == "g_b")
        srs.g_b = static_cast<int>(want_count(value, origin, path));
      else if (key == "variant")
        srs.variant = srs_variant_from_string(want_string(value, origin, path));
      else
        key_error(origin, path, "unknown key");
    } catch (const std::invalid_argument& e) {
      key_error(origin, path, e.what());
    }
  }
}

void apply_ablation(const json& node, AblationConfig& ab, const std::string& origin) {
  if (!node.is_object()) key_error(origin, "ablation", "expected an object");
  for (const auto& [key, value] : node.items()) {
    const std::string path = "ablation." + key;
    try {
      if (key == "use_srs")
        ab.use_srs = want_bool(value, origin, path);
      else if (key == "binary_nei")
        ab.binary_nei = want_bool(value, origin, path);
      else if (key == "use_visual_heads")
        ab.use_visual_heads = want_bool(value, origin, path);
      else if (key == "use_textual_head")
        ab.use_textual_head = want_bool(value, origin, path);
      else if (key == "visual_head")
        ab.visual_head = head_kind_from_string(want_string(value, origin, path));
      else if (key == "textual_head")
        ab.textual_head = head_kind_from_string(want_string(value, origin, path));
      else if (key == "fusion")
        ab.fusion = fusion_from_string(want_string(value, origin, path));
      else if (key == "drop_clusters") {
        if (!value.is_array()) key_error(origin, path, "expected an array of cluster roles");
        ab.drop_clusters.clear();
        for (const auto& role : value)
          ab.drop_clusters.insert(cluster_role_from_string(want_string(role, origin, path)));
      } else {
        key_error(origin, path, "unknown key");
      }
    } catch (const std::invalid_argument& e) {
      key_error(origin, path, e.what());
    }
  }
}

}  // namespace

RunConfig apply_config_text(const std::string& json_text, const RunConfig& base,
                            const std::string& origin) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw std::runtime_error(origin + ": malformed JSON: " + e.what());
  }
  if (!root.is_object()) throw std::runtime_error(origin + ": config must be a JSON object");

  RunConfig c = base;
  for (const auto& [key, value] : root.items()) {
    if (key == "text_tau_s")
      c.text_tau_s = want_number(value, origin, key);
    else if (key == "text_tau_r")
      c.text_tau_r = want_number(value, origin, key);
    else if (key == "image_tau_s")
      c.image_tau_s = want_number(value, origin, key);
    else if (key == "image_tau_r")
      c.image_tau_r = want_number(value, origin, key);
    else if (key == "visual_width")
      c.visual_width = want_count(value, origin, key);
    else if (key == "textual_width")
      c.textual_width = want_count(value, origin, key);
    else if (key == "classifier_hidden")
      c.classifier_hidden = want_count(value, origin, key);
    else if (key == "batch_size")
      c.batch_size = want_count(value, origin, key);
    else if (key == "epochs")
      c.epochs = want_count(value, origin, key);
    else if (key == "lr_min")
      c.lr_min = want_number(value, origin, key);
    else if (key == "lr_max")
      c.lr_max = want_number(value, origin, key);
    else if (key == "lr_cycle_epochs")
      c.lr_cycle_epochs = want_count(value, origin, key);
    else if (key == "val_fraction")
      c.val_fraction = want_number(value, origin, key);
    else if (key == "train_fraction")
      c.train_fraction = want_number(value, origin, key);
    else if (key == "seed")
      c.seed = static_cast<std::uint64_t>(want_count(value, origin, key));
    else if (key == "max_visual_evidence")
      c.max_visual_evidence = want_count(value, origin, key);
    else if (key == "srs")
      apply_srs(value, c.srs, origin);
    else if (key == "ablation")
      apply_ablation(value, c.ablation, origin);
    else
      key_error(origin, key, "unknown key");
  }
  validate(c);
  return c;
}

RunConfig load_config(const std::string& path, const RunConfig& base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return apply_config_text(text.str(), base, path);
}

std::string config_json(const RunConfig& c) {
  ordered_json root;
  root["text_tau_s"] = c.text_tau_s;
  root["text_tau_r"] = c.text_tau_r;
  root["image_tau_s"] = c.image_tau_s;
  root["image_tau_r"] = c.image_tau_r;
  root["visual_width"] = c.visual_width;
  root["textual_width"] = c.textual_width;
  root["classifier_hidden"] = c.classifier_hidden;
  root["batch_size"] = c.batch_size;
  root["epochs"] = c.epochs;
  root["lr_min"] = c.lr_min;
  root["lr_max"] = c.lr_max;
  root["lr_cycle_epochs"] = c.lr_cycle_epochs;
  root["val_fraction"] = c.val_fraction;
  root["train_fraction"] = c.train_fraction;
  root["seed"] = c.seed;
  root["max_visual_evidence"] = c.max_visual_evidence;

  ordered_json srs;
  srs["tau_cap"] = c.srs.tau_cap;
  srs["zeta_mode"] = to_string(c.srs.zeta_mode);
  srs["alpha"] = c.srs.alpha;
  srs["beta"] = c.srs.beta;
  srs["g_a"] = c.srs.g_a;
  srs["g_b"] = c.srs.g_b;
  srs["variant"] = to_string(c.srs.variant);
  root["srs"] = std::move(srs);

  ordered_json ab;
  ab["use_srs"] = c.ablation.use_srs;
  ab["binary_nei"] = c.ablation.binary_nei;
  ab["use_visual_heads"] = c.ablation.use_visual_heads;
  ab["use_textual_head"] = c.ablation.use_textual_head;
  ab["visual_head"] = stance::to_string(c.ablation.visual_head);
  ab["textual_head"] = stance::to_string(c.ablation.textual_head);
  ordered_json drops = ordered_json::array();
  for (ClusterRole role : c.ablation.drop_clusters) drops.push_back(to_string(role));
  ab["drop_clusters"] = std::move(drops);
  ab["fusion"] = stance::to_string(c.ablation.fusion);
  root["ablation"] = std::move(ab);

  return root.dump(2);
}

}  // namespace ooc
