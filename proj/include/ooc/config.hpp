#pragma once

// Run configuration: every knob with its default, JSON file loading, and the
// defaults < config file < command line precedence chain. The effective
// configuration is echoed into every report so runs are self-describing.

#include <cstddef>
#include <cstdint>
#include <set>
#include <string>

#include "ooc/srs.hpp"
#include "ooc/stance.hpp"

namespace ooc {

// Named clusters whose evidence an ablation removes before attention.
enum class ClusterRole { kSupporting, kRepresentative, kComplementary };

struct AblationConfig {
  bool use_srs = true;           // append the score to textual/entity evidence
  bool binary_nei = false;       // replace the score with the 0/1 indicator
  bool use_visual_heads = true;  // both visual stance heads
  bool use_textual_head = true;  // the sentence-evidence stance head
  stance::HeadKind visual_head = stance::HeadKind::kClustered;  // clustered|memory
  stance::HeadKind textual_head = stance::HeadKind::kClustered;
  std::set<ClusterRole> drop_clusters;
  stance::FusionStrategy fusion = stance::FusionStrategy::kConcat;

  bool operator==(const AblationConfig&) const = default;
};

struct RunConfig {
  // Clustering thresholds (supporting and representative partitions).
  double text_tau_s = 0.500;
  double text_tau_r = 0.500;
  double image_tau_s = 0.166;
  double image_tau_r = 0.166;

  // Head projection widths and classifier hidden width.
  std::size_t visual_width = 1024;
  std::size_t textual_width = 768;
  std::size_t classifier_hidden = 1024;

  // Training.
  std::size_t batch_size = 64;
  std::size_t epochs = 60;
  double lr_min = 9e-6;
  double lr_max = 6e-5;
  std::size_t lr_cycle_epochs = 8;  // full triangular period, in epochs
  double val_fraction = 0.2;        // held out from the dataset for selection
  double train_fraction = 1.0;      // subsample of the remaining training set
  std::uint64_t seed = 17;

  std::size_t max_visual_evidence = 10;

  SrsConfig srs;
  AblationConfig ablation;

  bool operator==(const RunConfig&) const = default;
};

// Throws std::invalid_argument naming the offending field.
void validate(const RunConfig& config);

// Applies the keys present in a JSON config file over `base`. Unknown keys
// are errors; omitted keys keep their current values.
RunConfig load_config(const std::string& path, const RunConfig& base = {});
RunConfig apply_config_text(const std::string& json_text, const RunConfig& base,
                            const std::string& origin);

// Full configuration as pretty JSON (the echo embedded in reports).
std::string config_json(const RunConfig& config);

// Enum spellings shared by config files, CLI flags, and reports.
const char* to_string(ClusterRole role);
const char* to_string(ZetaMode mode);
const char* to_string(SrsVariant variant);
ClusterRole cluster_role_from_string(const std::string& s);
ZetaMode zeta_mode_from_string(const std::string& s);
SrsVariant srs_variant_from_string(const std::string& s);
stance::HeadKind head_kind_from_string(const std::string& s);
stance::FusionStrategy fusion_from_string(const std::string& s);

}  // namespace ooc
