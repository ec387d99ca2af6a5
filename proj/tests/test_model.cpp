#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ooc/model.hpp"
#include "support.hpp"

using namespace ooc;
using testsupport::TempDir;
using testsupport::read_file;
using testsupport::write_file;

namespace {

ModelDims tiny_dims() {
  ModelDims dims;
  dims.text_dim = 3;
  dims.visual_a_dim = 2;
  dims.visual_b_dim = 2;
  dims.aux_dim = 0;
  dims.visual_width = 8;
  dims.textual_width = 6;
  dims.classifier_hidden = 10;
  return dims;
}

RunConfig tiny_config() {
  RunConfig config;
  config.visual_width = 8;
  config.textual_width = 6;
  config.classifier_hidden = 10;
  config.batch_size = 8;
  config.epochs = 4;
  config.lr_min = 1e-3;
  config.lr_max = 1e-2;
  config.lr_cycle_epochs = 2;
  config.val_fraction = 0.25;
  config.seed = 3;
  return config;
}

SynthProfile tiny_profile() {
  SynthProfile profile;
  profile.text_dim = 6;
  profile.visual_dim = 4;
  return profile;
}

// A fully populated hand-sized instance compatible with tiny_dims().
ClaimInstance tiny_instance() {
  ClaimInstance inst;
  inst.id = "hand-0";
  inst.label = Label::kPristine;
  inst.scenario = Scenario::kA;
  inst.caption_entities = EntitySet::from_raw({"alpha west"});
  inst.caption_embedding = {1.0, 0.25, -0.5};
  inst.image_embeddings = {Vec{0.6, -0.8}, Vec{0.0, 1.0}};
  inst.visual_evidence.push_back({Vec{0.5, 0.5}, Vec{-1.0, 0.25}});
  TextualEvidence support;
  support.embedding = {0.9, 0.3, -0.4};
  support.entities = EntitySet::from_raw({"alpha west"});
  TextualEvidence refute;
  refute.embedding = {-0.2, 1.0, 0.8};
  refute.entities = EntitySet::from_raw({"bolt nine"});
  inst.textual_evidence = {support, refute};
  EntityEvidence entity;
  entity.embedding = {0.1, 0.7, 0.2};
  entity.text = "alpha west";
  inst.entity_evidence = {entity};
  return inst;
}

bool same_values(ModelParams& a, ModelParams& b) {
  const auto pa = a.all_params(), pb = b.all_params();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i)
    if (pa[i]->name != pb[i]->name || pa[i]->value != pb[i]->value) return false;
  const auto na = a.all_norms(), nb = b.all_norms();
  if (na.size() != nb.size()) return false;
  for (std::size_t i = 0; i < na.size(); ++i)
    if (na[i]->running_mean != nb[i]->running_mean || na[i]->running_var != nb[i]->running_var)
      return false;
  return true;
}

}  // namespace

TEST_CASE("model construction is reproducible per seed") {
  ModelParams first = build_model(tiny_dims(), AblationConfig{}, 11);
  ModelParams second = build_model(tiny_dims(), AblationConfig{}, 11);
  CHECK(same_values(first, second));

  ModelParams other = build_model(tiny_dims(), AblationConfig{}, 12);
  CHECK_FALSE(other.w_hidden.value == first.w_hidden.value);

  // Stable, unique tensor names (the checkpoint directory relies on them).
  const auto params = first.all_params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    CHECK_FALSE(params[i]->name.empty());
    for (std::size_t j = i + 1; j < params.size(); ++j)
      CHECK_NE(params[i]->name, params[j]->name);
  }
}

TEST_CASE("classifier width follows the active heads") {
  ModelDims dims = tiny_dims();
  dims.aux_dim = 2;

  ModelParams full = build_model(dims, AblationConfig{}, 5);
  // entity head (6) + aux (2) + two visual heads (2*8) + textual head (6).
  CHECK_EQ(full.classifier_input_width(), 30);
  CHECK_EQ(full.w_hidden.shape, std::vector<std::size_t>{10, 30});

  AblationConfig no_visual;
  no_visual.use_visual_heads = false;
  ModelParams without_visual = build_model(dims, no_visual, 5);
  CHECK_EQ(without_visual.classifier_input_width(), 14);
  for (const nn::ParamTensor* p : without_visual.all_params())
    CHECK_EQ(p->name.rfind("visual", 0), std::string::npos);

  AblationConfig no_textual;
  no_textual.use_textual_head = false;
  CHECK_EQ(build_model(dims, no_textual, 5).classifier_input_width(), 24);
}

TEST_CASE("an instance with no evidence still gets finite logits") {
  RunConfig config = tiny_config();
  ModelParams model = build_model(tiny_dims(), config.ablation, 21);

  ClaimInstance bare;
  bare.id = "bare-0";
  bare.caption_embedding = {0.3, -0.7, 0.1};
  bare.image_embeddings = {Vec{1.0, 0.0}, Vec{0.5, 0.5}};

  const auto [logits, diagnostics] = forward_infer(model, config, bare);
  CHECK(std::isfinite(logits[0]));
  CHECK(std::isfinite(logits[1]));
  CHECK_EQ(diagnostics.probabilities[0] + diagnostics.probabilities[1],
           doctest::Approx(1.0).epsilon(1e-12));
  CHECK(diagnostics.textual_srs.empty());
  CHECK(diagnostics.entity_srs.empty());
  CHECK(diagnostics.textual.attention_supporting.empty());
  CHECK(diagnostics.entity.attention_all.empty());
}

TEST_CASE("inference is deterministic") {
  RunConfig config = tiny_config();
  ModelParams model = build_model(tiny_dims(), config.ablation, 7);
  const ClaimInstance inst = tiny_instance();

  const auto [logits_a, diag_a] = forward_infer(model, config, inst);
  const auto [logits_b, diag_b] = forward_infer(model, config, inst);
  CHECK_EQ(logits_a[0], logits_b[0]);
  CHECK_EQ(logits_a[1], logits_b[1]);
  CHECK_EQ(diag_a.probabilities, diag_b.probabilities);
  CHECK_EQ(diag_a.textual.attention_supporting, diag_b.textual.attention_supporting);
  CHECK_EQ(diag_a.entity.attention_all, diag_b.entity.attention_all);
}

TEST_CASE("score diagnostics mirror the evidence lists") {
  RunConfig config = tiny_config();
  ModelParams model = build_model(tiny_dims(), config.ablation, 7);
  const ClaimInstance inst = tiny_instance();

  const auto [logits, diagnostics] = forward_infer(model, config, inst);
  (void)logits;

  // First document repeats the caption entity (score 1); the second one's
  // conflict appears once, under the frequency cutoff of 2, so it scores 0.
  REQUIRE_EQ(diagnostics.textual_srs.size(), 2);
  CHECK_EQ(diagnostics.textual_srs[0], doctest::Approx(1.0).epsilon(1e-12));
  CHECK_EQ(diagnostics.textual_srs[1], doctest::Approx(0.0).epsilon(1e-12));

  // The lone entity snippet matches the caption exactly.
  REQUIRE_EQ(diagnostics.entity_srs.size(), 1);
  CHECK_EQ(diagnostics.entity_srs[0], doctest::Approx(1.0).epsilon(1e-12));

  // One attention weight per entity snippet, normalized.
  REQUIRE_EQ(diagnostics.entity.attention_all.size(), 1);
  CHECK_EQ(diagnostics.entity.attention_all[0], doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mismatched embedding widths name the instance and the field") {
  RunConfig config = tiny_config();
  ModelParams model = build_model(tiny_dims(), config.ablation, 7);

  ClaimInstance bad = tiny_instance();
  bad.id = "bad-one";
  bad.caption_embedding = {1.0, 0.0};
  CHECK_THROWS_WITH_AS(forward_infer(model, config, bad),
                       "instance 'bad-one': caption embedding has 2 dims, model wants 3",
                       std::runtime_error);

  ClaimInstance ragged = tiny_instance();
  ragged.id = "bad-two";
  ragged.textual_evidence[1].embedding = {0.0, 1.0, 0.0, 0.5};
  CHECK_THROWS_WITH_AS(forward_infer(model, config, ragged),
                       "instance 'bad-two': textual evidence embedding has 4 dims, model wants 3",
                       std::runtime_error);
}

TEST_CASE("dropping every cluster role removes all attended evidence") {
  RunConfig config = tiny_config();
  config.ablation.drop_clusters = {ClusterRole::kSupporting, ClusterRole::kRepresentative,
                                   ClusterRole::kComplementary};
  ModelParams model = build_model(tiny_dims(), config.ablation, 7);
  const ClaimInstance inst = tiny_instance();

  const auto [logits, diagnostics] = forward_infer(model, config, inst);
  CHECK(std::isfinite(logits[0]));
  CHECK(std::isfinite(logits[1]));
  CHECK(diagnostics.textual.clusters.supporting.empty());
  CHECK(diagnostics.textual.clusters.representative.empty());
  CHECK(diagnostics.textual.clusters.complementary.empty());
  CHECK(diagnostics.textual.attention_supporting.empty());
  CHECK(diagnostics.textual.attention_representative.empty());
  CHECK(diagnostics.textual.attention_complementary.empty());
}

TEST_CASE("evaluation slices partition the dataset") {
  RunConfig config = tiny_config();
  const auto dataset = synth_generate(40, 31, tiny_profile());
  ModelParams model = build_model(model_dims(dataset_dims(dataset), config), config.ablation, 9);

  const Metrics metrics = evaluate(model, config, dataset);
  CHECK_EQ(metrics.all.total, 40);
  CHECK_EQ(metrics.pristine.total, 20);
  CHECK_EQ(metrics.falsified.total, 20);
  CHECK_EQ(metrics.pristine.correct + metrics.falsified.correct, metrics.all.correct);
  std::size_t scenario_total = 0, scenario_correct = 0;
  for (const SliceMetric& slice : metrics.scenario) {
    CHECK_EQ(slice.total, 10);
    scenario_total += slice.total;
    scenario_correct += slice.correct;
  }
  CHECK_EQ(scenario_total, metrics.all.total);
  CHECK_EQ(scenario_correct, metrics.all.correct);

  const std::string report = metrics_report(metrics, config);
  CHECK(report.find("accuracy_all ") != std::string::npos);
  CHECK(report.find("accuracy_scenario_d ") != std::string::npos);
  CHECK(report.find("evaluated_count 40") != std::string::npos);
  CHECK(report.find("\"seed\"") != std::string::npos);  // config echo

  // Slices with no instances are reported as absent, not as 0-percent.
  std::vector<ClaimInstance> pristine_only;
  for (const ClaimInstance& inst : dataset)
    if (inst.label == Label::kPristine) pristine_only.push_back(inst);
  const std::string partial = metrics_report(evaluate(model, config, pristine_only), config);
  CHECK(partial.find("accuracy_falsified absent") != std::string::npos);
}

TEST_CASE("training is reproducible and reduces the loss") {
  RunConfig config = tiny_config();
  const auto dataset = synth_generate(64, 13, tiny_profile());

  TrainResult first = train(dataset, config);
  TrainResult second = train(dataset, config);

  REQUIRE_EQ(first.history.epochs.size(), config.epochs);
  REQUIRE_EQ(second.history.epochs.size(), config.epochs);
  for (std::size_t i = 0; i < first.history.epochs.size(); ++i) {
    CHECK_EQ(first.history.epochs[i].epoch, i + 1);
    CHECK_EQ(first.history.epochs[i].train_loss, second.history.epochs[i].train_loss);
    CHECK_EQ(first.history.epochs[i].val_accuracy, second.history.epochs[i].val_accuracy);
  }
  CHECK_EQ(first.history.best_epoch, second.history.best_epoch);
  CHECK(same_values(first.model, second.model));

  // 64 instances, a quarter held out.
  CHECK_EQ(first.history.val_count, 16);
  CHECK_EQ(first.history.train_count, 48);

  double min_loss = first.history.epochs[0].train_loss;
  for (const EpochStats& e : first.history.epochs) min_loss = std::min(min_loss, e.train_loss);
  CHECK(min_loss < first.history.epochs[0].train_loss);
}

TEST_CASE("the best epoch is the earliest validation maximum") {
  RunConfig config = tiny_config();
  const auto dataset = synth_generate(64, 13, tiny_profile());
  const TrainHistory history = train(dataset, config).history;

  double best_accuracy = -1.0;
  std::size_t best_epoch = 0;
  for (const EpochStats& e : history.epochs)
    if (e.val_accuracy > best_accuracy) {
      best_accuracy = e.val_accuracy;
      best_epoch = e.epoch;
    }
  CHECK_EQ(history.best_epoch, best_epoch);
}

TEST_CASE("split sizes follow the configured fractions") {
  RunConfig config = tiny_config();
  const auto dataset = synth_generate(10, 41, tiny_profile());

  config.val_fraction = 0.0;
  config.train_fraction = 0.5;
  config.epochs = 1;
  const TrainHistory history = train(dataset, config).history;
  CHECK_EQ(history.val_count, 0);
  CHECK_EQ(history.train_count, 5);
  for (const EpochStats& e : history.epochs) {
    CHECK(e.val_accuracy >= 0.0);
    CHECK(e.val_accuracy <= 1.0);
  }

  config.train_fraction = 0.1;  // floor(0.1 * 10) = 1 instance
  CHECK_THROWS_WITH_AS(train(dataset, config),
                       "train: training subsample has fewer than 2 instances",
                       std::invalid_argument);
}

TEST_CASE("checkpoints round trip bit-exactly") {
  RunConfig config = tiny_config();
  config.epochs = 2;
  const auto dataset = synth_generate(24, 19, tiny_profile());
  TrainResult result = train(dataset, config);  // nontrivial weights and running stats

  TempDir dir;
  const std::string path = dir.file("model.ckpt");
  save_checkpoint(result.model, config, path);

  Checkpoint loaded = load_checkpoint(path);
  CHECK(loaded.config == config);
  CHECK(loaded.model.dims == result.model.dims);
  CHECK(loaded.model.ablation == result.model.ablation);
  CHECK(same_values(loaded.model, result.model));

  // Loaded models predict identically.
  const auto [logits_a, diag_a] = forward_infer(result.model, config, dataset[0]);
  const auto [logits_b, diag_b] = forward_infer(loaded.model, config, dataset[0]);
  CHECK_EQ(logits_a[0], logits_b[0]);
  CHECK_EQ(logits_a[1], logits_b[1]);

  // Re-saving the loaded model reproduces the file byte for byte.
  const std::string again = dir.file("model2.ckpt");
  save_checkpoint(loaded.model, loaded.config, again);
  CHECK_EQ(read_file(path), read_file(again));
}

TEST_CASE("damaged checkpoints are rejected with the failure site") {
  RunConfig config = tiny_config();
  ModelParams model = build_model(tiny_dims(), config.ablation, 7);
  TempDir dir;
  const std::string path = dir.file("model.ckpt");
  save_checkpoint(model, config, path);
  const std::string bytes = read_file(path);

  const std::string wrong_magic = dir.file("magic.ckpt");
  write_file(wrong_magic, "XXXXXXXX" + bytes.substr(8));
  CHECK_THROWS_WITH_AS(load_checkpoint(wrong_magic), (wrong_magic + ": not a checkpoint file").c_str(),
                       std::runtime_error);

  const std::string cut = dir.file("cut.ckpt");
  write_file(cut, bytes.substr(0, bytes.size() - 8));
  CHECK_THROWS_WITH_AS(load_checkpoint(cut), (cut + ": truncated checkpoint payload").c_str(),
                       std::runtime_error);

  CHECK_THROWS_AS(load_checkpoint(dir.file("absent.ckpt")), std::runtime_error);
}

TEST_CASE("tied logits resolve to pristine") {
  RunConfig config = tiny_config();
  ModelParams model = build_model(tiny_dims(), config.ablation, 7);
  for (nn::ParamTensor* p : model.all_params()) std::fill(p->value.begin(), p->value.end(), 0.0);

  const auto [label, diagnostics] = predict(model, config, tiny_instance());
  CHECK_EQ(label, Label::kPristine);
  CHECK_EQ(diagnostics.probabilities[0], 0.5);
  CHECK_EQ(diagnostics.probabilities[1], 0.5);
}
