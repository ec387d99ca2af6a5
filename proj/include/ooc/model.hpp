#pragma once

// The full detector: two visual stance heads (one per visual space), a
// textual stance head over sentence evidence, an entity memory head, and a
// two-layer classifier over the concatenated head outputs. Includes batched
// tape forward, training with Adam + cyclical learning rate, evaluation
// slices, single-instance prediction, and binary checkpoints.

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ooc/clustering.hpp"
#include "ooc/config.hpp"
#include "ooc/dataset.hpp"
#include "ooc/nn.hpp"
#include "ooc/stance.hpp"

namespace ooc {

struct ModelDims {
  // Input widths, fixed by the dataset.
  std::size_t text_dim = 0;
  std::size_t visual_a_dim = 0;
  std::size_t visual_b_dim = 0;
  std::size_t aux_dim = 0;
  // Projection widths, fixed by the configuration.
  std::size_t visual_width = 1024;
  std::size_t textual_width = 768;
  std::size_t classifier_hidden = 1024;

  bool operator==(const ModelDims&) const = default;
};

ModelDims model_dims(const DatasetDims& data, const RunConfig& config);

struct ModelParams {
  ModelDims dims;
  AblationConfig ablation;
  stance::HeadParams visual_a;  // claim = first-space image embedding
  stance::HeadParams visual_b;  // claim = second-space image embedding
  stance::HeadParams textual;   // claim = caption embedding
  stance::HeadParams entity;    // memory head over entity evidence
  nn::ParamTensor w_hidden, b_hidden;  // classifier layer 1
  nn::ParamTensor w_out, b_out;        // classifier layer 2 -> 2 logits

  // Active trainable tensors / batch-norm layers, stable order. Heads
  // disabled by the ablation contribute nothing.
  std::vector<nn::ParamTensor*> all_params();
  std::vector<nn::BatchNormLayer*> all_norms();
  std::size_t classifier_input_width() const;
};

// Deterministic for a fixed (dims, ablation, seed).
ModelParams build_model(const ModelDims& dims, const AblationConfig& ablation,
                        std::uint64_t seed);

struct HeadDiagnostics {
  ClusterAssignment clusters;  // clustered heads only
  std::vector<double> attention_supporting;
  std::vector<double> attention_representative;
  std::vector<double> attention_complementary;
  std::vector<double> attention_all;  // memory / signed / arith heads
};

struct Diagnostics {
  std::vector<double> textual_srs;  // one per textual evidence, file order
  std::vector<double> entity_srs;   // one per entity evidence
  HeadDiagnostics visual_a, visual_b, textual, entity;
  std::array<double, 2> probabilities{0.0, 0.0};  // softmax over logits
};

struct BatchOutput {
  std::vector<nn::Tape::Ref> logits;  // one per instance, in batch order
  std::vector<Diagnostics> diagnostics;
};

// Records the whole batch on one tape. Train mode normalizes across the
// batch (>= 2 instances required where batch norm is active); infer mode uses
// running statistics. update_running only matters in train mode.
BatchOutput forward_batch(nn::Tape& tape, ModelParams& model, const RunConfig& config,
                          const std::vector<const ClaimInstance*>& batch, nn::RunMode mode,
                          bool update_running = true);

// Convenience single-instance inference outside any tape.
std::pair<std::array<double, 2>, Diagnostics> forward_infer(ModelParams& model,
                                                            const RunConfig& config,
                                                            const ClaimInstance& instance);

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;  // 1-based epoch whose snapshot was kept
  std::size_t train_count = 0;
  std::size_t val_count = 0;
};

struct TrainResult {
  ModelParams model;  // best-validation snapshot
  TrainHistory history;
};

// Splits off floor(val_fraction * n) instances for validation, subsamples the
// remaining pool to floor(train_fraction * pool), then runs minibatch Adam
// with the triangular schedule. Batches of one are dropped (batch norm).
// Keeps the parameters of the epoch with the best validation accuracy (ties:
// earlier epoch). With an empty validation split, accuracy is measured on the
// training pool instead.
TrainResult train(const std::vector<ClaimInstance>& dataset, const RunConfig& config);

struct SliceMetric {
  std::size_t correct = 0;
  std::size_t total = 0;
  bool present() const { return total > 0; }
  double accuracy() const;  // present() required
};

struct Metrics {
  SliceMetric all, pristine, falsified;
  std::array<SliceMetric, 4> scenario;  // a..d; "none" counts only to the other slices
};

Metrics evaluate(ModelParams& model, const RunConfig& config,
                 const std::vector<ClaimInstance>& dataset);

// Fixed key names, 6 decimals, "absent" for empty slices, config echo at the
// end.
std::string metrics_report(const Metrics& metrics, const RunConfig& config);

// Argmax prediction; ties go to pristine (index 0).
std::pair<Label, Diagnostics> predict(ModelParams& model, const RunConfig& config,
                                      const ClaimInstance& instance);

// Binary checkpoint: magic, JSON header (config, dims, tensor directory),
// raw little-endian doubles. Round trips bit-exactly.
void save_checkpoint(const ModelParams& model, const RunConfig& config,
                     const std::string& path);

struct Checkpoint {
  ModelParams model;
  RunConfig config;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace ooc
