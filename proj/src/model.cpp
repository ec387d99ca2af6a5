#include "ooc/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "ooc/rng.hpp"
#include "ooc/srs.hpp"

namespace ooc {

using nlohmann::json;
using nlohmann::ordered_json;

ModelDims model_dims(const DatasetDims& data, const RunConfig& config) {
  ModelDims dims;
  dims.text_dim = data.text_dim;
  dims.visual_a_dim = data.visual_a_dim;
  dims.visual_b_dim = data.visual_b_dim;
  dims.aux_dim = data.aux_dim;
  dims.visual_width = config.visual_width;
  dims.textual_width = config.textual_width;
  dims.classifier_hidden = config.classifier_hidden;
  return dims;
}

std::size_t ModelParams::classifier_input_width() const {
  std::size_t width = dims.textual_width + dims.aux_dim;  // entity head + aux
  if (ablation.use_visual_heads) width += 2 * dims.visual_width;
  if (ablation.use_textual_head) width += dims.textual_width;
  return width;
}

std::vector<nn::ParamTensor*> ModelParams::all_params() {
  std::vector<nn::ParamTensor*> out;
  auto append = [&out](std::vector<nn::ParamTensor*> v) {
    out.insert(out.end(), v.begin(), v.end());
  };
  if (ablation.use_visual_heads) {
    append(visual_a.params());
    append(visual_b.params());
  }
  if (ablation.use_textual_head) append(textual.params());
  append(entity.params());
  out.push_back(&w_hidden);
  out.push_back(&b_hidden);
  out.push_back(&w_out);
  out.push_back(&b_out);
  return out;
}

std::vector<nn::BatchNormLayer*> ModelParams::all_norms() {
  std::vector<nn::BatchNormLayer*> out;
  auto append = [&out](std::vector<nn::BatchNormLayer*> v) {
    out.insert(out.end(), v.begin(), v.end());
  };
  if (ablation.use_visual_heads) {
    append(visual_a.norms());
    append(visual_b.norms());
  }
  if (ablation.use_textual_head) append(textual.norms());
  append(entity.norms());
  return out;
}

ModelParams build_model(const ModelDims& dims, const AblationConfig& ablation,
                        std::uint64_t seed) {
  if (dims.text_dim == 0) throw std::invalid_argument("build_model: text_dim must be positive");
  if (ablation.use_visual_heads && (dims.visual_a_dim == 0 || dims.visual_b_dim == 0))
    throw std::invalid_argument("build_model: visual dims must be positive");
  if (dims.visual_width == 0 || dims.textual_width == 0 || dims.classifier_hidden == 0)
    throw std::invalid_argument("build_model: projection widths must be positive");

  Rng rng(seed);
  ModelParams m;
  m.dims = dims;
  m.ablation = ablation;

  const std::size_t srs_extra = ablation.use_srs ? 1 : 0;
  if (ablation.use_visual_heads) {
    m.visual_a = stance::make_head("visual_a", ablation.visual_head, ablation.fusion,
                                   dims.visual_a_dim, dims.visual_a_dim, dims.visual_width, rng);
    m.visual_b = stance::make_head("visual_b", ablation.visual_head, ablation.fusion,
                                   dims.visual_b_dim, dims.visual_b_dim, dims.visual_width, rng);
  }
  if (ablation.use_textual_head)
    m.textual = stance::make_head("textual", ablation.textual_head, ablation.fusion,
                                  dims.text_dim, dims.text_dim + srs_extra,
                                  dims.textual_width, rng);
  m.entity = stance::make_head("entity", stance::HeadKind::kMemory, ablation.fusion,
                               dims.text_dim, dims.text_dim + srs_extra,
                               dims.textual_width, rng);

  const std::size_t input_width = m.classifier_input_width();
  m.w_hidden = nn::ParamTensor::zeros("classifier.w_hidden", {dims.classifier_hidden, input_width});
  nn::glorot_init(m.w_hidden, input_width, dims.classifier_hidden, rng);
  m.b_hidden = nn::ParamTensor::zeros("classifier.b_hidden", {dims.classifier_hidden});
  m.w_out = nn::ParamTensor::zeros("classifier.w_out", {2, dims.classifier_hidden});
  nn::glorot_init(m.w_out, dims.classifier_hidden, 2, rng);
  m.b_out = nn::ParamTensor::zeros("classifier.b_out", {2});
  return m;
}

namespace {

SrsConfig effective_srs(const RunConfig& config, const AblationConfig& ablation) {
  SrsConfig s = config.srs;
  if (ablation.binary_nei) s.variant = SrsVariant::kBinaryNei;
  return s;
}

// Per-instance pure preprocessing: scores, head input vectors, clusterings.
struct Prepared {
  std::vector<double> textual_srs;
  std::vector<double> entity_srs;
  std::vector<Vec> textual_inputs;
  std::vector<Vec> entity_inputs;
  std::vector<Vec> visual_a_inputs;
  std::vector<Vec> visual_b_inputs;
  ClusterAssignment visual_a_clusters, visual_b_clusters, textual_clusters;
};

// Removes every evidence index belonging to a dropped cluster from all three
// roles, so dropped evidence never reaches attention.
ClusterAssignment apply_drops(const ClusterAssignment& clusters,
                              const std::set<ClusterRole>& drops) {
  if (drops.empty()) return clusters;
  std::vector<std::size_t> banned;
  if (drops.count(ClusterRole::kSupporting))
    banned.insert(banned.end(), clusters.supporting.begin(), clusters.supporting.end());
  if (drops.count(ClusterRole::kRepresentative))
    banned.insert(banned.end(), clusters.representative.begin(), clusters.representative.end());
  if (drops.count(ClusterRole::kComplementary))
    banned.insert(banned.end(), clusters.complementary.begin(), clusters.complementary.end());
  std::sort(banned.begin(), banned.end());
  banned.erase(std::unique(banned.begin(), banned.end()), banned.end());

  auto keep = [&banned](const std::vector<std::size_t>& members) {
    std::vector<std::size_t> out;
    for (std::size_t m : members)
      if (!std::binary_search(banned.begin(), banned.end(), m)) out.push_back(m);
    return out;
  };
  ClusterAssignment out;
  out.supporting = keep(clusters.supporting);
  out.representative = keep(clusters.representative);
  out.complementary = keep(clusters.complementary);
  return out;
}

Prepared prepare(const ClaimInstance& inst, const RunConfig& config, const ModelParams& model) {
  const AblationConfig& ab = model.ablation;
  const SrsConfig srs = effective_srs(config, ab);
  Prepared p;

  std::vector<EntitySet> textual_docs;
  textual_docs.reserve(inst.textual_evidence.size());
  for (const TextualEvidence& t : inst.textual_evidence) textual_docs.push_back(t.entities);
  p.textual_srs = srs_vector(textual_docs, inst.caption_entities, srs);

  std::vector<EntitySet> entity_docs;
  entity_docs.reserve(inst.entity_evidence.size());
  for (const EntityEvidence& e : inst.entity_evidence)
    entity_docs.push_back(EntitySet::from_raw({e.text}));
  p.entity_srs = srs_vector(entity_docs, inst.caption_entities, srs);

  for (std::size_t i = 0; i < inst.textual_evidence.size(); ++i) {
    Vec v = inst.textual_evidence[i].embedding;
    if (ab.use_srs) v.push_back(p.textual_srs[i]);
    p.textual_inputs.push_back(std::move(v));
  }
  for (std::size_t i = 0; i < inst.entity_evidence.size(); ++i) {
    Vec v = inst.entity_evidence[i].embedding;
    if (ab.use_srs) v.push_back(p.entity_srs[i]);
    p.entity_inputs.push_back(std::move(v));
  }
  for (const auto& item : inst.visual_evidence) {
    p.visual_a_inputs.push_back(item[0]);
    p.visual_b_inputs.push_back(item[1]);
  }

  // Clustering runs on the raw embeddings: the claim vector has no score
  // appended, so the clustered space is the embedding space itself.
  if (ab.use_visual_heads && ab.visual_head == stance::HeadKind::kClustered) {
    p.visual_a_clusters =
        apply_drops(assign_clusters(inst.image_embeddings[0], p.visual_a_inputs,
                                    config.image_tau_s, config.image_tau_r),
                    ab.drop_clusters);
    p.visual_b_clusters =
        apply_drops(assign_clusters(inst.image_embeddings[1], p.visual_b_inputs,
                                    config.image_tau_s, config.image_tau_r),
                    ab.drop_clusters);
  }
  if (ab.use_textual_head && ab.textual_head == stance::HeadKind::kClustered) {
    std::vector<Vec> raw;
    raw.reserve(inst.textual_evidence.size());
    for (const TextualEvidence& t : inst.textual_evidence) raw.push_back(t.embedding);
    p.textual_clusters =
        apply_drops(assign_clusters(inst.caption_embedding, raw, config.text_tau_s,
                                    config.text_tau_r),
                    ab.drop_clusters);
  }
  return p;
}

void check_instance_dims(const ClaimInstance& inst, const ModelDims& dims) {
  auto fail = [&inst](const std::string& what, std::size_t got, std::size_t want) {
    throw std::runtime_error("instance '" + inst.id + "': " + what + " has " +
                             std::to_string(got) + " dims, model wants " + std::to_string(want));
  };
  if (inst.caption_embedding.size() != dims.text_dim)
    fail("caption embedding", inst.caption_embedding.size(), dims.text_dim);
  if (inst.image_embeddings[0].size() != dims.visual_a_dim)
    fail("image embedding [0]", inst.image_embeddings[0].size(), dims.visual_a_dim);
  if (inst.image_embeddings[1].size() != dims.visual_b_dim)
    fail("image embedding [1]", inst.image_embeddings[1].size(), dims.visual_b_dim);
  for (const auto& item : inst.visual_evidence) {
    if (item[0].size() != dims.visual_a_dim)
      fail("visual evidence [0]", item[0].size(), dims.visual_a_dim);
    if (item[1].size() != dims.visual_b_dim)
      fail("visual evidence [1]", item[1].size(), dims.visual_b_dim);
  }
  for (const auto& t : inst.textual_evidence)
    if (t.embedding.size() != dims.text_dim)
      fail("textual evidence embedding", t.embedding.size(), dims.text_dim);
  for (const auto& e : inst.entity_evidence)
    if (e.embedding.size() != dims.text_dim)
      fail("entity evidence embedding", e.embedding.size(), dims.text_dim);
  if (inst.aux_features.size() != dims.aux_dim)
    fail("aux features", inst.aux_features.size(), dims.aux_dim);
}

}  // namespace

BatchOutput forward_batch(nn::Tape& tape, ModelParams& model, const RunConfig& config,
                          const std::vector<const ClaimInstance*>& batch, nn::RunMode mode,
                          bool update_running) {
  if (batch.empty()) throw std::invalid_argument("forward_batch: empty batch");
  const std::size_t n = batch.size();
  const AblationConfig& ab = model.ablation;

  std::vector<Prepared> prepared;
  prepared.reserve(n);
  for (const ClaimInstance* inst : batch) {
    check_instance_dims(*inst, model.dims);
    prepared.push_back(prepare(*inst, config, model));
  }

  BatchOutput out;
  out.diagnostics.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.diagnostics[i].textual_srs = prepared[i].textual_srs;
    out.diagnostics[i].entity_srs = prepared[i].entity_srs;
  }

  using Ref = nn::Tape::Ref;

  // Clustered head: per-instance attention pooling per cluster, then batch
  // normalization across instances per cluster role, then fusion.
  auto clustered_head = [&](stance::HeadParams& head, auto&& claim_of, auto&& evidence_of,
                            auto&& clusters_of, auto&& diag_of) -> std::vector<Ref> {
    const stance::HeadTape ht = stance::HeadTape::bind(tape, head);
    std::vector<Ref> claims(n), pooled_s(n), pooled_r(n), pooled_c(n);
    for (std::size_t i = 0; i < n; ++i) {
      claims[i] = stance::project_claim(tape, ht, tape.input(claim_of(i)));
      std::vector<Ref> ev;
      for (const Vec& v : evidence_of(i)) ev.push_back(tape.input(v));
      auto [keys, values] = stance::project_evidence(tape, ht, ev);
      HeadDiagnostics& diag = diag_of(i);
      const ClusterAssignment& ca = clusters_of(i);
      diag.clusters = ca;
      auto pick = [&](const std::vector<std::size_t>& members, std::vector<double>* weights) {
        std::vector<Ref> k, v;
        for (std::size_t m : members) {
          k.push_back(keys[m]);
          v.push_back(values[m]);
        }
        return stance::attention_pool(tape, claims[i], k, v, weights);
      };
      pooled_s[i] = pick(ca.supporting, &diag.attention_supporting);
      pooled_r[i] = pick(ca.representative, &diag.attention_representative);
      pooled_c[i] = pick(ca.complementary, &diag.attention_complementary);
    }
    const auto norm_s = tape.batch_norm(pooled_s, head.bn_supporting, mode, update_running);
    const auto norm_r = tape.batch_norm(pooled_r, head.bn_representative, mode, update_running);
    const auto norm_c = tape.batch_norm(pooled_c, head.bn_complementary, mode, update_running);
    std::vector<Ref> outputs(n);
    for (std::size_t i = 0; i < n; ++i)
      outputs[i] = stance::fuse(tape, ht, norm_s[i], norm_r[i], norm_c[i], claims[i]);
    return outputs;
  };

  // Memory head: one attention pass over all evidence, batch-normalized.
  auto memory_head = [&](stance::HeadParams& head, auto&& claim_of, auto&& evidence_of,
                         auto&& diag_of) -> std::vector<Ref> {
    const stance::HeadTape ht = stance::HeadTape::bind(tape, head);
    std::vector<Ref> pooled(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Ref claim = stance::project_claim(tape, ht, tape.input(claim_of(i)));
      std::vector<Ref> ev;
      for (const Vec& v : evidence_of(i)) ev.push_back(tape.input(v));
      auto [keys, values] = stance::project_evidence(tape, ht, ev);
      pooled[i] = stance::attention_pool(tape, claim, keys, values, &diag_of(i).attention_all);
    }
    return tape.batch_norm(pooled, head.bn_memory, mode, update_running);
  };

  // Signed/arith heads carry no batch norm; instances stay independent.
  auto alternative_head = [&](stance::HeadParams& head, auto&& claim_of, auto&& evidence_of,
                              auto&& diag_of) -> std::vector<Ref> {
    const stance::HeadTape ht = stance::HeadTape::bind(tape, head);
    std::vector<Ref> outputs(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Ref claim = stance::project_claim(tape, ht, tape.input(claim_of(i)));
      std::vector<Ref> ev;
      for (const Vec& v : evidence_of(i)) ev.push_back(tape.input(v));
      auto [keys, values] = stance::project_evidence(tape, ht, ev);
      std::vector<double>* weights = &diag_of(i).attention_all;
      outputs[i] = head.kind == stance::HeadKind::kSigned
                       ? stance::signed_attention_forward(tape, ht, claim, keys, values, weights)
                       : stance::stance_arith_forward(tape, ht, claim, keys, values, weights);
    }
    return outputs;
  };

  auto run_head = [&](stance::HeadParams& head, auto&& claim_of, auto&& evidence_of,
                      auto&& clusters_of, auto&& diag_of) -> std::vector<Ref> {
    switch (head.kind) {
      case stance::HeadKind::kClustered:
        return clustered_head(head, claim_of, evidence_of, clusters_of, diag_of);
      case stance::HeadKind::kMemory:
        return memory_head(head, claim_of, evidence_of, diag_of);
      default:
        return alternative_head(head, claim_of, evidence_of, diag_of);
    }
  };

  std::vector<std::vector<Ref>> head_outputs;
  if (ab.use_visual_heads) {
    head_outputs.push_back(run_head(
        model.visual_a, [&](std::size_t i) -> const Vec& { return batch[i]->image_embeddings[0]; },
        [&](std::size_t i) -> const std::vector<Vec>& { return prepared[i].visual_a_inputs; },
        [&](std::size_t i) -> const ClusterAssignment& { return prepared[i].visual_a_clusters; },
        [&](std::size_t i) -> HeadDiagnostics& { return out.diagnostics[i].visual_a; }));
    head_outputs.push_back(run_head(
        model.visual_b, [&](std::size_t i) -> const Vec& { return batch[i]->image_embeddings[1]; },
        [&](std::size_t i) -> const std::vector<Vec>& { return prepared[i].visual_b_inputs; },
        [&](std::size_t i) -> const ClusterAssignment& { return prepared[i].visual_b_clusters; },
        [&](std::size_t i) -> HeadDiagnostics& { return out.diagnostics[i].visual_b; }));
  }
  if (ab.use_textual_head) {
    head_outputs.push_back(run_head(
        model.textual, [&](std::size_t i) -> const Vec& { return batch[i]->caption_embedding; },
        [&](std::size_t i) -> const std::vector<Vec>& { return prepared[i].textual_inputs; },
        [&](std::size_t i) -> const ClusterAssignment& { return prepared[i].textual_clusters; },
        [&](std::size_t i) -> HeadDiagnostics& { return out.diagnostics[i].textual; }));
  }
  head_outputs.push_back(memory_head(
      model.entity, [&](std::size_t i) -> const Vec& { return batch[i]->caption_embedding; },
      [&](std::size_t i) -> const std::vector<Vec>& { return prepared[i].entity_inputs; },
      [&](std::size_t i) -> HeadDiagnostics& { return out.diagnostics[i].entity; }));

  const Ref w_hidden = tape.param(model.w_hidden);
  const Ref b_hidden = tape.param(model.b_hidden);
  const Ref w_out = tape.param(model.w_out);
  const Ref b_out = tape.param(model.b_out);
  out.logits.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Ref> parts;
    for (const auto& head : head_outputs) parts.push_back(head[i]);
    if (model.dims.aux_dim > 0) parts.push_back(tape.input(batch[i]->aux_features));
    const Ref features = parts.size() == 1 ? parts.front() : tape.concat(parts);
    const Ref hidden = tape.relu(tape.affine(w_hidden, b_hidden, features));
    out.logits[i] = tape.affine(w_out, b_out, hidden);
    const std::vector<double> probs = nn::softmax(tape.value(out.logits[i]));
    out.diagnostics[i].probabilities = {probs[0], probs[1]};
  }
  return out;
}

std::pair<std::array<double, 2>, Diagnostics> forward_infer(ModelParams& model,
                                                            const RunConfig& config,
                                                            const ClaimInstance& instance) {
  nn::Tape tape;
  BatchOutput out = forward_batch(tape, model, config, {&instance}, nn::RunMode::kInfer,
                                  /*update_running=*/false);
  const auto& logits = tape.value(out.logits.front());
  return {{logits[0], logits[1]}, std::move(out.diagnostics.front())};
}

double SliceMetric::accuracy() const {
  if (total == 0) throw std::logic_error("accuracy of an empty slice");
  return static_cast<double>(correct) / static_cast<double>(total);
}

namespace {

Label predicted_label(const std::array<double, 2>& logits) {
  // Ties go to index 0 (pristine).
  return logits[1] > logits[0] ? Label::kFalsified : Label::kPristine;
}

void tally(Metrics& metrics, const ClaimInstance& inst, Label predicted) {
  const bool correct = predicted == inst.label;
  auto bump = [correct](SliceMetric& slice) {
    slice.total += 1;
    if (correct) slice.correct += 1;
  };
  bump(metrics.all);
  bump(inst.label == Label::kPristine ? metrics.pristine : metrics.falsified);
  if (inst.scenario != Scenario::kNone)
    bump(metrics.scenario[static_cast<std::size_t>(inst.scenario)]);
}

}  // namespace

Metrics evaluate(ModelParams& model, const RunConfig& config,
                 const std::vector<ClaimInstance>& dataset) {
  Metrics metrics;
  const std::size_t chunk = std::max<std::size_t>(1, config.batch_size);
  for (std::size_t at = 0; at < dataset.size(); at += chunk) {
    const std::size_t end = std::min(dataset.size(), at + chunk);
    std::vector<const ClaimInstance*> batch;
    batch.reserve(end - at);
    for (std::size_t i = at; i < end; ++i) batch.push_back(&dataset[i]);
    nn::Tape tape;
    BatchOutput out = forward_batch(tape, model, config, batch, nn::RunMode::kInfer,
                                    /*update_running=*/false);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto& logits = tape.value(out.logits[i]);
      tally(metrics, *batch[i], predicted_label({logits[0], logits[1]}));
    }
  }
  return metrics;
}

std::string metrics_report(const Metrics& metrics, const RunConfig& config) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(6);
  auto line = [&out](const std::string& key, const SliceMetric& slice) {
    out << key << ' ';
    if (slice.present())
      out << slice.accuracy();
    else
      out << "absent";
    out << '\n';
  };
  line("accuracy_all", metrics.all);
  line("accuracy_pristine", metrics.pristine);
  line("accuracy_falsified", metrics.falsified);
  const char* names[4] = {"a", "b", "c", "d"};
  for (std::size_t s = 0; s < 4; ++s)
    line(std::string("accuracy_scenario_") + names[s], metrics.scenario[s]);
  out << "evaluated_count " << metrics.all.total << '\n';
  out << "config:\n" << config_json(config) << '\n';
  return out.str();
}

std::pair<Label, Diagnostics> predict(ModelParams& model, const RunConfig& config,
                                      const ClaimInstance& instance) {
  auto [logits, diagnostics] = forward_infer(model, config, instance);
  return {predicted_label(logits), std::move(diagnostics)};
}

TrainResult train(const std::vector<ClaimInstance>& dataset, const RunConfig& config) {
  validate(config);
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");

  const ModelDims dims = model_dims(dataset_dims(dataset), config);
  Rng rng(config.seed);

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);

  const std::size_t val_count =
      static_cast<std::size_t>(config.val_fraction * static_cast<double>(order.size()));
  std::vector<std::size_t> val_idx(order.begin(), order.begin() + val_count);
  std::vector<std::size_t> pool(order.begin() + val_count, order.end());
  const std::size_t train_count = static_cast<std::size_t>(
      config.train_fraction * static_cast<double>(pool.size()));
  if (train_count < 2)
    throw std::invalid_argument("train: training subsample has fewer than 2 instances");
  std::vector<std::size_t> train_idx(pool.begin(), pool.begin() + train_count);
  const std::vector<std::size_t>& eval_idx = val_idx.empty() ? train_idx : val_idx;

  ModelParams model = build_model(dims, config.ablation, config.seed);
  const std::vector<nn::ParamTensor*> params = model.all_params();
  nn::AdamState adam;
  adam.initialize(params);

  // Batches of one are dropped (batch norm needs pairs), so the step count
  // per epoch is fixed by the training-set size.
  const std::size_t full_batches = train_count / config.batch_size;
  const std::size_t tail = train_count % config.batch_size;
  const std::size_t steps_per_epoch = full_batches + (tail >= 2 ? 1 : 0);
  if (steps_per_epoch == 0)
    throw std::invalid_argument("train: no usable batches (batch_size too large?)");
  nn::LrSchedule schedule;
  schedule.lr_min = config.lr_min;
  schedule.lr_max = config.lr_max;
  schedule.cycle_steps = std::max<std::size_t>(2, config.lr_cycle_epochs * steps_per_epoch);

  TrainResult result;
  result.history.train_count = train_count;
  result.history.val_count = val_count;
  double best_accuracy = -1.0;
  std::size_t global_step = 0;

  std::vector<ClaimInstance> eval_set;
  eval_set.reserve(eval_idx.size());
  for (std::size_t i : eval_idx) eval_set.push_back(dataset[i]);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(train_idx);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t at = 0; at < train_idx.size(); at += config.batch_size) {
      const std::size_t end = std::min(train_idx.size(), at + config.batch_size);
      if (end - at < 2) continue;
      std::vector<const ClaimInstance*> batch;
      batch.reserve(end - at);
      for (std::size_t i = at; i < end; ++i) batch.push_back(&dataset[train_idx[i]]);

      nn::Tape tape;
      BatchOutput fwd = forward_batch(tape, model, config, batch, nn::RunMode::kTrain,
                                      /*update_running=*/true);
      std::vector<nn::Tape::Ref> losses;
      losses.reserve(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i)
        losses.push_back(tape.cross_entropy(
            fwd.logits[i], batch[i]->label == Label::kPristine ? 0 : 1));
      const nn::Tape::Ref loss = tape.mean(losses);

      for (nn::ParamTensor* p : params) p->zero_grad();
      tape.backward(loss);
      nn::adam_step(params, adam, nn::cyclical_lr(global_step, schedule));
      ++global_step;

      loss_sum += tape.scalar(loss) * static_cast<double>(batch.size());
      seen += batch.size();
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = seen > 0 ? loss_sum / static_cast<double>(seen) : 0.0;
    const Metrics val = evaluate(model, config, eval_set);
    stats.val_accuracy = val.all.present() ? val.all.accuracy() : 0.0;
    result.history.epochs.push_back(stats);

    if (stats.val_accuracy > best_accuracy) {
      best_accuracy = stats.val_accuracy;
      result.model = model;  // snapshot, running statistics included
      result.history.best_epoch = epoch;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoints: "OOCCKPT1" magic, little-endian u64 header length, JSON header
// (config, dims, tensor directory), then raw little-endian doubles.

namespace {

constexpr char kMagic[8] = {'O', 'O', 'C', 'C', 'K', 'P', 'T', '1'};

ordered_json dims_json(const ModelDims& dims) {
  ordered_json j;
  j["text_dim"] = dims.text_dim;
  j["visual_a_dim"] = dims.visual_a_dim;
  j["visual_b_dim"] = dims.visual_b_dim;
  j["aux_dim"] = dims.aux_dim;
  j["visual_width"] = dims.visual_width;
  j["textual_width"] = dims.textual_width;
  j["classifier_hidden"] = dims.classifier_hidden;
  return j;
}

ModelDims dims_from_json(const json& j) {
  ModelDims dims;
  dims.text_dim = j.at("text_dim").get<std::size_t>();
  dims.visual_a_dim = j.at("visual_a_dim").get<std::size_t>();
  dims.visual_b_dim = j.at("visual_b_dim").get<std::size_t>();
  dims.aux_dim = j.at("aux_dim").get<std::size_t>();
  dims.visual_width = j.at("visual_width").get<std::size_t>();
  dims.textual_width = j.at("textual_width").get<std::size_t>();
  dims.classifier_hidden = j.at("classifier_hidden").get<std::size_t>();
  return dims;
}

void write_doubles(std::ostream& out, const std::vector<double>& values) {
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
}

}  // namespace

void save_checkpoint(const ModelParams& model, const RunConfig& config,
                     const std::string& path) {
  // Read-only traversal; the directories hand out mutable pointers.
  ModelParams& m = const_cast<ModelParams&>(model);
  const std::vector<nn::ParamTensor*> params = m.all_params();
  const std::vector<nn::BatchNormLayer*> norms = m.all_norms();

  ordered_json header;
  header["format"] = 1;
  header["config"] = json::parse(config_json(config));
  header["dims"] = dims_json(model.dims);

  std::size_t offset = 0;
  ordered_json tensors = ordered_json::array();
  for (const nn::ParamTensor* p : params) {
    ordered_json t;
    t["name"] = p->name;
    t["shape"] = p->shape;
    t["offset"] = offset;
    t["count"] = p->count();
    tensors.push_back(std::move(t));
    offset += p->count();
  }
  header["tensors"] = std::move(tensors);

  ordered_json norm_dir = ordered_json::array();
  for (const nn::BatchNormLayer* bn : norms) {
    ordered_json entry;
    entry["gamma"] = bn->gamma.name;
    entry["features"] = bn->features();
    entry["mean_offset"] = offset;
    offset += bn->features();
    entry["var_offset"] = offset;
    offset += bn->features();
    norm_dir.push_back(std::move(entry));
  }
  header["norms"] = std::move(norm_dir);
  header["payload_count"] = offset;

  const std::string header_text = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write(kMagic, sizeof(kMagic));
  const std::uint64_t header_len = header_text.size();
  out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  for (const nn::ParamTensor* p : params) write_doubles(out, p->value);
  for (const nn::BatchNormLayer* bn : norms) {
    write_doubles(out, bn->running_mean);
    write_doubles(out, bn->running_var);
  }
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);

  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error(path + ": not a checkpoint file");
  std::uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  if (!in) throw std::runtime_error(path + ": truncated checkpoint header");
  std::string header_text(header_len, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw std::runtime_error(path + ": truncated checkpoint header");

  json header;
  try {
    header = json::parse(header_text);
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": bad checkpoint header: " + e.what());
  }

  Checkpoint ckpt;
  ckpt.config = apply_config_text(header.at("config").dump(), RunConfig{}, path + " (config)");
  const ModelDims dims = dims_from_json(header.at("dims"));
  ckpt.model = build_model(dims, ckpt.config.ablation, ckpt.config.seed);

  const std::size_t payload_count = header.at("payload_count").get<std::size_t>();
  std::vector<double> payload(payload_count);
  in.read(reinterpret_cast<char*>(payload.data()),
          static_cast<std::streamsize>(payload_count * sizeof(double)));
  if (!in || in.gcount() != static_cast<std::streamsize>(payload_count * sizeof(double)))
    throw std::runtime_error(path + ": truncated checkpoint payload");

  const std::vector<nn::ParamTensor*> params = ckpt.model.all_params();
  const json& tensors = header.at("tensors");
  if (tensors.size() != params.size())
    throw std::runtime_error(path + ": checkpoint carries " + std::to_string(tensors.size()) +
                             " tensors, model wants " + std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const json& t = tensors[i];
    if (t.at("name").get<std::string>() != params[i]->name)
      throw std::runtime_error(path + ": tensor " + std::to_string(i) + " is '" +
                               t.at("name").get<std::string>() + "', model wants '" +
                               params[i]->name + "'");
    if (t.at("count").get<std::size_t>() != params[i]->count())
      throw std::runtime_error(path + ": tensor '" + params[i]->name + "' size mismatch");
    const std::size_t offset = t.at("offset").get<std::size_t>();
    if (offset + params[i]->count() > payload.size())
      throw std::runtime_error(path + ": tensor '" + params[i]->name + "' overruns payload");
    std::copy_n(payload.begin() + static_cast<std::ptrdiff_t>(offset), params[i]->count(),
                params[i]->value.begin());
  }

  const std::vector<nn::BatchNormLayer*> norms = ckpt.model.all_norms();
  const json& norm_dir = header.at("norms");
  if (norm_dir.size() != norms.size())
    throw std::runtime_error(path + ": checkpoint norm-layer count mismatch");
  for (std::size_t i = 0; i < norms.size(); ++i) {
    const json& entry = norm_dir[i];
    if (entry.at("gamma").get<std::string>() != norms[i]->gamma.name)
      throw std::runtime_error(path + ": norm layer " + std::to_string(i) + " mismatch");
    const std::size_t features = entry.at("features").get<std::size_t>();
    if (features != norms[i]->features())
      throw std::runtime_error(path + ": norm layer '" + norms[i]->gamma.name +
                               "' feature mismatch");
    const std::size_t mean_offset = entry.at("mean_offset").get<std::size_t>();
    const std::size_t var_offset = entry.at("var_offset").get<std::size_t>();
    if (std::max(mean_offset, var_offset) + features > payload.size())
      throw std::runtime_error(path + ": norm layer '" + norms[i]->gamma.name +
                               "' overruns payload");
    std::copy_n(payload.begin() + static_cast<std::ptrdiff_t>(mean_offset), features,
                norms[i]->running_mean.begin());
    std::copy_n(payload.begin() + static_cast<std::ptrdiff_t>(var_offset), features,
                norms[i]->running_var.begin());
  }
  return ckpt;
}

}  // namespace ooc
