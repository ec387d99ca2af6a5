#pragma once

// Stance heads: attention over evidence clusters relative to a projected
// claim. Four head variants share the claim/key/value projections:
//   - clustered: per-cluster attention + batch norm, fused across the
//     supporting / representative / complementary clusters
//   - memory: one attention pass over all evidence (degenerate single-cluster
//     form of the clustered head)
//   - signed: paired positive/negative softmax attention
//   - arith: attention-pooled value combined with the claim by elementwise
//     product and difference
// All forwards run on the autograd tape so training reuses them unchanged.

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "ooc/nn.hpp"
#include "ooc/rng.hpp"

namespace ooc::stance {

enum class FusionStrategy { kConcat, kMaxPool, kAvgPool, kElementwiseMul, kAllWithFc };
enum class HeadKind { kClustered, kMemory, kSigned, kArith };

const char* to_string(FusionStrategy s);
const char* to_string(HeadKind k);

struct HeadParams {
  HeadKind kind = HeadKind::kClustered;
  FusionStrategy fusion = FusionStrategy::kConcat;
  std::size_t claim_dim = 0;     // width of the incoming claim embedding
  std::size_t evidence_dim = 0;  // width of incoming evidence vectors
  std::size_t dim = 0;           // d: projection width, also the output width

  nn::ParamTensor w_claim, b_claim;
  nn::ParamTensor w_key, b_key;
  nn::ParamTensor w_value, b_value;
  nn::ParamTensor w_fuse, b_fuse;  // clustered / signed / arith output layer
  nn::ParamTensor w_arith;         // arith only: maps pooled value before mixing
  nn::BatchNormLayer bn_supporting, bn_representative, bn_complementary;  // clustered
  nn::BatchNormLayer bn_memory;                                           // memory

  // Trainable tensors in a stable order (batch-norm scales/shifts included).
  std::vector<nn::ParamTensor*> params();
  // Batch-norm layers in a stable order (for running statistics).
  std::vector<nn::BatchNormLayer*> norms();
};

HeadParams make_head(const std::string& name, HeadKind kind, FusionStrategy fusion,
                     std::size_t claim_dim, std::size_t evidence_dim, std::size_t dim,
                     Rng& rng);

// Parameter leaves bound once per tape, shared by every instance in a batch.
struct HeadTape {
  HeadParams* head = nullptr;
  nn::Tape::Ref w_claim, b_claim, w_key, b_key, w_value, b_value;
  nn::Tape::Ref w_fuse, b_fuse, w_arith;

  static HeadTape bind(nn::Tape& t, HeadParams& head);
};

// ReLU(W^c x + b^c).
nn::Tape::Ref project_claim(nn::Tape& t, const HeadTape& h, nn::Tape::Ref x);

// Independent key/value projections of each evidence vector.
std::pair<std::vector<nn::Tape::Ref>, std::vector<nn::Tape::Ref>> project_evidence(
    nn::Tape& t, const HeadTape& h, const std::vector<nn::Tape::Ref>& evidence);

// softmax(claim . keys) . values + claim. Empty evidence contributes a zero
// sum, so the result is the claim projection itself. Captures the attention
// weights when asked.
nn::Tape::Ref attention_pool(nn::Tape& t, nn::Tape::Ref claim,
                             const std::vector<nn::Tape::Ref>& keys,
                             const std::vector<nn::Tape::Ref>& values,
                             std::vector<double>* weights_out = nullptr);

// attention_pool followed by batch normalization of the single resulting row.
// Train-mode batch norm needs >= 2 rows, so training batches pool first and
// normalize across instances; this entry point serves inference and tests.
nn::Tape::Ref cluster_attention(nn::Tape& t, nn::Tape::Ref claim,
                                const std::vector<nn::Tape::Ref>& keys,
                                const std::vector<nn::Tape::Ref>& values,
                                nn::BatchNormLayer& bn, nn::RunMode mode,
                                std::vector<double>* weights_out = nullptr);

// Combine the three normalized cluster representations with the claim.
nn::Tape::Ref fuse(nn::Tape& t, const HeadTape& h, nn::Tape::Ref supporting,
                   nn::Tape::Ref representative, nn::Tape::Ref complementary,
                   nn::Tape::Ref claim);

// Single-cluster head over all evidence: project, pool, normalize.
nn::Tape::Ref memory_forward(nn::Tape& t, const HeadTape& h, nn::Tape::Ref claim_embedding,
                             const std::vector<nn::Tape::Ref>& evidence, nn::RunMode mode,
                             std::vector<double>* weights_out = nullptr);

// H+ = softmax(c.k).v + c, H- = -softmax(-c.k).v + c, output W [H+;H-] + b.
// weights_out captures the positive-side attention.
nn::Tape::Ref signed_attention_forward(nn::Tape& t, const HeadTape& h, nn::Tape::Ref claim,
                                       const std::vector<nn::Tape::Ref>& keys,
                                       const std::vector<nn::Tape::Ref>& values,
                                       std::vector<double>* weights_out = nullptr);

// vbar = attention-pooled value; output W [W* vbar (.) c ; W* vbar - c] + b.
nn::Tape::Ref stance_arith_forward(nn::Tape& t, const HeadTape& h, nn::Tape::Ref claim,
                                   const std::vector<nn::Tape::Ref>& keys,
                                   const std::vector<nn::Tape::Ref>& values,
                                   std::vector<double>* weights_out = nullptr);

}  // namespace ooc::stance
