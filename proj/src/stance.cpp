#include "ooc/stance.hpp"

#include <stdexcept>

namespace ooc::stance {

const char* to_string(FusionStrategy s) {
  switch (s) {
    case FusionStrategy::kConcat: return "concat";
    case FusionStrategy::kMaxPool: return "max_pool";
    case FusionStrategy::kAvgPool: return "avg_pool";
    case FusionStrategy::kElementwiseMul: return "elementwise_mul";
    case FusionStrategy::kAllWithFc: return "all_with_fc";
  }
  return "?";
}

const char* to_string(HeadKind k) {
  switch (k) {
    case HeadKind::kClustered: return "clustered";
    case HeadKind::kMemory: return "memory";
    case HeadKind::kSigned: return "signed";
    case HeadKind::kArith: return "arith";
  }
  return "?";
}

std::vector<nn::ParamTensor*> HeadParams::params() {
  std::vector<nn::ParamTensor*> out = {&w_claim, &b_claim, &w_key, &b_key, &w_value, &b_value};
  switch (kind) {
    case HeadKind::kClustered:
      out.push_back(&w_fuse);
      out.push_back(&b_fuse);
      for (nn::BatchNormLayer* bn : {&bn_supporting, &bn_representative, &bn_complementary}) {
        out.push_back(&bn->gamma);
        out.push_back(&bn->beta);
      }
      break;
    case HeadKind::kMemory:
      out.push_back(&bn_memory.gamma);
      out.push_back(&bn_memory.beta);
      break;
    case HeadKind::kSigned:
      out.push_back(&w_fuse);
      out.push_back(&b_fuse);
      break;
    case HeadKind::kArith:
      out.push_back(&w_arith);
      out.push_back(&w_fuse);
      out.push_back(&b_fuse);
      break;
  }
  return out;
}

std::vector<nn::BatchNormLayer*> HeadParams::norms() {
  switch (kind) {
    case HeadKind::kClustered:
      return {&bn_supporting, &bn_representative, &bn_complementary};
    case HeadKind::kMemory:
      return {&bn_memory};
    default:
      return {};
  }
}

HeadParams make_head(const std::string& name, HeadKind kind, FusionStrategy fusion,
                     std::size_t claim_dim, std::size_t evidence_dim, std::size_t dim,
                     Rng& rng) {
  if (dim == 0 || claim_dim == 0 || evidence_dim == 0)
    throw std::invalid_argument("make_head: dimensions must be positive");
  HeadParams h;
  h.kind = kind;
  h.fusion = fusion;
  h.claim_dim = claim_dim;
  h.evidence_dim = evidence_dim;
  h.dim = dim;

  auto dense = [&](const std::string& tag, std::size_t rows, std::size_t cols) {
    nn::ParamTensor w = nn::ParamTensor::zeros(name + "." + tag, {rows, cols});
    nn::glorot_init(w, cols, rows, rng);
    return w;
  };
  auto bias = [&](const std::string& tag, std::size_t rows) {
    return nn::ParamTensor::zeros(name + "." + tag, {rows});
  };

  h.w_claim = dense("w_claim", dim, claim_dim);
  h.b_claim = bias("b_claim", dim);
  h.w_key = dense("w_key", dim, evidence_dim);
  h.b_key = bias("b_key", dim);
  h.w_value = dense("w_value", dim, evidence_dim);
  h.b_value = bias("b_value", dim);

  switch (kind) {
    case HeadKind::kClustered: {
      const bool wide =
          fusion == FusionStrategy::kConcat || fusion == FusionStrategy::kAllWithFc;
      h.w_fuse = dense("w_fuse", dim, wide ? 3 * dim : dim);
      h.b_fuse = bias("b_fuse", dim);
      h.bn_supporting = nn::BatchNormLayer(name + ".bn_supporting", dim);
      h.bn_representative = nn::BatchNormLayer(name + ".bn_representative", dim);
      h.bn_complementary = nn::BatchNormLayer(name + ".bn_complementary", dim);
      break;
    }
    case HeadKind::kMemory:
      h.bn_memory = nn::BatchNormLayer(name + ".bn_memory", dim);
      break;
    case HeadKind::kSigned:
      h.w_fuse = dense("w_fuse", dim, 2 * dim);
      h.b_fuse = bias("b_fuse", dim);
      break;
    case HeadKind::kArith:
      h.w_arith = dense("w_arith", dim, dim);
      h.w_fuse = dense("w_fuse", dim, 2 * dim);
      h.b_fuse = bias("b_fuse", dim);
      break;
  }
  return h;
}

HeadTape HeadTape::bind(nn::Tape& t, HeadParams& head) {
  HeadTape h;
  h.head = &head;
  h.w_claim = t.param(head.w_claim);
  h.b_claim = t.param(head.b_claim);
  h.w_key = t.param(head.w_key);
  h.b_key = t.param(head.b_key);
  h.w_value = t.param(head.w_value);
  h.b_value = t.param(head.b_value);
  if (head.w_fuse.count() > 0) {
    h.w_fuse = t.param(head.w_fuse);
    h.b_fuse = t.param(head.b_fuse);
  }
  if (head.w_arith.count() > 0) h.w_arith = t.param(head.w_arith);
  return h;
}

nn::Tape::Ref project_claim(nn::Tape& t, const HeadTape& h, nn::Tape::Ref x) {
  return t.relu(t.affine(h.w_claim, h.b_claim, x));
}

std::pair<std::vector<nn::Tape::Ref>, std::vector<nn::Tape::Ref>> project_evidence(
    nn::Tape& t, const HeadTape& h, const std::vector<nn::Tape::Ref>& evidence) {
  std::vector<nn::Tape::Ref> keys;
  std::vector<nn::Tape::Ref> values;
  keys.reserve(evidence.size());
  values.reserve(evidence.size());
  for (nn::Tape::Ref e : evidence) {
    keys.push_back(t.relu(t.affine(h.w_key, h.b_key, e)));
    values.push_back(t.relu(t.affine(h.w_value, h.b_value, e)));
  }
  return {std::move(keys), std::move(values)};
}

namespace {

// Attention scores claim . key_i stacked into one vector node.
nn::Tape::Ref attention_scores(nn::Tape& t, nn::Tape::Ref claim,
                               const std::vector<nn::Tape::Ref>& keys) {
  std::vector<nn::Tape::Ref> dots;
  dots.reserve(keys.size());
  for (nn::Tape::Ref k : keys) dots.push_back(t.dot(claim, k));
  return t.stack(dots);
}

}  // namespace

nn::Tape::Ref attention_pool(nn::Tape& t, nn::Tape::Ref claim,
                             const std::vector<nn::Tape::Ref>& keys,
                             const std::vector<nn::Tape::Ref>& values,
                             std::vector<double>* weights_out) {
  if (keys.size() != values.size())
    throw std::invalid_argument("attention_pool: key/value count mismatch");
  if (keys.empty()) {
    if (weights_out) weights_out->clear();
    return claim;  // zero weighted sum
  }
  const nn::Tape::Ref alpha = t.softmax(attention_scores(t, claim, keys));
  if (weights_out) *weights_out = t.value(alpha);
  return t.add(t.weighted_sum(alpha, values), claim);
}

nn::Tape::Ref cluster_attention(nn::Tape& t, nn::Tape::Ref claim,
                                const std::vector<nn::Tape::Ref>& keys,
                                const std::vector<nn::Tape::Ref>& values,
                                nn::BatchNormLayer& bn, nn::RunMode mode,
                                std::vector<double>* weights_out) {
  const nn::Tape::Ref pooled = attention_pool(t, claim, keys, values, weights_out);
  return t.batch_norm({pooled}, bn, mode).front();
}

nn::Tape::Ref fuse(nn::Tape& t, const HeadTape& h, nn::Tape::Ref supporting,
                   nn::Tape::Ref representative, nn::Tape::Ref complementary,
                   nn::Tape::Ref claim) {
  const FusionStrategy strategy = h.head->fusion;
  nn::Tape::Ref combined = 0;
  switch (strategy) {
    case FusionStrategy::kConcat:
      combined = t.concat({supporting, representative, complementary});
      break;
    case FusionStrategy::kMaxPool:
      combined = t.max(t.max(supporting, representative), complementary);
      break;
    case FusionStrategy::kAvgPool:
      combined = t.scale(t.add(t.add(supporting, representative), complementary), 1.0 / 3.0);
      break;
    case FusionStrategy::kElementwiseMul:
      combined = t.mul(t.mul(supporting, representative), complementary);
      break;
    case FusionStrategy::kAllWithFc: {
      const nn::Tape::Ref mx = t.max(t.max(supporting, representative), complementary);
      const nn::Tape::Ref av =
          t.scale(t.add(t.add(supporting, representative), complementary), 1.0 / 3.0);
      const nn::Tape::Ref ml = t.mul(t.mul(supporting, representative), complementary);
      combined = t.concat({mx, av, ml});
      break;
    }
  }
  return t.relu(t.add(t.affine(h.w_fuse, h.b_fuse, combined), claim));
}

nn::Tape::Ref memory_forward(nn::Tape& t, const HeadTape& h, nn::Tape::Ref claim_embedding,
                             const std::vector<nn::Tape::Ref>& evidence, nn::RunMode mode,
                             std::vector<double>* weights_out) {
  const nn::Tape::Ref claim = project_claim(t, h, claim_embedding);
  auto [keys, values] = project_evidence(t, h, evidence);
  return cluster_attention(t, claim, keys, values, h.head->bn_memory, mode, weights_out);
}

nn::Tape::Ref signed_attention_forward(nn::Tape& t, const HeadTape& h, nn::Tape::Ref claim,
                                       const std::vector<nn::Tape::Ref>& keys,
                                       const std::vector<nn::Tape::Ref>& values,
                                       std::vector<double>* weights_out) {
  if (keys.size() != values.size())
    throw std::invalid_argument("signed_attention_forward: key/value count mismatch");
  nn::Tape::Ref positive;
  nn::Tape::Ref negative;
  if (keys.empty()) {
    positive = claim;
    negative = claim;
    if (weights_out) weights_out->clear();
  } else {
    const nn::Tape::Ref scores = attention_scores(t, claim, keys);
    const nn::Tape::Ref alpha = t.softmax(scores);
    if (weights_out) *weights_out = t.value(alpha);
    positive = t.add(t.weighted_sum(alpha, values), claim);
    negative = t.add(
        t.scale(t.weighted_sum(t.softmax(t.scale(scores, -1.0)), values), -1.0), claim);
  }
  return t.affine(h.w_fuse, h.b_fuse, t.concat({positive, negative}));
}

nn::Tape::Ref stance_arith_forward(nn::Tape& t, const HeadTape& h, nn::Tape::Ref claim,
                                   const std::vector<nn::Tape::Ref>& keys,
                                   const std::vector<nn::Tape::Ref>& values,
                                   std::vector<double>* weights_out) {
  if (keys.size() != values.size())
    throw std::invalid_argument("stance_arith_forward: key/value count mismatch");
  const std::size_t d = h.head->dim;
  nn::Tape::Ref vbar;
  if (keys.empty()) {
    vbar = t.input(std::vector<double>(d, 0.0));
    if (weights_out) weights_out->clear();
  } else {
    const nn::Tape::Ref alpha = t.softmax(attention_scores(t, claim, keys));
    if (weights_out) *weights_out = t.value(alpha);
    vbar = t.weighted_sum(alpha, values);
  }
  // W* vbar, bias-free: route the affine through a constant zero bias.
  const nn::Tape::Ref zero = t.input(std::vector<double>(d, 0.0));
  const nn::Tape::Ref wv = t.affine(h.w_arith, zero, vbar);
  return t.affine(h.w_fuse, h.b_fuse, t.concat({t.mul(wv, claim), t.sub(wv, claim)}));
}

}  // namespace ooc::stance
