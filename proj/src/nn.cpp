#include "ooc/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace ooc::nn {

ParamTensor ParamTensor::zeros(std::string name, std::vector<std::size_t> shape) {
  ParamTensor p;
  p.name = std::move(name);
  p.shape = std::move(shape);
  std::size_t n = 1;
  for (std::size_t d : p.shape) n *= d;
  p.value.assign(n, 0.0);
  p.grad.assign(n, 0.0);
  return p;
}

std::size_t ParamTensor::count() const { return value.size(); }

void ParamTensor::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

void glorot_init(ParamTensor& p, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : p.value) v = rng.uniform(-limit, limit);
}

BatchNormLayer::BatchNormLayer(std::string name, std::size_t features) {
  gamma = ParamTensor::zeros(name + ".gamma", {features});
  beta = ParamTensor::zeros(name + ".beta", {features});
  std::fill(gamma.value.begin(), gamma.value.end(), 1.0);
  running_mean.assign(features, 0.0);
  running_var.assign(features, 1.0);
}

std::vector<double> linear_forward(const ParamTensor& weight, const ParamTensor& bias,
                                   const std::vector<double>& x) {
  const std::size_t rows = bias.count();
  const std::size_t cols = x.size();
  if (weight.count() != rows * cols)
    throw std::invalid_argument("linear_forward: weight is " + std::to_string(weight.count()) +
                                " values, need " + std::to_string(rows * cols));
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = bias.value[r];
    const double* wrow = weight.value.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += wrow[c] * x[c];
    out[r] = acc;
  }
  return out;
}

std::vector<double> relu(std::vector<double> x) {
  for (double& v : x) v = v > 0.0 ? v : 0.0;
  return x;
}

std::vector<double> softmax(const std::vector<double>& scores) {
  if (scores.empty()) throw std::invalid_argument("softmax: empty input");
  const double hi = *std::max_element(scores.begin(), scores.end());
  std::vector<double> out(scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - hi);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

double cross_entropy(const std::vector<double>& logits, std::size_t label) {
  if (label >= logits.size()) throw std::invalid_argument("cross_entropy: label out of range");
  const double hi = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double v : logits) total += std::exp(v - hi);
  return hi + std::log(total) - logits[label];
}

namespace {

struct BatchStats {
  std::vector<double> mean;
  std::vector<double> var;  // biased (divide by batch size)
};

BatchStats batch_stats(const std::vector<std::vector<double>>& batch) {
  const std::size_t n = batch.size();
  const std::size_t d = batch.front().size();
  BatchStats s;
  s.mean.assign(d, 0.0);
  s.var.assign(d, 0.0);
  for (const auto& row : batch) {
    if (row.size() != d) throw std::invalid_argument("batch norm: ragged batch");
    for (std::size_t f = 0; f < d; ++f) s.mean[f] += row[f];
  }
  for (std::size_t f = 0; f < d; ++f) s.mean[f] /= static_cast<double>(n);
  for (const auto& row : batch)
    for (std::size_t f = 0; f < d; ++f) {
      const double c = row[f] - s.mean[f];
      s.var[f] += c * c;
    }
  for (std::size_t f = 0; f < d; ++f) s.var[f] /= static_cast<double>(n);
  return s;
}

void fold_running(BatchNormLayer& layer, const BatchStats& s) {
  for (std::size_t f = 0; f < layer.features(); ++f) {
    layer.running_mean[f] =
        (1.0 - layer.momentum) * layer.running_mean[f] + layer.momentum * s.mean[f];
    layer.running_var[f] =
        (1.0 - layer.momentum) * layer.running_var[f] + layer.momentum * s.var[f];
  }
}

}  // namespace

std::vector<std::vector<double>> batchnorm_forward(const std::vector<std::vector<double>>& batch,
                                                   BatchNormLayer& layer, RunMode mode,
                                                   bool update_running) {
  if (batch.empty()) throw std::invalid_argument("batch norm: empty batch");
  const std::size_t d = layer.features();
  if (batch.front().size() != d) throw std::invalid_argument("batch norm: feature mismatch");

  std::vector<double> mean;
  std::vector<double> var;
  if (mode == RunMode::kTrain) {
    if (batch.size() < 2)
      throw std::invalid_argument("batch norm: train mode needs a batch of at least 2");
    BatchStats s = batch_stats(batch);
    if (update_running) fold_running(layer, s);
    mean = std::move(s.mean);
    var = std::move(s.var);
  } else {
    mean = layer.running_mean;
    var = layer.running_var;
  }

  std::vector<std::vector<double>> out(batch.size(), std::vector<double>(d));
  for (std::size_t i = 0; i < batch.size(); ++i)
    for (std::size_t f = 0; f < d; ++f) {
      const double xh = (batch[i][f] - mean[f]) / std::sqrt(var[f] + layer.epsilon);
      out[i][f] = layer.gamma.value[f] * xh + layer.beta.value[f];
    }
  return out;
}

Tape::Ref Tape::push(std::vector<double> val, std::function<void(Tape&)> back,
                     ParamTensor* bound) {
  Node n;
  n.grad.assign(val.size(), 0.0);
  n.val = std::move(val);
  n.back = std::move(back);
  n.bound = bound;
  nodes_.push_back(std::move(n));
  return nodes_.size() - 1;
}

Tape::Ref Tape::param(ParamTensor& p) { return push(p.value, nullptr, &p); }

Tape::Ref Tape::input(std::vector<double> v) { return push(std::move(v), nullptr); }

Tape::Ref Tape::affine(Ref weight, Ref bias, Ref x) {
  const auto& wv = nodes_[weight].val;
  const auto& bv = nodes_[bias].val;
  const auto& xv = nodes_[x].val;
  const std::size_t rows = bv.size();
  const std::size_t cols = xv.size();
  if (wv.size() != rows * cols) throw std::invalid_argument("affine: shape mismatch");
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = bv[r];
    for (std::size_t c = 0; c < cols; ++c) acc += wv[r * cols + c] * xv[c];
    out[r] = acc;
  }
  const Ref self = nodes_.size();
  return push(std::move(out), [weight, bias, x, self, rows, cols](Tape& t) {
    const auto& g = t.nodes_[self].grad;
    const auto& wv = t.nodes_[weight].val;
    const auto& xv = t.nodes_[x].val;
    auto& gw = t.nodes_[weight].grad;
    auto& gb = t.nodes_[bias].grad;
    auto& gx = t.nodes_[x].grad;
    for (std::size_t r = 0; r < rows; ++r) {
      gb[r] += g[r];
      for (std::size_t c = 0; c < cols; ++c) {
        gw[r * cols + c] += g[r] * xv[c];
        gx[c] += g[r] * wv[r * cols + c];
      }
    }
  });
}

Tape::Ref Tape::relu(Ref x) {
  std::vector<double> out = nodes_[x].val;
  for (double& v : out) v = v > 0.0 ? v : 0.0;
  const Ref self = nodes_.size();
  return push(std::move(out), [x, self](Tape& t) {
    const auto& g = t.nodes_[self].grad;
    const auto& xv = t.nodes_[x].val;
    auto& gx = t.nodes_[x].grad;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (xv[i] > 0.0) gx[i] += g[i];
  });
}

Tape::Ref Tape::add(Ref a, Ref b) {
  const auto& av = nodes_[a].val;
  const auto& bv = nodes_[b].val;
  if (av.size() != bv.size()) throw std::invalid_argument("add: size mismatch");
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
  const Ref self = nodes_.size();
  return push(std::move(out), [a, b, self](Tape& t) {
    const auto& g = t.nodes_[self].grad;
    for (std::size_t i = 0; i < g.size(); ++i) {
      t.nodes_[a].grad[i] += g[i];
      t.nodes_[b].grad[i] += g[i];
    }
  });
}

Tape::Ref Tape::sub(Ref a, Ref b) {
  const auto& av = nodes_[a].val;
  const auto& bv = nodes_[b].val;
  if (av.size() != bv.size()) throw std::invalid_argument("sub: size mismatch");
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] - bv[i];
  const Ref self = nodes_.size();
  return push(std::move(out), [a, b, self](Tape& t) {
    const auto& g = t.nodes_[self].grad;
    for (std::size_t i = 0; i < g.size(); ++i) {
      t.nodes_[a].grad[i] += g[i];
      t.nodes_[b].grad[i] -= g[i];
    }
  });
}

Tape::Ref Tape::mul(Ref a, Ref b) {
  const auto& av = nodes_[a].val;
  const auto& bv = nodes_[b].val;
  if (av.size() != bv.size()) throw std::invalid_argument("mul: size mismatch");
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  const Ref self = nodes_.size();
  return push(std::move(out), [a, b, self](Tape& t) {
    const auto& g = t.nodes_[self].grad;
    const auto& av = t.nodes_[a].val;
    const auto& bv = t.nodes_[b].val;
    for (std::size_t i = 0; i < g.size(); ++i) {
      t.nodes_[a].grad[i] += g[i] * bv[i];
      t.nodes_[b].grad[i] += g[i] * av[i];
    }
  });
}

Tape::Ref Tape::max(Ref a, Ref b) {
  const auto& av = nodes_[a].val;
  const auto& bv = nodes_[b].val;
  if (av.size() != bv.size()) throw std::invalid_argument("max: size mismatch");
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] >= bv[i] ? av[i] : bv[i];
  const Ref self = nodes_.size();
  return push(std::move(out), [a, b, self](Tape& t) {
    const auto& g = t.nodes_[self].grad;
    const auto& av = t.nodes_[a].val;
    const auto& bv = t.nodes_[b].val;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (av[i] >= bv[i])
        t.nodes_[a].grad[i] += g[i];
      else
        t.nodes_[b].grad[i] += g[i];
    }
  });
}

Tape::Ref Tape::scale(Ref x, double s) {
  std::vector<double> out = nodes_[x].val;
  for (double& v : out) v *= s;
  const Ref self = nodes_.size();
  return push(std::move(out), [x, s, self](Tape& t) {
    const auto& g = t.nodes_[self].grad;
    auto& gx = t.nodes_[x].grad;
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * s;
  });
}

Tape::Ref Tape::dot(Ref a, Ref b) {
  const auto& av = nodes_[a].val;
  const auto& bv = nodes_[b].val;
  if (av.size() != bv.size()) throw std::invalid_argument("dot: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) acc += av[i] * bv[i];
  const Ref self = nodes_.size();
  return push({acc}, [a, b, self](Tape& t) {
    const double g = t.nodes_[self].grad[0];
    const auto& av = t.nodes_[a].val;
    const auto& bv = t.nodes_[b].val;
    for (std::size_t i = 0; i < av.size(); ++i) {
      t.nodes_[a].grad[i] += g * bv[i];
      t.nodes_[b].grad[i] += g * av[i];
    }
  });
}

Tape::Ref Tape::stack(const std::vector<Ref>& scalars) {
  if (scalars.empty()) throw std::invalid_argument("stack: no inputs");
  std::vector<double> out(scalars.size());
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    if (nodes_[scalars[i]].val.size() != 1)
      throw std::invalid_argument("stack: inputs must be scalar nodes");
    out[i] = nodes_[scalars[i]].val[0];
  }
  const Ref self = nodes_.size();
  return push(std::move(out), [scalars, self](Tape& t) {
    const auto& g = t.nodes_[self].grad;
    for (std::size_t i = 0; i < scalars.size(); ++i) t.nodes_[scalars[i]].grad[0] += g[i];
  });
}

Tape::Ref Tape::softmax(Ref scores) {
  std::vector<double> out = nn::softmax(nodes_[scores].val);
  const Ref self = nodes_.size();
  return push(std::move(out), [scores, self](Tape& t) {
    const auto& g = t.nodes_[self].grad;
    const auto& p = t.nodes_[self].val;
    auto& gs = t.nodes_[scores].grad;
    double gp = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) gp += g[i] * p[i];
    for (std::size_t i = 0; i < g.size(); ++i) gs[i] += p[i] * (g[i] - gp);
  });
}

Tape::Ref Tape::weighted_sum(Ref weights, const std::vector<Ref>& vectors) {
  const auto& wv = nodes_[weights].val;
  if (wv.size() != vectors.size())
    throw std::invalid_argument("weighted_sum: weight count and vector count differ");
  if (vectors.empty()) throw std::invalid_argument("weighted_sum: no vectors");
  const std::size_t d = nodes_[vectors.front()].val.size();
  std::vector<double> out(d, 0.0);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const auto& v = nodes_[vectors[i]].val;
    if (v.size() != d) throw std::invalid_argument("weighted_sum: ragged vectors");
    for (std::size_t k = 0; k < d; ++k) out[k] += wv[i] * v[k];
  }
  const Ref self = nodes_.size();
  return push(std::move(out), [weights, vectors, self, d](Tape& t) {
    const auto& g = t.nodes_[self].grad;
    const auto& wv = t.nodes_[weights].val;
    auto& gw = t.nodes_[weights].grad;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      const auto& v = t.nodes_[vectors[i]].val;
      auto& gv = t.nodes_[vectors[i]].grad;
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        acc += g[k] * v[k];
        gv[k] += wv[i] * g[k];
      }
      gw[i] += acc;
    }
  });
}

Tape::Ref Tape::concat(const std::vector<Ref>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  std::vector<double> out;
  for (Ref p : parts) {
    const auto& v = nodes_[p].val;
    out.insert(out.end(), v.begin(), v.end());
  }
  const Ref self = nodes_.size();
  return push(std::move(out), [parts, self](Tape& t) {
    const auto& g = t.nodes_[self].grad;
    std::size_t at = 0;
    for (Ref p : parts) {
      auto& gp = t.nodes_[p].grad;
      for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[at + i];
      at += gp.size();
    }
  });
}

Tape::Ref Tape::cross_entropy(Ref logits, std::size_t label) {
  const auto& lv = nodes_[logits].val;
  const double loss = nn::cross_entropy(lv, label);
  const Ref self = nodes_.size();
  return push({loss}, [logits, label, self](Tape& t) {
    const double g = t.nodes_[self].grad[0];
    const std::vector<double> p = nn::softmax(t.nodes_[logits].val);
    auto& gl = t.nodes_[logits].grad;
    for (std::size_t i = 0; i < p.size(); ++i)
      gl[i] += g * (p[i] - (i == label ? 1.0 : 0.0));
  });
}

Tape::Ref Tape::mean(const std::vector<Ref>& scalars) {
  if (scalars.empty()) throw std::invalid_argument("mean: no inputs");
  double acc = 0.0;
  for (Ref s : scalars) {
    if (nodes_[s].val.size() != 1) throw std::invalid_argument("mean: inputs must be scalar nodes");
    acc += nodes_[s].val[0];
  }
  const double inv = 1.0 / static_cast<double>(scalars.size());
  const Ref self = nodes_.size();
  return push({acc * inv}, [scalars, inv, self](Tape& t) {
    const double g = t.nodes_[self].grad[0] * inv;
    for (Ref s : scalars) t.nodes_[s].grad[0] += g;
  });
}

std::vector<Tape::Ref> Tape::batch_norm(const std::vector<Ref>& rows, BatchNormLayer& layer,
                                        RunMode mode, bool update_running) {
  if (rows.empty()) throw std::invalid_argument("batch norm: empty batch");
  const std::size_t d = layer.features();
  for (Ref r : rows)
    if (nodes_[r].val.size() != d) throw std::invalid_argument("batch norm: feature mismatch");

  const Ref gamma = param(layer.gamma);
  const Ref beta = param(layer.beta);

  if (mode == RunMode::kInfer) {
    // Rows are independent under the running statistics.
    std::vector<Ref> out;
    out.reserve(rows.size());
    std::vector<double> inv_std(d);
    for (std::size_t f = 0; f < d; ++f)
      inv_std[f] = 1.0 / std::sqrt(layer.running_var[f] + layer.epsilon);
    for (Ref r : rows) {
      std::vector<double> y(d);
      std::vector<double> xhat(d);
      for (std::size_t f = 0; f < d; ++f) {
        xhat[f] = (nodes_[r].val[f] - layer.running_mean[f]) * inv_std[f];
        y[f] = layer.gamma.value[f] * xhat[f] + layer.beta.value[f];
      }
      const Ref self = nodes_.size();
      out.push_back(push(std::move(y), [r, gamma, beta, self, xhat, inv_std](Tape& t) {
        const auto& g = t.nodes_[self].grad;
        const auto& gm = t.nodes_[gamma].val;
        for (std::size_t f = 0; f < g.size(); ++f) {
          t.nodes_[gamma].grad[f] += g[f] * xhat[f];
          t.nodes_[beta].grad[f] += g[f];
          t.nodes_[r].grad[f] += g[f] * gm[f] * inv_std[f];
        }
      }));
    }
    return out;
  }

  if (rows.size() < 2)
    throw std::invalid_argument("batch norm: train mode needs a batch of at least 2");

  std::vector<std::vector<double>> batch;
  batch.reserve(rows.size());
  for (Ref r : rows) batch.push_back(nodes_[r].val);
  BatchStats s = batch_stats(batch);
  if (update_running) fold_running(layer, s);

  std::vector<double> inv_std(d);
  for (std::size_t f = 0; f < d; ++f) inv_std[f] = 1.0 / std::sqrt(s.var[f] + layer.epsilon);

  std::vector<std::vector<double>> xhat(rows.size(), std::vector<double>(d));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t f = 0; f < d; ++f)
      xhat[i][f] = (batch[i][f] - s.mean[f]) * inv_std[f];

  // All outputs first (no backward), then the joint backward on the last
  // node: by the time the reverse sweep reaches it, every output gradient in
  // the batch is final.
  std::vector<Ref> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<double> y(d);
    for (std::size_t f = 0; f < d; ++f)
      y[f] = layer.gamma.value[f] * xhat[i][f] + layer.beta.value[f];
    out.push_back(push(std::move(y), nullptr));
  }

  const std::vector<Ref> outs = out;
  nodes_.back().back = [rows, outs, gamma, beta, xhat, inv_std, d](Tape& t) {
    const std::size_t n = rows.size();
    const auto& gm = t.nodes_[gamma].val;
    // d(xhat) per row, plus the two batch means the coupling introduces.
    std::vector<double> mean_dxh(d, 0.0);
    std::vector<double> mean_dxh_xh(d, 0.0);
    std::vector<std::vector<double>> dxh(n, std::vector<double>(d));
    for (std::size_t i = 0; i < n; ++i) {
      const auto& g = t.nodes_[outs[i]].grad;
      for (std::size_t f = 0; f < d; ++f) {
        t.nodes_[gamma].grad[f] += g[f] * xhat[i][f];
        t.nodes_[beta].grad[f] += g[f];
        dxh[i][f] = g[f] * gm[f];
        mean_dxh[f] += dxh[i][f];
        mean_dxh_xh[f] += dxh[i][f] * xhat[i][f];
      }
    }
    for (std::size_t f = 0; f < d; ++f) {
      mean_dxh[f] /= static_cast<double>(n);
      mean_dxh_xh[f] /= static_cast<double>(n);
    }
    for (std::size_t i = 0; i < n; ++i) {
      auto& gx = t.nodes_[rows[i]].grad;
      for (std::size_t f = 0; f < d; ++f)
        gx[f] += inv_std[f] * (dxh[i][f] - mean_dxh[f] - xhat[i][f] * mean_dxh_xh[f]);
    }
  };
  return out;
}

void Tape::backward(Ref loss) {
  if (nodes_[loss].val.size() != 1)
    throw std::invalid_argument("backward: loss must be a scalar node");
  nodes_[loss].grad[0] = 1.0;
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    if (nodes_[i].back) nodes_[i].back(*this);
    if (nodes_[i].bound) {
      auto& dst = nodes_[i].bound->grad;
      const auto& src = nodes_[i].grad;
      for (std::size_t k = 0; k < src.size(); ++k) dst[k] += src[k];
    }
  }
}

void AdamState::initialize(const std::vector<ParamTensor*>& params) {
  step = 0;
  first_moment.clear();
  second_moment.clear();
  for (const ParamTensor* p : params) {
    first_moment.emplace_back(p->count(), 0.0);
    second_moment.emplace_back(p->count(), 0.0);
  }
}

void adam_step(const std::vector<ParamTensor*>& params, AdamState& state, double lr) {
  if (state.first_moment.size() != params.size())
    throw std::invalid_argument("adam_step: state not initialized for this parameter list");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    ParamTensor& p = *params[i];
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    if (m.size() != p.count()) throw std::invalid_argument("adam_step: parameter size changed");
    for (std::size_t k = 0; k < p.count(); ++k) {
      const double g = p.grad[k];
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g;
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g * g;
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      p.value[k] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
}

double cyclical_lr(std::size_t step, const LrSchedule& schedule) {
  if (schedule.cycle_steps < 2)
    throw std::invalid_argument("cyclical_lr: cycle must span at least 2 steps");
  const double cycle = static_cast<double>(schedule.cycle_steps);
  const double half = cycle / 2.0;
  const double pos = static_cast<double>(step % schedule.cycle_steps);
  const double frac = pos <= half ? pos / half : (cycle - pos) / half;
  return schedule.lr_min + (schedule.lr_max - schedule.lr_min) * frac;
}

double check_gradients(const std::function<double(bool)>& forward,
                       const std::vector<ParamTensor*>& params, double eps) {
  for (ParamTensor* p : params) p->zero_grad();
  forward(true);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const ParamTensor* p : params) analytic.push_back(p->grad);

  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    ParamTensor& p = *params[i];
    for (std::size_t k = 0; k < p.count(); ++k) {
      const double keep = p.value[k];
      p.value[k] = keep + eps;
      const double hi = forward(false);
      p.value[k] = keep - eps;
      const double lo = forward(false);
      p.value[k] = keep;
      const double fd = (hi - lo) / (2.0 * eps);
      const double ga = analytic[i][k];
      const double rel = std::abs(ga - fd) / std::max(1e-8, std::abs(ga) + std::abs(fd));
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace ooc::nn
