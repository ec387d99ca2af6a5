#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ooc/nn.hpp"
#include "ooc/rng.hpp"

using namespace ooc;
using nn::ParamTensor;
using nn::RunMode;
using nn::Tape;

namespace {

ParamTensor tensor(const std::string& name, std::vector<std::size_t> shape,
                   std::vector<double> values) {
  ParamTensor p = ParamTensor::zeros(name, std::move(shape));
  REQUIRE_EQ(p.count(), values.size());
  p.value = std::move(values);
  return p;
}

void check_close(const std::vector<double>& got, const std::vector<double>& want,
                 double tol = 1e-12) {
  REQUIRE_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) < tol);
}

}  // namespace

TEST_CASE("linear kernel multiplies row-major weights") {
  const auto w = tensor("w", {2, 3}, {1, 2, 3, 4, 5, 6});
  const auto b = tensor("b", {2}, {0.5, -1});
  check_close(nn::linear_forward(w, b, {1, 1, 1}), {6.5, 14.0});
  check_close(nn::linear_forward(w, b, {1, 0, -1}), {-1.5, -3.0});
  CHECK_THROWS_AS(nn::linear_forward(w, b, {1, 1}), std::invalid_argument);
}

TEST_CASE("relu, softmax, and cross entropy kernels match hand values") {
  check_close(nn::relu({-1.0, 0.0, 2.0}), {0.0, 0.0, 2.0});

  const auto p = nn::softmax({1.0, 2.0, 3.0});
  check_close(p, {0.09003057317038046, 0.24472847105479767, 0.6652409557748219}, 1e-12);
  CHECK_EQ(p[0] + p[1] + p[2], doctest::Approx(1.0).epsilon(1e-12));
  // Shift invariance and overflow safety.
  check_close(nn::softmax({1001.0, 1002.0, 1003.0}), p, 1e-12);
  CHECK_THROWS_AS(nn::softmax({}), std::invalid_argument);

  CHECK_EQ(nn::cross_entropy({0.0, 0.0}, 0), doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(nn::cross_entropy({10.0, -10.0}, 0) < 1e-8);               // confident and right
  CHECK(std::abs(nn::cross_entropy({10.0, -10.0}, 1) - 20.0) < 1e-8);  // confident and wrong
  CHECK_THROWS_AS(nn::cross_entropy({0.0, 0.0}, 2), std::invalid_argument);
}

TEST_CASE("batch norm standardizes with batch statistics in train mode") {
  nn::BatchNormLayer layer("bn", 1);
  const auto out = nn::batchnorm_forward({{0.0}, {2.0}}, layer, RunMode::kTrain,
                                         /*update_running=*/false);
  // mean 1, biased variance 1.
  const double xh = 1.0 / std::sqrt(1.0 + layer.epsilon);
  REQUIRE_EQ(out.size(), 2);
  CHECK_EQ(out[0][0], doctest::Approx(-xh).epsilon(1e-12));
  CHECK_EQ(out[1][0], doctest::Approx(xh).epsilon(1e-12));
  // Scale and shift apply after standardization.
  layer.gamma.value[0] = 2.0;
  layer.beta.value[0] = 3.0;
  const auto scaled = nn::batchnorm_forward({{0.0}, {2.0}}, layer, RunMode::kTrain, false);
  CHECK_EQ(scaled[0][0], doctest::Approx(3.0 - 2.0 * xh).epsilon(1e-12));
  CHECK_EQ(scaled[1][0], doctest::Approx(3.0 + 2.0 * xh).epsilon(1e-12));

  CHECK_THROWS_AS(nn::batchnorm_forward({{0.0}}, layer, RunMode::kTrain), std::invalid_argument);
  CHECK_THROWS_AS(nn::batchnorm_forward({}, layer, RunMode::kTrain), std::invalid_argument);
}

TEST_CASE("batch norm folds running statistics and uses them for inference") {
  nn::BatchNormLayer layer("bn", 1);
  CHECK_EQ(layer.running_mean[0], 0.0);
  CHECK_EQ(layer.running_var[0], 1.0);

  nn::batchnorm_forward({{0.0}, {2.0}}, layer, RunMode::kTrain, /*update_running=*/true);
  CHECK_EQ(layer.running_mean[0], doctest::Approx(0.1).epsilon(1e-12));  // 0.9*0 + 0.1*1
  CHECK_EQ(layer.running_var[0], doctest::Approx(1.0).epsilon(1e-12));   // 0.9*1 + 0.1*1

  // Inference standardizes each row independently with the running values.
  const auto out = nn::batchnorm_forward({{0.1}}, layer, RunMode::kInfer);
  CHECK_EQ(out[0][0], doctest::Approx(0.0).epsilon(1e-9));

  // update_running=false leaves the estimates alone.
  nn::batchnorm_forward({{5.0}, {7.0}}, layer, RunMode::kTrain, /*update_running=*/false);
  CHECK_EQ(layer.running_mean[0], doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("tape gradients agree with finite differences across all operations") {
  auto u = tensor("u", {3}, {0.5, -0.3, 0.8});
  auto v = tensor("v", {3}, {1.1, 0.9, -0.6});
  auto w = tensor("w", {2, 3}, {0.2, -0.4, 0.7, -0.1, 0.3, 0.5});
  auto b = tensor("b", {2}, {0.05, -0.2});
  std::vector<ParamTensor*> params = {&u, &v, &w, &b};

  // Touches every tape operation; inputs keep relu/max away from their kinks.
  const auto forward = [&](bool with_grad) {
    Tape t;
    const Tape::Ref pu = t.param(u);
    const Tape::Ref pv = t.param(v);
    const Tape::Ref pw = t.param(w);
    const Tape::Ref pb = t.param(b);
    const Tape::Ref x = t.input({0.3, -0.7, 1.2});
    const Tape::Ref h = t.relu(t.add(pu, x));
    const Tape::Ref m = t.max(t.mul(h, pv), pu);
    const Tape::Ref s = t.scale(t.sub(m, pv), 1.7);
    const Tape::Ref a = t.affine(pw, pb, s);
    const Tape::Ref sm = t.softmax(a);
    const Tape::Ref d1 = t.dot(sm, a);
    const Tape::Ref ws = t.weighted_sum(sm, {s, h});
    const Tape::Ref cat = t.concat({ws, a});
    const Tape::Ref ce = t.cross_entropy(cat, 2);
    const Tape::Ref stacked = t.stack({d1, ce});
    const Tape::Ref ce2 = t.cross_entropy(stacked, 0);
    const Tape::Ref loss = t.mean({ce2, d1, ce});
    if (with_grad) t.backward(loss);
    return t.scalar(loss);
  };

  CHECK(nn::check_gradients(forward, params) < 1e-6);
}

TEST_CASE("train-mode batch norm backward couples the whole batch") {
  auto r0 = tensor("r0", {2}, {0.4, -1.2});
  auto r1 = tensor("r1", {2}, {-0.9, 0.3});
  auto r2 = tensor("r2", {2}, {1.5, 0.7});
  nn::BatchNormLayer layer("bn", 2);
  layer.gamma.value = {1.3, 0.8};
  layer.beta.value = {0.2, -0.1};
  std::vector<ParamTensor*> params = {&r0, &r1, &r2, &layer.gamma, &layer.beta};

  const auto forward = [&](bool with_grad) {
    Tape t;
    const std::vector<Tape::Ref> rows = {t.param(r0), t.param(r1), t.param(r2)};
    const auto normed = t.batch_norm(rows, layer, RunMode::kTrain, /*update_running=*/false);
    // Downstream consumers of every output, plus per-row nonlinearity.
    std::vector<Tape::Ref> losses;
    for (const Tape::Ref y : normed) losses.push_back(t.dot(t.relu(y), y));
    const Tape::Ref loss = t.mean(losses);
    if (with_grad) t.backward(loss);
    return t.scalar(loss);
  };

  CHECK(nn::check_gradients(forward, params) < 1e-6);
}

TEST_CASE("infer-mode batch norm backward differentiates scale and shift") {
  auto row = tensor("row", {2}, {0.7, -0.4});
  nn::BatchNormLayer layer("bn", 2);
  layer.running_mean = {0.2, -0.1};
  layer.running_var = {1.5, 0.6};
  std::vector<ParamTensor*> params = {&row, &layer.gamma, &layer.beta};

  const auto forward = [&](bool with_grad) {
    Tape t;
    const auto normed = t.batch_norm({t.param(row)}, layer, RunMode::kInfer);
    const Tape::Ref loss = t.dot(normed[0], normed[0]);
    if (with_grad) t.backward(loss);
    return t.scalar(loss);
  };

  CHECK(nn::check_gradients(forward, params) < 1e-6);
}

TEST_CASE("gradient checker flags a wrong gradient") {
  auto p = tensor("p", {1}, {0.9});
  const auto forward = [&](bool with_grad) {
    const double x = p.value[0];
    if (with_grad) p.grad[0] += 3.0 * x;  // claims d(x^2)/dx = 3x
    return x * x;
  };
  CHECK(nn::check_gradients(forward, {&p}) > 0.1);
}

TEST_CASE("adam's first step moves by the learning rate in the sign direction") {
  auto p = tensor("p", {2}, {1.0, -2.0});
  p.grad = {0.5, -0.25};
  nn::AdamState state;
  state.initialize({&p});
  nn::adam_step({&p}, state, 0.1);
  // Bias correction makes the first update -lr * g / (|g| + eps).
  CHECK_EQ(p.value[0], doctest::Approx(0.9).epsilon(1e-6));
  CHECK_EQ(p.value[1], doctest::Approx(-1.9).epsilon(1e-6));
  CHECK_EQ(state.step, 1);

  nn::AdamState empty;
  CHECK_THROWS_AS(nn::adam_step({&p}, empty, 0.1), std::invalid_argument);
}

TEST_CASE("adam converges on a quadratic bowl") {
  auto p = tensor("p", {2}, {4.0, -3.0});
  nn::AdamState state;
  state.initialize({&p});
  // Full-rate approach, then a small-rate phase to damp the limit cycle.
  for (int i = 0; i < 3000; ++i) {
    p.zero_grad();
    p.grad[0] = 2.0 * (p.value[0] - 1.0);
    p.grad[1] = 2.0 * (p.value[1] + 2.0);
    nn::adam_step({&p}, state, i < 2000 ? 0.01 : 0.0002);
  }
  CHECK(std::abs(p.value[0] - 1.0) < 2e-3);
  CHECK(std::abs(p.value[1] + 2.0) < 2e-3);
}

TEST_CASE("cyclical learning rate sweeps a triangle wave") {
  nn::LrSchedule schedule;
  schedule.lr_min = 1.0;
  schedule.lr_max = 3.0;
  schedule.cycle_steps = 4;
  CHECK_EQ(nn::cyclical_lr(0, schedule), doctest::Approx(1.0));
  CHECK_EQ(nn::cyclical_lr(1, schedule), doctest::Approx(2.0));
  CHECK_EQ(nn::cyclical_lr(2, schedule), doctest::Approx(3.0));
  CHECK_EQ(nn::cyclical_lr(3, schedule), doctest::Approx(2.0));
  CHECK_EQ(nn::cyclical_lr(4, schedule), doctest::Approx(1.0));  // periodic

  for (std::size_t s = 0; s < 50; ++s) {
    const double lr = nn::cyclical_lr(s, schedule);
    CHECK(lr >= schedule.lr_min);
    CHECK(lr <= schedule.lr_max);
  }

  nn::LrSchedule degenerate;
  degenerate.cycle_steps = 1;
  CHECK_THROWS_AS(nn::cyclical_lr(0, degenerate), std::invalid_argument);
}

TEST_CASE("glorot init stays within the fan bound and follows the seed") {
  ParamTensor a = ParamTensor::zeros("a", {8, 4});
  ParamTensor b = ParamTensor::zeros("b", {8, 4});
  Rng rng_a(42), rng_b(42), rng_c(43);
  nn::glorot_init(a, 4, 8, rng_a);
  nn::glorot_init(b, 4, 8, rng_b);
  const double limit = std::sqrt(6.0 / 12.0);
  for (double x : a.value) CHECK(std::abs(x) <= limit);
  CHECK(a.value == b.value);
  nn::glorot_init(b, 4, 8, rng_c);
  CHECK(a.value != b.value);
}
