#include <doctest.h>

#include <cmath>

#include "oransim/nn.hpp"
#include "oransim/checkpoint.hpp"
#include "test_util.hpp"

using namespace oransim;
using namespace oransim::nn;

namespace {

Mat random_mat(int r, int c, RngStream& rng, double scale = 1.0) {
  Mat m(r, c);
  for (double& v : m.a) v = rng.uniform(-scale, scale);
  return m;
}

}  // namespace

TEST_CASE("dense forward: zero net maps everything to zero") {
  DenseNet net({3, 4, 2}, {Act::kTanh, Act::kLinear}, 1);
  std::fill(net.params().begin(), net.params().end(), 0.0);
  const Vec y = net.forward_one(std::vector<double>{1.0, -2.0, 3.0});
  for (double v : y) CHECK(v == 0.0);
}

TEST_CASE("dense forward: identity linear layer passes input through") {
  DenseNet net({3, 3}, {Act::kLinear}, 1);
  std::fill(net.params().begin(), net.params().end(), 0.0);
  for (int i = 0; i < 3; ++i) net.params()[net.weight_offset(0) + i * 3 + i] = 1.0;
  const std::vector<double> x{0.5, -1.5, 2.0};
  const Vec y = net.forward_one(x);
  for (int i = 0; i < 3; ++i) CHECK(y[i] == doctest::Approx(x[i]));
}

TEST_CASE("dense forward is pure") {
  DenseNet net({4, 8, 3}, {Act::kTanh, Act::kLinear}, 7);
  RngStream rng(3);
  const Mat x = random_mat(5, 4, rng);
  const Mat y1 = net.forward(x);
  const Mat y2 = net.forward(x);
  CHECK(y1.a == y2.a);
}

TEST_CASE("dense backward matches finite differences") {
  RngStream rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    DenseNet net({3, 5, 4, 2}, {Act::kTanh, Act::kTanh, Act::kLinear}, 100 + trial);
    const Mat x = random_mat(4, 3, rng);
    const Mat dy = random_mat(4, 2, rng);

    DenseNet::Cache cache;
    net.forward(x, &cache);
    Vec grad;
    net.backward(cache, dy, &grad);

    auto loss = [&]() {
      const Mat y = net.forward(x);
      double s = 0.0;
      for (size_t i = 0; i < y.a.size(); ++i) s += y.a[i] * dy.a[i];
      return s;
    };
    const auto fd = testutil::finite_diff(net.params(), loss);
    CHECK(testutil::max_rel_err(grad, fd) < 1e-4);
  }
}

TEST_CASE("dense backward: zero upstream gives zero grads, and is linear in dy") {
  DenseNet net({3, 6, 2}, {Act::kTanh, Act::kLinear}, 5);
  RngStream rng(9);
  const Mat x = random_mat(3, 3, rng);
  DenseNet::Cache cache;
  net.forward(x, &cache);

  Mat dy0(3, 2);
  Vec g0;
  net.backward(cache, dy0, &g0);
  for (double g : g0) CHECK(g == 0.0);

  const Mat dy = random_mat(3, 2, rng);
  Mat dy2 = dy;
  for (double& v : dy2.a) v *= 2.0;
  Vec g1, g2;
  net.backward(cache, dy, &g1);
  net.backward(cache, dy2, &g2);
  for (size_t i = 0; i < g1.size(); ++i) CHECK(g2[i] == doctest::Approx(2.0 * g1[i]));
}

TEST_CASE("dense input gradient matches finite differences") {
  DenseNet net({4, 6, 1}, {Act::kTanh, Act::kLinear}, 23);
  RngStream rng(31);
  Mat x = random_mat(2, 4, rng);
  const Mat dy = random_mat(2, 1, rng);
  DenseNet::Cache cache;
  net.forward(x, &cache);
  Mat dx;
  net.backward(cache, dy, nullptr, &dx);
  auto loss = [&]() {
    const Mat y = net.forward(x);
    double s = 0.0;
    for (size_t i = 0; i < y.a.size(); ++i) s += y.a[i] * dy.a[i];
    return s;
  };
  const auto fd = testutil::finite_diff(x.a, loss);
  CHECK(testutil::max_rel_err(dx.a, fd) < 1e-4);
}

TEST_CASE("lstm: zero weights give the projection bias at every step") {
  LstmStack stack(3, 4, 2, 2, 1);
  std::fill(stack.params().begin(), stack.params().end(), 0.0);
  stack.params()[stack.proj_b_off()] = 0.7;
  stack.params()[stack.proj_b_off() + 1] = -0.3;
  std::vector<Mat> xs(5, Mat(1, 3));
  for (auto& x : xs)
    for (double& v : x.a) v = 1.0;
  const auto ys = stack.forward(xs, stack.zero_state(1));
  for (const auto& y : ys) {
    CHECK(y.at(0, 0) == doctest::Approx(0.7));
    CHECK(y.at(0, 1) == doctest::Approx(-0.3));
  }
}

TEST_CASE("lstm: saturated-off forget gate makes the cell ignore its past") {
  LstmStack stack(2, 3, 1, 3, 11);
  RngStream rng(2);
  const std::vector<Mat> xs{random_mat(1, 2, rng)};

  auto cell_after_step = [&](double c0) {
    auto init = stack.zero_state(1);
    for (double& v : init.c[0].a) v = c0;
    LstmStack::Cache cache;
    stack.forward(xs, init, &cache);
    return cache.c[0][0].a;
  };

  // untouched stack: the previous cell state leaks through
  const auto open_a = cell_after_step(0.0);
  const auto open_b = cell_after_step(5.0);
  double open_diff = 0.0;
  for (size_t i = 0; i < open_a.size(); ++i) open_diff += std::abs(open_a[i] - open_b[i]);
  CHECK(open_diff > 1e-3);

  // forget gate driven to ~0: history is erased
  for (int j = 0; j < 3; ++j) stack.params()[stack.b_off(0) + j] = -60.0;
  const auto shut_a = cell_after_step(0.0);
  const auto shut_b = cell_after_step(5.0);
  for (size_t i = 0; i < shut_a.size(); ++i)
    CHECK(shut_a[i] == doctest::Approx(shut_b[i]).epsilon(1e-12));
}

TEST_CASE("lstm accepts the default 18-step look-back window") {
  LstmStack stack(6, 10, 2, 6, 3);
  std::vector<Mat> xs(18, Mat(2, 6));
  RngStream rng(4);
  for (auto& x : xs)
    for (double& v : x.a) v = rng.uniform(0.0, 1.0);
  const auto ys = stack.forward(xs, stack.zero_state(2));
  CHECK(ys.size() == 18);
  CHECK(ys.back().rows == 2);
  CHECK(ys.back().cols == 6);
}

TEST_CASE("lstm BPTT matches finite differences") {
  RngStream rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    LstmStack stack(3, 4, 2, 2, 50 + trial);
    const int T = 3, B = 2;
    std::vector<Mat> xs;
    std::vector<Mat> dys;
    for (int t = 0; t < T; ++t) {
      xs.push_back(random_mat(B, 3, rng));
      dys.push_back(random_mat(B, 2, rng));
    }
    LstmStack::Cache cache;
    stack.forward(xs, stack.zero_state(B), &cache);
    Vec grad;
    stack.backward(cache, dys, &grad);

    auto loss = [&]() {
      const auto ys = stack.forward(xs, stack.zero_state(B));
      double s = 0.0;
      for (int t = 0; t < T; ++t)
        for (size_t i = 0; i < ys[t].a.size(); ++i) s += ys[t].a[i] * dys[t].a[i];
      return s;
    };
    const auto fd = testutil::finite_diff(stack.params(), loss);
    CHECK(testutil::max_rel_err(grad, fd) < 1e-4);
  }
}

TEST_CASE("lstm BPTT: zero upstream gradient zeroes everything") {
  LstmStack stack(3, 4, 2, 2, 8);
  RngStream rng(6);
  std::vector<Mat> xs{random_mat(2, 3, rng), random_mat(2, 3, rng)};
  LstmStack::Cache cache;
  stack.forward(xs, stack.zero_state(2), &cache);
  std::vector<Mat> dys(2, Mat());
  Vec grad;
  stack.backward(cache, dys, &grad);
  for (double g : grad) CHECK(g == 0.0);
}

TEST_CASE("lstm BPTT respects causality: no input gradient after the upstream step") {
  LstmStack stack(3, 5, 2, 2, 12);
  RngStream rng(61);
  const int T = 4;
  std::vector<Mat> xs;
  for (int t = 0; t < T; ++t) xs.push_back(random_mat(1, 3, rng));
  LstmStack::Cache cache;
  stack.forward(xs, stack.zero_state(1), &cache);
  std::vector<Mat> dys(T, Mat());
  dys[1] = random_mat(1, 2, rng);  // upstream gradient only at step 1
  Vec grad;
  std::vector<Mat> dxs;
  stack.backward(cache, dys, &grad, &dxs);
  for (double v : dxs[0].a) CHECK(v != 0.0);  // earlier inputs do matter
  for (int t = 2; t < T; ++t)
    for (double v : dxs[t].a) CHECK(v == 0.0);  // later inputs cannot
}

TEST_CASE("adam: zero gradient leaves parameters untouched") {
  Vec p{1.0, -2.0, 3.0};
  const Vec g(3, 0.0);
  AdamState st;
  st.lr = 1e-2;
  for (int i = 0; i < 5; ++i) adam_step(p, g, st);
  CHECK(p == Vec{1.0, -2.0, 3.0});
}

TEST_CASE("adam: first step moves by ~lr in the gradient sign direction") {
  Vec p{0.0, 0.0};
  const Vec g{0.3, -0.001};
  AdamState st;
  st.lr = 1e-3;
  adam_step(p, g, st);
  CHECK(p[0] == doctest::Approx(-1e-3).epsilon(1e-4));
  CHECK(p[1] == doctest::Approx(1e-3).epsilon(1e-2));
}

TEST_CASE("adam trajectories are deterministic") {
  auto run = [] {
    Vec p{0.5, -0.5, 0.25};
    AdamState st;
    st.lr = 1e-2;
    RngStream rng(77);
    for (int i = 0; i < 50; ++i) {
      Vec g{rng.normal(), rng.normal(), rng.normal()};
      adam_step(p, g, st);
    }
    return p;
  };
  CHECK(run() == run());
}

TEST_CASE("checkpoints round-trip parameters exactly") {
  DenseNet net({3, 8, 2}, {Act::kTanh, Act::kLinear}, 99);
  std::vector<NamedTensor> ts{
      {"net.theta", {static_cast<int>(net.num_params())}, net.params()}};
  const std::string path = "/tmp/oransim_ckpt_test.json";
  save_checkpoint(path, ts);
  const auto loaded = load_checkpoint(path);
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].name == "net.theta");
  CHECK(loaded[0].data == net.params());
}

TEST_CASE("non-finite parameters are rejected") {
  Vec v{1.0, std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS(check_finite(v, "test"), NumericalError);
}
