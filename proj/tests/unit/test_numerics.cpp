#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "../oracles.hpp"
#include "dggat/errors.hpp"
#include "dggat/numerics/adam.hpp"
#include "dggat/numerics/ops.hpp"

using namespace dggat;
using namespace dggat::numerics;

namespace {

Tensor random_tensor(Rng& rng, Shape shape, bool grad = true) {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  std::vector<double> v(n);
  for (double& x : v) x = uniform(rng, -1.0, 1.0);
  return Tensor(std::move(shape), std::move(v), grad);
}

// Projects an op output onto fixed random weights so every output element
// contributes to the scalar being differentiated.
Tensor project(const Tensor& y, std::uint64_t seed = 99) {
  Rng rng(seed);
  const Tensor r = random_tensor(rng, y.shape(), false);
  return sum(mul(y, r));
}

// Compares tape gradients of `loss()` against central differences for each input.
void check_gradients(const std::function<Tensor()>& loss, std::vector<Tensor> inputs, double tol = 1e-6) {
  for (auto& t : inputs) t.zero_grad();
  {
    Tape tape;
    TapeScope scope(tape);
    tape.backward(loss());
  }
  for (auto& t : inputs) {
    const std::vector<double> analytic(t.grad().begin(), t.grad().end());
    const auto numeric = oracle::finite_difference([&] { return loss().item(); }, t);
    CHECK(oracle::relative_error(analytic, numeric) < tol);
  }
}

}  // namespace

TEST_CASE("tensor shapes and handles") {
  const Tensor a({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(a.rows() == 2);
  CHECK(a.cols() == 3);
  CHECK(a.at(1, 2) == 6);
  CHECK_THROWS_AS(Tensor({2, 2}, {1, 2, 3}), DimensionError);

  const Tensor empty = Tensor::zeros({0, 5});
  CHECK(empty.rows() == 0);
  CHECK(empty.cols() == 5);

  Tensor b = a;
  CHECK(b.same_storage(a));
  Tensor c = a.clone();
  CHECK_FALSE(c.same_storage(a));
  c.mutable_data()[0] = 42;
  CHECK(a.data()[0] == 1);
}

TEST_CASE("no tape means no recording") {
  Tensor x({2}, {1.0, 2.0}, true);
  const Tensor y = sum(mul(x, x));
  CHECK(y.item() == doctest::Approx(5.0));
  CHECK(Tape::active() == nullptr);

  Tape tape;
  {
    TapeScope scope(tape);
    {
      NoGradScope off;
      (void)sum(x);
      CHECK(tape.size() == 0);
    }
    (void)sum(x);
    CHECK(tape.size() == 1);
  }
}

TEST_CASE("backward rejects non-scalars and foreign tensors") {
  Tensor x({2}, {1.0, 2.0}, true);
  Tape tape;
  TapeScope scope(tape);
  const Tensor y = scale(x, 2.0);
  CHECK_THROWS_AS(tape.backward(y), ContractViolation);
  Tape other;
  CHECK_THROWS_AS(other.backward(sum(y)), ContractViolation);
}

TEST_CASE("gradients accumulate across backward calls") {
  Tensor x({1}, {3.0}, true);
  for (int k = 0; k < 2; ++k) {
    Tape tape;
    TapeScope scope(tape);
    tape.backward(sum(mul(x, x)));
  }
  CHECK(x.grad()[0] == doctest::Approx(12.0));
  x.zero_grad();
  CHECK(x.grad()[0] == 0.0);
}

TEST_CASE("a tensor used twice receives both gradient paths") {
  Tensor x({1}, {2.0}, true);
  Tape tape;
  TapeScope scope(tape);
  // y = x*x + 3x  ->  dy/dx = 2x + 3 = 7
  tape.backward(sum(add(mul(x, x), scale(x, 3.0))));
  CHECK(x.grad()[0] == doctest::Approx(7.0));
}

TEST_CASE("finite-difference gradients of every op") {
  Rng rng(1);
  Tensor a = random_tensor(rng, {3, 4});
  Tensor b = random_tensor(rng, {4, 2});
  Tensor c = random_tensor(rng, {3, 4});
  Tensor bias = random_tensor(rng, {4});

  SUBCASE("matmul") { check_gradients([&] { return project(matmul(a, b)); }, {a, b}); }
  SUBCASE("add") { check_gradients([&] { return project(add(a, c)); }, {a, c}); }
  SUBCASE("add_row_bias") { check_gradients([&] { return project(add_row_bias(a, bias)); }, {a, bias}); }
  SUBCASE("mul") { check_gradients([&] { return project(mul(a, c)); }, {a, c}); }
  SUBCASE("scale") { check_gradients([&] { return project(scale(a, -2.5)); }, {a}); }
  SUBCASE("sum") { check_gradients([&] { return sum(a); }, {a}); }
  SUBCASE("leaky_relu") { check_gradients([&] { return project(leaky_relu(a, 0.2)); }, {a}); }
  SUBCASE("elu") { check_gradients([&] { return project(elu(a)); }, {a}); }
  SUBCASE("gather_rows") {
    const std::vector<std::size_t> idx{2, 0, 2, 1};
    check_gradients([&] { return project(gather_rows(a, idx)); }, {a});
  }
  SUBCASE("segment_softmax") {
    Tensor s = random_tensor(rng, {6, 1});
    const std::vector<std::size_t> seg{0, 1, 0, 2, 1, 0};
    check_gradients([&] { return project(segment_softmax(s, seg)); }, {s});
  }
  SUBCASE("segment_weighted_sum") {
    Tensor w = random_tensor(rng, {5, 1});
    Tensor v = random_tensor(rng, {5, 3});
    const std::vector<std::size_t> seg{1, 0, 1, 3, 1};
    check_gradients([&] { return project(segment_weighted_sum(w, v, seg, 4)); }, {w, v});
  }
  SUBCASE("concat_features") {
    Tensor d = random_tensor(rng, {3, 2});
    check_gradients([&] {
      const std::vector<Tensor> parts{a, d, c};
      return project(concat_features(parts));
    }, {a, d, c});
  }
  SUBCASE("mean_rows") {
    const std::vector<std::size_t> groups{1, 0, 1};
    check_gradients([&] { return project(mean_rows(a, groups, 2)); }, {a});
  }
  SUBCASE("mse_loss") { check_gradients([&] { return mse_loss(a, c); }, {a, c}); }
}

TEST_CASE("matmul and elementwise values") {
  const Tensor a = Tensor::matrix({{1, 2}, {3, 4}});
  const Tensor b = Tensor::matrix({{5, 6}, {7, 8}});
  const Tensor p = matmul(a, b);
  CHECK(std::vector<double>(p.data().begin(), p.data().end()) == std::vector<double>{19, 22, 43, 50});
  CHECK_THROWS_AS(matmul(a, Tensor::zeros({3, 1})), DimensionError);
  CHECK_THROWS_AS(add(a, Tensor::zeros({2, 3})), DimensionError);

  const Tensor lr = leaky_relu(Tensor({2}, {-1.0, 2.0}), 0.1);
  CHECK(lr.data()[0] == doctest::Approx(-0.1));
  CHECK(lr.data()[1] == 2.0);
  CHECK_THROWS_AS(leaky_relu(a, 1.5), ContractViolation);

  const Tensor e = elu(Tensor({2}, {-1.0, 0.5}));
  CHECK(e.data()[0] == doctest::Approx(std::exp(-1.0) - 1.0));
  CHECK(e.data()[1] == 0.5);
}

TEST_CASE("segment softmax closed forms") {
  const std::vector<std::size_t> one{0, 0};
  const Tensor p = segment_softmax(Tensor({2, 1}, {0.0, std::log(3.0)}), one);
  CHECK(p.data()[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(p.data()[1] == doctest::Approx(0.75).epsilon(1e-12));

  // Large scores must not overflow.
  const Tensor big = segment_softmax(Tensor({2, 1}, {1000.0, 1000.0}), one);
  CHECK(big.data()[0] == doctest::Approx(0.5));

  // Each group sums to one, singletons get weight one.
  Rng rng(3);
  const std::vector<std::size_t> seg{2, 0, 2, 1, 2, 0};
  const Tensor s = segment_softmax(random_tensor(rng, {6, 1}, false), seg);
  double total[3] = {0, 0, 0};
  for (std::size_t e = 0; e < seg.size(); ++e) total[seg[e]] += s.data()[e];
  for (double t : total) CHECK(t == doctest::Approx(1.0));
  CHECK(s.data()[3] == doctest::Approx(1.0));

  CHECK(segment_softmax(Tensor::zeros({0, 1}), std::vector<std::size_t>{}).numel() == 0);
}

TEST_CASE("segment weighted sum matches a naive loop") {
  Rng rng(5);
  const std::size_t E = 9, F = 3, N = 4;
  const Tensor w = random_tensor(rng, {E, 1}, false);
  const Tensor v = random_tensor(rng, {E, F}, false);
  std::vector<std::size_t> seg(E);
  for (auto& s : seg) s = uniform_index(rng, N);
  const Tensor out = segment_weighted_sum(w, v, seg, N);

  std::vector<double> expect(N * F, 0.0);
  for (std::size_t e = 0; e < E; ++e)
    for (std::size_t f = 0; f < F; ++f) expect[seg[e] * F + f] += w.data()[e] * v.data()[e * F + f];
  for (std::size_t k = 0; k < expect.size(); ++k) CHECK(out.data()[k] == doctest::Approx(expect[k]));

  seg[0] = N;
  CHECK_THROWS_AS(segment_weighted_sum(w, v, seg, N), IndexError);
}

TEST_CASE("gather and mean contracts") {
  const Tensor x = Tensor::matrix({{1, 2}, {3, 4}});
  CHECK_THROWS_AS(gather_rows(x, std::vector<std::size_t>{0, 2}), IndexError);
  const Tensor m = mean_rows(x, std::vector<std::size_t>{0, 0}, 1);
  CHECK(m.at(0, 0) == 2.0);
  CHECK(m.at(0, 1) == 3.0);
  CHECK_THROWS_AS(mean_rows(x, std::vector<std::size_t>{0, 0}, 2), ContractViolation);
}

TEST_CASE("adam matches a scalar reference over three steps") {
  AdamOptions opts{0.1, 0.9, 0.999, 1e-8};
  Tensor w({1}, {0.5}, true);
  std::vector<Tensor> params{w};
  auto state = make_adam_state(params, opts);
  oracle::ScalarAdam ref{opts.lr, opts.beta1, opts.beta2, opts.eps};
  double expect = 0.5;
  for (double g : {0.3, -1.2, 0.05}) {
    w.zero_grad();
    w.mutable_grad()[0] = g;
    adam_step(params, state);
    expect = ref.step(expect, g);
    CHECK(std::abs(w.data()[0] - expect) < 1e-12);
  }
  CHECK(state.step == 3);
}

TEST_CASE("adam first step moves every coordinate by about lr") {
  Tensor w({3}, {0.0, 0.0, 0.0}, true);
  std::vector<Tensor> params{w};
  auto state = make_adam_state(params, {0.01, 0.9, 0.999, 1e-8});
  w.mutable_grad()[0] = 5.0;
  w.mutable_grad()[1] = -0.001;
  adam_step(params, state);
  CHECK(w.data()[0] == doctest::Approx(-0.01).epsilon(1e-6));
  CHECK(w.data()[1] == doctest::Approx(0.01).epsilon(1e-4));
  CHECK(w.data()[2] == 0.0);

  Tensor u({1}, {0.0}, true);
  std::vector<Tensor> fresh{u};
  auto s2 = make_adam_state(fresh, {});
  adam_step(fresh, s2);  // no gradient allocated yet
  CHECK(u.data()[0] == 0.0);

  std::vector<Tensor> wrong{Tensor({2}, {0, 0}, true)};
  CHECK_THROWS_AS(adam_step(wrong, s2), ContractViolation);
}
