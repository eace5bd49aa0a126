#include <doctest.h>

#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "signforge/config.hpp"
#include "signforge/error.hpp"
#include "signforge/parameters.hpp"
#include "signforge/tensor.hpp"

using namespace signforge;
using testutil::TempDir;

namespace {

Tensor randn(Shape shape, Rng& rng, bool grad = false) {
  std::vector<double> v(shape_size(shape));
  for (double& x : v) x = rng.normal();
  return Tensor::from(std::move(shape), std::move(v), grad);
}

}  // namespace

TEST_SUITE("compute") {
  TEST_CASE("small forward examples") {
    const Tensor s = softmax(Tensor::from({2}, {0, 0}));
    CHECK(s[0] == 0.5);
    CHECK(s[1] == 0.5);
    CHECK(matmul(Tensor::from({1, 2}, {1, 2}), Tensor::from({2, 1}, {3, 4})).item() == 11.0);

    Rng rng(1);
    const Tensor x = randn({2, 4, 5}, rng);
    const Tensor y = conv2d(x, Tensor::from({1, 2, 1, 1}, {3.0, 0.0}), Tensor(), 0);
    REQUIRE(y.shape() == Shape{1, 4, 5});
    for (std::size_t i = 0; i < 20; ++i) CHECK(y[i] == doctest::Approx(3.0 * x[i]));
  }

  TEST_CASE("conv2d matches a direct loop") {
    Rng rng(2);
    const Tensor x = randn({3, 6, 5}, rng), w = randn({4, 3, 3, 3}, rng), b = randn({4}, rng);
    const Tensor y = conv2d(x, w, b, 1);
    REQUIRE(y.shape() == Shape{4, 6, 5});
    for (std::size_t o = 0; o < 4; ++o) {
      for (int r = 0; r < 6; ++r) {
        for (int c = 0; c < 5; ++c) {
          double acc = b[o];
          for (std::size_t i = 0; i < 3; ++i) {
            for (int u = 0; u < 3; ++u) {
              for (int v = 0; v < 3; ++v) {
                const int rr = r + u - 1, cc = c + v - 1;
                if (rr < 0 || rr >= 6 || cc < 0 || cc >= 5) continue;
                acc += w[((o * 3 + i) * 3 + u) * 3 + v] * x[(i * 6 + rr) * 5 + cc];
              }
            }
          }
          CHECK(y[(o * 6 + r) * 5 + c] == doctest::Approx(acc).epsilon(1e-12));
        }
      }
    }
  }

  TEST_CASE("softmax rows sum to one; layer norm is centred") {
    Rng rng(3);
    const Tensor s = softmax(randn({4, 7}, rng));
    for (std::size_t r = 0; r < 4; ++r) {
      double total = 0.0;
      for (std::size_t c = 0; c < 7; ++c) total += s[r * 7 + c];
      CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
    }
    const Tensor n = layer_norm(randn({3, 8}, rng), Tensor::full({8}, 1.0), Tensor::zeros({8}));
    for (std::size_t r = 0; r < 3; ++r) {
      double m = 0.0;
      for (std::size_t c = 0; c < 8; ++c) m += n[r * 8 + c];
      CHECK(std::fabs(m) < 1e-12);
    }
  }

  TEST_CASE("elementary gradients") {
    Tensor w = Tensor::from({3}, {1, 2, 3}, true);
    sum(w).backward();
    CHECK(std::vector<double>(w.grad().begin(), w.grad().end()) == std::vector<double>{1, 1, 1});

    Tensor v = Tensor::from({2}, {1, 2}, true);
    sum(mul(v, v)).backward();
    CHECK(std::vector<double>(v.grad().begin(), v.grad().end()) == std::vector<double>{2, 4});
  }

  TEST_CASE("gradients accumulate until zeroed; no graph under NoGradGuard") {
    Tensor w = Tensor::from({2}, {1, 2}, true);
    sum(w).backward();
    sum(w).backward();
    CHECK(w.grad()[0] == 2.0);
    w.zero_grad();
    CHECK(w.grad()[0] == 0.0);
    NoGradGuard guard;
    CHECK_FALSE(grad_enabled());
    CHECK_FALSE(sum(w).requires_grad());
  }

  TEST_CASE("finite differences: quadratic") {
    ParameterStore store;
    Rng rng(4);
    store.add("w", randn({6}, rng, true));
    const Tensor a = randn({6}, rng);
    auto loss = [&] { return sum(square(sub(store.at("w"), a))); };
    Rng pick(5);
    CHECK(finite_diff_check(loss, store, 6, pick).max_relative_error < 1e-6);
  }

  TEST_CASE("finite differences: MLP and attention block") {
    ParameterStore store;
    Rng rng(6);
    store.add("l1.weight", randn({8, 5}, rng, true));
    store.add("l1.bias", randn({8}, rng, true));
    store.add("q.weight", randn({8, 8}, rng, true));
    store.add("k.weight", randn({8, 8}, rng, true));
    store.add("ln.weight", Tensor::full({8}, 1.0, true));
    store.add("ln.bias", Tensor::zeros({8}, true));
    store.add("conv.weight", randn({2, 1, 3, 3}, rng, true));
    const Tensor x = randn({4, 5}, rng);
    const Tensor img = randn({1, 5, 5}, rng);
    auto loss = [&] {
      const Tensor h = gelu(linear(x, store.at("l1.weight"), store.at("l1.bias")));
      const Tensor q = matmul_nt(h, store.at("q.weight"));
      const Tensor k = matmul_nt(h, store.at("k.weight"));
      const Tensor att = softmax(scale(matmul_nt(q, k), 1.0 / std::sqrt(8.0)));
      const Tensor out = layer_norm(add(h, matmul(att, h)), store.at("ln.weight"), store.at("ln.bias"));
      const Tensor c = sigmoid(conv2d(img, store.at("conv.weight"), Tensor(), 1));
      return add(mean(square(out)), add(mean(c), frobenius_norm(store.at("q.weight"))));
    };
    Rng pick(7);
    const FiniteDiffReport r = finite_diff_check(loss, store, 64, pick);
    CHECK(r.samples == 64);
    CHECK(r.max_relative_error < 1e-3);
  }

  TEST_CASE("finite differences: zero gradient uses absolute error") {
    ParameterStore store;
    store.add("used", Tensor::from({1}, {2.0}, true));
    store.add("unused", Tensor::from({1}, {1.0}, true));
    auto loss = [&] { return square(store.at("used")); };
    Rng pick(8);
    const FiniteDiffReport r = finite_diff_check(loss, store, 10, pick);
    CHECK(r.max_relative_error < 1e-6);
  }

  TEST_CASE("weight norm sum") {
    ParameterStore store;
    CHECK(weight_norm_sum(store, "weight").item() == 0.0);
    store.add("a.weight", Tensor::from({1, 2}, {3, 4}, true));
    CHECK(weight_norm_sum(store, "weight").item() == 5.0);
    store.add("b.weight", Tensor::from({2}, {5, 12}, true));
    store.add("b.bias", Tensor::from({1}, {100}, true));
    CHECK(weight_norm_sum(store, "weight").item() == 18.0);
  }

  TEST_CASE("optimizers reduce a quadratic and skip frozen tensors") {
    for (auto kind : {OptimizerKind::sgd, OptimizerKind::adam}) {
      ParameterStore store;
      store.add("w", Tensor::from({2}, {3, -2}, true));
      store.add("frozen", Tensor::from({1}, {1.0}, false));
      OptimizerConfig cfg;
      cfg.kind = kind;
      cfg.learning_rate = 0.1;
      Optimizer opt(cfg);
      double first = 0.0, last = 0.0;
      for (int i = 0; i < 50; ++i) {
        store.zero_grad();
        const Tensor l = add(sum(square(store.at("w"))), sum(store.at("frozen")));
        if (i == 0) first = l.item();
        last = l.item();
        l.backward();
        opt.step(store);
      }
      CHECK(last < 0.5 * first);
      CHECK(store.at("frozen")[0] == 1.0);
    }
    CHECK_THROWS_AS(parse_optimizer_kind("rmsprop"), InputError);
  }

  TEST_CASE("gradient clipping") {
    ParameterStore store;
    Tensor& w = store.add("w", Tensor::from({2}, {0, 0}, true));
    sum(scale(w, 10.0)).backward();
    const double before = store.clip_grad_norm(1.0);
    CHECK(before == doctest::Approx(std::sqrt(200.0)));
    CHECK(std::hypot(w.grad()[0], w.grad()[1]) == doctest::Approx(1.0));
  }

  TEST_CASE("checkpoint round trip") {
    TempDir dir("ckpt");
    Rng rng(9);
    ParameterStore a, b;
    a.add("x.weight", randn({2, 3}, rng, true));
    a.add("y", randn({4}, rng, true));
    b.add("x.weight", Tensor::zeros({2, 3}, true));
    b.add("y", Tensor::zeros({4}, true));
    write_checkpoint(dir / "m.ckpt", a);
    load_checkpoint(dir / "m.ckpt", b);
    for (std::size_t i = 0; i < 6; ++i) CHECK(b.at("x.weight")[i] == a.at("x.weight")[i]);
    ParameterStore wrong;
    wrong.add("x.weight", Tensor::zeros({3, 2}, true));
    wrong.add("y", Tensor::zeros({4}, true));
    CHECK_THROWS(load_checkpoint(dir / "m.ckpt", wrong));
    CHECK_THROWS_AS(read_checkpoint(dir / "missing.ckpt"), InputError);
  }

  TEST_CASE("shape errors") {
    CHECK_THROWS_AS(matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), DimensionError);
    CHECK_THROWS_AS(add(Tensor::zeros({2, 3}), Tensor::zeros({2})), DimensionError);
  }

  TEST_CASE("key value config") {
    std::istringstream in("# comment\nlayers = 3\nname = value with spaces\n");
    const KeyValueConfig kv = KeyValueConfig::parse(in);
    CHECK(kv.contains("layers"));
    CHECK_FALSE(kv.contains("heads"));
    CHECK(kv.get_int("layers", 1) == 3);
    CHECK(kv.get_string("name", "") == "value with spaces");
    CHECK(kv.get_double("heads", 4.5) == 4.5);
    CHECK_NOTHROW(kv.reject_unused());
    KeyValueConfig extra = kv;
    extra.set("typo", "1");
    CHECK_THROWS_AS(extra.reject_unused(), InputError);
    std::istringstream bad("layers 3\n");
    CHECK_THROWS_AS(KeyValueConfig::parse(bad), FormatError);
  }
}
