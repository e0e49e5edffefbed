#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dp/nn.hpp"
#include "dp/param_store.hpp"
#include "dp/tensor.hpp"
#include "test_util.hpp"

#include <filesystem>
#include <fstream>
#include <functional>

using namespace dp;
using namespace dp::testutil;

namespace {

Matrix random_matrix(int r, int c, Rng& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (double& x : m.v) x = rng.uniform(-scale, scale);
  return m;
}

// Projects an arbitrary output to a scalar with fixed rank-1 weights so
// finite differences can probe every op through one loss value.
Tensor project_to_scalar(Tape& tape, Tensor out) {
  Matrix left(1, out.rows), right(out.cols, 1);
  for (int i = 0; i < out.rows; ++i) left(0, i) = 0.3 + 0.7 * i;
  for (int j = 0; j < out.cols; ++j) right(j, 0) = 0.5 - 0.2 * j;
  return tape.matmul(tape.matmul(tape.input(left), out), tape.input(right));
}

// Central finite differences of `loss(store)` against the recorded gradient
// for every parameter entry. `build` must construct the full forward pass
// from the store on the given tape and return the scalar loss.
double max_grad_rel_err(ParamStore& store,
                        const std::function<Tensor(Tape&, ParamStore&)>& build,
                        double eps = 1e-5) {
  {
    Tape tape;
    const Tensor loss = build(tape, store);
    tape.backward(loss);
  }
  const auto loss_value = [&]() {
    Tape tape;
    return tape.scalar_value(build(tape, store));
  };
  double worst = 0.0;
  for (std::size_t e = 0; e < store.size(); ++e) {
    ParamStore::Entry& entry = store.entry(static_cast<int>(e));
    for (std::size_t i = 0; i < entry.value.count(); ++i) {
      const double keep = entry.value.v[i];
      entry.value.v[i] = keep + eps;
      const double up = loss_value();
      entry.value.v[i] = keep - eps;
      const double dn = loss_value();
      entry.value.v[i] = keep;
      const double fd = (up - dn) / (2 * eps);
      worst = std::max(worst, rel_err(entry.grad.v[i], fd));
    }
  }
  store.zero_grads();
  return worst;
}

}  // namespace

TEST_CASE("shared_mlp: identity weights reproduce the input") {
  ParamStore store;
  Matrix eye(3, 3);
  for (int i = 0; i < 3; ++i) eye(i, i) = 1.0;
  store.add("id.w0", eye);
  store.add("id.b0", Matrix(1, 3));

  Rng rng(1);
  Tape tape;
  const Matrix x = random_matrix(5, 3, rng);
  const int widths[] = {3};
  const Tensor out = shared_mlp(tape, tape.input(x), store, "id", widths,
                                /*final_linear=*/true);
  CHECK(tape.value(out).v == x.v);
}

TEST_CASE("shared_mlp: permuting rows permutes outputs") {
  ParamStore store;
  Rng rng(2);
  const int widths[] = {4, 2};
  register_mlp(store, "m", 3, widths, rng);

  const Matrix x = random_matrix(6, 3, rng);
  const auto perm = random_permutation(6, rng);
  Matrix xp(6, 3);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 3; ++j) xp(i, j) = x(static_cast<int>(perm[i]), j);

  Tape tape;
  const Matrix y = tape.value(shared_mlp(tape, tape.input(x), store, "m", widths, false));
  const Matrix yp = tape.value(shared_mlp(tape, tape.input(xp), store, "m", widths, false));
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 2; ++j) CHECK(yp(i, j) == y(static_cast<int>(perm[i]), j));
}

TEST_CASE("per-op gradients match finite differences") {
  Rng rng(3);

  const auto check_op =
      [&](const char* name, int rows, int cols,
          const std::function<Tensor(Tape&, Tensor)>& op, double offset = 0.0) {
        ParamStore store;
        Matrix init = random_matrix(rows, cols, rng);
        for (double& v : init.v) v += offset;
        store.add("x", init);
        const double err = max_grad_rel_err(store, [&](Tape& t, ParamStore& s) {
          return project_to_scalar(t, op(t, t.param(s, "x")));
        });
        INFO(name);
        CHECK(err < 1e-6);
      };

  check_op("leaky_relu", 5, 4,
           [](Tape& t, Tensor x) { return t.leaky_relu(x, 0.2); }, 0.3);
  check_op("square", 4, 3, [](Tape& t, Tensor x) { return t.square(x); });
  check_op("scale", 4, 3, [](Tape& t, Tensor x) { return t.scale(x, -1.7); });
  check_op("add_const", 4, 3, [](Tape& t, Tensor x) { return t.add_const(x, 2.5); });
  check_op("max_pool", 6, 4, [](Tape& t, Tensor x) { return t.max_pool_points(x); });
  check_op("mean_pool", 6, 4, [](Tape& t, Tensor x) { return t.mean_pool_points(x); });
  check_op("broadcast", 1, 5, [](Tape& t, Tensor x) { return t.broadcast_rows(x, 4); });

  // Binary ops with a constant second operand and with both as params.
  {
    ParamStore store;
    store.add("a", random_matrix(4, 3, rng));
    store.add("b", random_matrix(3, 5, rng));
    const double err = max_grad_rel_err(store, [&](Tape& t, ParamStore& s) {
      return project_to_scalar(t, t.matmul(t.param(s, "a"), t.param(s, "b")));
    });
    CHECK(err < 1e-6);
  }
  {
    ParamStore store;
    store.add("a", random_matrix(4, 3, rng));
    store.add("b", random_matrix(4, 3, rng));
    const double err = max_grad_rel_err(store, [&](Tape& t, ParamStore& s) {
      const Tensor sum = t.add(t.param(s, "a"), t.param(s, "b"));
      return project_to_scalar(t, t.sub(sum, t.param(s, "b")));
    });
    CHECK(err < 1e-6);
  }
  {
    ParamStore store;
    store.add("a", random_matrix(5, 3, rng));
    store.add("r", random_matrix(1, 3, rng));
    const double err = max_grad_rel_err(store, [&](Tape& t, ParamStore& s) {
      return project_to_scalar(t, t.add_row_vec(t.param(s, "a"), t.param(s, "r")));
    });
    CHECK(err < 1e-6);
  }
  {
    ParamStore store;
    store.add("a", random_matrix(4, 2, rng));
    store.add("b", random_matrix(4, 3, rng));
    const double err = max_grad_rel_err(store, [&](Tape& t, ParamStore& s) {
      return project_to_scalar(t, t.concat_cols(t.param(s, "a"), t.param(s, "b")));
    });
    CHECK(err < 1e-6);
  }
}

TEST_CASE("random shared MLP passes the finite-difference check") {
  Rng rng(4);
  ParamStore store;
  const int widths[] = {4};
  register_mlp(store, "m", 3, widths, rng);
  const Matrix x = random_matrix(5, 3, rng);
  const double err = max_grad_rel_err(store, [&](Tape& t, ParamStore& s) {
    return project_to_scalar(t, shared_mlp(t, t.input(x), s, "m", widths, false));
  });
  CHECK(err < 1e-6);
}

TEST_CASE("max_pool: example, row-permutation invariance, argmax routing") {
  Tape tape;
  Matrix f(2, 2);
  f(0, 0) = 1;
  f(0, 1) = 5;
  f(1, 0) = 3;
  f(1, 1) = 2;
  const Matrix& pooled = tape.value(tape.max_pool_points(tape.input(f)));
  CHECK(pooled(0, 0) == 3.0);
  CHECK(pooled(0, 1) == 5.0);

  Rng rng(5);
  const Matrix big = random_matrix(12, 6, rng);
  const auto perm = random_permutation(12, rng);
  Matrix shuffled(12, 6);
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 6; ++j) shuffled(i, j) = big(static_cast<int>(perm[i]), j);
  Tape t2;
  CHECK(t2.value(t2.max_pool_points(t2.input(big))).v ==
        t2.value(t2.max_pool_points(t2.input(shuffled))).v);

  // Gradient lands only on argmax rows.
  ParamStore store;
  store.add("x", f);
  Tape t3;
  const Tensor pool = t3.max_pool_points(t3.param(store, "x"));
  t3.backward(t3.matmul(pool, t3.input(Matrix::filled(2, 1, 1.0))));
  const Matrix& g = store.entry("x").grad;
  CHECK(g(0, 0) == 0.0);
  CHECK(g(0, 1) == 1.0);
  CHECK(g(1, 0) == 1.0);
  CHECK(g(1, 1) == 0.0);
}

TEST_CASE("mean_pool examples") {
  Tape tape;
  Matrix f(2, 2);
  f(0, 0) = 1;
  f(0, 1) = 5;
  f(1, 0) = 3;
  f(1, 1) = 1;
  const Matrix& pooled = tape.value(tape.mean_pool_points(tape.input(f)));
  CHECK(pooled(0, 0) == 2.0);
  CHECK(pooled(0, 1) == 3.0);

  const Matrix constant = Matrix::filled(7, 3, 4.25);
  const Matrix& cp = tape.value(tape.mean_pool_points(tape.input(constant)));
  for (int j = 0; j < 3; ++j) CHECK(cp(0, j) == 4.25);
}

TEST_CASE("concat_cols: values and zero-width edge") {
  Tape tape;
  Matrix a(1, 1), b(1, 1);
  a(0, 0) = 1;
  b(0, 0) = 2;
  const Matrix& ab = tape.value(tape.concat_cols(tape.input(a), tape.input(b)));
  CHECK(ab.rows == 1);
  CHECK(ab.cols == 2);
  CHECK(ab(0, 0) == 1.0);
  CHECK(ab(0, 1) == 2.0);

  Rng rng(6);
  const Matrix wide = random_matrix(3, 4, rng);
  const Matrix empty(3, 0);
  const Matrix& same = tape.value(tape.concat_cols(tape.input(empty), tape.input(wide)));
  CHECK(same.v == wide.v);

  Matrix tall(4, 2);
  CHECK_THROWS_AS(tape.concat_cols(tape.input(tall), tape.input(wide)), ShapeError);
}

TEST_CASE("broadcast_rows: values and gradient sum") {
  Tape tape;
  Matrix g(1, 2);
  g(0, 0) = 1;
  g(0, 1) = 2;
  const Matrix& two = tape.value(tape.broadcast_rows(tape.input(g), 2));
  CHECK(two.rows == 2);
  for (int i = 0; i < 2; ++i) {
    CHECK(two(i, 0) == 1.0);
    CHECK(two(i, 1) == 2.0);
  }
  const Matrix& one = tape.value(tape.broadcast_rows(tape.input(g), 1));
  CHECK(one.v == g.v);

  // d/dg of sum over an n-row broadcast is n per entry.
  ParamStore store;
  store.add("g", g);
  const int n = 5;
  Tape t2;
  const Tensor bc = t2.broadcast_rows(t2.param(store, "g"), n);
  const Tensor total =
      t2.matmul(t2.matmul(t2.input(Matrix::filled(1, n, 1.0)), bc),
                t2.input(Matrix::filled(2, 1, 1.0)));
  t2.backward(total);
  for (double v : store.entry("g").grad.v) CHECK(v == double(n));
}

TEST_CASE("backward: sum(W x) gradient replicates x") {
  ParamStore store;
  Rng rng(7);
  const Matrix w0 = random_matrix(4, 3, rng);
  store.add("w", w0);
  const Matrix x = random_matrix(3, 1, rng);

  Tape tape;
  const Tensor wx = tape.matmul(tape.param(store, "w"), tape.input(x));
  const Tensor loss = tape.matmul(tape.input(Matrix::filled(1, 4, 1.0)), wx);
  tape.backward(loss);
  const Matrix& g = store.entry("w").grad;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j) CHECK(g(i, j) == x(j, 0));
}

TEST_CASE("backward: unused parameter keeps a zero gradient") {
  ParamStore store;
  Rng rng(8);
  store.add("used", random_matrix(1, 1, rng));
  store.add("unused", random_matrix(2, 2, rng));
  Tape tape;
  tape.backward(tape.square(tape.param(store, "used")));
  for (double v : store.entry("unused").grad.v) CHECK(v == 0.0);
}

TEST_CASE("backward: non-scalar loss rejected, tape cleared after use") {
  Tape tape;
  const Tensor x = tape.input(Matrix::filled(2, 2, 1.0));
  CHECK_THROWS_AS(tape.backward(x), ShapeError);
  const Tensor y = tape.square(tape.input(Matrix::filled(1, 1, 2.0)));
  tape.backward(y);
  CHECK(tape.size() == 0);
}

TEST_CASE("tape replay: identical gradients across repeated passes") {
  Rng rng(9);
  ParamStore store;
  const int widths[] = {5, 3};
  register_mlp(store, "m", 4, widths, rng);
  const Matrix x = random_matrix(6, 4, rng);

  const auto run = [&]() {
    Tape tape;
    const Tensor out = shared_mlp(tape, tape.input(x), store, "m", widths, false);
    tape.backward(project_to_scalar(tape, out));
    std::vector<double> grads;
    for (const auto& e : store.entries())
      grads.insert(grads.end(), e.grad.v.begin(), e.grad.v.end());
    store.zero_grads();
    return grads;
  };
  CHECK(run() == run());
}

TEST_CASE("forward determinism: identical inputs give identical bits") {
  Rng rng(10);
  ParamStore store;
  const int widths[] = {8, 8};
  register_mlp(store, "m", 3, widths, rng);
  const Matrix x = random_matrix(16, 3, rng);
  Tape t1, t2;
  CHECK(t1.value(shared_mlp(t1, t1.input(x), store, "m", widths, false)).v ==
        t2.value(shared_mlp(t2, t2.input(x), store, "m", widths, false)).v);
}

TEST_CASE("non-finite forward values raise NumericalError") {
  Tape tape;
  Matrix bad(1, 2);
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(tape.input(bad), NumericalError);

  Matrix huge = Matrix::filled(1, 1, 1e308);
  const Tensor h = tape.input(huge);
  CHECK_THROWS_AS(tape.square(h), NumericalError);
}

TEST_CASE("external_scalar: value and jacobian-weighted backward") {
  ParamStore store;
  Matrix x0(2, 2);
  x0(0, 0) = 1;
  x0(0, 1) = 2;
  x0(1, 0) = 3;
  x0(1, 1) = 4;
  store.add("x", x0);
  Matrix jac(2, 2);
  jac(0, 0) = 0.5;
  jac(0, 1) = -1;
  jac(1, 0) = 2;
  jac(1, 1) = 0.25;

  Tape tape;
  const Tensor node = tape.external_scalar(tape.param(store, "x"), 7.5, jac);
  CHECK(tape.scalar_value(node) == 7.5);
  tape.backward(tape.scale(node, 3.0));
  for (std::size_t i = 0; i < 4; ++i) CHECK(store.entry("x").grad.v[i] == 3.0 * jac.v[i]);
}

TEST_CASE("adam_step: closed-form first step, no-ops") {
  ParamStore store;
  Matrix w = Matrix::filled(2, 2, 1.0);
  store.add("w", w);

  // zero gradient: parameters unchanged
  store.adam_step(0.1, 0.9, 0.999, 1e-8);
  for (double v : store.entry("w").value.v) CHECK(v == 1.0);

  // constant gradient from zero moments: step of ~lr against the sign
  ParamStore s2;
  s2.add("w", Matrix::filled(1, 3, 0.0));
  for (double& g : s2.entry("w").grad.v) g = 0.7;
  s2.adam_step(0.01, 0.9, 0.999, 1e-12);
  for (double v : s2.entry("w").value.v) CHECK(v == doctest::Approx(-0.01).epsilon(1e-6));

  // lr = 0: no change even with gradients
  ParamStore s3;
  s3.add("w", Matrix::filled(1, 2, 5.0));
  for (double& g : s3.entry("w").grad.v) g = -2.0;
  s3.adam_step(0.0, 0.9, 0.999, 1e-8);
  for (double v : s3.entry("w").value.v) CHECK(v == 5.0);
}

TEST_CASE("param store: uniqueness, clipping") {
  ParamStore store;
  store.add("a", Matrix(2, 2));
  CHECK_THROWS_AS(store.add("a", Matrix(1, 1)), InvalidInput);
  CHECK_THROWS_AS(store.index_of("missing"), InvalidInput);

  for (double& g : store.entry("a").grad.v) g = 10.0;
  const double norm = store.grad_norm();
  CHECK(norm == doctest::Approx(20.0));
  CHECK(store.clip_grads(5.0));
  CHECK(store.grad_norm() == doctest::Approx(5.0));
  CHECK_FALSE(store.clip_grads(5.0));
}

TEST_CASE("checkpoint: exact round trip with moments") {
  Rng rng(11);
  ParamStore store;
  store.add("layer.w", random_matrix(7, 3, rng));
  store.add("layer.b", random_matrix(1, 3, rng));
  for (double& g : store.entry("layer.w").grad.v) g = rng.uniform(-1, 1);
  store.adam_step(1e-3, 0.5, 0.999, 1e-8);
  store.adam_step(1e-3, 0.5, 0.999, 1e-8);

  const auto path = std::filesystem::temp_directory_path() / "dp_test_ckpt.dpck";
  store.save(path);
  const ParamStore loaded = ParamStore::load(path);
  REQUIRE(loaded.size() == store.size());
  CHECK(loaded.adam_t() == store.adam_t());
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& a = store.entry(static_cast<int>(i));
    const auto& b = loaded.entry(static_cast<int>(i));
    CHECK(a.name == b.name);
    CHECK(a.value.v == b.value.v);
    CHECK(a.m1.v == b.m1.v);
    CHECK(a.m2.v == b.m2.v);
  }
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint: corrupt files rejected") {
  const auto path = std::filesystem::temp_directory_path() / "dp_test_bad.dpck";
  {
    std::ofstream os(path, std::ios::binary);
    os << "NOPE";
  }
  CHECK_THROWS_AS(ParamStore::load(path), dp::ParseError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(ParamStore::load(path), IoError);
}
