#include <cmath>
#include <set>

#include "doctest.h"
#include "lstmkf/adam.hpp"
#include "lstmkf/gradient_check.hpp"
#include "lstmkf/init.hpp"
#include "lstmkf/rng.hpp"
#include "lstmkf/tape.hpp"
#include "test_helpers.hpp"

using namespace lstmkf;
using lstmkf::testing::random_matrix;
using lstmkf::testing::random_spd;

namespace {

/// Central finite difference of a scalar function of one matrix entry.
template <class F>
double central_difference(F f, Matrix& x, std::size_t i, double h = 1e-6) {
  const double original = x[i];
  x[i] = original + h;
  const double plus = f(x);
  x[i] = original - h;
  const double minus = f(x);
  x[i] = original;
  return (plus - minus) / (2.0 * h);
}

}  // namespace

TEST_CASE("matmul examples") {
  const Matrix m{{1, 2}, {3, 4}};
  CHECK(matmul(Matrix::identity(2), m) == m);
  CHECK(matmul(Matrix{{1, 2}}, Matrix{{3}, {4}}) == Matrix{{11}});
}

TEST_CASE("matmul dimension mismatch names both shapes") {
  try {
    matmul(Matrix(2, 3), Matrix(4, 1));
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string what = e.what();
    CHECK(what.find("2x3") != std::string::npos);
    CHECK(what.find("4x1") != std::string::npos);
  }
}

TEST_CASE("matmul backward matches finite differences") {
  Matrix a{{1, 2}};
  Matrix b{{3}, {4}};
  Tape tape;
  const Var va = tape.input(a);
  const Var vb = tape.input(b);
  tape.backward(ops::matmul(va, vb), Matrix{{1}});
  const Matrix ga = tape.grad(va);
  const Matrix gb = tape.grad(vb);

  // Oracle: central differences with step 1e-6 on the product.
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(ga[i] == doctest::Approx(central_difference([&](const Matrix& x) { return matmul(x, b)[0]; }, a, i)).epsilon(1e-8));
    CHECK(gb[i] == doctest::Approx(central_difference([&](const Matrix& x) { return matmul(a, x)[0]; }, b, i)).epsilon(1e-8));
  }
  CHECK(max_abs_diff(ga, Matrix{{3, 4}}) < 1e-12);
  CHECK(max_abs_diff(gb, Matrix{{1}, {2}}) < 1e-12);
}

TEST_CASE("elementwise examples") {
  Tape tape;
  CHECK(ops::sigmoid(tape.constant(Matrix{{0}})).value()[0] == 0.5);
  CHECK(ops::tanh(tape.constant(Matrix{{0}})).value()[0] == 0.0);
  const Var h = ops::hadamard(tape.constant(Matrix::column({1, 2})), tape.constant(Matrix::column({3, 4})));
  CHECK(h.value() == Matrix::column({3, 8}));
  CHECK_THROWS_AS(ops::add(tape.constant(Matrix(2, 1)), tape.constant(Matrix(1, 2))), DimensionError);
  CHECK_THROWS_AS(ops::elementwise(ops::Elementwise::Hadamard, tape.constant(Matrix(2, 1)), tape.constant(Matrix(3, 1))),
                  DimensionError);
}

TEST_CASE("every primitive passes a gradient check at random points") {
  Rng rng(11);
  using E = ops::Elementwise;
  for (int trial = 0; trial < 5; ++trial) {
    Parameter a("a", random_matrix(3, 2, rng));
    Parameter b("b", random_matrix(3, 2, rng));
    Parameter c("c", random_matrix(2, 4, rng));
    Parameter w("w", random_matrix(3, 1, rng));
    // Keep relu inputs away from the kink.
    for (double& v : a.value.data()) v += v > 0 ? 0.1 : -0.1;
    std::vector<Parameter*> params{&a, &b, &c, &w};

    const std::vector<std::pair<const char*, ScalarFunction>> cases{
        {"matmul", [&](Tape& t) { return ops::sum_squares(ops::matmul(t.param(a), t.param(c))); }},
        {"add", [&](Tape& t) { return ops::sum_squares(ops::elementwise(E::Add, t.param(a), t.param(b))); }},
        {"sub", [&](Tape& t) { return ops::sum_squares(ops::elementwise(E::Sub, t.param(a), t.param(b))); }},
        {"hadamard", [&](Tape& t) { return ops::sum(ops::elementwise(E::Hadamard, t.param(a), t.param(b))); }},
        {"sigmoid", [&](Tape& t) { return ops::sum_squares(ops::elementwise(E::Sigmoid, t.param(a))); }},
        {"tanh", [&](Tape& t) { return ops::sum_squares(ops::elementwise(E::Tanh, t.param(a))); }},
        {"exp", [&](Tape& t) { return ops::sum(ops::elementwise(E::Exp, t.param(a))); }},
        {"relu", [&](Tape& t) { return ops::sum_squares(ops::elementwise(E::Relu, t.param(a))); }},
        {"transpose", [&](Tape& t) { return ops::sum(ops::matmul(ops::transpose(t.param(a)), t.param(b))); }},
        {"scale", [&](Tape& t) { return ops::sum_squares(ops::scale(t.param(a), -2.5)); }},
        {"clamp", [&](Tape& t) { return ops::sum_squares(ops::clamp(t.param(a), -0.5, 0.5)); }},
        {"diag", [&](Tape& t) { return ops::sum_squares(ops::matmul(ops::diag(t.param(w)), t.param(b))); }},
        {"symmetrize", [&](Tape& t) {
           const Var m = ops::matmul(t.param(a), ops::transpose(t.param(b)));
           return ops::sum(ops::hadamard(ops::symmetrize(m), m));
         }},
        {"solve_spd", [&](Tape& t) {
           const Var ab = ops::matmul(t.param(a), ops::transpose(t.param(a)));
           const Var m = ops::add(ab, t.constant(Matrix::identity(3)));
           return ops::sum_squares(ops::solve_spd(m, t.param(b)));
         }},
    };
    for (const auto& [name, fn] : cases) {
      CAPTURE(name);
      const GradientCheckReport r = gradient_check(fn, params, 1e-4);
      CHECK(r.passed);
      CHECK(r.max_relative_error < 1e-4);
    }
  }
}

TEST_CASE("solve_spd gradient holds for an unsymmetric perturbation of the matrix") {
  Rng rng(5);
  Parameter m("m", random_spd(3, rng));
  Parameter rhs("rhs", random_matrix(3, 2, rng));
  std::vector<Parameter*> params{&m, &rhs};
  const auto fn = [&](Tape& t) { return ops::sum(ops::solve_spd(t.param(m), t.param(rhs))); };
  CHECK(gradient_check(fn, params, 1e-4).passed);
}

TEST_CASE("backward visits each recorded operation once, newest first") {
  Tape tape;
  const Var x = tape.input(Matrix::column({0.3, -0.2}));
  const Var y = ops::tanh(ops::scale(x, 2.0));
  const Var z = ops::sum(ops::hadamard(y, y));
  std::vector<std::size_t> order;
  // Wrap the three interior nodes with observers by re-recording: count visits.
  const std::size_t visited = tape.backward(z);
  CHECK(visited == 4);  // scale, tanh, hadamard, sum
  CHECK(tape.size() == 5);

  Tape t2;
  const Var a = t2.input(Matrix{{1.0}});
  Var chain = a;
  for (int i = 0; i < 3; ++i) {
    chain = t2.record(chain.value() * 2.0, true, [prev = chain, &order](Tape& tp, Var self, const Matrix& g) {
      order.push_back(self.id);
      tp.accumulate(prev, g * 2.0);
    });
  }
  CHECK(t2.backward(chain) == 3);
  CHECK(order == std::vector<std::size_t>{3, 2, 1});
  CHECK(t2.grad(a)[0] == 8.0);
}

TEST_CASE("solve_spd examples") {
  Rng rng(3);
  const Matrix r = random_matrix(3, 1, rng);
  CHECK(solve_spd(Matrix::identity(3), r) == r);
  CHECK(solve_spd(Matrix{{2}}, Matrix{{4}})[0] == doctest::Approx(2.0).epsilon(1e-15));

  // Oracle for diagonal systems: elementwise division.
  const Matrix diag{{2, 0}, {0, 4}};
  const Matrix rhs{{2}, {8}};
  const Matrix x = solve_spd(diag, rhs);
  for (std::size_t i = 0; i < 2; ++i) CHECK(x[i] == doctest::Approx(rhs[i] / diag(i, i)).epsilon(1e-15));
  CHECK(max_abs_diff(x, Matrix{{1}, {2}}) < 1e-15);
}

TEST_CASE("solve_spd reports the failing pivot") {
  const Matrix m{{1, 0, 0}, {0, 0, 0}, {0, 0, 1}};
  try {
    solve_spd(m, Matrix(3, 1, 1.0));
    FAIL("expected SingularMatrixError");
  } catch (const SingularMatrixError& e) {
    CHECK(e.pivot() == 1);
  }
  CHECK_THROWS_AS(solve_spd(Matrix{{-1}}, Matrix{{1}}), SingularMatrixError);
}

TEST_CASE("solve_spd recovers x for well-conditioned systems") {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(8);
    const Matrix m = random_spd(n, rng, 0.5);
    const Matrix x = random_matrix(n, 2, rng);
    const Matrix solved = solve_spd(m, matmul(m, x));
    CHECK(max_abs_diff(solved, x) <= 1e-8 * std::max(1.0, max_abs(x)));
  }
}

TEST_CASE("init_orthogonal examples") {
  const Matrix q = init_orthogonal(4, 4, 7);
  CHECK(max_abs_diff(matmul(transpose(q), q), Matrix::identity(4)) < 1e-10);
  CHECK(init_orthogonal(4, 4, 7) == q);
  CHECK(init_orthogonal(4, 4, 8) != q);

  const Matrix tall = init_orthogonal(8, 4, 7);
  CHECK(max_abs_diff(matmul(transpose(tall), tall), Matrix::identity(4)) < 1e-10);
  const Matrix wide = init_orthogonal(3, 9, 7);
  CHECK(max_abs_diff(matmul(wide, transpose(wide)), Matrix::identity(3)) < 1e-10);
}

TEST_CASE("init_orthogonal Gram identity holds for random shapes and at 1024") {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t rows = 1 + rng.below(64);
    const std::size_t cols = 1 + rng.below(64);
    const Matrix m = init_orthogonal(rows, cols, rng.next());
    const Matrix gram = rows >= cols ? matmul(transpose(m), m) : matmul(m, transpose(m));
    CHECK(max_abs_diff(gram, Matrix::identity(std::min(rows, cols))) < 1e-10);
  }
  const Matrix big = init_orthogonal(1024, 1024, 1);
  const Eigen::MatrixXd e = lstmkf::testing::to_eigen(big);
  const double err = (e.transpose() * e - Eigen::MatrixXd::Identity(1024, 1024)).cwiseAbs().maxCoeff();
  CHECK(err < 1e-10);
}

TEST_CASE("uniform and xavier initializers respect bounds and seeds") {
  const Matrix u = init_uniform(2, 2, 0.01, 4);
  CHECK(max_abs(u) <= 0.01);
  CHECK(init_uniform(2, 2, 0.01, 4) == u);
  CHECK(max_abs(init_xavier(3, 3, 4)) <= 1.0);
  CHECK(init_xavier(3, 3, 4) == init_xavier(3, 3, 4));
  const Matrix x = init_xavier(10, 30, 2);
  CHECK(max_abs(x) <= std::sqrt(6.0 / 40.0));
  CHECK_THROWS(init_uniform(2, 2, 0.0, 1));
}

TEST_CASE("adam examples") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    Parameter p("p", Matrix{{1.5, -2.0}});
    AdamState state;
    std::vector<Parameter*> ps{&p};
    adam_step(ps, state);
    CHECK(p.value == Matrix{{1.5, -2.0}});
    CHECK(state.step == 1);
  }
  SUBCASE("first step moves by the learning rate against the gradient sign") {
    Parameter p("p", Matrix{{1.0}});
    p.grad = Matrix{{1.0}};
    AdamState state;
    state.hyper.learning_rate = 0.1;
    std::vector<Parameter*> ps{&p};
    adam_step(ps, state);
    // Oracle: m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
    CHECK(p.value[0] == doctest::Approx(1.0 - 0.1 / (1.0 + 1e-8)).epsilon(1e-15));
    CHECK(p.value[0] == doctest::Approx(0.9).epsilon(1e-7));
  }
  SUBCASE("identical calls give identical results") {
    Rng rng(1);
    Parameter a("a", random_matrix(3, 3, rng));
    a.grad = random_matrix(3, 3, rng);
    Parameter b = a;
    AdamState sa, sb;
    std::vector<Parameter*> pa{&a}, pb{&b};
    for (int i = 0; i < 3; ++i) {
      adam_step(pa, sa);
      adam_step(pb, sb);
    }
    CHECK(a.value == b.value);
    CHECK(sa.step == 3);
  }
  SUBCASE("shape mismatch") {
    Matrix p(2, 2);
    Matrix g(2, 3);
    std::vector<Matrix*> ps{&p};
    std::vector<const Matrix*> gs{&g};
    AdamState state;
    CHECK_THROWS_AS(adam_step(ps, gs, state), DimensionError);
  }
}

TEST_CASE("gradient clipping rescales to the requested norm") {
  Parameter a("a", Matrix(1, 2));
  a.grad = Matrix{{3.0, 4.0}};
  std::vector<Parameter*> ps{&a};
  CHECK(clip_gradient_norm(ps, 1.0) == doctest::Approx(5.0));
  CHECK(std::sqrt(squared_norm(a.grad)) == doctest::Approx(1.0));
  a.grad = Matrix{{3.0, 4.0}};
  clip_gradient_norm(ps, 0.0);
  CHECK(a.grad == Matrix{{3.0, 4.0}});
}

TEST_CASE("gradient_check on a quadratic") {
  Parameter x("x", Matrix::column({1.0, 2.0}));
  std::vector<Parameter*> ps{&x};
  const GradientCheckReport r = gradient_check([&](Tape& t) { return ops::sum_squares(t.param(x)); }, ps, 1e-8);
  CHECK(r.passed);
  CHECK(r.max_relative_error < 1e-8);
  CHECK(x.grad == Matrix::column({2.0, 4.0}));
  CHECK(x.value == Matrix::column({1.0, 2.0}));
  CHECK(r.entries_checked == 2);
}

TEST_CASE("gradient_check rejects non-finite losses") {
  Parameter x("x", Matrix::column({1000.0}));
  std::vector<Parameter*> ps{&x};
  CHECK_THROWS_AS(gradient_check([&](Tape& t) { return ops::sum(ops::exp(t.param(x))); }, ps, 1e-4), NonFiniteError);
}

TEST_CASE("rng streams are reproducible and well spread") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));

  Rng rng(7);
  double mean = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double v = rng.normal();
    mean += v;
    sq += v * v;
  }
  mean /= n;
  CHECK(std::abs(mean) < 0.01);
  CHECK(sq / n == doctest::Approx(1.0).epsilon(0.01));
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) seen.insert(rng.below(10));
  CHECK(seen.size() == 10);
}
