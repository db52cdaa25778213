#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qnlp/error.hpp"
#include "qnlp/optim.hpp"
#include "qnlp/rng.hpp"
#include "qnlp/tape.hpp"
#include "support/finite_diff.hpp"

using namespace qnlp;
using qnlp::testing::central_diff_param;
using qnlp::testing::rel_error;

TEST_CASE("matmul identity and zero cases") {
    Tape t;
    Var a = t.constant(Tensor::matrix(2, 2, {1, 0, 0, 1}));
    Var b = t.constant(Tensor::matrix(2, 2, {3, 4, 5, 6}));
    Var c = t.matmul(a, b);
    CHECK(c.value().at(0, 0) == 3);
    CHECK(c.value().at(0, 1) == 4);
    CHECK(c.value().at(1, 0) == 5);
    CHECK(c.value().at(1, 1) == 6);

    Var p = t.constant(Tensor::matrix(1, 2, {1, 2}));
    Var q = t.constant(Tensor::matrix(2, 1, {0, 0}));
    CHECK(t.matmul(p, q).value()[0] == 0);
}

TEST_CASE("matmul rejects mismatched inner dimensions") {
    Tape t;
    Var a = t.constant(Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6}));
    Var b = t.constant(Tensor::matrix(2, 2, {1, 2, 3, 4}));
    CHECK_THROWS_AS(t.matmul(a, b), ShapeError);
    CHECK_THROWS_WITH_AS(t.matmul(a, b),
                         doctest::Contains("[2, 3]"), ShapeError);
}

TEST_CASE("gradient of sum(A*B) wrt A equals ones x B^T") {
    Rng rng(7);
    Parameter A("A", Tensor::matrix(3, 4, std::vector<double>(12, 0.0)));
    Parameter B("B", Tensor::matrix(4, 2, std::vector<double>(8, 0.0)));
    for (std::size_t i = 0; i < A.value.numel(); ++i)
        A.value[i] = rng.uniform(-1, 1);
    for (std::size_t i = 0; i < B.value.numel(); ++i)
        B.value[i] = rng.uniform(-1, 1);

    auto loss_value = [&] {
        Tape t;
        return t.sum(t.matmul(t.param(A), t.param(B))).value()[0];
    };

    zero_grads({&A, &B});
    Tape t;
    Var loss = t.sum(t.matmul(t.param(A), t.param(B)));
    t.backward(loss);

    // Analytic check: dA[i][j] = sum_k B[j][k].
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            double want = B.value.at(j, 0) + B.value.at(j, 1);
            CHECK(std::abs(A.grad.at(i, j) - want) < 1e-12);
        }
    }
    // Finite-difference oracle on every entry of A.
    for (std::size_t i = 0; i < A.value.numel(); ++i) {
        double fd = central_diff_param(A, i, loss_value);
        CHECK(rel_error(A.grad[i], fd) < 1e-5);
    }
}

TEST_CASE("concat values and backward split") {
    Tape t;
    Var a = t.constant(Tensor::vector({1, 2}));
    Var b = t.constant(Tensor::vector({3}));
    Var c = t.concat(a, b);
    CHECK(c.value().numel() == 3);
    CHECK(c.value()[0] == 1);
    CHECK(c.value()[2] == 3);

    Var empty = t.constant(Tensor::vector({}));
    Var five = t.constant(Tensor::vector({5}));
    Var d = t.concat(empty, five);
    CHECK(d.value().numel() == 1);
    CHECK(d.value()[0] == 5);
}

TEST_CASE("concat backward routes ones to both sides") {
    Parameter a("a", Tensor::vector({1, 2, 3}));
    Parameter b("b", Tensor::vector({4, 5}));
    zero_grads({&a, &b});
    Tape t;
    Var loss = t.sum(t.concat(t.param(a), t.param(b)));
    t.backward(loss);
    for (std::size_t i = 0; i < 3; ++i) CHECK(a.grad[i] == 1.0);
    for (std::size_t i = 0; i < 2; ++i) CHECK(b.grad[i] == 1.0);
}

TEST_CASE("unary forward values") {
    Tape t;
    Var zero = t.constant(Tensor::vector({0.0}));
    CHECK(sigmoid(zero).value()[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(tanh(zero).value()[0] == doctest::Approx(0.0));
    Var one = t.constant(Tensor::vector({1.0}));
    CHECK(log(exp(one)).value()[0] == doctest::Approx(1.0).epsilon(1e-12));
    Var neg = t.constant(Tensor::vector({-2.0, 3.0}));
    Var r = relu(neg);
    CHECK(r.value()[0] == 0.0);
    CHECK(r.value()[1] == 3.0);
}

TEST_CASE("log rejects non-positive entries naming the index") {
    Tape t;
    Var x = t.constant(Tensor::vector({1.0, -1.0}));
    CHECK_THROWS_WITH_AS(log(x), doctest::Contains("index 1"), DomainError);
}

TEST_CASE("sigmoid derivative matches finite differences at x=1") {
    Parameter x("x", Tensor::vector({1.0}));
    zero_grads({&x});
    Tape t;
    Var loss = t.sum(sigmoid(t.param(x)));
    t.backward(loss);
    double s = 1.0 / (1.0 + std::exp(-1.0));
    CHECK(x.grad[0] == doctest::Approx(s * (1.0 - s)).epsilon(1e-10));
    CHECK(x.grad[0] == doctest::Approx(0.19661).epsilon(1e-4));

    auto loss_value = [&] {
        Tape t2;
        return t2.sum(sigmoid(t2.param(x))).value()[0];
    };
    double fd = central_diff_param(x, 0, loss_value);
    CHECK(rel_error(x.grad[0], fd) < 1e-5);
}

TEST_CASE("softmax basic laws") {
    Tape t;
    Var sym = t.softmax(t.constant(Tensor::vector({0.0, 0.0})));
    CHECK(sym.value()[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(sym.value()[1] == doctest::Approx(0.5).epsilon(1e-12));

    Var big = t.softmax(t.constant(Tensor::vector({1000.0, 0.0})));
    CHECK(std::isfinite(big.value()[0]));
    CHECK(big.value()[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(big.value()[1] == doctest::Approx(0.0).epsilon(1e-12));

    // Direct scalar evaluation oracle: softmax([0.7071, 0]).
    Var s = t.softmax(t.constant(Tensor::vector({0.7071, 0.0})));
    double e = std::exp(0.7071);
    CHECK(s.value()[0] == doctest::Approx(e / (e + 1.0)).epsilon(1e-12));
    CHECK(s.value()[0] == doctest::Approx(0.6698).epsilon(1e-4));
    CHECK(s.value()[1] == doctest::Approx(0.3302).epsilon(1e-4));
}

TEST_CASE("softmax rows sum to one and stay in [0,1]") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor x({4, 6});
        for (std::size_t i = 0; i < x.numel(); ++i)
            x[i] = rng.uniform(-40, 40);
        Tape t;
        const Tensor& y = t.softmax(t.constant(x)).value();
        for (std::size_t r = 0; r < 4; ++r) {
            double s = 0.0;
            for (std::size_t j = 0; j < 6; ++j) {
                double v = y.at(r, j);
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
                s += v;
            }
            CHECK(std::abs(s - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("layer_norm forward laws") {
    Tape t;
    Var gain = t.constant(Tensor::vector({1, 1, 1}));
    Var bias = t.constant(Tensor::vector({0, 0, 0}));
    // Constant input: zero variance guarded by eps, output all zeros.
    Var c = t.layer_norm(t.constant(Tensor::vector({5, 5, 5})), gain, bias);
    for (std::size_t i = 0; i < 3; ++i) CHECK(c.value()[i] == 0.0);

    // Already-normalized input passes through as eps -> 0.
    Tape t2;
    Var g2 = t2.constant(Tensor::vector({1, 1}));
    Var b2 = t2.constant(Tensor::vector({0, 0}));
    Var y = t2.layer_norm(t2.constant(Tensor::vector({1, -1})), g2, b2, 1e-14);
    CHECK(y.value()[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(y.value()[1] == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("layer_norm gradient vs finite differences") {
    Rng rng(3);
    Parameter x("x", Tensor::vector({0.3, -1.2, 2.0, 0.7}));
    Parameter g("g", Tensor::vector({1.1, 0.9, 1.0, 1.3}));
    Parameter b("b", Tensor::vector({0.1, -0.2, 0.0, 0.4}));

    auto loss_value = [&] {
        Tape t;
        Var y = t.layer_norm(t.param(x), t.param(g), t.param(b));
        // weighted sum so the gradient is not constant
        Var w = t.constant(Tensor::vector({1.0, 2.0, -1.0, 0.5}));
        return t.sum(t.mul(y, w)).value()[0];
    };

    zero_grads({&x, &g, &b});
    Tape t;
    Var y = t.layer_norm(t.param(x), t.param(g), t.param(b));
    Var w = t.constant(Tensor::vector({1.0, 2.0, -1.0, 0.5}));
    t.backward(t.sum(t.mul(y, w)));

    for (Parameter* p : ParamList{&x, &g, &b}) {
        for (std::size_t i = 0; i < p->value.numel(); ++i) {
            double fd = central_diff_param(*p, i, loss_value);
            CHECK(rel_error(p->grad[i], fd) < 1e-4);
        }
    }
}

TEST_CASE("embedding lookup gathers rows and scatter-adds gradients") {
    Parameter table("table", Tensor::matrix(2, 2, {1, 2, 3, 4}));
    {
        Tape t;
        Var out = t.embedding(t.param(table), {1, 0, 1});
        CHECK(out.value().shape() == std::vector<std::size_t>{3, 2});
        CHECK(out.value().at(0, 0) == 3);
        CHECK(out.value().at(1, 0) == 1);
        CHECK(out.value().at(2, 1) == 4);
    }
    {
        Tape t;
        Var out = t.embedding(t.param(table), {});
        CHECK(out.value().shape() == std::vector<std::size_t>{0, 2});
    }
    {
        Tape t;
        CHECK_THROWS_AS(t.embedding(t.param(table), {2}), IndexError);
    }
    // Repeated id scatter-adds.
    zero_grads({&table});
    Tape t;
    t.backward(t.sum(t.embedding(t.param(table), {0, 0})));
    CHECK(table.grad.at(0, 0) == 2.0);
    CHECK(table.grad.at(0, 1) == 2.0);
    CHECK(table.grad.at(1, 0) == 0.0);
}

TEST_CASE("cross_entropy values") {
    Tape t;
    Var uniform = t.constant(Tensor::vector({0, 0, 0}));
    CHECK(t.cross_entropy(uniform, {0}).value()[0] ==
          doctest::Approx(std::log(3.0)).epsilon(1e-12));

    Var confident = t.constant(Tensor::vector({50, -50}));
    CHECK(t.cross_entropy(confident, {0}).value()[0] ==
          doctest::Approx(0.0).epsilon(1e-12));

    CHECK_THROWS_AS(t.cross_entropy(uniform, {3}), IndexError);
}

TEST_CASE("cross_entropy gradient equals softmax minus one-hot") {
    Rng rng(5);
    Parameter logits("l", Tensor::matrix(2, 3, {0.2, -1.0, 0.5, 1.5, 0.0, -0.3}));
    std::vector<int> targets{2, 0};

    zero_grads({&logits});
    Tape t;
    t.backward(t.cross_entropy(t.param(logits), targets));

    for (std::size_t r = 0; r < 2; ++r) {
        double m = -1e300, s = 0.0;
        for (std::size_t j = 0; j < 3; ++j)
            m = std::max(m, logits.value.at(r, j));
        for (std::size_t j = 0; j < 3; ++j)
            s += std::exp(logits.value.at(r, j) - m);
        for (std::size_t j = 0; j < 3; ++j) {
            double p = std::exp(logits.value.at(r, j) - m) / s;
            double onehot = static_cast<std::size_t>(targets[r]) == j;
            CHECK(std::abs(logits.grad.at(r, j) - (p - onehot) / 2.0) < 1e-12);
        }
    }

    auto loss_value = [&] {
        Tape t2;
        return t2.cross_entropy(t2.param(logits), targets).value()[0];
    };
    for (std::size_t i = 0; i < logits.value.numel(); ++i) {
        double fd = central_diff_param(logits, i, loss_value);
        CHECK(rel_error(logits.grad[i], fd) < 1e-5);
    }
}

TEST_CASE("mse values and gradient") {
    Parameter pred("p", Tensor::vector({1, 1}));
    {
        Tape t;
        Var same = t.mse(t.param(pred), t.constant(Tensor::vector({1, 1})));
        CHECK(same.value()[0] == 0.0);
        Var one = t.mse(t.param(pred), t.constant(Tensor::vector({0, 0})));
        CHECK(one.value()[0] == 1.0);
        CHECK_THROWS_AS(t.mse(t.param(pred),
                              t.constant(Tensor::vector({1, 2, 3}))),
                        ShapeError);
    }
    pred.value = Tensor::vector({0.7, -0.4});
    pred.grad = Tensor::zeros({2});
    Tensor target = Tensor::vector({0.1, 0.2});
    auto loss_value = [&] {
        Tape t;
        return t.mse(t.param(pred), t.constant(target)).value()[0];
    };
    Tape t;
    t.backward(t.mse(t.param(pred), t.constant(target)));
    for (std::size_t i = 0; i < 2; ++i) {
        double want = 2.0 * (pred.value[i] - target[i]) / 2.0;
        CHECK(std::abs(pred.grad[i] - want) < 1e-12);
        double fd = central_diff_param(pred, i, loss_value);
        CHECK(rel_error(pred.grad[i], fd) < 1e-5);
    }
}

TEST_CASE("dropout identity cases") {
    Tensor x = Tensor::vector({1, 2, 3, 4});
    {
        // rate 0 in training mode
        Tape t({.record = true, .training = true, .seed = 1, .step = 0});
        Var out = t.dropout(t.constant(x), 0.0, 0);
        for (std::size_t i = 0; i < 4; ++i) CHECK(out.value()[i] == x[i]);
    }
    {
        // evaluation mode ignores the rate
        Tape t;
        Var out = t.dropout(t.constant(x), 0.9, 0);
        for (std::size_t i = 0; i < 4; ++i) CHECK(out.value()[i] == x[i]);
    }
    {
        Tape t;
        CHECK_THROWS_AS(t.dropout(t.constant(x), 1.0, 0), ContractError);
    }
}

TEST_CASE("dropout statistical rate over 1e6 entries") {
    Tensor x({1000000});
    x.fill(1.0);
    Tape t({.record = false, .training = true, .seed = 42, .step = 0});
    Var out = t.dropout(t.constant(x), 0.1, 7);
    std::size_t zeroed = 0;
    double expected_scale = 1.0 / 0.9;
    for (std::size_t i = 0; i < x.numel(); ++i) {
        double v = out.value()[i];
        if (v == 0.0) {
            ++zeroed;
        } else {
            CHECK(v == doctest::Approx(expected_scale).epsilon(1e-12));
        }
    }
    double frac = static_cast<double>(zeroed) / 1e6;
    CHECK(frac == doctest::Approx(0.1).epsilon(0.02));
    CHECK(std::abs(frac - 0.1) < 0.002);
}

TEST_CASE("dropout masks are reproducible per (seed, step, stream)") {
    Tensor x({64});
    x.fill(1.0);
    auto run = [&](std::uint64_t seed, std::uint64_t step,
                   std::uint64_t stream) {
        Tape t({.record = false, .training = true, .seed = seed, .step = step});
        std::vector<double> out;
        const Tensor& y = t.dropout(t.constant(x), 0.4, stream).value();
        for (std::size_t i = 0; i < y.numel(); ++i) out.push_back(y[i]);
        return out;
    };
    CHECK(run(1, 2, 3) == run(1, 2, 3));
    CHECK(run(1, 2, 3) != run(1, 2, 4));
    CHECK(run(1, 2, 3) != run(1, 3, 3));
}

TEST_CASE("backward product rule and detached branches") {
    Parameter a("a", Tensor::vector({2, 3}));
    Parameter b("b", Tensor::vector({5, 7}));
    Parameter unused("u", Tensor::vector({1, 1}));
    zero_grads({&a, &b, &unused});
    Tape t;
    Var av = t.param(a);
    Var bv = t.param(b);
    Var uv = t.param(unused);
    t.scale(uv, 3.0);  // detached computation, never reaches the loss
    t.backward(t.sum(av * bv));
    CHECK(a.grad[0] == 5.0);
    CHECK(a.grad[1] == 7.0);
    CHECK(b.grad[0] == 2.0);
    CHECK(b.grad[1] == 3.0);
    CHECK(unused.grad[0] == 0.0);
    CHECK(unused.grad[1] == 0.0);
}

TEST_CASE("backward requires a scalar and a single use") {
    Parameter a("a", Tensor::vector({1, 2}));
    zero_grads({&a});
    Tape t;
    Var v = t.param(a);
    CHECK_THROWS_AS(t.backward(v), ContractError);
    Var loss = t.sum(v);
    t.backward(loss);
    CHECK_THROWS_AS(t.backward(loss), ContractError);

    Tape eval({.record = false});
    Var w = eval.sum(eval.param(a));
    CHECK_THROWS_AS(eval.backward(w), ContractError);
}

TEST_CASE("slice, pick, row, stack, transpose plumbing") {
    Parameter m("m", Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6}));
    zero_grads({&m});
    Tape t;
    Var mv = t.param(m);
    Var r1 = t.row(mv, 1);
    CHECK(r1.value()[0] == 4);
    Var tr = t.transpose(mv);
    CHECK(tr.value().at(2, 1) == 6);
    Var st = t.stack_rows({r1, r1});
    CHECK(st.value().at(0, 2) == 6);
    Var sl = t.slice(r1, 1, 2);
    CHECK(sl.value()[0] == 5);
    Var pk = t.pick(r1, 2);
    CHECK(pk.value()[0] == 6);
    t.backward(pk);
    CHECK(m.grad.at(1, 2) == 1.0);
    CHECK(m.grad.at(0, 0) == 0.0);
}

TEST_CASE("slice_cols and concat_cols round trip") {
    Tape t;
    Var x = t.constant(Tensor::matrix(2, 4, {1, 2, 3, 4, 5, 6, 7, 8}));
    Var left = t.slice_cols(x, 0, 2);
    Var right = t.slice_cols(x, 2, 2);
    Var joined = t.concat_cols({left, right});
    for (std::size_t i = 0; i < 8; ++i)
        CHECK(joined.value()[i] == x.value()[i]);
}

TEST_CASE("optimizers") {
    SUBCASE("plain gradient descent single step") {
        Parameter p("p", Tensor::vector({1.0}));
        p.grad[0] = 1.0;
        Sgd opt(0.1);
        opt.step({&p});
        CHECK(p.value[0] == doctest::Approx(0.9).epsilon(1e-15));
    }
    SUBCASE("zero gradient leaves the parameter unchanged") {
        Parameter p("p", Tensor::vector({1.5}));
        Sgd opt(0.1);
        opt.step({&p});
        CHECK(p.value[0] == 1.5);
    }
    SUBCASE("adam first step moves by about lr") {
        // Hand evaluation at t=1: m_hat = g, v_hat = g^2, so the update is
        // lr * g / (|g| + eps) = lr for g = 1.
        Parameter p("p", Tensor::vector({1.0}));
        p.grad[0] = 1.0;
        Adam opt({&p}, {.lr = 0.01});
        opt.step({&p});
        CHECK(p.value[0] == doctest::Approx(1.0 - 0.01).epsilon(1e-7));
    }
    SUBCASE("adam rejects unknown parameters") {
        Parameter p("p", Tensor::vector({1.0}));
        Parameter q("q", Tensor::vector({1.0}));
        Adam opt({&p}, {});
        CHECK_THROWS_AS(opt.step({&q}), ContractError);
    }
}

TEST_CASE("gradients match finite differences on random composite graphs") {
    // Property-style sweep: 20 random points through a mixed op pipeline.
    Rng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        Parameter w("w", Tensor::matrix(3, 4, std::vector<double>(12)));
        Parameter b("b", Tensor::vector({0, 0, 0}));
        Parameter x("x", Tensor::vector({0, 0, 0, 0}));
        for (std::size_t i = 0; i < w.value.numel(); ++i)
            w.value[i] = rng.uniform(-2, 2);
        for (std::size_t i = 0; i < 3; ++i) b.value[i] = rng.uniform(-2, 2);
        for (std::size_t i = 0; i < 4; ++i) x.value[i] = rng.uniform(-2, 2);

        auto build = [&](Tape& t) {
            Var h = affine(t.param(w), t.param(x), t.param(b));
            Var s = sigmoid(h);
            Var u = tanh(h);
            Var probe = t.constant(Tensor::vector({1.0, -2.0, 0.5}));
            return t.sum(t.softmax(s * u) * probe);
        };
        auto loss_value = [&] {
            Tape t;
            return build(t).value()[0];
        };
        zero_grads({&w, &b, &x});
        Tape t;
        t.backward(build(t));

        for (Parameter* p : ParamList{&w, &b, &x}) {
            std::size_t idx = rng.uniform_int(p->value.numel());
            double fd = central_diff_param(*p, idx, loss_value);
            CHECK(rel_error(p->grad[idx], fd) < 1e-5);
        }
    }
}
