#include <catch2/catch_amalgamated.hpp>

#include "qdraw/autograd/adam.hpp"
#include "qdraw/autograd/checkpoint.hpp"
#include "qdraw/autograd/lstm.hpp"
#include "qdraw/autograd/value.hpp"
#include "qdraw/rng.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>

using namespace qdraw::autograd;
using qdraw::Rng;
using Catch::Matchers::WithinAbs;

namespace {

Tensor random_tensor(Shape s, Rng &rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(s);
    for (double &x : t.v)
        x = rng.uniform(lo, hi);
    return t;
}

/// Finite-difference oracle: numerically differentiates `loss_of(params)` with
/// respect to every entry of every leaf, by re-running the whole forward pass.
std::vector<Tensor> finite_diff(std::vector<Value> &leaves,
                                const std::function<double()> &loss_of, double h = 1e-5) {
    std::vector<Tensor> grads;
    for (Value &leaf : leaves) {
        Tensor g(leaf.data().shape);
        for (std::size_t i = 0; i < g.numel(); ++i) {
            const double keep = leaf.data().v[i];
            leaf.mutable_data().v[i] = keep + h;
            const double plus = loss_of();
            leaf.mutable_data().v[i] = keep - h;
            const double minus = loss_of();
            leaf.mutable_data().v[i] = keep;
            g.v[i] = (plus - minus) / (2.0 * h);
        }
        grads.push_back(std::move(g));
    }
    return grads;
}

double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-4});
}

void check_against_fd(std::vector<Value> leaves, const std::function<Value()> &forward,
                      double tol = 1e-4) {
    const std::function<double()> loss_of = [&]() { return forward().data().v[0]; };
    const std::vector<Tensor> fd = finite_diff(leaves, loss_of);
    for (Value &leaf : leaves)
        leaf.zero_grad();
    forward().backward();
    for (std::size_t k = 0; k < leaves.size(); ++k)
        for (std::size_t i = 0; i < fd[k].numel(); ++i)
            REQUIRE(rel_err(leaves[k].grad().v[i], fd[k].v[i]) < tol);
}

std::string temp_path(const char *name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

} // namespace

TEST_CASE("scalar matmul product rule", "[autograd]") {
    Value a = Value::param(Tensor::matrix(1, 1, {2.0}));
    Value b = Value::param(Tensor::vector({3.0}));
    Value out = matmul(a, b);
    REQUIRE(out.data().v[0] == 6.0);
    out.backward();
    REQUIRE(a.grad().v[0] == 3.0);
    REQUIRE(b.grad().v[0] == 2.0);
}

TEST_CASE("tanh at zero has unit local gradient", "[autograd]") {
    Value x = Value::param(Tensor::vector({0.0}));
    Value y = sum(tanh(x));
    REQUIRE(y.data().v[0] == 0.0);
    y.backward();
    REQUIRE(x.grad().v[0] == 1.0);
}

TEST_CASE("shape mismatches report both shapes", "[autograd]") {
    Value a = Value::param(Tensor::vector({1, 2, 3}));
    Value b = Value::param(Tensor::vector({1, 2}));
    REQUIRE_THROWS_WITH(add(a, b), Catch::Matchers::ContainsSubstring("[3]") &&
                                       Catch::Matchers::ContainsSubstring("[2]"));
    Value m = Value::param(Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6}));
    REQUIRE_THROWS_WITH(matmul(m, b), Catch::Matchers::ContainsSubstring("[2x3]") &&
                                          Catch::Matchers::ContainsSubstring("[2]"));
}

TEST_CASE("four-op chain matches finite differences", "[autograd][oracle]") {
    Rng rng(91);
    Value W1 = Value::param(random_tensor(Shape{4, 3}, rng));
    Value b1 = Value::param(random_tensor(Shape{4}, rng));
    Value W2 = Value::param(random_tensor(Shape{2, 4}, rng));
    Value x = Value::param(random_tensor(Shape{3}, rng));
    check_against_fd({W1, b1, W2, x},
                     [&]() { return sum(tanh(matmul(W2, relu(linear(W1, x, b1))))); });
}

TEST_CASE("randomly wired composite graphs match finite differences", "[autograd][property]") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng(seed);
        Value W = Value::param(random_tensor(Shape{5, 5}, rng));
        Value b = Value::param(random_tensor(Shape{5}, rng));
        Value x = Value::param(random_tensor(Shape{5}, rng));
        // 8 ops with fan-out: h is consumed by two branches that later merge.
        auto forward = [&]() {
            Value h = sigmoid(linear(W, x, b));
            Value left = tanh(matmul(W, h));
            Value right = mul(h, sigmoid(slice(concat({h, x}), 2, 5)));
            return add(sum(mul(left, right)), sum(scale(max_pool1d(h), 0.7)));
        };
        check_against_fd({W, b, x}, forward);
    }
}

TEST_CASE("sum gradient is exactly ones", "[autograd]") {
    Rng rng(3);
    Value x = Value::param(random_tensor(Shape{7}, rng));
    sum(x).backward();
    for (double g : x.grad().v)
        REQUIRE(g == 1.0);
}

TEST_CASE("forward and backward are deterministic across reruns", "[autograd]") {
    auto run = [](std::uint64_t seed) {
        Rng rng(seed);
        Value W = Value::param(random_tensor(Shape{6, 6}, rng));
        Value x = Value::param(random_tensor(Shape{6}, rng));
        Value loss = sum(tanh(matmul(W, x)));
        loss.backward();
        std::vector<double> out = loss.data().v;
        out.insert(out.end(), W.grad().v.begin(), W.grad().v.end());
        return out;
    };
    REQUIRE(run(42) == run(42));
}

TEST_CASE("lstm cell limits", "[autograd]") {
    Rng rng(7);
    const int in = 3, hidden = 4;

    SECTION("all-zero parameters give zero next state") {
        LstmParams p = LstmParams::init(in, hidden, rng);
        for (Value v : p.params())
            v.mutable_data().fill(0.0);
        Value x = Value::param(random_tensor(Shape{3}, rng));
        Value h = Value::constant(Tensor(Shape{4}));
        Value c = Value::constant(Tensor(Shape{4}));
        auto [h1, c1] = lstm_cell(x, h, c, p);
        for (double v : h1.data().v)
            REQUIRE_THAT(v, WithinAbs(0.0, 1e-15));
        for (double v : c1.data().v)
            REQUIRE_THAT(v, WithinAbs(0.0, 1e-15));
    }

    SECTION("large forget bias retains the cell state") {
        LstmParams p = LstmParams::init(in, hidden, rng);
        for (Value v : p.params())
            v.mutable_data().fill(0.0);
        p.b_f.mutable_data().fill(10.0);
        Value x = Value::constant(Tensor(Shape{3}));
        Value h = Value::constant(Tensor(Shape{4}));
        Tensor keep(Shape{4});
        keep.v = {0.3, -0.2, 0.8, -0.9};
        Value c = Value::constant(keep);
        auto [h1, c1] = lstm_cell(x, h, c, p);
        for (std::size_t i = 0; i < 4; ++i)
            REQUIRE_THAT(c1.data().v[i], WithinAbs(keep.v[i], 1e-4));
    }
}

TEST_CASE("lstm cell gradients match finite differences", "[autograd][oracle]") {
    Rng rng(13);
    LstmParams p = LstmParams::init(3, 4, rng);
    Value x = Value::param(random_tensor(Shape{3}, rng));
    Value h = Value::param(random_tensor(Shape{4}, rng));
    Value c = Value::param(random_tensor(Shape{4}, rng));
    std::vector<Value> leaves = p.params();
    leaves.push_back(x);
    leaves.push_back(h);
    leaves.push_back(c);
    check_against_fd(leaves, [&]() {
        auto [h1, c1] = lstm_cell(x, h, c, p);
        return sum(add(h1, c1));
    });
}

TEST_CASE("max pooling", "[autograd]") {
    SECTION("pairwise maxima") {
        Value x = Value::param(Tensor::vector({3, 1, 4, 1, 5, 9}));
        REQUIRE(max_pool1d(x).data().v == std::vector<double>{3, 4, 9});
    }
    SECTION("odd tail passes through") {
        Value x = Value::param(Tensor::vector({7}));
        REQUIRE(max_pool1d(x).data().v == std::vector<double>{7});
    }
    SECTION("ties route gradient to the first index") {
        Value x = Value::param(Tensor::vector({2, 2}));
        max_pool1d(x).backward();
        REQUIRE(x.grad().v == std::vector<double>{1, 0});
    }
}

TEST_CASE("softmax cross entropy", "[autograd]") {
    SECTION("uniform logits give ln(n_classes)") {
        Value z = Value::param(Tensor::vector({0, 0, 0}));
        for (std::size_t label = 0; label < 3; ++label)
            REQUIRE_THAT(softmax_cross_entropy(z, label).data().v[0],
                         WithinAbs(std::log(3.0), 1e-12));
    }
    SECTION("saturated correct class has near-zero loss") {
        Value z = Value::param(Tensor::vector({100, 0, 0}));
        REQUIRE(softmax_cross_entropy(z, 0).data().v[0] < 1e-10);
    }
    SECTION("label out of range") {
        Value z = Value::param(Tensor::vector({0, 0, 0}));
        REQUIRE_THROWS_AS(softmax_cross_entropy(z, 3), std::out_of_range);
    }
    SECTION("backward matches finite differences") {
        Rng rng(29);
        Value z = Value::param(random_tensor(Shape{5}, rng, -2.0, 2.0));
        std::vector<Value> leaves{z};
        const std::function<double()> loss_of = [&]() {
            return softmax_cross_entropy(z, 2).data().v[0];
        };
        const std::vector<Tensor> fd = finite_diff(leaves, loss_of);
        z.zero_grad();
        softmax_cross_entropy(z, 2).backward();
        for (std::size_t i = 0; i < 5; ++i)
            REQUIRE_THAT(z.grad().v[i], WithinAbs(fd[0].v[i], 1e-6));
    }
}

TEST_CASE("adam steps", "[autograd]") {
    SECTION("first step moves by about -lr * sign(g)") {
        for (double g : {0.37, -2.5}) {
            Value p = Value::param(Tensor::vector({1.0}));
            p.mutable_grad().v[0] = g;
            std::vector<Value> params{p};
            AdamState st;
            adam_step(params, st);
            const double delta = p.data().v[0] - 1.0;
            const double expect = -st.lr * (g > 0 ? 1.0 : -1.0);
            REQUIRE_THAT(delta, WithinAbs(expect, st.lr * 1e-6));
            REQUIRE(p.grad().v[0] == 0.0); // zeroed afterward
        }
    }
    SECTION("zero gradient leaves the parameter unchanged") {
        Value p = Value::param(Tensor::vector({0.25}));
        p.zero_grad();
        std::vector<Value> params{p};
        AdamState st;
        for (int i = 0; i < 3; ++i)
            adam_step(params, st);
        REQUIRE(p.data().v[0] == 0.25);
    }
    SECTION("per-step movement is bounded by lr") {
        Value p = Value::param(Tensor::vector({0.0}));
        std::vector<Value> params{p};
        AdamState st;
        double prev = 0.0;
        for (int i = 0; i < 2; ++i) {
            p.mutable_grad().v[0] = 0.8;
            adam_step(params, st);
            REQUIRE(std::abs(p.data().v[0] - prev) <= st.lr * (1.0 + 1e-6));
            prev = p.data().v[0];
        }
    }
    SECTION("missing gradient is an error") {
        Value p = Value::param(Tensor::vector({1.0}));
        std::vector<Value> params{p};
        AdamState st;
        REQUIRE_THROWS_AS(adam_step(params, st), std::runtime_error);
    }
}

TEST_CASE("checkpoint container round trips bit-exactly", "[autograd]") {
    Rng rng(57);
    Checkpoint ckpt;
    ckpt.meta.emplace_back("model", "qd");
    ckpt.meta.emplace_back("seed", "7");
    ckpt.texts.emplace_back("layout", "qubits 2\nRX q0 embed0\n");
    ckpt.tensors.emplace_back("w", random_tensor(Shape{3, 4}, rng));
    ckpt.tensors.emplace_back("b", random_tensor(Shape{4}, rng, -1e-9, 1e-9));
    ckpt.tensors.emplace_back("s", Tensor::scalar(-0.0));

    const std::string path = temp_path("qdraw_ckpt_test.txt");
    save_checkpoint(path, ckpt);
    const Checkpoint back = load_checkpoint(path);
    REQUIRE(back.meta_value("model") == "qd");
    REQUIRE(back.meta_value("seed") == "7");
    REQUIRE(back.texts.size() == 1);
    REQUIRE(back.texts[0].second == "qubits 2\nRX q0 embed0\n");
    REQUIRE(back.tensor("w").shape == ckpt.tensors[0].second.shape);
    REQUIRE(back.tensor("w").v == ckpt.tensors[0].second.v);
    REQUIRE(back.tensor("b").v == ckpt.tensors[1].second.v);

    // re-saving the loaded checkpoint is byte-identical
    const std::string path2 = temp_path("qdraw_ckpt_test2.txt");
    save_checkpoint(path2, back);
    std::ifstream f1(path), f2(path2);
    std::stringstream s1, s2;
    s1 << f1.rdbuf();
    s2 << f2.rdbuf();
    REQUIRE(s1.str() == s2.str());
    std::filesystem::remove(path);
    std::filesystem::remove(path2);
}
