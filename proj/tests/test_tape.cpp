#include <doctest.h>

#include <functional>
#include <random>

#include "soe/errors.hpp"
#include "soe/tape.hpp"
#include "soe/tensor.hpp"

using namespace soe;

namespace {

// central finite differences of a scalar function, step 1e-5
Tensor finite_diff(const std::function<double(const Tensor&)>& f, const Tensor& x,
                   double step = 1e-5) {
    Tensor grad = Tensor::zeros(x.shape());
    for (std::int64_t i = 0; i < x.size(); ++i) {
        Tensor hi = x, lo = x;
        hi[i] += step;
        lo[i] -= step;
        grad[i] = (f(hi) - f(lo)) / (2.0 * step);
    }
    return grad;
}

double max_grad_err(const Tensor& got, const Tensor& want) {
    double worst = 0.0;
    for (std::int64_t i = 0; i < got.size(); ++i) {
        const double denom = std::max(1.0, std::abs(got[i]) + std::abs(want[i]));
        worst = std::max(worst, std::abs(got[i] - want[i]) / denom);
    }
    return worst;
}

}  // namespace

TEST_CASE("gradient of sum of squares is 2x") {
    Tape tape;
    const NodeId x = tape.leaf(Tensor({3}, {1.0, -2.0, 3.0}), true);
    const NodeId loss = tape.sum_squares(x);
    const Tensor grad = tape.backward_grad(loss, x);
    CHECK(grad[0] == 2.0);
    CHECK(grad[1] == -4.0);
    CHECK(grad[2] == 6.0);
}

TEST_CASE("softmax regression gradient matches finite differences") {
    std::mt19937_64 rng(17);
    const Tensor w = Tensor::randn({4, 3}, rng);
    const Tensor target = Tensor::randn({4, 3}, rng);
    const Tensor x0 = Tensor::randn({4, 4}, rng);

    auto loss_value = [&](const Tensor& x) {
        const Tensor y = softmax_rows(matmul(x, w), 0.7);
        return sum_squares(sub(y, target));
    };

    Tape tape;
    const NodeId x = tape.leaf(x0, true);
    const NodeId y = tape.softmax_rows(tape.matmul(x, tape.constant(w)), 0.7);
    const NodeId loss = tape.sum_squares(tape.sub(y, tape.constant(target)));
    const Tensor grad = tape.backward_grad(loss, x);

    CHECK(max_grad_err(grad, finite_diff(loss_value, x0)) < 1e-4);
}

TEST_CASE("loss independent of the root gives a zero gradient") {
    Tape tape;
    const NodeId x = tape.leaf(Tensor({2}, {1.0, 2.0}), true);
    const NodeId loss = tape.sum_squares(tape.constant(Tensor({2}, {3.0, 4.0})));
    const Tensor grad = tape.backward_grad(loss, x);
    CHECK(grad.max_abs() == 0.0);
}

TEST_CASE("backward_grad rejects untracked roots and non-scalar losses") {
    Tape tape;
    const NodeId x = tape.leaf(Tensor({2}, {1.0, 2.0}), false);
    const NodeId y = tape.leaf(Tensor({2}, {1.0, 2.0}), true);
    const NodeId vec = tape.add(x, y);
    const NodeId loss = tape.sum_squares(vec);
    CHECK_THROWS_AS(tape.backward_grad(loss, x), UsageError);
    CHECK_THROWS_AS(tape.backward_grad(vec, y), DimensionError);
    CHECK_THROWS_AS(tape.backward_grad(loss, vec), UsageError);  // not a leaf
}

TEST_CASE("composed graphs of every op match finite differences") {
    std::mt19937_64 rng(23);
    const Tensor w1 = Tensor::randn({6, 5}, rng);
    const Tensor w2 = Tensor::randn({5, 4}, rng);
    const Tensor bias = Tensor::randn({5, 4}, rng);
    const Tensor x0 = Tensor::randn({2, 3, 4}, rng);  // exercised as [c,h,w]

    // matmul, tanh, resize, gather, concat, transpose, softmax, mul, scale,
    // sub, add, reshape, sum, sum_squares, sqrt_bias all appear on the path
    std::vector<std::int64_t> gather_idx;
    for (std::int64_t i = 0; i < 12; ++i) gather_idx.push_back((7 * i + 3) % 24);

    auto build = [&](Tape& tape, NodeId x) {
        NodeId resized = tape.bilinear_resize(x, 2, 4);        // [2,2,4]
        NodeId flat = tape.reshape(resized, {4, 4});
        NodeId picked = tape.gather(x, gather_idx, {4, 3});
        NodeId joined = tape.concat({tape.reshape(picked, {12}), tape.reshape(flat, {16}),
                                     tape.constant(Tensor::full({2}, 0.5))},
                                    {5, 6});
        NodeId h1 = tape.tanh(tape.matmul(joined, tape.constant(w1)));       // [5,5]
        NodeId h2 = tape.matmul(h1, tape.constant(w2));                      // [5,4]
        NodeId sm = tape.softmax_rows(tape.scale(h2, 1.3), 0.5);
        NodeId diff = tape.sub(sm, tape.constant(bias));
        NodeId prod = tape.mul(diff, tape.transpose(tape.transpose(diff)));
        NodeId ssq = tape.sum_squares(diff);
        return tape.sqrt_bias(tape.add(ssq, tape.sum(prod)), 1e-12);
    };

    auto loss_value = [&](const Tensor& x) {
        Tape tape;
        const NodeId xn = tape.leaf(x, false);
        return tape.value(build(tape, xn)).item();
    };

    Tape tape;
    const NodeId x = tape.leaf(x0, true);
    const NodeId loss = build(tape, x);
    const Tensor grad = tape.backward_grad(loss, x);
    CHECK(max_grad_err(grad, finite_diff(loss_value, x0)) < 1e-4);
}

TEST_CASE("gradient reaches only the gathered slice") {
    Tape tape;
    const NodeId x = tape.leaf(Tensor({6}, {1, 2, 3, 4, 5, 6}), true);
    const NodeId slice = tape.gather(x, {1, 3}, {2});
    const NodeId loss = tape.sum_squares(slice);
    const Tensor grad = tape.backward_grad(loss, x);
    CHECK(grad[0] == 0.0);
    CHECK(grad[1] == 4.0);
    CHECK(grad[2] == 0.0);
    CHECK(grad[3] == 8.0);
    CHECK(grad[4] == 0.0);
    CHECK(grad[5] == 0.0);
}

TEST_CASE("concat routes gradients to each tracked part") {
    Tape tape;
    const NodeId a = tape.leaf(Tensor({2}, {1.0, 2.0}), true);
    const NodeId b = tape.constant(Tensor({2}, {3.0, 4.0}));
    const NodeId c = tape.leaf(Tensor({2}, {5.0, 6.0}), true);
    const NodeId joined = tape.concat({a, b, c}, {6});
    const NodeId loss = tape.sum_squares(joined);
    tape.backward(loss);
    CHECK(tape.grad(a)[0] == 2.0);
    CHECK(tape.grad(a)[1] == 4.0);
    CHECK(tape.grad(c)[0] == 10.0);
    CHECK(tape.grad(c)[1] == 12.0);
}

TEST_CASE("tape resize gradient matches finite differences on rank-3 input") {
    std::mt19937_64 rng(31);
    const Tensor x0 = Tensor::randn({2, 3, 5}, rng);
    auto loss_value = [&](const Tensor& x) {
        return sum_squares(bilinear_resize(x, 6, 2));
    };
    Tape tape;
    const NodeId x = tape.leaf(x0, true);
    const NodeId loss = tape.sum_squares(tape.bilinear_resize(x, 6, 2));
    const Tensor grad = tape.backward_grad(loss, x);
    CHECK(max_grad_err(grad, finite_diff(loss_value, x0)) < 1e-4);
}
