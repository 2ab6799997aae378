#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "ntm/error.hpp"
#include "ntm/grad_check.hpp"
#include "ntm/ops.hpp"
#include "test_util.hpp"

using namespace ntm;
using namespace ntm::ad;
using ntm::testing::random_distribution;
using ntm::testing::random_tensor;
using ntm::testing::total;

namespace {

void expect_values(const Tensor& t, std::vector<double> expected, double tol = 1e-12) {
  ASSERT_EQ(t.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(t[i], expected[i], tol) << i;
}

}  // namespace

TEST(Tensor, ShapeMustMatchData) {
  EXPECT_THROW(Tensor({2, 2}, {1.0, 2.0, 3.0}), DimensionError);
  EXPECT_THROW(Tensor({0}), DimensionError);
  Tensor t({2, 3});
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
}

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  Tape tape;
  Var id = tape.constant(Tensor::matrix(2, 2, {1, 0, 0, 1}));
  Var a = tape.constant(Tensor::matrix(2, 3, {1, -2, 3, 4.5, 5, -6}));
  EXPECT_EQ(matmul(id, a).value(), a.value());
}

TEST(Matmul, HandComputedProduct) {
  Tape tape;
  Var a = tape.constant(Tensor::matrix(2, 2, {1, 2, 3, 4}));
  Var b = tape.constant(Tensor::matrix(2, 1, {1, 1}));
  const Tensor out = matmul(a, b).value();
  EXPECT_EQ(out.shape(), (Shape{2, 1}));
  expect_values(out, {3, 7}, 0.0);
}

TEST(Matmul, ZeroMatrixGivesZero) {
  Tape tape;
  Var z = tape.constant(Tensor({3, 2}));
  Var a = tape.constant(Tensor::matrix(2, 2, {1, 2, 3, 4}));
  for (double v : matmul(z, a).value().data()) EXPECT_EQ(v, 0.0);
}

TEST(Matmul, InnerDimensionMismatchThrows) {
  Tape tape;
  Var a = tape.constant(Tensor({2, 3}));
  Var b = tape.constant(Tensor({2, 3}));
  EXPECT_THROW(matmul(a, b), DimensionError);
  EXPECT_THROW(matvec(a, tape.constant(Tensor({2}))), DimensionError);
}

TEST(Elementwise, ActivationValuesAtZero) {
  Tape tape;
  Var zero = tape.constant(Tensor::scalar(0.0));
  EXPECT_DOUBLE_EQ(sigmoid(zero).value().item(), 0.5);
  EXPECT_DOUBLE_EQ(ad::tanh(zero).value().item(), 0.0);
  EXPECT_NEAR(oneplus(zero).value().item(), 1.6931471805599454, 1e-15);
  EXPECT_NEAR(softplus(zero).value().item(), std::log(2.0), 1e-15);
}

TEST(Elementwise, RangesOfSquashingFunctions) {
  Tape tape;
  Var x = tape.constant(Tensor::vector({-800, -30, -1, 0, 1, 30, 800}));
  for (double v : sigmoid(x).value().data()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  for (double v : oneplus(x).value().data()) {
    EXPECT_GE(v, 1.0);
    EXPECT_TRUE(std::isfinite(v));
  }
  for (double v : softplus(x).value().data()) EXPECT_TRUE(std::isfinite(v));
}

TEST(Elementwise, LogOfNonPositiveIsDomainError) {
  Tape tape;
  EXPECT_THROW(ad::log(tape.constant(Tensor::vector({1.0, 0.0}))), DomainError);
  EXPECT_THROW(ad::log(tape.constant(Tensor::vector({-2.0}))), DomainError);
}

TEST(Elementwise, BinaryShapeMismatchThrows) {
  Tape tape;
  EXPECT_THROW(add(tape.constant(Tensor({2})), tape.constant(Tensor({3}))), DimensionError);
}

TEST(Elementwise, ScalarBroadcast) {
  Tape tape;
  Var s = tape.constant(Tensor::scalar(2.0));
  Var v = tape.constant(Tensor::vector({1, 2, 3}));
  expect_values(mul(s, v).value(), {2, 4, 6});
  expect_values(div(v, s).value(), {0.5, 1, 1.5});
}

TEST(Softmax, Examples) {
  Tape tape;
  expect_values(softmax(tape.constant(Tensor::vector({0, 0, 0}))).value(),
                {1.0 / 3, 1.0 / 3, 1.0 / 3}, 1e-15);
  expect_values(softmax(tape.constant(Tensor::vector({1, 0}))).value(),
                {0.7310585786300049, 0.2689414213699951}, 1e-15);
  expect_values(softmax(tape.constant(Tensor::vector({42.0}))).value(), {1.0}, 0.0);
}

TEST(Softmax, SumsToOneAndIsShiftInvariant) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    Tape tape;
    const std::size_t n = 1 + rng.uniform_int(0, 40);
    Tensor x = random_tensor(rng, {n}, -50, 50);
    Tensor shifted = x;
    const double c = rng.uniform(-100, 100);
    for (double& v : shifted.data()) v += c;
    const Tensor a = softmax(tape.constant(x)).value();
    const Tensor b = softmax(tape.constant(shifted)).value();
    EXPECT_NEAR(total(a), 1.0, 1e-12);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_GT(a[i], 0.0 - 1e-300);
      EXPECT_NEAR(a[i], b[i], 1e-12);
    }
  }
}

TEST(CosineSimilarity, Examples) {
  Tape tape;
  auto cos = [&](Tensor u, Tensor v) {
    return cosine_similarity(tape.constant(std::move(u)), tape.constant(std::move(v))).value().item();
  };
  EXPECT_NEAR(cos(Tensor::vector({1, 0}), Tensor::vector({1, 0})), 1.0, 1e-7);
  EXPECT_EQ(cos(Tensor::vector({1, 0}), Tensor::vector({0, 1})), 0.0);
  EXPECT_NEAR(cos(Tensor::vector({1, 1}), Tensor::vector({1, 0})), 0.7071067811865476, 1e-7);
  EXPECT_EQ(cos(Tensor::vector({0, 0}), Tensor::vector({1, 2})), 0.0);
}

TEST(CosineSimilarity, RowVariantMatchesScalarVariant) {
  Rng rng(3);
  Tape tape;
  Tensor rows = random_tensor(rng, {5, 4});
  Var key = tape.constant(random_tensor(rng, {4}));
  const Tensor all = row_cosine_similarity(tape.constant(rows), key).value();
  for (std::size_t i = 0; i < 5; ++i) {
    const auto r = rows.row(i);
    Var row = tape.constant(Tensor::vector(std::vector<double>(r.begin(), r.end())));
    EXPECT_NEAR(all[i], cosine_similarity(row, key).value().item(), 1e-15);
  }
}

TEST(CircularConvolve, Examples) {
  Tape tape;
  auto conv = [&](Tensor w, Tensor s) {
    return circular_convolve(tape.constant(std::move(w)), tape.constant(std::move(s))).value();
  };
  const Tensor w = Tensor::vector({0.2, 0.5, 0.3});
  EXPECT_EQ(conv(w, Tensor::vector({0, 1, 0})), w);
  expect_values(conv(Tensor::vector({1, 0, 0}), Tensor::vector({0, 0, 1})), {0, 1, 0}, 0.0);
  expect_values(conv(Tensor::vector({1, 0, 0}), Tensor::vector({0, 0.5, 0.5})), {0.5, 0.5, 0},
                0.0);
  // Offset -1 rotates backwards and wraps.
  expect_values(conv(Tensor::vector({1, 0, 0}), Tensor::vector({1, 0, 0})), {0, 0, 1}, 0.0);
}

TEST(CircularConvolve, EvenKernelIsConfigError) {
  Tape tape;
  EXPECT_THROW(circular_convolve(tape.constant(Tensor({4})), tape.constant(Tensor({2}))),
               ConfigError);
}

TEST(CircularConvolve, PreservesMass) {
  Rng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    Tape tape;
    const std::size_t n = 1 + rng.uniform_int(0, 30);
    const Tensor w = random_tensor(rng, {n}, 0.0, 1.0);
    const Tensor s = random_distribution(rng, 3);
    const Tensor out = circular_convolve(tape.constant(w), tape.constant(s)).value();
    EXPECT_NEAR(total(out), total(w), 1e-12);
  }
}

TEST(Backward, SquareAtThree) {
  Tape tape;
  Var x = tape.leaf(Tensor::scalar(3.0));
  tape.backward(mul(x, x));
  EXPECT_DOUBLE_EQ(x.grad().item(), 6.0);
}

TEST(Backward, ConstantLossGivesZeroGradients) {
  Tape tape;
  Var x = tape.leaf(Tensor::vector({1, 2}));
  Var c = tape.constant(Tensor::scalar(4.0));
  tape.backward(affine(c, 2.0, 1.0));
  for (double g : x.grad().data()) EXPECT_EQ(g, 0.0);
}

TEST(Backward, SigmoidSlopeAtZero) {
  Tape tape;
  Var x = tape.leaf(Tensor::scalar(0.0));
  tape.backward(sigmoid(x));
  EXPECT_DOUBLE_EQ(x.grad().item(), 0.25);
}

TEST(Backward, NonScalarLossIsContractError) {
  Tape tape;
  Var x = tape.leaf(Tensor::vector({1, 2}));
  EXPECT_THROW(tape.backward(sigmoid(x)), ContractError);
}

TEST(Backward, SharedOperandAccumulates) {
  Tape tape;
  Var x = tape.leaf(Tensor::scalar(2.0));
  Var y = mul(x, x);  // x^2
  tape.backward(add(y, mul(y, x)));  // x^2 + x^3 -> 2x + 3x^2 = 16
  EXPECT_DOUBLE_EQ(x.grad().item(), 16.0);
}

TEST(Backward, RepeatedPassIsBitIdenticalAfterReset) {
  Rng rng(9);
  Tape tape;
  Var a = tape.leaf(random_tensor(rng, {4, 3}));
  Var x = tape.leaf(random_tensor(rng, {3}));
  Var loss = sum(softmax(ad::tanh(matvec(a, x))) );
  Var weighted = mul(loss, sum(x));
  tape.backward(weighted);
  const Tensor ga = a.grad(), gx = x.grad();
  tape.zero_grad();
  tape.backward(weighted);
  EXPECT_EQ(a.grad(), ga);
  EXPECT_EQ(x.grad(), gx);
  // Without a reset, leaf gradients accumulate.
  tape.backward(weighted);
  for (std::size_t i = 0; i < gx.size(); ++i) EXPECT_DOUBLE_EQ(x.grad()[i], 2 * gx[i]);
}

TEST(GradCheck, QuadraticIsExactUpToRoundoff) {
  Rng rng(21);
  const Tensor x = random_tensor(rng, {6});
  const double err = grad_check(
      [](Tape&, Var v) { return sum(affine(mul(v, v), 3.0, 1.0)); }, x, 1e-5);
  EXPECT_LT(err, 1e-9);
}

TEST(GradCheck, ConstantFunctionHasZeroError) {
  const double err = grad_check(
      [](Tape& tape, Var) { return tape.constant(Tensor::scalar(7.0)); }, Tensor::vector({1, 2, 3}),
      1e-5);
  EXPECT_EQ(err, 0.0);
}

TEST(GradCheck, DetectsWrongGradient) {
  // A function whose recorded gradient is deliberately wrong (scaled by 2).
  auto broken = [](Tape& tape, Var x) {
    const double v = x.value().item();
    const std::size_t ix = x.id();
    return tape.record(Tensor::scalar(v * v), {x}, [ix](Tape& t, std::size_t self) {
      t.grad_buffer(ix)[0] += t.grad(self)[0] * 4.0 * t.value(ix)[0];
    });
  };
  EXPECT_GT(grad_check(broken, Tensor::scalar(1.5), 1e-5), 0.4);
}

// Every primitive and composite used by the machine, checked against central
// differences at 100 random points each.
struct OpCase {
  std::string name;
  std::function<std::vector<Tensor>(Rng&)> inputs;
  std::function<Var(Tape&, std::span<const Var>)> build;  // vector-valued
};

class OpGradient : public ::testing::TestWithParam<std::size_t> {};

std::vector<OpCase> op_cases() {
  auto vec = [](std::size_t n, double lo = -1, double hi = 1) {
    return [=](Rng& r) { return random_tensor(r, {n}, lo, hi); };
  };
  return {
      {"matmul", [](Rng& r) { return std::vector{random_tensor(r, {3, 4}), random_tensor(r, {4, 2})}; },
       [](Tape&, std::span<const Var> v) { return matmul(v[0], v[1]); }},
      {"matvec", [](Rng& r) { return std::vector{random_tensor(r, {3, 4}), random_tensor(r, {4})}; },
       [](Tape&, std::span<const Var> v) { return matvec(v[0], v[1]); }},
      {"matvec_transposed",
       [](Rng& r) { return std::vector{random_tensor(r, {5, 3}), random_tensor(r, {5})}; },
       [](Tape&, std::span<const Var> v) { return matvec_transposed(v[0], v[1]); }},
      {"outer", [=](Rng& r) { return std::vector{vec(4)(r), vec(3)(r)}; },
       [](Tape&, std::span<const Var> v) { return outer(v[0], v[1]); }},
      {"add_sub_mul", [=](Rng& r) { return std::vector{vec(4)(r), vec(4)(r), vec(1)(r)}; },
       [](Tape&, std::span<const Var> v) { return mul(sub(add(v[0], v[1]), mul(v[0], v[0])), add(v[1], v[2])); }},
      {"div", [=](Rng& r) { return std::vector{vec(4)(r), vec(1, 0.5, 2)(r)}; },
       [](Tape&, std::span<const Var> v) { return div(v[0], v[1]); }},
      {"sigmoid", [=](Rng& r) { return std::vector{vec(5, -4, 4)(r)}; },
       [](Tape&, std::span<const Var> v) { return sigmoid(v[0]); }},
      {"tanh", [=](Rng& r) { return std::vector{vec(5, -3, 3)(r)}; },
       [](Tape&, std::span<const Var> v) { return ad::tanh(v[0]); }},
      {"softplus", [=](Rng& r) { return std::vector{vec(5, -5, 5)(r)}; },
       [](Tape&, std::span<const Var> v) { return softplus(v[0]); }},
      {"oneplus", [=](Rng& r) { return std::vector{vec(5, -5, 5)(r)}; },
       [](Tape&, std::span<const Var> v) { return oneplus(v[0]); }},
      {"exp", [=](Rng& r) { return std::vector{vec(5, -2, 2)(r)}; },
       [](Tape&, std::span<const Var> v) { return ad::exp(v[0]); }},
      {"log", [=](Rng& r) { return std::vector{vec(5, 0.2, 3)(r)}; },
       [](Tape&, std::span<const Var> v) { return ad::log(v[0]); }},
      {"pow_scalar", [=](Rng& r) { return std::vector{vec(5, 0.05, 1)(r), vec(1, 1, 6)(r)}; },
       [](Tape&, std::span<const Var> v) { return pow_scalar(v[0], v[1]); }},
      {"softmax", [=](Rng& r) { return std::vector{vec(6, -3, 3)(r)}; },
       [](Tape&, std::span<const Var> v) { return softmax(v[0]); }},
      {"cosine_similarity", [=](Rng& r) { return std::vector{vec(4)(r), vec(4)(r)}; },
       [](Tape&, std::span<const Var> v) { return cosine_similarity(v[0], v[1]); }},
      {"row_cosine_similarity",
       [](Rng& r) { return std::vector{random_tensor(r, {5, 3}), random_tensor(r, {3})}; },
       [](Tape&, std::span<const Var> v) { return row_cosine_similarity(v[0], v[1]); }},
      {"circular_convolve", [=](Rng& r) { return std::vector{vec(6, 0, 1)(r), vec(3, 0, 1)(r)}; },
       [](Tape&, std::span<const Var> v) { return circular_convolve(v[0], v[1]); }},
      {"concat_slice", [=](Rng& r) { return std::vector{vec(3)(r), vec(4)(r)}; },
       [](Tape&, std::span<const Var> v) { return slice(concat(v[0], v[1]), 2, 4); }},
      {"stack", [=](Rng& r) { return std::vector{vec(3)(r), vec(3)(r)}; },
       [](Tape&, std::span<const Var> v) { return stack(v); }},
      {"sum", [=](Rng& r) { return std::vector{vec(5)(r)}; },
       [](Tape&, std::span<const Var> v) { return sum(v[0]); }},
  };
}

TEST(OpGradient, AllOpsMatchFiniteDifferencesAt100Points) {
  Rng rng(1234);
  for (const OpCase& op : op_cases()) {
    double worst = 0.0;
    for (int point = 0; point < 100; ++point) {
      const std::vector<Tensor> inputs = op.inputs(rng);
      // Contract the output against fixed random weights to get a scalar.
      Tape probe;
      std::vector<Var> pv;
      for (const Tensor& t : inputs) pv.push_back(probe.constant(t));
      const Tensor weights = random_tensor(rng, op.build(probe, pv).shape());
      auto f = [&](Tape& tape, std::span<const Var> v) {
        return sum(mul(op.build(tape, v), tape.constant(weights)));
      };
      worst = std::max(worst, grad_check(f, inputs, 1e-5));
    }
    EXPECT_LT(worst, 1e-4) << op.name;
  }
}

TEST(Clamp, ValuesAndGradientMask) {
  Tape tape;
  Var x = tape.leaf(Tensor::vector({-1.0, 0.5, 2.0}));
  Var y = clamp(x, 0.0, 1.0);
  expect_values(y.value(), {0.0, 0.5, 1.0}, 0.0);
  tape.backward(sum(y));
  expect_values(x.grad(), {0.0, 1.0, 0.0}, 0.0);
}

TEST(PowScalar, NegativeBaseIsDomainError) {
  Tape tape;
  Var p = tape.constant(Tensor::scalar(2.0));
  EXPECT_THROW(pow_scalar(tape.constant(Tensor::vector({0.5, -0.1})), p), DomainError);
  EXPECT_THROW(pow_scalar(tape.constant(Tensor::vector({0.5})), tape.constant(Tensor({2}))),
               DimensionError);
}

TEST(PowScalar, ZeroBaseHasFiniteGradients) {
  Tape tape;
  Var x = tape.leaf(Tensor::vector({0.0, 0.5}));
  Var p = tape.leaf(Tensor::scalar(2.5));
  tape.backward(sum(pow_scalar(x, p)));
  for (double g : x.grad().data()) EXPECT_TRUE(std::isfinite(g));
  EXPECT_TRUE(std::isfinite(p.grad().item()));
  EXPECT_EQ(x.grad()[0], 0.0);
}
