#include <doctest.h>

#include <cmath>
#include <random>

#include "cmmp/errors.hpp"
#include "cmmp/layers.hpp"
#include "oracle.hpp"

using namespace cmmp;
using cmmp::testing::compare_gradients;
using cmmp::testing::random_tensor;
using cmmp::testing::rows_of;
using cmmp::testing::scalar_cell;
using cmmp::testing::scalar_layer;
using cmmp::testing::ScalarState;
using cmmp::testing::sigmoid;

namespace {

LSTMLayerParams random_lstm(std::size_t in, std::size_t hidden, std::mt19937_64& rng) {
  return {random_tensor({4 * hidden, in}, rng, 0.5), random_tensor({4 * hidden, hidden}, rng, 0.5),
          random_tensor({4 * hidden}, rng, 0.5)};
}

LSTMLayerParams zero_lstm(std::size_t in, std::size_t hidden) {
  return {Tensor({4 * hidden, in}), Tensor({4 * hidden, hidden}), Tensor({4 * hidden})};
}

double max_abs_diff(const Tensor& a, const std::vector<std::vector<double>>& b) {
  double worst = 0.0;
  for (std::size_t r = 0; r < b.size(); ++r) {
    for (std::size_t c = 0; c < b[r].size(); ++c) worst = std::max(worst, std::abs(a(r, c) - b[r][c]));
  }
  return worst;
}

}  // namespace

TEST_CASE("linear forward examples") {
  Tape tape;
  const LinearParams identity{Tensor::matrix({{1, 0}, {0, 1}}), Tensor::vector({0, 0})};
  CHECK(linear_forward(bind(tape, identity), tape.constant(Tensor::vector({1, 2}))).value() ==
        Tensor::vector({1, 2}));
  const LinearParams p{Tensor::matrix({{1, 1}}), Tensor::vector({-3})};
  CHECK(linear_forward(bind(tape, p), tape.constant(Tensor::vector({1, 2}))).value() == Tensor::vector({0}));
  CHECK_THROWS_AS(linear_forward(bind(tape, p), tape.constant(Tensor::vector({1, 2, 3}))), ShapeError);
}

TEST_CASE("linear forward matches brute-force dot products") {
  std::mt19937_64 rng(21);
  for (int n = 0; n < 20; ++n) {
    const LinearParams p{random_tensor({5, 7}, rng), random_tensor({5}, rng)};
    const Tensor x = random_tensor({3, 7}, rng);
    Tape tape;
    const Tensor y = linear_forward(bind(tape, p), tape.constant(x)).value();
    for (std::size_t r = 0; r < 3; ++r) {
      for (std::size_t o = 0; o < 5; ++o) {
        double v = p.bias[o];
        for (std::size_t j = 0; j < 7; ++j) v += p.weight(o, j) * x(r, j);
        CHECK(std::abs(y(r, o) - v) <= 1e-12);
      }
    }
  }
}

TEST_CASE("lstm cell with zero parameters stays at zero") {
  Tape tape;
  const auto p = bind(tape, zero_lstm(3, 2));
  const LSTMState s = lstm_cell_step(p, tape.constant(Tensor({1, 3})), {tape.constant(Tensor({1, 2})),
                                                                         tape.constant(Tensor({1, 2}))});
  CHECK(s.h.value() == Tensor({1, 2}, 0.0));
  CHECK(s.c.value() == Tensor({1, 2}, 0.0));
}

TEST_CASE("forget bias carries the cell state") {
  LSTMLayerParams p = zero_lstm(1, 1);
  p.bias[1] = 1.0;
  Tape tape;
  const LSTMState s = lstm_cell_step(bind(tape, p), tape.constant(Tensor({1, 1})),
                                     {tape.constant(Tensor({1, 1})), tape.constant(Tensor({1, 1}, 1.0))});
  CHECK(std::abs(s.c.value().item() - sigmoid(1.0)) <= 1e-15);
  CHECK(s.c.value().item() == doctest::Approx(0.73106).epsilon(1e-5));
}

TEST_CASE("lstm cell matches the scalar-loop reference") {
  std::mt19937_64 rng(22);
  for (int n = 0; n < 20; ++n) {
    const auto p = random_lstm(4, 3, rng);
    const Tensor x = random_tensor({1, 4}, rng), h = random_tensor({1, 3}, rng), c = random_tensor({1, 3}, rng);
    Tape tape;
    const LSTMState s =
        lstm_cell_step(bind(tape, p), tape.constant(x), {tape.constant(h), tape.constant(c)});
    const ScalarState ref = scalar_cell(p, x.data, {h.data, c.data});
    CHECK(max_abs_diff(s.h.value(), {ref.h}) <= 1e-12);
    CHECK(max_abs_diff(s.c.value(), {ref.c}) <= 1e-12);
  }
}

TEST_CASE("two-layer lstm with zero parameters emits a zero message") {
  Tape tape;
  const MessageGeneratorVars g = bind(tape, MessageGeneratorParams{zero_lstm(3, 5), zero_lstm(5, 3)});
  std::mt19937_64 rng(1);
  CHECK(lstm2_forward(g, tape.constant(random_tensor({4, 3}, rng))).value() == Tensor({4, 3}, 0.0));
}

TEST_CASE("two-layer lstm at T=1 is two chained cells") {
  std::mt19937_64 rng(23);
  const MessageGeneratorParams gp{random_lstm(3, 4, rng), random_lstm(4, 3, rng)};
  const Tensor x = random_tensor({1, 3}, rng);
  Tape tape;
  const auto g = bind(tape, gp);
  const Var zero4 = tape.constant(Tensor({1, 4})), zero3 = tape.constant(Tensor({1, 3}));
  const LSTMState s1 = lstm_cell_step(g.layer1, tape.constant(x), {zero4, zero4});
  const LSTMState s2 = lstm_cell_step(g.layer2, s1.h, {zero3, zero3});
  CHECK(lstm2_forward(g, tape.constant(x)).value() == s2.h.value());
}

TEST_CASE("two-layer lstm matches an independent unroll") {
  std::mt19937_64 rng(24);
  for (int n = 0; n < 20; ++n) {
    const MessageGeneratorParams gp{random_lstm(3, 5, rng), random_lstm(5, 3, rng)};
    const Tensor x = random_tensor({4, 3}, rng);
    Tape tape;
    const Tensor m = lstm2_forward(bind(tape, gp), tape.constant(x)).value();
    const auto ref = scalar_layer(gp.layer2, scalar_layer(gp.layer1, rows_of(x)));
    CHECK(max_abs_diff(m, ref) <= 1e-12);
  }
}

TEST_CASE("batched lstm equals per-sequence evaluation") {
  std::mt19937_64 rng(25);
  const MessageGeneratorParams gp{random_lstm(3, 4, rng), random_lstm(4, 3, rng)};
  const std::size_t T = 3, B = 2;
  std::vector<Tensor> steps;
  for (std::size_t t = 0; t < T; ++t) steps.push_back(random_tensor({B, 3}, rng));
  Tape tape;
  const auto g = bind(tape, gp);
  Sequence seq;
  for (const auto& s : steps) seq.push_back(tape.constant(s));
  const Sequence out = lstm2_forward(g, seq);
  for (std::size_t b = 0; b < B; ++b) {
    Tensor single({T, 3});
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t j = 0; j < 3; ++j) single(t, j) = steps[t](b, j);
    }
    const Tensor m = lstm2_forward(g, tape.constant(single)).value();
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(out[t].value()(b, j) - m(t, j)) <= 1e-12);
    }
  }
}

TEST_CASE("encoder examples") {
  std::mt19937_64 rng(26);
  const EncoderParams zero{{Tensor({4, 3}), Tensor({4})}, {Tensor({2, 4}), Tensor({2})}};
  Tape tape;
  CHECK(mlp_encode_sequence(bind(tape, zero), tape.constant(random_tensor({5, 3}, rng))).value() ==
        Tensor({5, 2}, 0.0));

  const EncoderParams e{{random_tensor({4, 3}, rng), random_tensor({4}, rng)},
                        {random_tensor({2, 4}, rng), random_tensor({2}, rng)}};
  const auto ev = bind(tape, e);
  const Tensor raw = random_tensor({5, 3}, rng);
  const Tensor feats = mlp_encode_sequence(ev, tape.constant(raw)).value();

  SUBCASE("single row is the composition of its layers") {
    for (std::size_t t = 0; t < 5; ++t) {
      const Tensor row({3}, std::vector<double>(raw.data.begin() + t * 3, raw.data.begin() + t * 3 + 3));
      const Tensor y = linear_forward(ev.l2, ad::tanh(linear_forward(ev.l1, tape.constant(row)))).value();
      for (std::size_t j = 0; j < 2; ++j) CHECK(std::abs(feats(t, j) - y[j]) <= 1e-12);
    }
  }
  SUBCASE("permuting frames permutes feature rows") {
    const std::vector<std::size_t> perm{3, 0, 4, 1, 2};
    Tensor shuffled({5, 3});
    for (std::size_t t = 0; t < 5; ++t) {
      for (std::size_t j = 0; j < 3; ++j) shuffled(t, j) = raw(perm[t], j);
    }
    const Tensor f2 = mlp_encode_sequence(ev, tape.constant(shuffled)).value();
    for (std::size_t t = 0; t < 5; ++t) {
      for (std::size_t j = 0; j < 2; ++j) CHECK(f2(t, j) == feats(perm[t], j));
    }
  }
  SUBCASE("zeroing one frame changes only its row") {
    Tensor z = raw;
    for (std::size_t j = 0; j < 3; ++j) z(2, j) = 0.0;
    const Tensor f2 = mlp_encode_sequence(ev, tape.constant(z)).value();
    for (std::size_t t = 0; t < 5; ++t) {
      for (std::size_t j = 0; j < 2; ++j) {
        if (t != 2) CHECK(f2(t, j) == feats(t, j));
      }
    }
    CHECK(f2(2, 0) != feats(2, 0));
  }
  CHECK_THROWS_AS(mlp_encode_sequence(ev, tape.constant(Tensor({5, 4}))), ShapeError);
}

TEST_CASE("initialization") {
  SUBCASE("deterministic for a seed") {
    std::mt19937_64 a(9), b(9);
    LSTMLayerParams pa, pb;
    init_lstm_layer(pa, 6, 4, a);
    init_lstm_layer(pb, 6, 4, b);
    CHECK(pa.w_ih == pb.w_ih);
    CHECK(pa.w_hh == pb.w_hh);
    CHECK(pa.bias == pb.bias);
  }
  SUBCASE("forget-gate bias block is one, the rest zero") {
    std::mt19937_64 rng(10);
    LSTMLayerParams p;
    init_lstm_layer(p, 6, 4, rng);
    for (std::size_t k = 0; k < 16; ++k) CHECK(p.bias[k] == (k >= 4 && k < 8 ? 1.0 : 0.0));
  }
  SUBCASE("weights lie inside the fan-based bound") {
    std::mt19937_64 rng(12);
    LinearParams p;
    init_linear(p, 10, 6, rng);
    const double bound = std::sqrt(6.0 / 16.0);
    for (const double v : p.weight.data) CHECK(std::abs(v) <= bound);
    CHECK(p.bias == Tensor({6}, 0.0));
  }
  SUBCASE("64x64 sample mean is near zero") {
    std::mt19937_64 rng(13);
    const Tensor w = glorot_uniform(64, 64, 64, 64, rng);
    double mean = 0.0;
    for (const double v : w.data) mean += v;
    mean /= static_cast<double>(w.size());
    CHECK(std::abs(mean) <= 0.05);
  }
  SUBCASE("zero dimensions are rejected") {
    std::mt19937_64 rng(14);
    LinearParams p;
    CHECK_THROWS_AS(init_linear(p, 0, 3, rng), ConfigError);
    LSTMLayerParams l;
    CHECK_THROWS_AS(init_lstm_layer(l, 3, 0, rng), ConfigError);
  }
}

TEST_CASE("layer compositions are differentiable end to end") {
  std::mt19937_64 rng(27);
  const auto result = compare_gradients(
      [](const std::vector<Var>& v) {
        const EncoderVars e{{v[1], v[2]}, {v[3], v[4]}};
        const LSTMLayerVars l1{v[5], v[6], v[7], 3};
        const LSTMLayerVars l2{v[8], v[9], v[10], 2};
        return lstm2_forward(MessageGeneratorVars{l1, l2}, mlp_encode_sequence(e, v[0]));
      },
      {random_tensor({4, 3}, rng), random_tensor({5, 3}, rng), random_tensor({5}, rng),
       random_tensor({2, 5}, rng), random_tensor({2}, rng), random_tensor({12, 2}, rng, 0.5),
       random_tensor({12, 3}, rng, 0.5), random_tensor({12}, rng, 0.5), random_tensor({8, 3}, rng, 0.5),
       random_tensor({8, 2}, rng, 0.5), random_tensor({8}, rng, 0.5)},
      rng);
  CHECK(result.max_error <= 1e-6);
}
