#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "raincast/autodiff.hpp"
#include "raincast/errors.hpp"
#include "raincast/optim.hpp"
#include "raincast/rng.hpp"

using namespace raincast;

namespace {

Tensor random_tensor(Rng& rng, std::vector<int> shape, double scale = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.values) v = rng.normal() * scale;
  return t;
}

// independent nested-loop oracle for same-padded stride-1 convolution
Tensor conv2d_oracle(const Tensor& in, const Tensor& ker, const Tensor& bias) {
  const int ci = in.dim(0), h = in.dim(1), w = in.dim(2);
  const int co = ker.dim(0), k = ker.dim(2), pad = k / 2;
  Tensor out = Tensor::zeros({co, h, w});
  for (int o = 0; o < co; ++o)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double acc = bias.values[o];
        for (int i = 0; i < ci; ++i)
          for (int dy = 0; dy < k; ++dy)
            for (int dx = 0; dx < k; ++dx) {
              const int sy = y + dy - pad, sx = x + dx - pad;
              if (sy >= 0 && sy < h && sx >= 0 && sx < w)
                acc += in.at3(i, sy, sx) * ker.at4(o, i, dy, dx);
            }
        out.at3(o, y, x) = acc;
      }
  return out;
}

// valid 2x2 stride-2 convolution pairing with tconv2d: kernel laid out as
// tconv's (B, A, 2, 2), mapping (A, 2H, 2W) -> (B, H, W)
Tensor conv_s2_oracle(const Tensor& u, const Tensor& ker) {
  const int a = u.dim(0), h2 = u.dim(1), w2 = u.dim(2);
  const int b = ker.dim(0);
  Tensor z = Tensor::zeros({b, h2 / 2, w2 / 2});
  for (int ob = 0; ob < b; ++ob)
    for (int y = 0; y < h2 / 2; ++y)
      for (int x = 0; x < w2 / 2; ++x) {
        double acc = 0.0;
        for (int ia = 0; ia < a; ++ia)
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx)
              acc += u.at3(ia, 2 * y + dy, 2 * x + dx) * ker.at4(ob, ia, dy, dx);
        z.at3(ob, y, x) = acc;
      }
  return z;
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += a.values[i] * b.values[i];
  return s;
}

}  // namespace

TEST_CASE("conv2d zero kernel and zero bias give zero output") {
  Rng rng(1);
  auto in = constant(random_tensor(rng, {2, 4, 4}));
  auto ker = constant(Tensor::zeros({3, 2, 3, 3}));
  auto bias = constant(Tensor::zeros({3}));
  const NodePtr out = conv2d(in, ker, bias);
  for (double v : out->value.values) CHECK(v == 0.0);
}

TEST_CASE("conv2d delta kernel reproduces the input") {
  Rng rng(2);
  Tensor img = random_tensor(rng, {1, 5, 6});
  Tensor k = Tensor::zeros({1, 1, 3, 3});
  k.at4(0, 0, 1, 1) = 1.0;  // center tap
  const NodePtr out = conv2d(constant(img), constant(k), constant(Tensor::zeros({1})));
  REQUIRE(out->value.shape == img.shape);
  for (std::size_t i = 0; i < img.values.size(); ++i)
    CHECK(out->value.values[i] == doctest::Approx(img.values[i]).epsilon(1e-12));
}

TEST_CASE("conv2d matches the nested-loop oracle") {
  Rng rng(3);
  for (int iter = 0; iter < 10; ++iter) {
    const int ci = 1 + static_cast<int>(rng.uniform_index(3));
    const int co = 1 + static_cast<int>(rng.uniform_index(3));
    const int k = rng.uniform() < 0.5 ? 1 : 3;
    Tensor in = random_tensor(rng, {ci, 4, 4});
    Tensor ker = random_tensor(rng, {co, ci, k, k});
    Tensor bias = random_tensor(rng, {co});
    const NodePtr out = conv2d(constant(in), constant(ker), constant(bias));
    const Tensor want = conv2d_oracle(in, ker, bias);
    REQUIRE(out->value.shape == want.shape);
    for (std::size_t i = 0; i < want.values.size(); ++i)
      CHECK(out->value.values[i] == doctest::Approx(want.values[i]).epsilon(1e-6));
  }
}

TEST_CASE("conv2d rejects mismatched shapes") {
  Rng rng(4);
  auto in = constant(random_tensor(rng, {2, 4, 4}));
  CHECK_THROWS_AS(conv2d(in, constant(Tensor::zeros({3, 5, 3, 3})), constant(Tensor::zeros({3}))),
                  ValidationError);
  CHECK_THROWS_AS(conv2d(in, constant(Tensor::zeros({3, 2, 2, 2})), constant(Tensor::zeros({3}))),
                  ValidationError);
  CHECK_THROWS_AS(conv2d(in, constant(Tensor::zeros({3, 2, 3, 3})), constant(Tensor::zeros({4}))),
                  ValidationError);
}

TEST_CASE("maxpool2 hand example and brute force") {
  Tensor t({1, 2, 2}, {1, 2, 3, 4});
  const NodePtr out = maxpool2(constant(t));
  REQUIRE(out->value.shape == std::vector<int>{1, 1, 1});
  CHECK(out->value.values[0] == 4.0);

  Tensor c = Tensor::full({3, 4, 4}, 2.5);
  const NodePtr oc = maxpool2(constant(c));
  REQUIRE(oc->value.shape == std::vector<int>{3, 2, 2});
  for (double v : oc->value.values) CHECK(v == 2.5);

  Rng rng(5);
  Tensor r = random_tensor(rng, {2, 8, 8});
  const NodePtr pooled = maxpool2(constant(r));
  for (int ch = 0; ch < 2; ++ch)
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) {
        const double want = std::max({r.at3(ch, 2 * y, 2 * x), r.at3(ch, 2 * y, 2 * x + 1),
                                      r.at3(ch, 2 * y + 1, 2 * x), r.at3(ch, 2 * y + 1, 2 * x + 1)});
        CHECK(pooled->value.at3(ch, y, x) == want);
      }

  CHECK_THROWS_AS(maxpool2(constant(Tensor::zeros({1, 3, 4}))), ValidationError);
}

TEST_CASE("maxpool2 gradient routes to the first maximal element") {
  Tensor t({1, 2, 2}, {5, 5, 3, 5});  // tie: first occurrence is index 0
  auto in = parameter(t);
  const NodePtr out = maxpool2(in);
  backward(out);
  CHECK(in->grad.values[0] == 1.0);
  CHECK(in->grad.values[1] == 0.0);
  CHECK(in->grad.values[2] == 0.0);
  CHECK(in->grad.values[3] == 0.0);
}

TEST_CASE("tconv2d hand expansion on a single pixel") {
  Tensor in({1, 1, 1}, {2.5});
  Tensor ker({1, 1, 2, 2}, {0.5, -1.0, 2.0, 3.0});
  const NodePtr out = tconv2d(constant(in), constant(ker), constant(Tensor::zeros({1})));
  REQUIRE(out->value.shape == std::vector<int>{1, 2, 2});
  CHECK(out->value.values[0] == doctest::Approx(1.25));
  CHECK(out->value.values[1] == doctest::Approx(-2.5));
  CHECK(out->value.values[2] == doctest::Approx(5.0));
  CHECK(out->value.values[3] == doctest::Approx(7.5));

  const NodePtr zero =
      tconv2d(constant(in), constant(Tensor::zeros({1, 2, 2, 2})), constant(Tensor::zeros({2})));
  for (double v : zero->value.values) CHECK(v == 0.0);
}

TEST_CASE("tconv2d is the adjoint of the stride-2 valid convolution") {
  Rng rng(6);
  for (int iter = 0; iter < 20; ++iter) {
    const int a = 1 + static_cast<int>(rng.uniform_index(3));
    const int b = 1 + static_cast<int>(rng.uniform_index(3));
    const int h = 2 * (1 + static_cast<int>(rng.uniform_index(3)));
    Tensor u = random_tensor(rng, {a, h, h});
    Tensor g = random_tensor(rng, {b, h / 2, h / 2});
    Tensor ker = random_tensor(rng, {b, a, 2, 2});

    // <conv_s2(u), g> == <u, tconv(g)>
    const Tensor z = conv_s2_oracle(u, ker);
    const NodePtr up = tconv2d(constant(g), constant(ker), constant(Tensor::zeros({a})));
    const double lhs = dot(z, g);
    const double rhs = dot(u, up->value);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("tconv2d forward equals the strided conv input gradient numerically") {
  Rng rng(7);
  Tensor u = random_tensor(rng, {2, 4, 4});
  Tensor g = random_tensor(rng, {3, 2, 2});
  Tensor ker = random_tensor(rng, {3, 2, 2, 2});
  const NodePtr up = tconv2d(constant(g), constant(ker), constant(Tensor::zeros({2})));

  // d<conv_s2(u), g>/du_i by central differences (exact for a linear map)
  const double h = 1e-4;
  for (std::size_t i = 0; i < u.values.size(); i += 7) {
    Tensor up_u = u, dn_u = u;
    up_u.values[i] += h;
    dn_u.values[i] -= h;
    const double fd = (dot(conv_s2_oracle(up_u, ker), g) - dot(conv_s2_oracle(dn_u, ker), g)) / (2 * h);
    CHECK(up->value.values[i] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("relu forward and gradient") {
  Tensor t({1, 1, 4}, {-1.0, 2.0, 0.0, -3.5});
  auto in = parameter(t);
  const NodePtr out = relu(in);
  CHECK(out->value.values[0] == 0.0);
  CHECK(out->value.values[1] == 2.0);
  CHECK(out->value.values[2] == 0.0);
  CHECK(out->value.values[3] == 0.0);
  backward(out);
  CHECK(in->grad.values[0] == 0.0);
  CHECK(in->grad.values[1] == 1.0);
  CHECK(in->grad.values[2] == 0.0);  // derivative at the kink chosen as 0
  CHECK(in->grad.values[3] == 0.0);
}

TEST_CASE("concat_channels stacks and splits gradients") {
  Rng rng(8);
  Tensor a = random_tensor(rng, {3, 2, 2});
  Tensor b = random_tensor(rng, {5, 2, 2});
  auto na = parameter(a);
  auto nb = parameter(b);
  const NodePtr out = concat_channels(na, nb);
  REQUIRE(out->value.shape == std::vector<int>{8, 2, 2});
  for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(out->value.values[i] == a.values[i]);
  for (std::size_t i = 0; i < b.values.size(); ++i)
    CHECK(out->value.values[a.values.size() + i] == b.values[i]);

  Tensor seed = Tensor::zeros({8, 2, 2});
  for (std::size_t i = 0; i < seed.values.size(); ++i) seed.values[i] = static_cast<double>(i);
  backward(out, seed);
  for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(na->grad.values[i] == seed.values[i]);
  for (std::size_t i = 0; i < b.values.size(); ++i)
    CHECK(nb->grad.values[i] == seed.values[a.values.size() + i]);

  CHECK_THROWS_AS(concat_channels(na, parameter(Tensor::zeros({1, 3, 2}))), ValidationError);
}

TEST_CASE("l1_loss examples and tie subgradient") {
  Tensor p({2}, {1.0, 3.0});
  Tensor t({2}, {1.0, 2.0});
  auto np = parameter(p);
  const NodePtr loss = l1_loss(np, t);
  CHECK(loss->value.values[0] == 1.0);
  backward(loss);
  CHECK(np->grad.values[0] == 0.0);  // exact tie
  CHECK(np->grad.values[1] == 1.0);

  const NodePtr zero = l1_loss(constant(t), t);
  CHECK(zero->value.values[0] == 0.0);

  Rng rng(9);
  Tensor rp = random_tensor(rng, {4, 3, 3});
  Tensor rt = random_tensor(rng, {4, 3, 3});
  double want = 0.0;
  for (std::size_t i = 0; i < rp.values.size(); ++i) want += std::fabs(rp.values[i] - rt.values[i]);
  const NodePtr rl = l1_loss(constant(rp), rt);
  CHECK(rl->value.values[0] == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("backward accumulates across repeated use and repeated calls") {
  Tensor t({1, 2, 2}, {1.0, 2.0, 3.0, 4.0});
  auto x = parameter(t);
  // diamond: both concat operands are the same node
  const NodePtr out = l1_loss(concat_channels(x, x), Tensor::zeros({2, 2, 2}));
  backward(out);
  for (double g : x->grad.values) CHECK(g == 2.0);  // both branches, all positive
  backward(out);  // second sweep accumulates again
  for (double g : x->grad.values) CHECK(g == 4.0);
  zero_grad({x});
  for (double g : x->grad.values) CHECK(g == 0.0);
}

TEST_CASE("grad_check: conv2d on random 1x4x4") {
  Rng rng(10);
  Tensor in = random_tensor(rng, {1, 4, 4});
  Tensor ker = random_tensor(rng, {2, 1, 3, 3});
  Tensor bias = random_tensor(rng, {2});
  Tensor target = random_tensor(rng, {2, 4, 4}, 3.0);
  const double err = grad_check(
      [&](const std::vector<NodePtr>& xs) { return l1_loss(conv2d(xs[0], xs[1], xs[2]), target); },
      {in, ker, bias});
  CHECK(err < 1e-4);
}

TEST_CASE("grad_check: linear map is exact to machine precision") {
  Rng rng(11);
  Tensor in = random_tensor(rng, {1, 4, 4});
  Tensor ker = random_tensor(rng, {1, 1, 3, 3});
  // target far below any output value makes |p - t| linear in p
  Tensor target = Tensor::full({1, 4, 4}, -20.0);
  const double err = grad_check(
      [&](const std::vector<NodePtr>& xs) {
        return l1_loss(conv2d(xs[0], xs[1], constant(Tensor::zeros({1}))), target);
      },
      {in, ker});
  CHECK(err < 1e-8);
}

TEST_CASE("grad_check: every composite op chain passes at 1e-3") {
  Rng rng(12);
  Tensor in = random_tensor(rng, {2, 4, 4});
  Tensor k1 = random_tensor(rng, {4, 2, 3, 3}, 0.5);
  Tensor b1 = random_tensor(rng, {4}, 0.1);
  Tensor kt = random_tensor(rng, {4, 3, 2, 2}, 0.5);
  Tensor bt = random_tensor(rng, {3}, 0.1);
  Tensor target = random_tensor(rng, {5, 4, 4}, 2.0);
  const double err = grad_check(
      [&](const std::vector<NodePtr>& xs) {
        const NodePtr h = relu(conv2d(xs[0], xs[1], xs[2]));
        const NodePtr p = maxpool2(h);              // (4,2,2)
        const NodePtr u = tconv2d(p, xs[3], xs[4]);  // (3,4,4)
        const NodePtr c = concat_channels(u, relu(xs[0]));
        return l1_loss(c, target);
      },
      {in, k1, b1, kt, bt});
  CHECK(err < 1e-3);
}

TEST_CASE("adam: zero gradient and zero decay leave parameters unchanged") {
  Rng rng(13);
  auto p = parameter(random_tensor(rng, {3, 3}));
  const Tensor before = p->value;
  AdamState state;
  state.lr = 1e-2;
  for (int s = 0; s < 5; ++s) {
    zero_grad({p});
    adam_step({p}, state);
  }
  CHECK(p->value.values == before.values);  // exact identity
  CHECK(state.step == 5);
}

TEST_CASE("adam first step matches the hand-evaluated formula") {
  auto w = parameter(Tensor({1}, {1.0}));
  w->ensure_grad();
  w->grad.values[0] = 1.0;  // raw gradient
  AdamState state;
  state.lr = 1e-4;
  state.weight_decay = 1e-4;
  adam_step({w}, state);
  // g = 1 + 1e-4; mhat = g; vhat = g^2; step = lr*g/(g + eps) ~ lr within 1e-12
  const double delta = 1.0 - w->value.values[0];
  CHECK(std::fabs(delta - 1e-4) < 1e-8);
  CHECK(state.v[0].values[0] >= 0.0);
}

TEST_CASE("adam descends on a quadratic") {
  auto w = parameter(Tensor({1}, {1.0}));
  AdamState state;
  state.lr = 0.1;
  double prev = 0.5;  // f(1) = 1/2
  for (int s = 0; s < 2; ++s) {
    zero_grad({w});
    w->grad.values[0] = w->value.values[0];  // f'(w) = w
    adam_step({w}, state);
  }
  const double f = 0.5 * w->value.values[0] * w->value.values[0];
  CHECK(f < prev);
}

TEST_CASE("scheduler: improving losses never reduce the lr") {
  PlateauScheduler sched(1e-4);
  double loss = 100.0;
  for (int e = 0; e < 500; ++e) {
    sched.step(loss);
    loss *= 0.999;  // strictly decreasing
  }
  CHECK(sched.lr() == 1e-4);
  CHECK(sched.reductions() == 0);
}

TEST_CASE("scheduler: constant loss reduces after patience epochs") {
  PlateauScheduler sched(1e-4);
  for (int e = 0; e < 101; ++e) sched.step(1.0);
  CHECK(sched.lr() == doctest::Approx(1e-5).epsilon(1e-12));
  CHECK(sched.reductions() == 1);

  PlateauScheduler sched2(1e-4);
  for (int e = 0; e < 202; ++e) sched2.step(1.0);
  CHECK(sched2.lr() == doctest::Approx(1e-6).epsilon(1e-12));
  CHECK(sched2.reductions() == 2);
}

TEST_CASE("scheduler: counter resets on improvement; lr is non-increasing") {
  PlateauScheduler sched(1.0, 3, 0.5);
  sched.step(10.0);  // improves (best was inf)
  sched.step(10.0);
  sched.step(10.0);
  CHECK(sched.lr() == 1.0);  // only 2 bad epochs so far
  sched.step(9.0);  // improvement resets the counter
  CHECK(sched.bad_epochs() == 0);
  sched.step(9.0);
  sched.step(9.0);
  CHECK(sched.lr() == 1.0);
  sched.step(9.0);  // third consecutive bad epoch
  CHECK(sched.lr() == 0.5);
  CHECK(sched.bad_epochs() == 0);  // reset on reduction

  Rng rng(14);
  PlateauScheduler rand_sched(1.0, 5, 0.1);
  double prev_lr = rand_sched.lr();
  for (int e = 0; e < 300; ++e) {
    const double lr = rand_sched.step(rng.uniform());
    CHECK(lr <= prev_lr);
    prev_lr = lr;
  }
}

TEST_CASE("quantize_f32 snaps to the binary32 grid") {
  Tensor t({2}, {0.1, 1.0});
  quantize_f32(t);
  CHECK(t.values[0] == static_cast<double>(0.1f));
  CHECK(t.values[1] == 1.0);
  quantize_f32(t);  // idempotent
  CHECK(t.values[0] == static_cast<double>(0.1f));
}
