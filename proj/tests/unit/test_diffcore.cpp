#include <cmath>
#include <numeric>

#include "doctest.h"
#include "mgno/diffcore/gradcheck.hpp"
#include "mgno/diffcore/ops.hpp"
#include "mgno/diffcore/rng.hpp"
#include "mgno/diffcore/tensor.hpp"

using namespace mgno::diff;

namespace {

Tensor random_tensor(Shape shape, SeededRng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = lo + (hi - lo) * rng.uniform();
  return Tensor(std::move(shape), std::move(v));
}

// Values bounded away from zero so relu kinks are never straddled by a finite difference.
Tensor away_from_zero(Shape shape, SeededRng& rng) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) {
    x = 0.1 + 0.9 * rng.uniform();
    if (rng.uniform() < 0.5) x = -x;
  }
  return Tensor(std::move(shape), std::move(v));
}

std::vector<double> vec(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

TEST_CASE("philox known answers") {
  const auto zero = SeededRng::philox_block(0, 0, 0);
  CHECK(zero[0] == 0x6627e8d5u);
  CHECK(zero[1] == 0xe169c58du);
  CHECK(zero[2] == 0xbc57ac4cu);
  CHECK(zero[3] == 0x9b00dbd8u);
  const auto ones = SeededRng::philox_block(~0ull, ~0ull, ~0ull);
  CHECK(ones[0] == 0x408f276du);
  CHECK(ones[1] == 0x41c83b0eu);
  CHECK(ones[2] == 0xa20bc7c6u);
  CHECK(ones[3] == 0x6d5451fdu);
}

TEST_CASE("rng streams are reproducible and distinct") {
  SeededRng a(42, 3), b(42, 3), c(42, 4);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differs |= x != c.next_u64();
  }
  CHECK(differs);
}

TEST_CASE("rng moments") {
  SeededRng rng(7);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0;
  for (int i = 0; i < n; ++i) {
    su += rng.uniform();
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::abs(sn / n) < 0.01);
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
  for (int i = 0; i < 1000; ++i) CHECK(rng.uniform_index(7) < 7);
}

TEST_CASE("matmul values") {
  SeededRng rng(1);
  auto x = random_tensor({3, 2}, rng);
  auto eye = Tensor::matrix({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  CHECK(vec(matmul(eye, x)) == vec(x));
  auto c = matmul(Tensor::matrix({{1, 2}, {3, 4}}), Tensor::matrix({{1}, {1}}));
  CHECK(c.shape() == Shape{2, 1});
  CHECK(vec(c) == std::vector<double>{3, 7});
  CHECK_THROWS_AS(matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), ShapeError);
}

TEST_CASE("matmul gradient against central differences") {
  SeededRng rng(2);
  auto a = random_tensor({4, 5}, rng), b = random_tensor({5, 3}, rng);
  auto report = gradcheck([&] { return sum(matmul(a, b)); }, {{"a", a}, {"b", b}});
  CHECK(report.pass());
  CHECK(report.worst() <= 1e-6);
}

TEST_CASE("elementwise and selection ops") {
  CHECK(vec(relu(Tensor({3}, {-1, 0, 2}))) == std::vector<double>{0, 0, 2});
  auto rows = Tensor::matrix({{0, 0}, {1, 1}, {2, 2}, {3, 3}});
  std::vector<Index> idx{2, 0};
  CHECK(vec(gather_rows(rows, idx)) == std::vector<double>{2, 2, 0, 0});
  std::vector<Index> bad{4};
  CHECK_THROWS_AS(gather_rows(rows, bad), ShapeError);
  CHECK(vec(scale(Tensor({2}, {1, -2}), 3.0)) == std::vector<double>{3, -6});
  CHECK(vec(add(Tensor({2}, {1, 2}), Tensor({2}, {3, 4}))) == std::vector<double>{4, 6});
  auto cat = concat_cols(Tensor::matrix({{1}, {2}}), Tensor::matrix({{3, 4}, {5, 6}}));
  CHECK(cat.shape() == Shape{2, 3});
  CHECK(vec(cat) == std::vector<double>{1, 3, 4, 2, 5, 6});
  CHECK_THROWS_AS(add(Tensor::zeros({2, 2}), Tensor::zeros({2, 3})), ShapeError);
}

TEST_CASE("composite relu(a·b + c) gradcheck") {
  SeededRng rng(3);
  auto a = random_tensor({4, 3}, rng), b = random_tensor({3, 5}, rng);
  // Pick c so that every pre-activation sits at least 0.05 away from zero.
  auto ab = matmul(a, b);
  std::vector<double> cv(20);
  for (std::size_t i = 0; i < cv.size(); ++i) {
    const double target = (rng.uniform() < 0.5 ? -1.0 : 1.0) * (0.05 + rng.uniform());
    cv[i] = target - ab.data()[i];
  }
  auto c = Tensor({4, 5}, cv);
  auto report = gradcheck([&] { return sum_squares(relu(add(matmul(a, b), c))); },
                          {{"a", a}, {"b", b}, {"c", c}});
  CHECK(report.pass());
  CHECK(report.worst() <= 1e-6);
}

TEST_CASE("segment_mean values") {
  std::vector<Index> seg{0, 0};
  CHECK(vec(segment_mean(Tensor::matrix({{2}, {4}}), seg, 1)) == std::vector<double>{3});
  std::vector<Index> seg2{0, 2};
  auto out = segment_mean(Tensor::matrix({{1, 2}, {3, 4}}), seg2, 3);
  CHECK(vec(out) == std::vector<double>{1, 2, 0, 0, 3, 4});
  std::vector<Index> bad{0, 3};
  CHECK_THROWS_AS(segment_mean(Tensor::matrix({{1}, {2}}), bad, 3), ShapeError);
}

TEST_CASE("segment_mean gradcheck") {
  SeededRng rng(4);
  auto v = random_tensor({20, 3}, rng);
  std::vector<Index> seg(20);
  for (auto& s : seg) s = static_cast<Index>(rng.uniform_index(5));
  auto report2 = gradcheck([&] { return sum_squares(segment_mean(v, seg, 5)); }, {{"values", v}});
  CHECK(report2.pass());
  CHECK(report2.worst() <= 1e-6);
}

TEST_CASE("remaining primitive gradchecks") {
  SeededRng rng(5);
  auto a = random_tensor({3, 4}, rng), b = random_tensor({3, 4}, rng);
  auto bias = random_tensor({4}, rng);
  CHECK(gradcheck([&] { return sum_squares(sub(a, b)); }, {{"a", a}, {"b", b}}).pass());
  CHECK(gradcheck([&] { return sum_squares(add_bias(a, bias)); }, {{"x", a}, {"bias", bias}}).pass());
  CHECK(gradcheck([&] { return sum_squares(scale(a, -2.5)); }, {{"a", a}}).pass());
  CHECK(gradcheck([&] { return sum_squares(concat_cols(a, b)); }, {{"a", a}, {"b", b}}).pass());
  std::vector<Index> idx{2, 0, 2, 1};
  CHECK(gradcheck([&] { return sum_squares(gather_rows(a, idx)); }, {{"t", a}}).pass());
  std::vector<Index> map{11, 0, 5, 5, 3, 7};
  CHECK(gradcheck([&] { return sum_squares(gather_elements(a, map, {2, 3})); }, {{"t", a}}).pass());
  CHECK(gradcheck([&] { return sqrt_scalar(sum_squares(a)); }, {{"a", a}}).pass());

  CsrMatrix m;
  m.rows = 2;
  m.cols = 3;
  m.row_ptr = {0, 2, 3};
  m.col = {0, 2, 1};
  m.value = {0.5, -1.0, 2.0};
  auto x = random_tensor({3, 4}, rng);
  auto y = sparse_matmul(m, x);
  CHECK(y.at(0, 1) == doctest::Approx(0.5 * x.at(0, 1) - x.at(2, 1)));
  CHECK(y.at(1, 3) == doctest::Approx(2.0 * x.at(1, 3)));
  CHECK(gradcheck([&] { return sum_squares(sparse_matmul(m, x)); }, {{"x", x}}).pass());
}

TEST_CASE("edge_contract matches an explicit per-edge product") {
  SeededRng rng(6);
  const std::size_t k = 3, w = 2, n = 4;
  auto h = random_tensor({5, k}, rng), p = random_tensor({n, k * w}, rng);
  std::vector<Index> src{0, 3, 3, 1, 2};
  auto out = edge_contract(h, p, src);
  for (std::size_t e = 0; e < src.size(); ++e) {
    for (std::size_t a = 0; a < w; ++a) {
      double ref = 0;
      for (std::size_t j = 0; j < k; ++j) ref += h.at(e, j) * p.at(src[e], j * w + a);
      CHECK(out.at(e, a) == doctest::Approx(ref).epsilon(1e-14));
    }
  }
  auto r = gradcheck([&] { return sum_squares(edge_contract(h, p, src)); }, {{"h", h}, {"p", p}});
  CHECK(r.pass());
  CHECK(r.worst() <= 1e-6);
}

TEST_CASE("edge_outer_mean matches an explicit per-target mean") {
  SeededRng rng(7);
  const std::size_t k = 3, w = 2;
  auto h = random_tensor({5, k}, rng), v = random_tensor({4, w}, rng);
  std::vector<Index> src{0, 3, 3, 1, 2}, tgt{0, 0, 1, 1, 1};
  auto out = edge_outer_mean(h, v, src, tgt, 3);
  CHECK(out.shape() == Shape{3, k * w});
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t b = 0; b < w; ++b) {
      const double t0 = 0.5 * (h.at(0, j) * v.at(0, b) + h.at(1, j) * v.at(3, b));
      const double t1 =
          (h.at(2, j) * v.at(3, b) + h.at(3, j) * v.at(1, b) + h.at(4, j) * v.at(2, b)) / 3.0;
      CHECK(out.at(0, j * w + b) == doctest::Approx(t0).epsilon(1e-14));
      CHECK(out.at(1, j * w + b) == doctest::Approx(t1).epsilon(1e-14));
      CHECK(out.at(2, j * w + b) == 0.0);
    }
  }
  auto r = gradcheck([&] { return sum_squares(edge_outer_mean(h, v, src, tgt, 3)); },
                     {{"h", h}, {"v", v}});
  CHECK(r.pass());
  CHECK(r.worst() <= 1e-6);
}

TEST_CASE("backward semantics") {
  Tape tape;
  TapeScope scope(tape);
  auto x = Tensor::full({2, 3}, 1.5, true);
  backward(sum(x));
  for (double g : x.grad()) CHECK(g == 1.0);

  auto y = Tensor({3}, {1.0, -2.0, 0.5}, true);
  backward(scale(sum_squares(y), 0.5));
  CHECK(std::vector<double>(y.grad().begin(), y.grad().end()) == vec(y));

  // Leaf gradients accumulate across calls until zeroed.
  auto z = Tensor({2}, {1.0, 2.0}, true);
  auto loss = sum(z);
  backward(loss);
  backward(loss);
  CHECK(z.grad()[0] == 2.0);
  z.zero_grad();
  CHECK_FALSE(z.has_grad());

  CHECK_THROWS_AS(backward(x), ShapeError);
}

TEST_CASE("tape is topological and visited once") {
  Tape tape;
  TapeScope scope(tape);
  SeededRng rng(8);
  auto a = random_tensor({3, 3}, rng);
  a.set_requires_grad(true);
  auto b = relu(matmul(a, a));
  auto loss = sum_squares(add(b, a));
  const auto& recs = tape.records();
  for (std::size_t i = 0; i < recs.size(); ++i) {
    for (const auto& in : recs[i].inputs) {
      bool produced_later = false;
      for (std::size_t j = i; j < recs.size(); ++j) produced_later |= recs[j].output == in;
      CHECK_FALSE(produced_later);
    }
  }
  tape.backward(loss);
  CHECK(tape.last_backward_visits() == tape.size());
}

TEST_CASE("no tape means no recording") {
  auto a = Tensor::full({2, 2}, 1.0, true);
  auto b = matmul(a, a);
  CHECK(active_tape() == nullptr);
  CHECK_THROWS(backward(sum(b)));
}

TEST_CASE("gradcheck reports") {
  SeededRng rng(9);
  auto w = random_tensor({3, 2}, rng), x = random_tensor({4, 3}, rng);
  auto linear = gradcheck([&] { return sum(matmul(x, w)); }, {{"w", w}, {"x", x}});
  CHECK(linear.pass());
  CHECK(linear.worst() <= 1e-10);

  auto xr = away_from_zero({2, 5}, rng);
  auto rel = gradcheck([&] { return sum(relu(xr)); }, {{"x", xr}});
  CHECK(rel.pass());

  // Kernel MLP with two hidden relu layers, inputs kept off the kinks by construction of biases.
  auto attr = random_tensor({6, 4}, rng);
  auto w1 = random_tensor({4, 8}, rng), b1 = random_tensor({8}, rng, 0.5, 1.0);
  auto w2 = random_tensor({8, 8}, rng), b2 = random_tensor({8}, rng, 0.5, 1.0);
  auto w3 = random_tensor({8, 9}, rng), b3 = random_tensor({9}, rng);
  auto mlp = [&] {
    auto h1 = relu(add_bias(matmul(attr, w1), b1));
    auto h2 = relu(add_bias(matmul(h1, w2), b2));
    return sum_squares(add_bias(matmul(h2, w3), b3));
  };
  auto report = gradcheck(mlp, {{"l1.weight", w1}, {"l1.bias", b1}, {"l2.weight", w2},
                                {"l2.bias", b2},     {"l3.weight", w3}, {"l3.bias", b3}});
  CHECK(report.pass());
  CHECK(report.worst() <= 1e-6);
  CHECK(report.failures().empty());
  CHECK_FALSE(w1.requires_grad());
}

TEST_CASE("injected relu fault is caught and named") {
  SeededRng rng(10);
  auto x = away_from_zero({3, 4}, rng);
  testing::inject_backward_fault("relu");
  auto report = gradcheck([&] { return sum(relu(x)); }, {{"relu.input", x}});
  testing::clear_backward_faults();
  CHECK_FALSE(report.pass());
  CHECK(report.failures() == "relu.input");
  CHECK(gradcheck([&] { return sum(relu(x)); }, {{"relu.input", x}}).pass());
}

TEST_CASE("forward and backward are bit-deterministic") {
  auto run = [] {
    SeededRng rng(11);
    auto a = random_tensor({5, 4}, rng), b = random_tensor({4, 3}, rng);
    a.set_requires_grad(true);
    Tape tape;
    TapeScope scope(tape);
    std::vector<Index> seg{0, 1, 1, 0, 2};
    auto loss = sum_squares(segment_mean(relu(matmul(a, b)), seg, 3));
    tape.backward(loss);
    auto g = std::vector<double>(a.grad().begin(), a.grad().end());
    g.push_back(loss.item());
    return g;
  };
  CHECK(run() == run());
}

TEST_CASE("tensor storage is cache-line aligned") {
  for (std::size_t n : {1, 3, 7, 65}) {
    const auto t = Tensor::full({n}, 1.0);
    CHECK(reinterpret_cast<std::uintptr_t>(t.data().data()) % 64 == 0);
    auto g = t.impl()->grad_buffer();
    CHECK(reinterpret_cast<std::uintptr_t>(g.data()) % 64 == 0);
  }
}
