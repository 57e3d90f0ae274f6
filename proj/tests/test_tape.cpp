#include <doctest.h>

#include "lan/nn.hpp"
#include "lan/ops.hpp"
#include "lan/tape.hpp"
#include "test_support.hpp"

using lan::Bound;
using lan::ParamSet;
using lan::Shape;
using lan::Tape;
using lan::Var;
using Td = lan::Tensor<double>;

TEST_CASE("backward of sum(w o w) is 2w") {
  Tape<double> tape;
  Tape<double>::Scope scope(tape);
  Var<double> w = tape.leaf(Td::vec({1, 2, 3}), 42);
  Var<double> loss = lan::sum_all(lan::mul(w, w));
  lan::Gradients<double> g = tape.backward(loss);
  const Td* gw = g.find(42);
  REQUIRE(gw != nullptr);
  CHECK((*gw)[0] == 2);
  CHECK((*gw)[1] == 4);
  CHECK((*gw)[2] == 6);
}

TEST_CASE("constant loss gives all-zero gradients") {
  Tape<double> tape;
  Tape<double>::Scope scope(tape);
  Var<double> w = tape.leaf(Td::vec({1, 2}), 1);
  (void)w;
  Var<double> loss = tape.constant(Td::vec({5}));
  lan::Gradients<double> g = tape.backward(loss);
  const Td* gw = g.find(1);
  REQUIRE(gw != nullptr);
  CHECK((*gw)[0] == 0);
  CHECK((*gw)[1] == 0);
}

TEST_CASE("non-scalar loss is a contract error") {
  Tape<double> tape;
  Tape<double>::Scope scope(tape);
  Var<double> w = tape.leaf(Td::vec({1, 2}), 1);
  CHECK_THROWS_AS(tape.backward(w), lan::ContractError);
}

TEST_CASE("ops outside a recording scope throw and do not grow the tape") {
  Tape<double> tape;
  {
    Tape<double>::Scope scope(tape);
    tape.constant(Td::vec({1}));
  }
  std::size_t n = tape.node_count();
  CHECK_THROWS_AS(tape.constant(Td::vec({2})), lan::ContractError);
  CHECK(tape.node_count() == n);
}

TEST_CASE("backward is linear in the loss") {
  auto grads_of = [](double a, double b) {
    Tape<double> tape;
    Tape<double>::Scope scope(tape);
    Var<double> w = tape.leaf(Td::vec({0.3, -1.2, 2.0}), 7);
    Var<double> l1 = lan::sum_all(lan::mul(w, w));
    Var<double> l2 = lan::sum_all(lan::sigmoid(w));
    Var<double> loss = lan::add(lan::scale(l1, a), lan::scale(l2, b));
    return tape.backward(loss);
  };
  lan::Gradients<double> g1 = grads_of(1, 0);
  lan::Gradients<double> g2 = grads_of(0, 1);
  lan::Gradients<double> gc = grads_of(2.5, -0.75);
  for (std::size_t k = 0; k < 3; ++k) {
    double expect = 2.5 * g1.items[0].second[k] - 0.75 * g2.items[0].second[k];
    CHECK(std::fabs(gc.items[0].second[k] - expect) < 1e-12);
  }
}

TEST_CASE("unused leaves get zero gradients") {
  Tape<double> tape;
  Tape<double>::Scope scope(tape);
  Var<double> used = tape.leaf(Td::vec({2}), 1);
  tape.leaf(Td::matrix({{1, 2}, {3, 4}}), 2);
  lan::Gradients<double> g = tape.backward(lan::sum_all(lan::mul(used, used)));
  const Td* unused_grad = g.find(2);
  REQUIRE(unused_grad != nullptr);
  CHECK(unused_grad->shape() == Shape{2, 2});
  for (std::size_t i = 0; i < unused_grad->size(); ++i) CHECK((*unused_grad)[i] == 0);
}

// Finite-difference checks per op. Parameters are drawn away from relu kinks.
static ParamSet<double> random_params(std::initializer_list<std::pair<const char*, Shape>> specs,
                                      std::uint64_t seed) {
  ParamSet<double> p;
  lan::Rng rng(seed);
  for (auto& [name, shape] : specs) {
    std::size_t idx = p.add(name, shape);
    for (std::size_t k = 0; k < p.value(idx).size(); ++k) p.value(idx)[k] = rng.uniform(-1.5, 1.5);
  }
  return p;
}

TEST_CASE("finite-difference check per op") {
  SUBCASE("matmul + transpose") {
    ParamSet<double> p = random_params({{"a", {3, 4}}, {"b", {4, 2}}}, 21);
    double err = testsup::fd_check(p, [](Tape<double>& t, Bound<double>& b) {
      return lan::sum_all(lan::matmul(b[0], lan::transpose(lan::transpose(b[1]))));
    });
    CHECK(err < 1e-6);
  }
  SUBCASE("linear") {
    ParamSet<double> p = random_params({{"x", {5, 3}}, {"w", {4, 3}}, {"b", {4}}}, 22);
    double err = testsup::fd_check(p, [](Tape<double>& t, Bound<double>& b) {
      return lan::sum_all(lan::tanh(lan::linear(b[0], b[1], b[2])));
    });
    CHECK(err < 1e-6);
  }
  SUBCASE("broadcast add/sub/mul") {
    ParamSet<double> p = random_params({{"m", {4, 3}}, {"v", {3}}}, 23);
    double err = testsup::fd_check(p, [](Tape<double>& t, Bound<double>& b) {
      Var<double> s = lan::mul(lan::add(b[0], b[1]), lan::sub(b[0], b[1]));
      return lan::mean_all(lan::mul(s, b[0]));
    });
    CHECK(err < 1e-6);
  }
  SUBCASE("activations") {
    ParamSet<double> p = random_params({{"x", {2, 6}}}, 24);
    double err = testsup::fd_check(p, [](Tape<double>& t, Bound<double>& b) {
      Var<double> y = lan::add(lan::sigmoid(b[0]), lan::tanh(lan::scale(b[0], 0.7)));
      return lan::sum_all(lan::mul(y, y));
    });
    CHECK(err < 1e-6);
  }
  SUBCASE("relu away from kinks") {
    ParamSet<double> p;
    std::size_t x = p.add("x", Shape{4});
    p.value(x) = Td::vec({-1.3, 0.4, 2.2, -0.6});
    double err = testsup::fd_check(p, [](Tape<double>& t, Bound<double>& b) {
      return lan::sum_all(lan::mul(lan::relu(b[0]), b[0]));
    });
    CHECK(err < 1e-6);
  }
  SUBCASE("axis reductions") {
    ParamSet<double> p = random_params({{"x", {3, 5}}}, 25);
    double err = testsup::fd_check(p, [](Tape<double>& t, Bound<double>& b) {
      Var<double> y = lan::add(lan::sum(b[0], std::size_t(1)), lan::mean(b[0], std::size_t(1)));
      return lan::sum_all(lan::mul(y, y));
    });
    CHECK(err < 1e-6);
  }
  SUBCASE("max reduction (unique maxima)") {
    ParamSet<double> p;
    std::size_t x = p.add("x", Shape{2, 3});
    p.value(x) = Td::matrix({{0.1, 1.4, -2.0}, {3.0, 0.2, 0.9}});
    double err = testsup::fd_check(p, [](Tape<double>& t, Bound<double>& b) {
      return lan::sum_all(lan::mul(lan::max(b[0], std::size_t(1)), lan::max(b[0], std::size_t(1))));
    });
    CHECK(err < 1e-6);
  }
  SUBCASE("gather, concat, group ops") {
    ParamSet<double> p = random_params({{"x", {6, 3}}, {"y", {6, 2}}}, 26);
    double err = testsup::fd_check(p, [](Tape<double>& t, Bound<double>& b) {
      Var<double> cat = lan::concat_cols<double>({b[0], b[1]});
      Var<double> grouped = lan::group_sum_rows(cat, 3);
      Var<double> expanded = lan::expand_rows(grouped, 2);
      Var<double> picked = lan::gather_cols(expanded, {0, 2, 4, 1});
      return lan::sum_all(lan::mul(picked, picked));
    });
    CHECK(err < 1e-6);
  }
  SUBCASE("sub_row_mean with valid prefixes") {
    ParamSet<double> p = random_params({{"x", {3, 4}}}, 27);
    double err = testsup::fd_check(p, [](Tape<double>& t, Bound<double>& b) {
      Var<double> y = lan::sub_row_mean(b[0], {4, 2, 3});
      return lan::sum_all(lan::mul(y, y));
    });
    CHECK(err < 1e-6);
  }
  SUBCASE("reshape") {
    ParamSet<double> p = random_params({{"x", {2, 6}}}, 28);
    double err = testsup::fd_check(p, [](Tape<double>& t, Bound<double>& b) {
      Var<double> y = lan::reshape(b[0], Shape{12});
      return lan::mean_all(lan::mul(y, y));
    });
    CHECK(err < 1e-6);
  }
}

TEST_CASE("composed two-layer network against finite differences") {
  ParamSet<double> p = random_params({{"w1", {8, 5}}, {"b1", {8}}, {"w2", {3, 8}}, {"b2", {3}}, {"x", {4, 5}}}, 31);
  double err = testsup::fd_check(p, [](Tape<double>& t, Bound<double>& b) {
    Var<double> h = lan::relu(lan::linear(b[4], b[0], b[1]));
    Var<double> out = lan::linear(h, b[2], b[3]);
    return lan::mean_all(lan::mul(out, out));
  });
  CHECK(err < 1e-4);
}

TEST_CASE("stop_gradient blocks flow") {
  Tape<double> tape;
  Tape<double>::Scope scope(tape);
  Var<double> w = tape.leaf(Td::vec({3}), 9);
  Var<double> blocked = lan::stop_gradient(lan::mul(w, w));
  Var<double> loss = lan::sum_all(lan::mul(blocked, w));  // d/dw (9*w) = 9 only through the open path
  lan::Gradients<double> g = tape.backward(loss);
  CHECK(g.find(9)->operator[](0) == doctest::Approx(9.0));
}
