#include <doctest.h>

#include "lan/fixtures.hpp"
#include "lan/oracle.hpp"

using namespace lan;

static MatrixGameSpec climb_spec() { return parse_matrix_game(load_fixture_json("climb")); }
static MatrixGameSpec repeated_climb_spec() { return parse_matrix_game(load_fixture_json("repeated_climb")); }

TEST_CASE("evaluate_joint_policy on the one-step climb game") {
  MatrixTabularGame game(climb_spec());
  double v = evaluate_joint_policy(game, {constant_policy(0, 3), constant_policy(0, 3)});
  CHECK(v == doctest::Approx(11.0));
  CHECK(evaluate_joint_policy(game, {constant_policy(0, 3), constant_policy(1, 3)}) == doctest::Approx(-30.0));
}

TEST_CASE("zero-reward game evaluates to zero for any policy") {
  MatrixGameSpec spec;
  spec.name = "zero";
  spec.payoff = {{0, 0}, {0, 0}};
  spec.horizon = 3;
  spec.gamma = 0.9;
  MatrixTabularGame game(spec);
  CHECK(evaluate_joint_policy(game, {uniform_policy(2), uniform_policy(2)}) == doctest::Approx(0.0));
  CHECK(evaluate_joint_policy(game, {constant_policy(1, 2), constant_policy(0, 2)}) == doctest::Approx(0.0));
}

TEST_CASE("gamma 0 reduces a multi-step game to its first step") {
  MatrixGameSpec spec = repeated_climb_spec();
  spec.gamma = 0.0;
  MatrixTabularGame game(spec);
  double v = evaluate_joint_policy(game, {constant_policy(2, 3), constant_policy(2, 3)});
  CHECK(v == doctest::Approx(5.0));
}

TEST_CASE("best response in climb against a fixed co-player") {
  MatrixTabularGame game(climb_spec());
  BestResponse br = best_response(game, {AgentPolicy{}, constant_policy(0, 3)}, 0);
  HistoryKey root = {game.observation(game.initial_state, 0)};
  REQUIRE(br.q.count(root) == 1);
  CHECK(br.q[root][0] == doctest::Approx(11.0));
  CHECK(br.q[root][1] == doctest::Approx(-30.0));
  CHECK(br.q[root][2] == doctest::Approx(0.0));
  CHECK(br.policy[root] == 0);
  CHECK(br.value == doctest::Approx(11.0));
}

TEST_CASE("uniform co-player in a symmetric zero game ties all actions at zero") {
  MatrixGameSpec spec;
  spec.name = "zero";
  spec.payoff = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
  spec.horizon = 1;
  MatrixTabularGame game(spec);
  BestResponse br = best_response(game, {AgentPolicy{}, uniform_policy(3)}, 0);
  HistoryKey root = {0};
  for (int u = 0; u < 3; ++u) CHECK(br.q[root][u] == doctest::Approx(0.0));
}

TEST_CASE("best-response value matches evaluating the composed joint policy") {
  MatrixTabularGame game(repeated_climb_spec());
  std::vector<int> co_seq = {0, 2, 1, 2, 0};
  AgentPolicy co = [co_seq](const HistoryKey& h) {
    std::vector<double> d(3, 0.0);
    d[co_seq[(h.size() / 2) % co_seq.size()]] = 1.0;
    return d;
  };
  BestResponse br = best_response(game, {AgentPolicy{}, co}, 0);
  AgentPolicy learned = table_policy(br.policy, {0, 0, 0, 0, 0}, 3);
  double composed = evaluate_joint_policy(game, {learned, co});
  CHECK(composed == doctest::Approx(br.value).epsilon(1e-12));
}

TEST_CASE("enumerate_optimal_joint finds the unique climb optimum") {
  MatrixTabularGame game(climb_spec());
  OptimalJoint best = enumerate_optimal_joint(game);
  CHECK(best.value == doctest::Approx(11.0));
  REQUIRE(best.sequences.size() == 1);
  CHECK(best.sequences[0].size() == 1);
  CHECK(best.sequences[0][0] == std::vector<int>{0, 0});
}

TEST_CASE("constant-payoff game ties all joint policies") {
  MatrixGameSpec spec;
  spec.name = "const";
  spec.payoff = {{4, 4, 4}, {4, 4, 4}, {4, 4, 4}};
  spec.horizon = 1;
  MatrixTabularGame game(spec);
  OptimalJoint best = enumerate_optimal_joint(game);
  CHECK(best.value == doctest::Approx(4.0));
  CHECK(best.sequences.size() == 9);
}

TEST_CASE("optimal joint policies are best-response fixed points") {
  for (auto spec : {climb_spec(), repeated_climb_spec()}) {
    MatrixTabularGame game(spec);
    OptimalJoint best = enumerate_optimal_joint(game);
    REQUIRE(!best.sequences.empty());
    std::vector<AgentPolicy> joint = open_loop_policies(best.sequences[0], {3, 3});
    for (int agent = 0; agent < 2; ++agent) {
      BestResponse br = best_response(game, joint, agent);
      CHECK(br.value == doctest::Approx(best.value).epsilon(1e-12));
    }
  }
}

TEST_CASE("exact evaluation agrees with Monte-Carlo rollouts") {
  MatrixTabularGame game(repeated_climb_spec());
  std::vector<AgentPolicy> policies = {uniform_policy(3), constant_policy(2, 3)};
  double exact = evaluate_joint_policy(game, policies);
  Rng rng(17);
  McEstimate mc = mc_value(game, policies, 100000, rng);
  CHECK(std::fabs(mc.mean - exact) <= 3.0 * mc.std_error + 1e-9);

  // deterministic joint policy: rollouts reproduce the exact value
  std::vector<AgentPolicy> det = {constant_policy(2, 3), constant_policy(2, 3)};
  McEstimate mc_det = mc_value(game, det, 1000, rng);
  CHECK(mc_det.std_error == doctest::Approx(0.0));
  CHECK(mc_det.mean == doctest::Approx(evaluate_joint_policy(game, det)).epsilon(1e-12));
}

TEST_CASE("capacity bounds abort oversized enumerations") {
  MatrixGameSpec spec = repeated_climb_spec();
  spec.horizon = 12;
  MatrixTabularGame game(spec);
  CHECK_THROWS_AS(enumerate_optimal_joint(game), CapacityError);
  CHECK_THROWS_AS(evaluate_joint_policy(game, {uniform_policy(3), uniform_policy(3)}), CapacityError);
  CHECK_THROWS_AS(best_response(game, {AgentPolicy{}, uniform_policy(3)}, 0), CapacityError);
}

TEST_CASE("enumerate_optimal_joint rejects stochastic dynamics") {
  struct Coin : TabularGame {
    Coin() {
      n_agents = 2;
      n_actions = {2, 2};
      horizon = 1;
      gamma = 1.0;
    }
    std::vector<Outcome> transition(int, const std::vector<int>&) const override {
      return {{0.5, 0, 1.0, true}, {0.5, 0, 0.0, true}};
    }
    int observation(int, int) const override { return 0; }
  } coin;
  CHECK_THROWS_AS(enumerate_optimal_joint(coin), ContractError);
}

TEST_CASE("oracle runs are deterministic") {
  MatrixTabularGame game(repeated_climb_spec());
  BestResponse a = best_response(game, {AgentPolicy{}, constant_policy(1, 3)}, 0);
  BestResponse b = best_response(game, {AgentPolicy{}, constant_policy(1, 3)}, 0);
  CHECK(a.value == b.value);
  CHECK(a.policy == b.policy);
}
