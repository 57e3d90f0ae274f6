#include <doctest.h>

#include "lan/baselines.hpp"
#include "test_support.hpp"

using namespace lan;

namespace {

ModelDims dims_for(int n_agents, int obs = 2, int actions = 2, int state = 2) {
  ModelDims d;
  d.obs_dim = obs;
  d.n_agents = n_agents;
  d.id_dim = n_agents;
  d.state_dim = state;
  d.n_actions.assign(n_agents, actions);
  d.max_actions = actions;
  d.ff = 3;
  d.hidden = 3;
  return d;
}

Episode random_episode(int len, int n_agents, int obs_dim, int n_actions, int state_dim, Rng& rng,
                       bool terminal = true) {
  Episode e;
  e.n_agents = n_agents;
  for (int t = 0; t <= len; ++t) {
    std::vector<std::vector<double>> obs;
    for (int a = 0; a < n_agents; ++a) {
      std::vector<double> o(obs_dim);
      for (double& v : o) v = rng.uniform(-1, 1);
      obs.push_back(std::move(o));
    }
    e.obs.push_back(std::move(obs));
    std::vector<double> s(state_dim);
    for (double& v : s) v = rng.uniform(-1, 1);
    e.state.push_back(std::move(s));
  }
  for (int t = 0; t < len; ++t) {
    std::vector<int> acts;
    for (int a = 0; a < n_agents; ++a) acts.push_back(rng.uniform_int(n_actions));
    e.actions.push_back(std::move(acts));
    e.rewards.push_back(rng.uniform(-1, 1));
  }
  e.terminal = terminal;
  e.truncated = !terminal;
  return e;
}

template <typename S>
void zero_params(ParamSet<S>& p) {
  for (std::size_t i = 0; i < p.count(); ++i)
    for (std::size_t k = 0; k < p.value(i).size(); ++k) p.value(i)[k] = 0;
}

template <typename S>
void set_param(ParamSet<S>& params, const std::string& name, std::vector<S> values) {
  for (std::size_t i = 0; i < params.count(); ++i) {
    if (params.entry(i).name == name) {
      REQUIRE(params.value(i).size() == values.size());
      for (std::size_t k = 0; k < values.size(); ++k) params.value(i)[k] = values[k];
      return;
    }
  }
  FAIL("no parameter named ", name);
}

}  // namespace

TEST_CASE("with one agent the VDN and IQL losses coincide") {
  ModelDims d = dims_for(1);
  RecurrentQLearner<double> iql(d, 0.9, 1e-3, 10, /*vdn=*/false, Rng(7));
  RecurrentQLearner<double> vdn(d, 0.9, 1e-3, 10, /*vdn=*/true, Rng(7));  // identical init
  Rng rng(9);
  Episode e1 = random_episode(3, 1, 2, 2, 2, rng, true);
  Episode e2 = random_episode(2, 1, 2, 2, 2, rng, false);
  EpisodeBatch<double> batch = make_batch<double>({&e1, &e2});
  CHECK(iql.loss(batch).loss == doctest::Approx(vdn.loss(batch).loss).epsilon(1e-12));
}

TEST_CASE("perfect fit gives zero loss") {
  ModelDims d = dims_for(2);
  for (bool vdn : {false, true}) {
    RecurrentQLearner<double> learner(d, 0.9, 1e-3, 10, vdn, Rng(3));
    zero_params(learner.online_params());
    learner.sync_targets();
    Episode e;
    e.n_agents = 2;
    e.obs = {{{0.1, 0.2}, {0.3, 0.4}}, {{0.0, 0.0}, {0.0, 0.0}}};
    e.state = {{1, 0}, {0, 1}};
    e.actions = {{0, 1}};
    e.rewards = {0.0};
    e.terminal = true;
    EpisodeBatch<double> batch = make_batch<double>({&e});
    CHECK(learner.loss(batch).loss == 0.0);
  }
}

TEST_CASE("gamma zero targets equal rewards") {
  ModelDims d = dims_for(2);
  RecurrentQLearner<double> learner(d, 0.0, 1e-3, 10, false, Rng(3));
  Rng rng(5);
  Episode e = random_episode(4, 2, 2, 2, 2, rng, /*terminal=*/false);
  EpisodeBatch<double> batch = make_batch<double>({&e});
  LanTargets<double> targets = learner.compute_targets(batch);
  for (int t = 0; t < 4; ++t)
    for (int a = 0; a < 2; ++a) CHECK(targets.at(t, 0, a) == doctest::Approx(e.rewards[t]).epsilon(1e-12));
}

TEST_CASE("loss gradients agree with finite differences") {
  ModelDims d = dims_for(2);
  Rng rng(13);
  Episode e1 = random_episode(3, 2, 2, 2, 2, rng, true);
  Episode e2 = random_episode(2, 2, 2, 2, 2, rng, false);
  EpisodeBatch<double> batch = make_batch<double>({&e1, &e2});

  for (bool vdn : {false, true}) {
    RecurrentQLearner<double> learner(d, 0.9, 1e-3, 10, vdn, Rng(19));
    LossGrads<double> analytic = learner.loss(batch);
    ParamSet<double>& params = learner.online_params();
    double h = 1e-5, worst = 0;
    for (std::size_t i = 0; i < params.count(); ++i)
      for (std::size_t k = 0; k < params.value(i).size(); ++k) {
        double saved = params.value(i)[k];
        params.value(i)[k] = saved + h;
        double up = learner.loss(batch).loss;
        params.value(i)[k] = saved - h;
        double down = learner.loss(batch).loss;
        params.value(i)[k] = saved;
        double fd = (up - down) / (2 * h);
        worst = std::max(worst, std::fabs(analytic.grads.items[i].second[k] - fd) / std::max(1.0, std::fabs(fd)));
      }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("hand-set two-agent VDN target matches the scripted calculator") {
  // zero nets except head biases: online Q' = [0.5, 0.7] -> u* = 1 for both
  // agents; target Q' = [0.1, -0.3]; r = 2, gamma = 0.9, non-terminal:
  //   y_tot = 2 + 0.9 * ((-0.3) + (-0.3)) = 1.46
  //   Q_tot = 0.7 + 0.7 = 1.4 (both agents took action 1)
  //   loss  = (1.4 - 1.46)^2 = 0.0036
  ModelDims d = dims_for(2);
  RecurrentQLearner<double> learner(d, 0.9, 1e-3, 10, /*vdn=*/true, Rng(3));
  zero_params(learner.online_params());
  zero_params(learner.target_params());
  set_param<double>(learner.online_params(), "q.head.b", {0.5, 0.7});
  set_param<double>(learner.target_params(), "q.head.b", {0.1, -0.3});

  Episode e;
  e.n_agents = 2;
  e.obs = {{{0.5, 0.5}, {0.5, 0.5}}, {{0.2, 0.2}, {0.2, 0.2}}};
  e.state = {{1, 0}, {0, 1}};
  e.actions = {{1, 1}};
  e.rewards = {2.0};
  e.truncated = true;
  EpisodeBatch<double> batch = make_batch<double>({&e});

  double y_tot = 2.0 + 0.9 * (-0.3 + -0.3);
  double q_tot = 0.7 + 0.7;
  double scripted = (q_tot - y_tot) * (q_tot - y_tot);
  CHECK(learner.loss(batch).loss == doctest::Approx(scripted).epsilon(1e-12));
  CHECK(scripted == doctest::Approx(0.0036));
}

TEST_CASE("baseline acting is decentralized and greedy at epsilon zero") {
  ModelDims d = dims_for(2, 2, 3);
  RecurrentQLearner<float> learner(d, 0.9, 1e-3, 10, true, Rng(23));
  Rng rng(1);
  std::vector<std::vector<double>> obs = {{0.2, -0.4}, {-0.1, 0.9}};
  ActResult<float> res = learner.act(obs, {-1, -1}, learner.initial_hidden(), 0.0, rng);
  CHECK(res.actions.size() == 2);
  for (int action : res.actions) {
    CHECK(action >= 0);
    CHECK(action < 3);
  }
  // deterministic across calls
  Rng rng2(99);
  ActResult<float> res2 = learner.act(obs, {-1, -1}, learner.initial_hidden(), 0.0, rng2);
  CHECK(res.actions == res2.actions);
}

TEST_CASE("updates move the parameters and clip reports the norm") {
  ModelDims d = dims_for(2);
  RecurrentQLearner<float> learner(d, 0.9, 1e-2, 10, false, Rng(31));
  Rng rng(32);
  Episode e = random_episode(3, 2, 2, 2, 2, rng);
  EpisodeBatch<float> batch = make_batch<float>({&e});
  float before = learner.online_params().value(0)[0];
  UpdateResult res = learner.update(batch);
  CHECK(res.grad_norm > 0);
  CHECK(learner.online_params().value(0)[0] != before);
}
