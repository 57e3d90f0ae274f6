#pragma once

// Training orchestration: collect an episode with epsilon-greedy, store it,
// run the configured number of optimizer passes on sampled batches, sync the
// target networks on schedule, and evaluate the greedy decentralized
// policies periodically. Fully deterministic given (config, seed): every
// random draw comes from a named stream derived from the run seed.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "lan/baselines.hpp"
#include "lan/checkpoint.hpp"
#include "lan/config.hpp"
#include "lan/fixtures.hpp"
#include "lan/lan.hpp"
#include "lan/replay.hpp"
#include "lan/stats.hpp"

namespace lan {

struct EvalPoint {
  long timestep = 0;
  double success_rate = 0;
  double mean_return = 0;
  double loss = 0;     // mean training loss since the previous eval point
  double epsilon = 0;  // exploration rate at this timestep
  double wall_seconds = 0;
};

struct RunLog {
  std::vector<EvalPoint> points;
  long episodes = 0;
  long optimizer_steps = 0;
  long env_steps = 0;
  bool aborted_numeric = false;
  bool stopped_early = false;

  std::vector<std::pair<long, double>> series(double EvalPoint::* field) const {
    std::vector<std::pair<long, double>> out;
    for (const EvalPoint& p : points) out.emplace_back(p.timestep, p.*field);
    return out;
  }
};

inline double epsilon_at(const TrainConfig& config, long step) {
  long window = config.anneal_steps();
  if (window <= 0 || step >= window) return config.epsilon_end;
  double frac = static_cast<double>(step) / static_cast<double>(window);
  return config.epsilon_start + frac * (config.epsilon_end - config.epsilon_start);
}

template <typename S>
std::unique_ptr<Learner<S>> make_learner(const TrainConfig& config, const EnvInfo& info, double gamma, Rng init_rng) {
  ModelDims dims = ModelDims::from_env(info);
  if (config.algorithm == "iql")
    return std::make_unique<RecurrentQLearner<S>>(dims, gamma, config.learning_rate, config.grad_clip_norm, false,
                                                  init_rng);
  if (config.algorithm == "vdn")
    return std::make_unique<RecurrentQLearner<S>>(dims, gamma, config.learning_rate, config.grad_clip_norm, true,
                                                  init_rng);
  LanFlags flags;
  flags.mean_constraint = config.mean_constraint || config.algorithm == "lan_mean";
  flags.stop_value_h_grad = config.stop_grad_value_h;
  flags.check_decentralization = config.check_decentralization;
  flags.check_zero_mean = config.check_zero_mean;
  return std::make_unique<LanLearner<S>>(dims, gamma, config.learning_rate, config.grad_clip_norm, flags, init_rng);
}

// Rolls one episode. epsilon may be a constant (evaluation) or follow the
// training schedule via the callback.
template <typename S, typename EpsF>
Episode rollout(Learner<S>& learner, Env& env, std::uint64_t env_seed, EpsF epsilon_of_step, Rng& action_rng,
                long* step_counter = nullptr) {
  ResetResult r = env.reset(env_seed);
  Episode episode;
  episode.n_agents = env.info().n_agents;
  episode.obs.push_back(r.obs);
  episode.state.push_back(r.state);
  Tensor<S> hidden = learner.initial_hidden();
  std::vector<int> last_actions(env.info().n_agents, -1);
  StepResult s;
  std::vector<std::vector<double>> obs = r.obs;
  do {
    double eps = epsilon_of_step(step_counter ? *step_counter : 0);
    ActResult<S> act = learner.act(obs, last_actions, hidden, eps, action_rng);
    hidden = act.hidden;
    s = env.step(act.actions);
    episode.actions.push_back(act.actions);
    episode.rewards.push_back(s.reward);
    episode.obs.push_back(s.obs);
    episode.state.push_back(s.state);
    last_actions = act.actions;
    obs = s.obs;
    if (step_counter) ++*step_counter;
  } while (!s.terminal && !s.truncated);
  episode.terminal = s.terminal;
  episode.truncated = s.truncated;
  episode.won = s.won;
  return episode;
}

struct EvalResult {
  double success_rate = 0;
  double mean_return = 0;
  std::vector<Episode> episodes;
};

// Greedy decentralized evaluation on a fresh environment instance. Uses its
// own rng stream; never mutates the learner, the buffer or the training
// streams.
template <typename S>
EvalResult evaluate(const Learner<S>& learner, const Env& env_proto, int episodes, std::uint64_t seed,
                    double epsilon = 0.0, bool keep_episodes = false) {
  std::unique_ptr<Env> env = env_proto.clone_fresh();
  Rng rng(Rng::derive(seed, "eval-actions"));
  EvalResult out;
  for (int e = 0; e < episodes; ++e) {
    Episode ep = rollout(const_cast<Learner<S>&>(learner), *env, Rng::derive(seed, "eval-episode", e),
                         [epsilon](long) { return epsilon; }, rng);
    out.success_rate += ep.won ? 1.0 : 0.0;
    double ret = 0;
    for (std::size_t i = ep.rewards.size(); i-- > 0;) ret = ep.rewards[i] + env->info().gamma * ret;
    out.mean_return += ret;
    if (keep_episodes) out.episodes.push_back(std::move(ep));
  }
  out.success_rate /= episodes;
  out.mean_return /= episodes;
  return out;
}

template <typename S>
struct TrainOutcome {
  RunLog log;
  std::unique_ptr<Learner<S>> learner;
  TrainConfig config;  // with gamma resolved
};

template <typename S>
TrainOutcome<S> train(const TrainConfig& config_in, std::uint64_t seed, std::ostream* progress = nullptr) {
  TrainConfig config = config_in;
  config.validate();
  std::unique_ptr<Env> env = make_env(config.env, config.scripted_agent_map());
  double gamma = config.gamma >= 0 ? config.gamma : env->info().gamma;
  config.gamma = gamma;

  TrainOutcome<S> out;
  out.config = config;
  out.learner = make_learner<S>(config, env->info(), gamma, Rng(Rng::derive(seed, "init")));
  Learner<S>& learner = *out.learner;
  RunLog& log = out.log;

  ReplayBuffer buffer(static_cast<std::size_t>(config.buffer_capacity));
  Rng explore_rng(Rng::derive(seed, "explore"));
  Rng replay_rng(Rng::derive(seed, "replay"));

  auto t_start = std::chrono::steady_clock::now();
  auto wall = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count(); };

  double loss_sum = 0;
  long loss_count = 0;
  int success_streak = 0;
  long next_eval = 0;
  ParamSet<S> last_good;  // parameters as of the last eval point

  auto run_eval = [&](long at_step) {
    EvalResult ev = evaluate(learner, *env, config.eval_episodes, Rng::derive(seed, "eval", at_step));
    EvalPoint p;
    p.timestep = at_step;
    p.success_rate = ev.success_rate;
    p.mean_return = ev.mean_return;
    p.loss = loss_count ? loss_sum / loss_count : 0.0;
    p.epsilon = epsilon_at(config, at_step);
    p.wall_seconds = wall();
    log.points.push_back(p);
    loss_sum = 0;
    loss_count = 0;
    last_good = learner.online_params();
    if (progress)
      (*progress) << config.algorithm << " seed " << seed << " step " << at_step << ": success " << ev.success_rate
                  << " return " << ev.mean_return << " eps " << p.epsilon << "\n";
    if (config.stop_on_eval_success > 0) {
      success_streak = ev.success_rate >= 0.999 ? success_streak + 1 : 0;
      if (success_streak >= config.stop_on_eval_success) log.stopped_early = true;
    }
  };

  try {
    run_eval(0);
    next_eval = config.eval_period();
    while (log.env_steps < config.total_steps && !log.stopped_early) {
      Episode episode =
          rollout(learner, *env, Rng::derive(seed, "env", static_cast<std::uint64_t>(log.episodes)),
                  [&](long step) { return epsilon_at(config, step); }, explore_rng, &log.env_steps);
      buffer.push(std::move(episode));
      ++log.episodes;

      if (buffer.ready(static_cast<std::size_t>(config.batch_size))) {
        std::optional<std::vector<const Episode*>> sampled;
        for (int u = 0; u < config.updates_per_episode; ++u) {
          if (config.double_batch_updates || !sampled)
            sampled = buffer.sample(static_cast<std::size_t>(config.batch_size), replay_rng);
          EpisodeBatch<S> batch = make_batch<S>(*sampled);
          UpdateResult res = learner.update(batch);
          loss_sum += res.loss;
          ++loss_count;
          ++log.optimizer_steps;
        }
      }

      if (log.episodes % config.target_sync_episodes == 0) learner.sync_targets();

      while (log.env_steps >= next_eval && next_eval <= config.total_steps && !log.stopped_early) {
        run_eval(next_eval);
        next_eval += config.eval_period();
      }
    }
    if (log.points.empty() || log.points.back().timestep < log.env_steps) run_eval(log.env_steps);
  } catch (const NumericFault&) {
    // abort the run but keep the last healthy parameters
    log.aborted_numeric = true;
    if (last_good.count() == learner.online_params().count()) {
      learner.online_params().copy_values_from(last_good);
      learner.sync_targets();
    }
  }
  return out;
}

// ---- run artifacts ----------------------------------------------------------

inline void write_run_csv(const std::string& path, const RunLog& log, std::uint64_t seed) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(IoError::Kind::open_failed, "cannot write " + path);
  out << "timestep,seed,success_rate,mean_return,loss,epsilon\n";
  char line[256];
  for (const EvalPoint& p : log.points) {
    std::snprintf(line, sizeof line, "%ld,%llu,%.10g,%.10g,%.10g,%.10g\n", p.timestep,
                  static_cast<unsigned long long>(seed), p.success_rate, p.mean_return, p.loss, p.epsilon);
    out << line;
  }
}

struct CsvRun {
  std::uint64_t seed = 0;
  std::vector<EvalPoint> points;
};

inline CsvRun read_run_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open csv: " + path);
  CsvRun run;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      if (line != "timestep,seed,success_rate,mean_return,loss,epsilon")
        throw ParseError(path + ":1: unexpected csv header");
      continue;
    }
    if (line.empty()) continue;
    EvalPoint p;
    unsigned long long seed = 0;
    if (std::sscanf(line.c_str(), "%ld,%llu,%lf,%lf,%lf,%lf", &p.timestep, &seed, &p.success_rate, &p.mean_return,
                    &p.loss, &p.epsilon) != 6)
      throw ParseError(path + ":" + std::to_string(line_no) + ": malformed csv row");
    run.seed = seed;
    run.points.push_back(p);
  }
  if (run.points.empty()) throw ParseError(path + ": no data rows");
  return run;
}

// Aggregates possibly early-stopped runs: shorter runs carry their final
// evaluation forward onto the longest run's timestep grid (the policy is
// frozen once training stops).
inline std::vector<AggregateRow> aggregate_runs(const std::vector<RunLog>& logs, double EvalPoint::* field) {
  if (logs.empty()) throw ContractError("aggregate_runs: no runs");
  const RunLog* longest = &logs[0];
  for (const RunLog& log : logs)
    if (log.points.size() > longest->points.size()) longest = &log;
  std::vector<std::vector<std::pair<long, double>>> series;
  for (const RunLog& log : logs) {
    std::vector<std::pair<long, double>> s;
    for (std::size_t i = 0; i < longest->points.size(); ++i) {
      long t = longest->points[i].timestep;
      if (i < log.points.size()) {
        if (log.points[i].timestep != t) throw ContractError("aggregate_runs: misaligned eval timesteps");
        s.emplace_back(t, log.points[i].*field);
      } else {
        s.emplace_back(t, log.points.back().*field);
      }
    }
    series.push_back(std::move(s));
  }
  return aggregate_series(series);
}

inline void write_aggregate_csv(const std::string& path, const std::vector<AggregateRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(IoError::Kind::open_failed, "cannot write " + path);
  out << "timestep,median,q1,q3\n";
  char line[160];
  for (const AggregateRow& r : rows) {
    std::snprintf(line, sizeof line, "%ld,%.10g,%.10g,%.10g\n", r.timestep, r.median, r.q1, r.q3);
    out << line;
  }
}

}  // namespace lan
