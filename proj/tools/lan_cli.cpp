// Command-line front end: train / eval / sweep / plot / oracle.
// Exit codes: 0 ok, 2 configuration or input error, 3 numeric fault.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

#include "lan/harness.hpp"
#include "lan/oracle.hpp"
#include "lan/plot.hpp"

namespace fs = std::filesystem;
using namespace lan;

namespace {

struct RunArtifacts {
  RunLog log;
  bool aborted = false;
};

template <typename S>
RunArtifacts run_one_seed(const TrainConfig& config, std::uint64_t seed, const std::string& out_dir, bool quiet) {
  TrainOutcome<S> outcome = train<S>(config, seed, quiet ? nullptr : &std::cerr);
  fs::create_directories(out_dir);
  std::string stem = out_dir + "/seed_" + std::to_string(seed);
  write_run_csv(stem + ".csv", outcome.log, seed);
  checkpoint_save(outcome.learner->online_params(), outcome.config, stem + ".ckpt");
  std::ofstream meta(stem + ".meta.txt", std::ios::trunc);
  meta << "algorithm " << config.algorithm << "\n"
       << "env " << config.env << "\n"
       << "config_hash " << config_hash(outcome.config) << "\n"
       << "episodes " << outcome.log.episodes << "\n"
       << "env_steps " << outcome.log.env_steps << "\n"
       << "optimizer_steps " << outcome.log.optimizer_steps << "\n"
       << "stopped_early " << (outcome.log.stopped_early ? 1 : 0) << "\n"
       << "aborted_numeric " << (outcome.log.aborted_numeric ? 1 : 0) << "\n"
       << "wall_seconds " << (outcome.log.points.empty() ? 0.0 : outcome.log.points.back().wall_seconds) << "\n";
  return {std::move(outcome.log), outcome.log.aborted_numeric};
}

RunArtifacts run_one_seed_dispatch(const TrainConfig& config, std::uint64_t seed, const std::string& out_dir,
                                   bool quiet) {
  if (config.precision == "f64") return run_one_seed<double>(config, seed, out_dir, quiet);
  return run_one_seed<float>(config, seed, out_dir, quiet);
}

int cmd_train(const std::string& config_path, long seed, const std::string& out_dir, bool quiet) {
  TrainConfig config = load_config(config_path);
  RunArtifacts art = run_one_seed_dispatch(config, static_cast<std::uint64_t>(seed), out_dir, quiet);
  const EvalPoint& last = art.log.points.back();
  std::cout << "seed " << seed << ": success " << last.success_rate << " mean_return " << last.mean_return
            << " steps " << art.log.env_steps << (art.log.stopped_early ? " (stopped early)" : "") << "\n";
  if (art.aborted) {
    std::cerr << "run aborted on a numeric fault; last good checkpoint retained\n";
    return 3;
  }
  return 0;
}

int cmd_sweep(const std::string& config_path, std::string seeds_arg, const std::string& out_dir, int jobs,
              bool quiet) {
  TrainConfig config = load_config(config_path);
  std::vector<std::uint64_t> seeds;
  if (!seeds_arg.empty()) {
    std::stringstream ss(seeds_arg);
    std::string tok;
    while (std::getline(ss, tok, ',')) seeds.push_back(std::stoull(tok));
  } else {
    for (long s : config.seeds) seeds.push_back(static_cast<std::uint64_t>(s));
  }
  if (seeds.empty()) throw ParseError("sweep: no seeds given (use --seeds or the config's seeds key)");

  if (jobs <= 0) jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  jobs = std::min<int>(jobs, static_cast<int>(seeds.size()));

  std::vector<RunLog> logs(seeds.size());
  std::vector<char> aborted(seeds.size(), 0);
  std::size_t next = 0;
  std::mutex mu;
  auto worker = [&] {
    while (true) {
      std::size_t index;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= seeds.size()) return;
        index = next++;
      }
      RunArtifacts art = run_one_seed_dispatch(config, seeds[index], out_dir, quiet);
      logs[index] = std::move(art.log);
      aborted[index] = art.aborted ? 1 : 0;
    }
  };
  std::vector<std::thread> pool;
  for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();

  write_aggregate_csv(out_dir + "/aggregate.csv", aggregate_runs(logs, &EvalPoint::success_rate));
  write_aggregate_csv(out_dir + "/aggregate_return.csv", aggregate_runs(logs, &EvalPoint::mean_return));

  std::vector<AggregateRow> agg = aggregate_runs(logs, &EvalPoint::success_rate);
  const AggregateRow& last = agg.back();
  std::cout << config.algorithm << " on " << config.env << " over " << seeds.size()
            << " seeds: final median success " << last.median << " [q1 " << last.q1 << ", q3 " << last.q3 << "]\n";
  for (char a : aborted)
    if (a) return 3;
  return 0;
}

int cmd_eval(const std::string& checkpoint_path, int episodes, long seed) {
  CheckpointData data = checkpoint_load(checkpoint_path);
  TrainConfig config = parse_config_text(data.config_text);
  std::unique_ptr<Env> env = make_env(config.env, config.scripted_agent_map());
  double gamma = config.gamma >= 0 ? config.gamma : env->info().gamma;
  std::unique_ptr<Learner<float>> learner = make_learner<float>(config, env->info(), gamma, Rng(0));
  checkpoint_restore(data, config.algorithm, learner->online_params());
  learner->sync_targets();
  EvalResult ev = evaluate(*learner, *env, episodes, static_cast<std::uint64_t>(seed));
  std::cout << "algorithm " << config.algorithm << " env " << config.env << " episodes " << episodes << "\n";
  std::cout << "success_rate " << ev.success_rate << "\n";
  std::cout << "mean_return " << ev.mean_return << "\n";
  return 0;
}

int cmd_plot(const std::string& runs_dir, const std::string& out_path, const std::string& metric) {
  double EvalPoint::* field = nullptr;
  if (metric == "success_rate") field = &EvalPoint::success_rate;
  else if (metric == "mean_return") field = &EvalPoint::mean_return;
  else throw ParseError("plot: unknown metric '" + metric + "'");

  auto collect_group = [&](const fs::path& dir) -> std::vector<RunLog> {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      std::string name = entry.path().filename().string();
      if (entry.is_regular_file() && name.rfind("seed_", 0) == 0 && name.size() > 4 &&
          name.substr(name.size() - 4) == ".csv")
        files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<RunLog> logs;
    for (const fs::path& f : files) {
      CsvRun run = read_run_csv(f.string());
      RunLog log;
      log.points = run.points;
      logs.push_back(std::move(log));
    }
    return logs;
  };

  if (!fs::is_directory(runs_dir)) throw ParseError("plot: not a directory: " + runs_dir);
  std::vector<CurveSeries> series;
  std::vector<fs::path> subdirs;
  for (const auto& entry : fs::directory_iterator(runs_dir))
    if (entry.is_directory()) subdirs.push_back(entry.path());
  std::sort(subdirs.begin(), subdirs.end());
  for (const fs::path& sub : subdirs) {
    std::vector<RunLog> logs = collect_group(sub);
    if (logs.empty()) continue;
    series.push_back(CurveSeries{sub.filename().string(), aggregate_runs(logs, field)});
  }
  std::vector<RunLog> top = collect_group(runs_dir);
  if (!top.empty()) series.push_back(CurveSeries{fs::path(runs_dir).filename().string(), aggregate_runs(top, field)});
  if (series.empty()) throw ParseError("plot: no seed_*.csv files under " + runs_dir);

  render_curves_svg(series, fs::path(runs_dir).filename().string(), metric, out_path);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_oracle(const std::string& fixture) {
  nlohmann::json j = load_fixture_json(fixture);
  std::string type = j.at("type").get<std::string>();
  if (type != "matrix_game")
    throw CapacityError("oracle: fixture '" + fixture + "' is not tabular; exact enumeration is out of reach");
  MatrixTabularGame game(parse_matrix_game(j));
  OptimalJoint best = enumerate_optimal_joint(game);
  std::cout << "fixture " << fixture << "\n";
  std::cout << "optimal value " << best.value << "\n";
  std::cout << "optimal joint policies (" << best.sequences.size() << " tie" << (best.sequences.size() == 1 ? "" : "s")
            << "):\n";
  for (const auto& seq : best.sequences) {
    std::cout << " ";
    for (const auto& joint : seq) {
      std::cout << " (";
      for (std::size_t a = 0; a < joint.size(); ++a) std::cout << (a ? "," : "") << joint[a];
      std::cout << ")";
    }
    std::cout << "\n";
  }
  std::vector<AgentPolicy> opt = open_loop_policies(best.sequences[0], game.n_actions);
  for (int agent = 0; agent < game.n_agents; ++agent) {
    BestResponse br = best_response(game, opt, agent);
    HistoryKey root = {game.observation(game.initial_state, agent)};
    std::cout << "agent " << agent << " best response vs the optimum: value " << br.value << ", root Q [";
    for (std::size_t u = 0; u < br.q[root].size(); ++u) std::cout << (u ? ", " : "") << br.q[root][u];
    std::cout << "]\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local advantage networks: training, evaluation and exact oracles for desk-scale Dec-POMDPs"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "runs", checkpoint_path, runs_dir, out_file = "curves.svg";
  std::string seeds_arg, metric = "success_rate", fixture;
  long seed = 0;
  int episodes = 32, jobs = 0;
  bool quiet = false;

  CLI::App* train_cmd = app.add_subcommand("train", "train one seed");
  train_cmd->add_option("--config", config_path, "config file")->required();
  train_cmd->add_option("--seed", seed, "run seed")->required();
  train_cmd->add_option("--out", out_dir, "output directory");
  train_cmd->add_flag("--quiet", quiet, "suppress progress lines");

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "train several seeds and aggregate");
  sweep_cmd->add_option("--config", config_path, "config file")->required();
  sweep_cmd->add_option("--seeds", seeds_arg, "comma-separated seeds (default: config's seeds key)");
  sweep_cmd->add_option("--out", out_dir, "output directory");
  sweep_cmd->add_option("--jobs", jobs, "parallel workers (default: hardware threads)");
  sweep_cmd->add_flag("--quiet", quiet, "suppress progress lines");

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint greedily");
  eval_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  eval_cmd->add_option("--episodes", episodes, "evaluation episodes");
  eval_cmd->add_option("--seed", seed, "evaluation seed");

  CLI::App* plot_cmd = app.add_subcommand("plot", "render learning curves to svg");
  plot_cmd->add_option("--runs", runs_dir, "directory of seed_*.csv files (or subdirectories per algorithm)")
      ->required();
  plot_cmd->add_option("--out", out_file, "output svg path");
  plot_cmd->add_option("--metric", metric, "success_rate or mean_return");

  CLI::App* oracle_cmd = app.add_subcommand("oracle", "exact solution of a tabular fixture");
  oracle_cmd->add_option("--env", fixture, "fixture id")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) return cmd_train(config_path, seed, out_dir, quiet);
    if (sweep_cmd->parsed()) return cmd_sweep(config_path, seeds_arg, out_dir, jobs, quiet);
    if (eval_cmd->parsed()) return cmd_eval(checkpoint_path, episodes, seed);
    if (plot_cmd->parsed()) return cmd_plot(runs_dir, out_file, metric);
    if (oracle_cmd->parsed()) return cmd_oracle(fixture);
  } catch (const NumericFault& e) {
    std::cerr << "numeric fault: " << e.what() << "\n";
    return 3;
  } catch (const ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
