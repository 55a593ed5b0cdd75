// irsim command line: builds radio maps, trains and evaluates agents, and
// produces the NOMA/OMA x algorithm comparison tables. Every run writes a
// manifest.json so any artifact can be regenerated from (scenario,
// command, seed).

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "irsim/agent.hpp"
#include "irsim/env.hpp"
#include "irsim/radiomap.hpp"
#include "irsim/scenario.hpp"
#include "irsim/units.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitInvalidInput = 2;
constexpr int kExitRuntimeFailure = 3;

std::string default_out_root() {
  if (const char* root = std::getenv("IRSIM_OUT_ROOT")) return root;
  return "out";
}

fs::path resolve_out_dir(const std::string& out_opt,
                         const std::string& command) {
  fs::path dir = out_opt.empty() ? fs::path(default_out_root()) / command
                                 : fs::path(out_opt);
  fs::create_directories(dir);
  return dir;
}

void write_manifest(const fs::path& out_dir, const std::string& command,
                    const json& options,
                    const std::vector<std::string>& outputs) {
  json manifest;
  manifest["command"] = command;
  manifest["options"] = options;
  manifest["outputs"] = outputs;
  std::ofstream out(out_dir / "manifest.json");
  out << manifest.dump(2) << '\n';
}

irsim::ChannelSource channel_from_string(const std::string& text) {
  if (text == "radio_map") return irsim::ChannelSource::kRadioMap;
  if (text == "sampled") return irsim::ChannelSource::kSampled;
  throw std::invalid_argument("unknown channel source '" + text + "'");
}

irsim::ChannelSource fading_to_source(const std::string& fading) {
  if (fading == "expected") return irsim::ChannelSource::kRadioMap;
  if (fading == "sampled") return irsim::ChannelSource::kSampled;
  throw std::invalid_argument("unknown fading mode '" + fading + "'");
}

// Splits a total episode override across the two phases in the same
// proportion the scenario configures.
irsim::TrainOptions split_episodes(const irsim::Scenario& sc, int episodes,
                                   irsim::ChannelSource source) {
  irsim::TrainOptions opts;
  opts.channel_source = source;
  if (episodes > 0) {
    const int p1 = sc.learner.phase1_episodes;
    const int p2 = sc.learner.phase2_episodes;
    const double frac =
        p1 + p2 > 0 ? static_cast<double>(p1) / (p1 + p2) : 0.6;
    opts.phase1_episodes =
        std::max(1, static_cast<int>(episodes * frac + 0.5));
    opts.phase2_episodes = std::max(0, episodes - opts.phase1_episodes);
  }
  return opts;
}

int cmd_build_map(const std::string& scenario_path, const std::string& out_opt,
                  std::uint64_t seed) {
  irsim::Scenario sc;
  try {
    sc = irsim::load_scenario(scenario_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalidInput;
  }

  const fs::path out_dir = resolve_out_dir(out_opt, "build-map");
  std::vector<std::string> outputs;

  irsim::Grid2d<int> counts;
  irsim::PowerMap serving;
  std::vector<irsim::PowerMap> interferer_maps;
  for (const irsim::ApConfig& ap : sc.aps) {
    irsim::PowerMap map = irsim::build_power_map(
        sc.layout, ap, sc.ir_antenna_height,
        ap.role == irsim::ApRole::kServing ? &counts : nullptr);
    const std::string name = "power_" + ap.id + ".csv";
    irsim::export_map(map, (out_dir / name).string());
    outputs.push_back(name);
    if (ap.role == irsim::ApRole::kServing)
      serving = std::move(map);
    else
      interferer_maps.push_back(std::move(map));
  }

  const double noise_dbm =
      irsim::noise_power_dbm(sc.noise_density_dbm_hz, sc.bandwidth_hz);
  const irsim::SinrMap sinr =
      irsim::build_sinr_map(serving, interferer_maps, noise_dbm);
  irsim::export_map(sinr, (out_dir / "sinr.csv").string());
  outputs.push_back("sinr.csv");

  int los_cells = 0;
  double sinr_min = 1e300, sinr_max = -1e300;
  const irsim::GridSpec& grid = sc.layout.grid;
  for (int iy = 0; iy < grid.n_y; ++iy)
    for (int ix = 0; ix < grid.n_x; ++ix) {
      if (counts.at(ix, iy) == 0) ++los_cells;
      sinr_min = std::min(sinr_min, sinr.values.at(ix, iy));
      sinr_max = std::max(sinr_max, sinr.values.at(ix, iy));
    }
  const double los_fraction =
      static_cast<double>(los_cells) / (grid.n_x * grid.n_y);

  json options;
  options["scenario"] = scenario_path;
  options["seed"] = seed;
  write_manifest(out_dir, "build-map", options, outputs);

  std::printf("scenario: %s (%dx%d cells)\n", sc.name.c_str(), grid.n_x,
              grid.n_y);
  std::printf("seed: %llu\n", static_cast<unsigned long long>(seed));
  std::printf("los_fraction: %.4f\n", los_fraction);
  std::printf("sinr_db: min %.3f max %.3f\n", sinr_min, sinr_max);
  std::printf("wrote %zu maps to %s\n", outputs.size(),
              out_dir.string().c_str());
  return 0;
}

int cmd_train(const std::string& scenario_path, const std::string& algo,
              const std::string& ma_mode, int episodes,
              const std::string& channel, std::uint64_t seed,
              const std::string& out_opt) {
  irsim::Scenario sc;
  irsim::ChannelSource source;
  try {
    sc = irsim::load_scenario(scenario_path);
    if (!ma_mode.empty()) sc.ma_mode = irsim::ma_mode_from_string(ma_mode);
    source = channel_from_string(channel);
    if (algo != "dtdpg" && algo != "ddpg")
      throw std::invalid_argument("unknown algorithm '" + algo +
                                  "' (expected dtdpg or ddpg)");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalidInput;
  }

  const fs::path out_dir = resolve_out_dir(out_opt, "train");
  const irsim::TrainOptions opts = split_episodes(sc, episodes, source);

  std::printf("training %s on '%s' (%s, %s channel), seed %llu\n",
              algo.c_str(), sc.name.c_str(), to_string(sc.ma_mode).c_str(),
              channel.c_str(), static_cast<unsigned long long>(seed));
  irsim::TrainRun run = algo == "dtdpg"
                            ? irsim::train_dtdpg(sc, opts, seed)
                            : irsim::train_ddpg_baseline(sc, opts, seed);

  irsim::write_metrics_csv(run.metrics, (out_dir / "metrics.csv").string());
  run.agent.save((out_dir / "checkpoint.json").string());

  const double final_mqi = irsim::median(irsim::mqi_last(run.metrics, 20, -1));
  const double reach = irsim::reach_rate_last(run.metrics, 20, -1);
  std::printf("episodes: %zu\n", run.metrics.size());
  std::printf("final20 median MQI: %.2f\n", final_mqi);
  std::printf("final20 reach rate: %.2f\n", reach);

  json options;
  options["scenario"] = scenario_path;
  options["algo"] = algo;
  options["ma_mode"] = to_string(sc.ma_mode);
  options["episodes"] = episodes;
  options["channel"] = channel;
  options["seed"] = seed;
  write_manifest(out_dir, "train", options,
                 {"metrics.csv", "checkpoint.json"});
  return 0;
}

int cmd_eval(const std::string& checkpoint_path,
             const std::string& scenario_path, int episodes,
             const std::string& fading, std::uint64_t seed,
             const std::string& out_opt) {
  irsim::Scenario sc;
  irsim::ChannelSource source;
  std::optional<irsim::Agent> agent;
  try {
    sc = irsim::load_scenario(scenario_path);
    source = fading_to_source(fading);
    agent.emplace(irsim::Agent::load(checkpoint_path));
    const int expected = 3 * sc.num_irs();
    if (agent->state_dim() != expected)
      throw std::invalid_argument(
          "checkpoint/scenario dimension mismatch: expected state width " +
          std::to_string(expected) + ", found " +
          std::to_string(agent->state_dim()));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalidInput;
  }

  const fs::path out_dir = resolve_out_dir(out_opt, "eval");
  const auto results =
      irsim::evaluate(*agent, sc, episodes, source, seed, true);

  std::vector<std::string> outputs;
  double mqi_sum = 0.0;
  int reached = 0;
  std::printf("episode  mqi      reached\n");
  for (std::size_t ep = 0; ep < results.size(); ++ep) {
    const std::string name = "trace_ep" + std::to_string(ep) + ".csv";
    irsim::write_trace_csv(results[ep].trace, sc.num_irs(),
                           (out_dir / name).string());
    outputs.push_back(name);
    mqi_sum += results[ep].mqi;
    reached += results[ep].reached ? 1 : 0;
    std::printf("%-8zu %-8.2f %s\n", ep, results[ep].mqi,
                results[ep].reached ? "yes" : "no");
  }
  std::printf("mean MQI over %zu episodes: %.3f\n", results.size(),
              mqi_sum / std::max<std::size_t>(1, results.size()));
  std::printf("reach rate: %.3f\n",
              static_cast<double>(reached) /
                  std::max<std::size_t>(1, results.size()));

  json options;
  options["checkpoint"] = checkpoint_path;
  options["scenario"] = scenario_path;
  options["episodes"] = episodes;
  options["fading"] = fading;
  options["seed"] = seed;
  write_manifest(out_dir, "eval", options, outputs);
  return 0;
}

int cmd_compare(const std::string& scenario_path,
                const std::string& seeds_text, int episodes,
                const std::string& out_opt) {
  irsim::Scenario base;
  std::vector<std::uint64_t> seeds;
  try {
    base = irsim::load_scenario(scenario_path);
    std::string token;
    std::istringstream stream(seeds_text);
    while (std::getline(stream, token, ','))
      if (!token.empty()) seeds.push_back(std::stoull(token));
    if (seeds.empty()) throw std::invalid_argument("no seeds given");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalidInput;
  }

  const fs::path out_dir = resolve_out_dir(out_opt, "compare");
  struct Arm {
    std::string algo;
    irsim::MaMode mode;
  };
  const std::vector<Arm> arms = {{"dtdpg", irsim::MaMode::kNoma},
                                 {"dtdpg", irsim::MaMode::kOma},
                                 {"ddpg", irsim::MaMode::kNoma},
                                 {"ddpg", irsim::MaMode::kOma}};

  struct Row {
    std::string algo;
    std::string mode;
    std::uint64_t seed;
    double mean_mqi;
    double reach;
  };
  std::vector<Row> rows;
  std::vector<std::string> outputs;

  for (const Arm& arm : arms) {
    irsim::Scenario sc = base;
    sc.ma_mode = arm.mode;
    for (std::uint64_t seed : seeds) {
      const irsim::TrainOptions opts =
          split_episodes(sc, episodes, irsim::ChannelSource::kRadioMap);
      irsim::TrainRun run = arm.algo == "dtdpg"
                                ? irsim::train_dtdpg(sc, opts, seed)
                                : irsim::train_ddpg_baseline(sc, opts, seed);
      const auto eval = irsim::evaluate(run.agent, sc, 20,
                                        irsim::ChannelSource::kRadioMap,
                                        seed, false);
      double mqi_sum = 0.0;
      int reached = 0;
      for (const auto& ep : eval) {
        mqi_sum += ep.mqi;
        reached += ep.reached ? 1 : 0;
      }
      const std::string metrics_name = "metrics_" + arm.algo + "_" +
                                       to_string(arm.mode) + "_" +
                                       std::to_string(seed) + ".csv";
      irsim::write_metrics_csv(run.metrics, (out_dir / metrics_name).string());
      outputs.push_back(metrics_name);
      rows.push_back({arm.algo, to_string(arm.mode), seed,
                      mqi_sum / eval.size(),
                      static_cast<double>(reached) / eval.size()});
      std::printf("%s/%s seed %llu: mean MQI %.2f reach %.2f\n",
                  arm.algo.c_str(), to_string(arm.mode).c_str(),
                  static_cast<unsigned long long>(seed), rows.back().mean_mqi,
                  rows.back().reach);
    }
  }

  auto find_mqi = [&](const std::string& algo, const std::string& mode,
                      std::uint64_t seed) {
    for (const Row& row : rows)
      if (row.algo == algo && row.mode == mode && row.seed == seed)
        return row.mean_mqi;
    return 0.0;
  };

  std::ofstream csv(out_dir / "compare.csv");
  csv << "algo,ma_mode,seed,mean_mqi,reach_rate,noma_minus_oma_mqi\n";
  char buf[160];
  for (const Row& row : rows) {
    if (row.mode == "noma") {
      const double delta =
          row.mean_mqi - find_mqi(row.algo, "oma", row.seed);
      std::snprintf(buf, sizeof(buf), "%s,%s,%llu,%.4f,%.4f,%.4f",
                    row.algo.c_str(), row.mode.c_str(),
                    static_cast<unsigned long long>(row.seed), row.mean_mqi,
                    row.reach, delta);
    } else {
      std::snprintf(buf, sizeof(buf), "%s,%s,%llu,%.4f,%.4f,",
                    row.algo.c_str(), row.mode.c_str(),
                    static_cast<unsigned long long>(row.seed), row.mean_mqi,
                    row.reach);
    }
    csv << buf << '\n';
  }
  csv.close();
  outputs.push_back("compare.csv");

  json options;
  options["scenario"] = scenario_path;
  options["seeds"] = seeds;
  options["episodes"] = episodes;
  write_manifest(out_dir, "compare", options, outputs);
  std::printf("wrote %s\n", (out_dir / "compare.csv").string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Indoor radio simulation and navigation training"};
  app.require_subcommand(1);

  std::string scenario_path, out_opt, checkpoint_path;
  std::string algo = "dtdpg", ma_mode, channel = "radio_map";
  std::string fading = "expected", seeds_text = "1";
  int episodes = -1;
  int eval_episodes = 20;
  std::uint64_t seed = 1;

  CLI::App* build = app.add_subcommand("build-map", "Write per-AP power maps and the SINR map");
  build->add_option("--scenario", scenario_path, "Scenario file")->required();
  build->add_option("--out", out_opt, "Output directory");
  build->add_option("--seed", seed, "Run seed (recorded in the manifest)");

  CLI::App* train = app.add_subcommand("train", "Train an agent");
  train->add_option("--scenario", scenario_path, "Scenario file")->required();
  train->add_option("--algo", algo, "dtdpg or ddpg");
  train->add_option("--ma-mode", ma_mode, "noma or oma (overrides scenario)");
  train->add_option("--episodes", episodes, "Total episode budget override");
  train->add_option("--channel", channel, "radio_map or sampled");
  train->add_option("--seed", seed, "Run seed");
  train->add_option("--out", out_opt, "Output directory");

  CLI::App* eval = app.add_subcommand("eval", "Greedy rollouts from a checkpoint");
  eval->add_option("--checkpoint", checkpoint_path, "Agent checkpoint")->required();
  eval->add_option("--scenario", scenario_path, "Scenario file")->required();
  eval->add_option("--episodes", eval_episodes, "Evaluation episodes");
  eval->add_option("--fading", fading, "expected or sampled");
  eval->add_option("--seed", seed, "Run seed");
  eval->add_option("--out", out_opt, "Output directory");

  CLI::App* compare = app.add_subcommand("compare", "dtdpg/ddpg x noma/oma table");
  compare->add_option("--scenario", scenario_path, "Scenario file")->required();
  compare->add_option("--seeds", seeds_text, "Comma-separated seed list");
  compare->add_option("--episodes", episodes, "Per-run episode budget override");
  compare->add_option("--out", out_opt, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInvalidInput;
  }

  try {
    if (build->parsed()) return cmd_build_map(scenario_path, out_opt, seed);
    if (train->parsed())
      return cmd_train(scenario_path, algo, ma_mode, episodes, channel, seed,
                       out_opt);
    if (eval->parsed())
      return cmd_eval(checkpoint_path, scenario_path, eval_episodes, fading,
                      seed, out_opt);
    if (compare->parsed())
      return cmd_compare(scenario_path, seeds_text, episodes, out_opt);
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << '\n';
    return kExitRuntimeFailure;
  }
  return kExitInvalidInput;
}
