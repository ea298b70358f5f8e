#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include "polyopt/errors.hpp"
#include "polyopt/experiment.hpp"
#include "polyopt/linalg.hpp"

namespace polyopt {

namespace {

namespace fs = std::filesystem;

struct LoadedPopulation {
  PolicySet set;
  FlatParams theta;
};

LoadedPopulation load_population(const std::string& path, const Env& env) {
  const Checkpoint checkpoint = load_checkpoint(path);
  if (checkpoint.architecture == "raw") {
    throw IoError("tournament: checkpoint '" + path + "' holds no policy architecture");
  }
  LoadedPopulation population;
  population.set = policy_set_from_string(checkpoint.architecture);
  if (static_cast<int>(population.set.policies.size()) != env.num_players()) {
    throw IoError("tournament: checkpoint '" + path + "' player count does not match env");
  }
  for (const auto& policy : population.set.policies) {
    if (policy.layers.front() != env.obs_dim()) {
      throw IoError("tournament: checkpoint '" + path + "' is incompatible with env");
    }
  }
  population.theta = FlatParams(population.set.partition(), checkpoint.values);
  return population;
}

}  // namespace

TournamentReport run_tournament(const ExperimentConfig& config, const RunOptions& options) {
  const TournamentSection& section = config.tournament;
  const std::uint64_t seed = options.seed_override.value_or(config.experiment.seed);

  const std::unique_ptr<Env> proto = make_env(config.env);
  const int players = proto->num_players();

  const auto split = section.composition.find('v');
  if (split == std::string::npos) {
    throw ConfigError("tournament.composition must look like '1v3'");
  }
  const int seats_a = std::stoi(section.composition.substr(0, split));
  const int seats_b = std::stoi(section.composition.substr(split + 1));
  if (seats_a < 0 || seats_b < 0 || seats_a + seats_b != players) {
    throw ConfigError("tournament.composition seats must sum to " +
                      std::to_string(players));
  }
  if (section.checkpoint_a.empty() || section.checkpoint_b.empty()) {
    throw ConfigError("tournament needs checkpoint_a and checkpoint_b");
  }

  const LoadedPopulation pop_a = load_population(section.checkpoint_a, *proto);
  const LoadedPopulation pop_b = load_population(section.checkpoint_b, *proto);

  const int episodes = section.episodes;
  std::vector<double> wins_a_per_episode(episodes, 0.0);

  std::atomic<int> next_episode{0};
  auto worker = [&]() {
    const std::unique_ptr<Env> env = proto->clone();
    while (true) {
      const int e = next_episode.fetch_add(1);
      if (e >= episodes) break;
      const std::uint64_t episode_seed = split_seed(seed, 0x70AA0 + e);

      // Randomize which seats population A occupies this episode.
      std::vector<int> seats(players);
      for (int i = 0; i < players; ++i) seats[i] = i;
      std::mt19937_64 rng(split_seed(episode_seed, 0x5EA7));
      for (int i = players - 1; i > 0; --i) {
        std::uniform_int_distribution<int> pick(0, i);
        std::swap(seats[i], seats[pick(rng)]);
      }
      std::vector<bool> seat_is_a(players, false);
      for (int i = 0; i < seats_a; ++i) seat_is_a[seats[i]] = true;

      env->reset(episode_seed);
      std::mt19937_64 action_rng(split_seed(episode_seed, 0xAC710));
      Eigen::VectorXd totals = Eigen::VectorXd::Zero(players);
      for (int t = 0; t < 100000; ++t) {
        std::vector<Action> actions(players);
        for (int i = 0; i < players; ++i) {
          const LoadedPopulation& pop = seat_is_a[i] ? pop_a : pop_b;
          const MlpPolicy& policy = pop.set.policies[i];
          const Eigen::VectorXd out = policy.eval(pop.theta.block(i), env->observe(i));
          if (policy.head == PolicyHead::kCategoricalLogits) {
            actions[i].discrete = sample_categorical(out, action_rng).discrete;
          } else {
            actions[i].continuous =
                sample_gaussian(out[0], policy.sigma, action_rng).continuous;
          }
        }
        const StepResult result = env->step(actions);
        totals += result.rewards;
        if (result.done) break;
      }

      // Win: highest episode reward; ties split evenly among the tied seats.
      const double best = totals.maxCoeff();
      int tied = 0;
      double tied_a = 0;
      for (int i = 0; i < players; ++i) {
        if (totals[i] == best) {
          tied += 1;
          if (seat_is_a[i]) tied_a += 1;
        }
      }
      wins_a_per_episode[e] = tied_a / static_cast<double>(tied);
    }
  };

  const int thread_count = std::max(1, std::min(options.workers, episodes));
  if (thread_count == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < thread_count; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  TournamentReport report;
  report.composition = section.composition;
  report.episodes = episodes;
  report.seats_a = seats_a;
  report.seats_b = seats_b;
  for (double w : wins_a_per_episode) report.wins_a += w;
  report.wins_b = static_cast<double>(episodes) - report.wins_a;

  fs::path out(options.out_override.value_or(config.experiment.out));
  if (!options.out_root.empty() && out.is_relative()) {
    out = fs::path(options.out_root) / out;
  }
  std::error_code ec;
  fs::create_directories(out, ec);
  std::ofstream csv(out / "tournament.csv", std::ios::trunc);
  if (!csv) throw IoError("tournament: cannot write output CSV");
  csv << kTournamentSchema << "\ncomposition,team,seats,episodes,wins\n";
  csv << report.composition << ",a," << report.seats_a << ',' << report.episodes << ','
      << format_double(report.wins_a) << '\n';
  csv << report.composition << ",b," << report.seats_b << ',' << report.episodes << ','
      << format_double(report.wins_b) << '\n';
  return report;
}

}  // namespace polyopt
