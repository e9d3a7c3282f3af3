// liberum command-line tool: scenario evaluation, experiment runs, credit
// comparisons and freedom reports.
//
// Exit codes: 0 success, 2 configuration error, 3 runtime error.

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "liberum/harness.hpp"

namespace {

namespace harness = liberum::harness;

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::vector<double> parse_numbers(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw liberum::ConfigError(flag + ": '" + item + "' is not a number");
    }
  }
  if (out.empty()) throw liberum::ConfigError(flag + " needs at least one value");
  return out;
}

std::vector<std::string> parse_labels(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

// LIBERUM_SEED=7 or LIBERUM_SEED=1,2,3 replaces the configured seeds.
void apply_seed_override(harness::ExperimentConfig& cfg) {
  const char* env = std::getenv("LIBERUM_SEED");
  if (!env || !*env) return;
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(env);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      seeds.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw liberum::ConfigError("LIBERUM_SEED: '" + item + "' is not an unsigned integer");
    }
  }
  if (seeds.empty()) throw liberum::ConfigError("LIBERUM_SEED is empty");
  cfg.seeds = seeds;
}

harness::ExperimentConfig load(const std::string& path) {
  auto cfg = harness::load_config(path);
  apply_seed_override(cfg);
  return cfg;
}

void print_run_summary(const harness::RunRecord& rec, const std::string& dir) {
  std::cout << "run '" << rec.config.name << "': " << rec.seeds.size() << " seed(s) x " << rec.config.episodes
            << " episode(s), optimal return " << harness::format_number(rec.optimal_return) << "\n";
  for (const auto& s : rec.seeds) {
    std::cout << "  seed " << s.seed << ": final return " << harness::format_number(s.final_return)
              << ", convergence "
              << (s.convergence_episode ? std::to_string(*s.convergence_episode) : std::string("none")) << "\n";
  }
  std::cout << "wrote " << dir << "/episodes.csv, summary.json, learning_curve.svg\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"liberum: value freedom and credit assignment experiments"};
  app.require_subcommand(1);

  auto* scenario = app.add_subcommand("scenario", "Evaluate value freedom for one decision");
  std::string q_text, p_text, labels_text;
  double temperature = liberum::kDefaultTemperature;
  auto* q_opt = scenario->add_option("--q", q_text, "Comma-separated action values");
  auto* p_opt = scenario->add_option("--p", p_text, "Comma-separated action probabilities");
  q_opt->excludes(p_opt);
  scenario->add_option("--temp", temperature, "Softmax temperature")->capture_default_str();
  scenario->add_option("--labels", labels_text, "Comma-separated action labels");

  auto* run = app.add_subcommand("run", "Run an experiment config");
  std::string config_path, out_dir;
  unsigned workers = 1;
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--out", out_dir, "Output directory (defaults to the config's output_dir)");
  run->add_option("--workers", workers, "Worker threads over seeds")->capture_default_str();

  auto* compare = app.add_subcommand("compare", "Compare credit strategies on a shared environment");
  std::vector<std::string> config_paths;
  std::string compare_out = "compare_out";
  compare->add_option("--configs", config_paths, "Experiment configs")->required();
  compare->add_option("--out", compare_out, "Output directory")->capture_default_str();
  compare->add_option("--workers", workers, "Worker threads over seeds")->capture_default_str();

  auto* report = app.add_subcommand("report", "Summarize value freedom over a finished run");
  std::string run_dir;
  report->add_option("--run", run_dir, "Run output directory")->required();

  auto* catalog = app.add_subcommand("catalog", "Print the built-in scenarios as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (scenario->parsed()) {
      const auto labels = labels_text.empty() ? std::vector<std::string>{} : parse_labels(labels_text);
      harness::ScenarioReport r;
      if (!p_text.empty())
        r = harness::scenario_eval_distribution(parse_numbers(p_text, "--p"), temperature, labels);
      else if (!q_text.empty())
        r = harness::scenario_eval(parse_numbers(q_text, "--q"), temperature, labels);
      else
        throw liberum::ConfigError("scenario needs --q or --p");
      std::cout << harness::format_scenario(r);
    } else if (run->parsed()) {
      auto cfg = load(config_path);
      const std::string dir = !out_dir.empty() ? out_dir : (!cfg.output_dir.empty() ? cfg.output_dir : "run_out");
      const auto rec = harness::run_experiment(cfg, workers);
      harness::write_run(rec, dir);
      print_run_summary(rec, dir);
    } else if (compare->parsed()) {
      std::vector<harness::ExperimentConfig> configs;
      for (const auto& p : config_paths) configs.push_back(load(p));
      const auto cmp = harness::compare_credit(configs, workers);
      harness::write_comparison(cmp, compare_out);
      std::cout << harness::comparison_csv(cmp);
      std::cout << "wrote " << compare_out << "/comparison.csv, learning_curves.csv, learning_curves.svg\n";
    } else if (report->parsed()) {
      const auto rec = harness::load_run(run_dir);
      const auto summary = harness::report_freedom(rec);
      harness::write_freedom_report(summary, run_dir, rec.config.name);
      std::cout << harness::to_json(summary).dump(2) << "\n";
    } else if (catalog->parsed()) {
      std::cout << liberum::io::catalog_json().dump(2) << "\n";
    }
  } catch (const liberum::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
