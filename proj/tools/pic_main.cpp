#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "pic/bench.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::vector<std::uint64_t> seeds;
  std::string out_dir;
  std::string ablation;
  bool list_arms = false;
};

void add_common(CLI::App* sub, CommonOpts& opts) {
  sub->add_option("--config", opts.config_path, "Experiment config file");
  sub->add_option("--seed", opts.seeds, "Seed override (repeatable; replaces config seeds)");
  sub->add_option("--out", opts.out_dir, "Output directory");
  sub->add_option("--ablation", opts.ablation, "Ablation: scorers | refinement | none");
  sub->add_flag("--list-arms", opts.list_arms, "Print the arm labels and exit");
}

int run_suite(const std::string& suite, const CommonOpts& opts) {
  using namespace pic::bench;
  ExperimentConfig config =
      opts.config_path.empty() ? default_config() : load_config(opts.config_path);
  config.suite = suite_from_name(suite);
  if (!opts.seeds.empty()) config.seeds = opts.seeds;
  if (!opts.out_dir.empty()) config.out_dir = opts.out_dir;
  if (!opts.ablation.empty()) config.ablation = ablation_from_name(opts.ablation);
  config.validate();

  if (opts.list_arms) {
    for (const auto& [s, arm] : list_arms(config)) {
      std::cout << s << ": " << arm << "\n";
    }
    return 0;
  }

  std::cout << "config hash " << config.config_hash() << ", output -> " << config.out_dir << "\n";
  const std::vector<RunRecord> records = run_matrix(config);
  const auto rows = summarize(records);
  std::cout << render_table(rows);
  write_summary_csv(config.out_dir + "/summary.csv", rows);
  write_summary_plots(config.out_dir + "/plots", rows);

  int failures = 0;
  for (const auto& r : records) {
    if (!r.ok) {
      ++failures;
      std::cerr << "FAILED " << r.suite << "/" << r.arm << " seed " << r.seed << ": " << r.error
                << "\n";
    }
  }
  std::cout << records.size() - failures << "/" << records.size() << " runs ok\n";
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pic: generator/scorer consensus benchmark harness"};
  app.require_subcommand(1);

  const std::vector<std::string> suites = {"diffusion", "seqgen", "blockworld", "all"};
  std::map<std::string, CommonOpts> opts;
  for (const auto& s : suites) {
    CLI::App* sub = app.add_subcommand(s, "Run the " + s + " suite");
    add_common(sub, opts[s]);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    for (const auto& s : suites) {
      if (app.get_subcommand(s)->parsed()) return run_suite(s, opts[s]);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
